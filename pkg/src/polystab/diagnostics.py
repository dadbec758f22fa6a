"""Composite verification quantities: observability, contraction, decay.

The quantities measured here are the ones the stability theory rests on:

* the discrete observability functional of the conservative viscous
  scheme -- the ratio of the accumulated observation and viscosity sums
  over a horizon T* to the weak norm of the initial state;
* the high-frequency inverse inequality ``dt ||A y|| >= delta ||y||`` on
  the complement of the low-pass space, and the per-step weak-norm
  contraction factor ``1 / (1 + 2 dt delta^2)`` it implies;
* polynomial decay fits ``E ~ M (1 + t)^{-p}`` of damped-scheme energy
  traces against the generator-domain norm of the initial state, swept
  over time steps to probe uniformity in dt;
* the extremal sequence of the discrete decay recursion
  ``e_{k+1} + C e_{k+1}^{2+alpha} = e_k`` as an independent oracle for the
  polynomial rate 1/(alpha+1).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DiagnosticFailure, DomainError
from .modal import ModalState, ModalSystem, norm_domain, pair_norm_sq
from .schemes import EnergyTrace, SchemeConfig, factorize, substep_count
from .spectra import check_gap, cluster_partition

__all__ = [
    "ObservabilityReport",
    "ObservabilityStudy",
    "TStarPolicy",
    "DecayFit",
    "DecayStudy",
    "DecayRecursionResult",
    "observation_time",
    "observability_functional",
    "observability_constant_study",
    "inverse_inequality_check",
    "high_freq_contraction",
    "high_freq_observability",
    "decay_fit",
    "synthetic_trace",
    "worst_case_family",
    "uniform_decay_study",
    "decay_recursion_oracle",
]


# -- observation horizon -------------------------------------------------


@dataclass(frozen=True)
class TStarPolicy:
    """Observation horizon derived from the gap audit."""

    t_star: float
    gamma: float
    gamma1: float
    route: str  # "pairwise" | "clustered" | "override"


def observation_time(sys: ModalSystem, t_star: float | None = None) -> TStarPolicy:
    """Fix T* = 2 * (2 pi / gap constant) from the audited spectrum.

    The pairwise route is used when the smallest pairwise gap is genuinely
    uniform (at least gamma1/2, i.e. no 2-clusters); otherwise the
    2-separated constant drives the horizon.  An explicit ``t_star``
    bypasses the audit.
    """
    audit = check_gap(sys)
    if t_star is not None:
        return TStarPolicy(float(t_star), audit.gamma, audit.gamma1, "override")
    pairwise_usable = math.isfinite(audit.gamma) and (
        not math.isfinite(audit.gamma1) or audit.gamma >= 0.5 * audit.gamma1
    )
    if pairwise_usable:
        return TStarPolicy(2.0 * (2.0 * math.pi / audit.gamma), audit.gamma, audit.gamma1, "pairwise")
    if not math.isfinite(audit.gamma1):
        raise DomainError("no usable gap constant; pass t_star explicitly")
    return TStarPolicy(2.0 * (2.0 * math.pi / audit.gamma1), audit.gamma, audit.gamma1, "clustered")


# -- observability functional ---------------------------------------------


@dataclass(frozen=True)
class ObservabilityReport:
    """Accumulated sums of the discrete observability functional."""

    weak_norm_sq: float
    damp_sum: float
    visc_sum1: float
    visc_sum2: float
    ratio: float
    T_star: float
    beta: float
    dt: float
    n_steps: int


def _observability_sums(sys, X0, beta, dt, T_star, viscosity, solve_tol):
    """Per-column (damp, visc1, visc2, weak) sums of the conservative run.

    The observation uses the system's damping Gram even though the
    dynamics are undamped; the viscosity sums are accumulated only when
    the viscous stage actually runs.
    """
    n = sys.n
    X0 = np.atleast_2d(np.asarray(X0, dtype=float))
    if X0.shape[0] != 2 * n:
        X0 = X0.T
    weak = pair_norm_sq(sys, X0[:n], X0[n:], beta)
    cfg = SchemeConfig(
        dt=dt, t_final=max(T_star, dt), viscosity=viscosity, damping=False, solve_tol=solve_tol
    )
    solver = factorize(sys, cfg)
    l = substep_count(T_star, dt)
    m = X0.shape[1]
    damp = np.zeros(m)
    visc1 = np.zeros(m)
    visc2 = np.zeros(m)
    eta = sys.eta[:, None]
    for _, x, zt, zn in solver.iterate_raw(X0, l + 1, damped=False):
        mb = 0.5 * (x[n:] + zt[n:])
        damp += dt * np.einsum("im,im->m", mb, sys.damp_gram @ mb)
        if viscosity:
            a, b = zn[:n], zn[n:]
            visc1 += dt**3 * (np.sum(eta**2 * a**2, axis=0) + np.sum(eta * b**2, axis=0))
            visc2 += dt**6 * (np.sum(eta**3 * a**2, axis=0) + np.sum(eta**2 * b**2, axis=0))
    return damp, visc1, visc2, weak, l + 1


def observability_functional(
    sys: ModalSystem,
    u0: ModalState,
    beta: float,
    dt: float,
    T_star: float,
    viscosity: bool = True,
    solve_tol: float = 1e-13,
) -> ObservabilityReport:
    """Observation + viscosity budget of the conservative run from ``u0``.

    Returns the ratio of
    ``dt sum ||B*(u^k + u~^{k+1})/2||^2 + dt sum dt^2 ||A u^{k+1}||^2
    + dt sum dt^5 ||A^2 u^{k+1}||^2`` (sums over k dt in [0, T*]) to the
    squared weak norm of ``u0``.
    """
    x0 = u0.stacked()[:, None]
    damp, v1, v2, weak, nsteps = _observability_sums(
        sys, x0, beta, dt, T_star, viscosity, solve_tol
    )
    if weak[0] == 0.0:
        raise DomainError("zero initial state: observability ratio undefined")
    total = damp[0] + v1[0] + v2[0]
    return ObservabilityReport(
        weak_norm_sq=float(weak[0]),
        damp_sum=float(damp[0]),
        visc_sum1=float(v1[0]),
        visc_sum2=float(v2[0]),
        ratio=float(total / weak[0]),
        T_star=T_star,
        beta=beta,
        dt=dt,
        n_steps=nsteps,
    )


@dataclass(frozen=True)
class ObservabilityCell:
    dt: float
    t_star: float
    cutoff: float
    min_ratio: float
    min_ratio_lowpass: float
    n_lowpass_active: int


@dataclass(frozen=True)
class ObservabilityStudy:
    beta: float
    delta: float
    gamma: float
    gamma1: float
    route: str
    trials: int
    seed: int
    cells: tuple


def observability_constant_study(
    sys: ModalSystem,
    beta: float,
    dt_list,
    trials: int,
    seed: int,
    delta: float = 1.0,
    t_star: float | None = None,
    viscosity: bool = True,
    solve_tol: float = 1e-13,
    threads: int = 1,
) -> ObservabilityStudy:
    """Minimum observability ratios over random draws, per time step.

    The same seeded Gaussian draws are reused across all dt values (so the
    study isolates the dt dependence); each dt also gets low-pass-filtered
    variants with cutoff ``delta / dt``.  Uniformity holds when the per-dt
    minima stay above a common positive floor.
    """
    policy = observation_time(sys, t_star)
    n = sys.n
    children = np.random.SeedSequence(seed).spawn(trials)
    X = np.empty((2 * n, trials))
    for i, child in enumerate(children):
        X[:, i] = np.random.default_rng(child).standard_normal(2 * n)

    def run_cell(dt: float) -> ObservabilityCell:
        cutoff = delta / dt
        keep = np.concatenate([sys.mu <= cutoff, sys.mu <= cutoff])
        XL = np.where(keep[:, None], X, 0.0)
        damp, v1, v2, weak, _ = _observability_sums(
            sys, X, beta, dt, policy.t_star, viscosity, solve_tol
        )
        ratios = (damp + v1 + v2) / weak
        dl, v1l, v2l, weakl, _ = _observability_sums(
            sys, XL, beta, dt, policy.t_star, viscosity, solve_tol
        )
        active = weakl > 0.0
        ratios_low = (dl[active] + v1l[active] + v2l[active]) / weakl[active]
        return ObservabilityCell(
            dt=dt,
            t_star=policy.t_star,
            cutoff=cutoff,
            min_ratio=float(np.min(ratios)),
            min_ratio_lowpass=float(np.min(ratios_low)) if active.any() else math.nan,
            n_lowpass_active=int(np.count_nonzero(active)),
        )

    dt_list = list(dt_list)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = tuple(pool.map(run_cell, dt_list))
    else:
        cells = tuple(run_cell(dt) for dt in dt_list)
    return ObservabilityStudy(
        beta=beta,
        delta=delta,
        gamma=policy.gamma,
        gamma1=policy.gamma1,
        route=policy.route,
        trials=trials,
        seed=seed,
        cells=cells,
    )


# -- high-frequency estimates ----------------------------------------------


@dataclass(frozen=True)
class InverseInequalityReport:
    delta: float
    min_ratio_h: float
    min_ratio_weak: float
    n_high: int
    ok: bool


def inverse_inequality_check(
    sys: ModalSystem, dt: float, cutoff: float, beta: float = 0.0
) -> InverseInequalityReport:
    """Smallest Rayleigh ratio ``dt ||A y|| / ||y||`` over the high modes.

    Per mode the generator multiplies both the energy and the weak pair
    norm by exactly ``mu``, so the minimum is ``dt * min(high mu)`` in
    either scale (computed explicitly in both as a diagonal oracle); it
    must dominate ``delta = dt * cutoff``.  An empty high part passes
    vacuously with +inf ratios.
    """
    high = sys.mu > cutoff
    delta = dt * cutoff
    if not np.any(high):
        return InverseInequalityReport(delta, math.inf, math.inf, 0, True)
    eta = sys.eta[high]
    # basis state (a = e_j): ||A z||^2 / ||z||^2 in the energy scale
    ratios_h = np.sqrt((eta**2) / eta)
    # same mode in the -beta pair scale
    wa = eta ** (-2.0 * beta)
    wb = eta ** (-2.0 * beta - 1.0)
    ratios_w = np.sqrt((wb * eta**2) / wa)
    min_h = dt * float(np.min(ratios_h))
    min_w = dt * float(np.min(ratios_w))
    return InverseInequalityReport(
        delta=delta,
        min_ratio_h=min_h,
        min_ratio_weak=min_w,
        n_high=int(np.count_nonzero(high)),
        ok=bool(min_h >= delta and min_w >= delta),
    )


def _check_high(sys: ModalSystem, u0: ModalState, cutoff: float) -> None:
    low = sys.mu <= cutoff
    if np.any(u0.a[low] != 0.0) or np.any(u0.b[low] != 0.0):
        raise DomainError("initial state has components at or below the cutoff")


def high_freq_contraction(
    sys: ModalSystem,
    u0_high: ModalState,
    beta: float,
    dt: float,
    cutoff: float,
    steps: int,
    solve_tol: float = 1e-13,
) -> np.ndarray:
    """Per-step weak-norm ratios of the conservative viscous run.

    Every ratio must satisfy ``ratio <= 1 / (1 + 2 dt delta^2) + 1e-12``
    with ``delta = dt * cutoff``; a violation raises DiagnosticFailure.
    A zero initial state passes trivially (empty ratio sequence).
    """
    _check_high(sys, u0_high, cutoff)
    x0 = u0_high.stacked()[:, None]
    n = sys.n
    w0 = float(pair_norm_sq(sys, x0[:n], x0[n:], beta)[0])
    if w0 == 0.0:
        return np.empty(0)
    delta = dt * cutoff
    bound = 1.0 / (1.0 + 2.0 * dt * delta**2)
    cfg = SchemeConfig(dt=dt, t_final=max(steps * dt, dt), viscosity=True, damping=False,
                       solve_tol=solve_tol)
    solver = factorize(sys, cfg)
    ratios = np.empty(steps)
    prev = w0
    for k, _, _, zn in solver.iterate_raw(x0, steps, damped=False):
        cur = float(pair_norm_sq(sys, zn[:n], zn[n:], beta)[0])
        ratios[k] = cur / prev
        prev = cur
    if np.any(ratios > bound + 1e-12):
        worst = float(np.max(ratios))
        raise DiagnosticFailure(
            f"weak-norm contraction bound violated: max ratio {worst:.16g} > "
            f"{bound:.16g} + 1e-12"
        )
    return ratios


def high_freq_observability(
    sys: ModalSystem,
    u0_high: ModalState,
    beta: float,
    dt: float,
    T_star: float,
    solve_tol: float = 1e-13,
) -> float:
    """Viscosity-sum share of the observability ratio for a high state."""
    x0 = u0_high.stacked()[:, None]
    _, v1, v2, weak, _ = _observability_sums(
        sys, x0, beta, dt, T_star, viscosity=True, solve_tol=solve_tol
    )
    if weak[0] == 0.0:
        raise DomainError("zero initial state: observability ratio undefined")
    return float((v1[0] + v2[0]) / weak[0])


# -- polynomial decay -------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Log-log regression of an energy trace against (1 + t)."""

    exponent: float
    M_hat: float
    fit_window: tuple
    r_squared: float
    p0: float


def decay_fit(trace: EnergyTrace, beta: float, fit_window) -> DecayFit:
    """Fit ``E ~ (1+t)^-p`` on the window and envelope the theoretical rate.

    ``exponent`` is the least-squares slope of log E against log(1 + t);
    ``M_hat`` is the window supremum of ``(1 + t)^{p0} E / ||z0||_D^2`` at
    the theoretical rate ``p0 = 1 / (1 + 2 beta)``.
    """
    lo, hi = fit_window
    mask = (trace.t >= lo) & (trace.t <= hi)
    if np.count_nonzero(mask) < 2:
        raise DomainError("fit window contains fewer than two samples")
    E = trace.energy[mask]
    if np.any(E <= 0.0):
        raise DomainError("energy must be strictly positive on the fit window")
    if trace.domain_sq0 <= 0.0:
        raise DomainError("initial state has zero generator-domain norm")
    x = np.log1p(trace.t[mask])
    y = np.log(E)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r_sq = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0.0 else 1.0
    p0 = 1.0 / (1.0 + 2.0 * beta)
    m_hat = float(np.max((1.0 + trace.t[mask]) ** p0 * E / trace.domain_sq0))
    return DecayFit(
        exponent=float(-slope),
        M_hat=m_hat,
        fit_window=(float(lo), float(hi)),
        r_squared=r_sq,
        p0=p0,
    )


def synthetic_trace(t, energy, domain_sq0: float = 1.0, beta: float = 0.0) -> EnergyTrace:
    """Wrap externally computed (t, E) samples as an EnergyTrace for fitting."""
    t = np.asarray(t, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if t.shape != energy.shape or t.ndim != 1 or t.size < 2:
        raise DomainError("t and energy must be matching 1-d arrays")
    nsteps = t.size - 1
    zeros = np.zeros(nsteps)
    return EnergyTrace(
        dt=float(t[1] - t[0]),
        beta=beta,
        t=t,
        energy=energy,
        weak_sq=np.zeros_like(energy),
        damp=zeros,
        visc1=zeros.copy(),
        visc2=zeros.copy(),
        identity_residual=zeros.copy(),
        observed_damp=zeros.copy(),
        domain_sq0=domain_sq0,
        solve_tol=1e-13,
    )


def worst_case_family(sys: ModalSystem, n_singles: int = 5):
    """Initial states that stress polynomial (not exponential) decay.

    Unit generator-domain-norm members: single displacement modes spread
    across the spectrum, equal-amplitude displacement combinations inside
    2-clusters (the weakly damped directions), and the highest retained
    mode.  Returns (label, state) pairs.
    """
    n = sys.n
    idx = sorted(set(np.linspace(0, n - 1, max(n_singles, 2)).astype(int)))
    members = []
    for j in idx:
        a = np.zeros(n)
        a[j] = 1.0
        members.append((f"mode[{j}]", ModalState(a, np.zeros(n))))
    gamma1 = check_gap(sys).gamma1
    if math.isfinite(gamma1):
        pairs = [c for c in cluster_partition(sys.mu, gamma1) if len(c) == 2]
        if pairs:
            chosen = sorted({0, len(pairs) // 2, len(pairs) - 1})
            for c in chosen:
                i, j = pairs[c]
                a = np.zeros(n)
                a[i] = 1.0
                a[j] = 1.0
                members.append((f"pair[{i},{j}]", ModalState(a, np.zeros(n))))
    out = []
    for label, st in members:
        d = norm_domain(sys, st)
        out.append((label, ModalState(st.a / d, st.b / d)))
    return out


@dataclass(frozen=True)
class MemberFit:
    """Per-member decay summary; ``exponent`` is None when the member's
    energy underflows to zero inside the window (super-fast decay), in
    which case only the sup-based ``m_hat`` is meaningful."""

    label: str
    m_hat: float
    exponent: float | None
    r_squared: float | None


@dataclass(frozen=True)
class DecayCell:
    dt: float
    member_fits: tuple
    envelope: DecayFit


@dataclass(frozen=True)
class DecayStudy:
    beta: float
    p0: float
    t_star: float
    T: float
    fit_window: tuple
    uniformity_factor: float
    exponent_floor: float
    cells: tuple
    envelope_spread: float
    verdict: str  # "uniform" | "non-uniform" | "inconclusive"


def uniform_decay_study(
    sys: ModalSystem,
    beta: float,
    dt_list,
    z0_family=None,
    T: float = 200.0,
    fit_window=None,
    t_star: float | None = None,
    uniformity_factor: float = 4.0,
    exponent_floor: float = 0.7,
    viscosity: bool = True,
    damping: bool = True,
    solve_tol: float = 1e-13,
    threads: int = 1,
) -> DecayStudy:
    """Sweep the damped scheme over dt and fit the polynomial envelope.

    Each family member is normalized to unit generator-domain norm and run
    to T; the family envelope (per-step maximum of the member energies) is
    the quantity the uniform decay bound controls, so the verdict is based
    on the envelope fits: "uniform" when every envelope M_hat is finite,
    their spread across dt is within ``uniformity_factor`` and every
    envelope exponent reaches ``exponent_floor``.  Per-member fits are
    reported alongside.
    """
    policy = observation_time(sys, t_star)
    if fit_window is None:
        fit_window = (0.5 * policy.t_star, T)
    if z0_family is None:
        z0_family = worst_case_family(sys)
    n = sys.n
    labels = [lab for lab, _ in z0_family]
    X0 = np.empty((2 * n, len(z0_family)))
    for c, (_, st) in enumerate(z0_family):
        d = norm_domain(sys, st)
        if d == 0.0:
            raise DomainError(f"family member {labels[c]!r} has zero domain norm")
        X0[:, c] = st.stacked() / d

    def run_cell(dt: float) -> DecayCell:
        cfg = SchemeConfig(dt=dt, t_final=T, viscosity=viscosity, damping=damping,
                           solve_tol=solve_tol)
        solver = factorize(sys, cfg)
        nsteps = substep_count(T, dt) + 1
        E = np.empty((nsteps + 1, X0.shape[1]))
        E[0] = solver._energy_cols(X0)
        for k, _, _, zn in solver.iterate_raw(X0, nsteps):
            E[k + 1] = solver._energy_cols(zn)
        t = np.arange(nsteps + 1) * dt
        mask = (t >= fit_window[0]) & (t <= fit_window[1])
        p0 = 1.0 / (1.0 + 2.0 * beta)
        fits = []
        for c, lab in enumerate(labels):
            m_hat = float(np.max((1.0 + t[mask]) ** p0 * E[mask, c]))
            if np.all(E[mask, c] > 0.0):
                f = decay_fit(synthetic_trace(t, E[:, c], 1.0, beta), beta, fit_window)
                fits.append(MemberFit(lab, m_hat, f.exponent, f.r_squared))
            else:
                fits.append(MemberFit(lab, m_hat, None, None))
        env = decay_fit(synthetic_trace(t, E.max(axis=1), 1.0, beta), beta, fit_window)
        return DecayCell(dt=dt, member_fits=tuple(fits), envelope=env)

    dt_list = list(dt_list)
    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                cells = tuple(pool.map(run_cell, dt_list))
        else:
            cells = tuple(run_cell(dt) for dt in dt_list)
    except DomainError:
        return DecayStudy(
            beta=beta,
            p0=1.0 / (1.0 + 2.0 * beta),
            t_star=policy.t_star,
            T=T,
            fit_window=tuple(fit_window),
            uniformity_factor=uniformity_factor,
            exponent_floor=exponent_floor,
            cells=(),
            envelope_spread=math.nan,
            verdict="inconclusive",
        )

    m_hats = np.array([c.envelope.M_hat for c in cells])
    exps = np.array([c.envelope.exponent for c in cells])
    if not np.all(np.isfinite(m_hats)):
        verdict = "inconclusive"
        spread = math.nan
    else:
        spread = float(np.max(m_hats) / np.min(m_hats))
        if spread <= uniformity_factor and np.all(exps >= exponent_floor):
            verdict = "uniform"
        else:
            verdict = "non-uniform"
    return DecayStudy(
        beta=beta,
        p0=1.0 / (1.0 + 2.0 * beta),
        t_star=policy.t_star,
        T=T,
        fit_window=tuple(fit_window),
        uniformity_factor=uniformity_factor,
        exponent_floor=exponent_floor,
        cells=cells,
        envelope_spread=spread,
        verdict=verdict,
    )


# -- extremal recursion oracle ----------------------------------------------


@dataclass(frozen=True)
class DecayRecursionResult:
    values: np.ndarray = field(repr=False)
    M: float
    rate: float
    stagnant: bool


def decay_recursion_oracle(
    C: float, alpha: float, E0: float, steps: int
) -> DecayRecursionResult:
    """Iterate the extremal recursion e + C e^{2+alpha} = previous value.

    Each step solves the monotone scalar equation by bisection on the
    bracket [e - C e^{2+alpha}, e] to 1e-14 relative width.  Returns the
    sequence together with the fitted envelope constant
    ``M = sup_k e_k (k+1)^{1/(alpha+1)}``.  A sequence that barely moves
    (C too small for the horizon) is flagged ``stagnant``.
    """
    if not (C > 0.0):
        raise DomainError("C must be positive")
    if not (alpha > -1.0):
        raise DomainError("alpha must exceed -1")
    if not (E0 > 0.0):
        raise DomainError("E0 must be positive")
    if steps < 1:
        raise DomainError("steps must be positive")

    p = 2.0 + alpha
    quadratic = alpha == 0.0
    values = np.empty(steps + 1)
    values[0] = E0
    e = E0
    for k in range(steps):
        f = C * (e * e if quadratic else e**p)  # C e^p
        lo = e - f
        if lo < 0.0:
            lo = 0.0
        # second-order estimate of the root as a candidate upper endpoint
        hi = lo + 1.25 * p * C * f * (f / e)
        if hi >= e or (hi + C * (hi * hi if quadratic else hi**p) - e) < 0.0:
            hi = e
        tol = 1e-14 * e
        while hi - lo > tol:
            mid = 0.5 * (hi + lo)
            if mid + C * (mid * mid if quadratic else mid**p) - e > 0.0:
                hi = mid
            else:
                lo = mid
        e = 0.5 * (hi + lo)
        values[k + 1] = e

    rate = 1.0 / (alpha + 1.0)
    M = float(np.max(values * (np.arange(steps + 1) + 1.0) ** rate))
    return DecayRecursionResult(values=values, M=M, rate=rate, stagnant=bool(e > 0.99 * E0))
