"""Modal state space, graded norms, energies, and frequency projections.

The toolkit works on finite modal truncations of a damped second-order
system

    w''(t) + A w(t) + B B* w'(t) = 0

written in the orthonormal eigenbasis of the positive self-adjoint
operator A.  A system is then fully described by

* the eigenvalues ``eta_j > 0`` (frequencies ``mu_j = sqrt(eta_j)``),
* the damping Gram matrix ``D[j, m] = <B* phi_j, B* phi_m>_Y``,

and a state by the pair of real coefficient vectors ``(a, b)`` of the
displacement and the velocity.  All norms used downstream are modal sums
weighted by powers of ``eta``:

    ||w||_{s}^2      = sum_j eta_j^{2 s} w_j^2            (graded norm)
    ||(a, b)||_{-beta}^2 = ||a||_{-beta}^2 + ||b||_{-beta-1/2}^2

so the energy is E = (1/2) ||(a, b)||_{1/2-scale}^2 with exact constants
(no hidden norm equivalences).

Everything in this module is pure; systems and states are immutable value
types and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, DomainError, NonFiniteStateError

# Sobolev-scale exponent applied to the eigenvalues of the spatial operator.
GradedLevel = float

_SYM_RTOL = 1e-14
_PSD_RTOL = 1e-12
_BSTAR_RTOL = 1e-14


def _readonly(x) -> np.ndarray:
    out = np.array(x, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModalSystem:
    """Finite modal truncation: eigenvalues, frequencies and damping Gram.

    Attributes
    ----------
    eta : (n,) positive eigenvalues of the spatial operator, nondecreasing.
    mu : (n,) frequencies, ``mu_j = sqrt(eta_j)``.
    damp_gram : (n, n) symmetric PSD matrix of Y-inner products of the
        damping observations of the eigenvectors.
    bstar_norms : (n,) per-mode observation norms, ``sqrt(diag(damp_gram))``.
    labels : per-mode branch tags, e.g. ``("-", 3)``; empty tuple if unused.
    """

    eta: np.ndarray
    mu: np.ndarray
    damp_gram: np.ndarray
    bstar_norms: np.ndarray
    labels: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.eta.shape[0]

    @classmethod
    def from_eta(cls, eta, damp_gram=None, labels=None, mu=None) -> "ModalSystem":
        """Build and validate a system from eigenvalues and a damping Gram.

        ``mu`` may be supplied when the frequencies are the natural data
        (e.g. closed-form spectra); it is checked against ``sqrt(eta)``.
        """
        eta = _readonly(np.atleast_1d(eta))
        if eta.ndim != 1 or eta.size == 0:
            raise DomainError("eta must be a nonempty 1-d vector")
        if not np.all(np.isfinite(eta)):
            raise NonFiniteStateError("eta contains non-finite entries")
        if np.any(eta <= 0.0):
            raise DomainError("eta must be strictly positive")
        if np.any(np.diff(eta) < 0.0):
            raise DomainError("eta must be nondecreasing")
        n = eta.size

        if mu is None:
            mu_arr = np.sqrt(eta)
        else:
            mu_arr = np.asarray(mu, dtype=float)
            if mu_arr.shape != (n,):
                raise DimensionMismatchError("mu", n, mu_arr.size)
            if np.max(np.abs(mu_arr**2 - eta)) > 1e-12 * np.max(eta):
                raise DomainError("mu**2 inconsistent with eta")
        mu_arr = _readonly(mu_arr)

        if damp_gram is None:
            D = np.zeros((n, n))
        else:
            D = np.array(damp_gram, dtype=float, copy=True)
        if D.shape != (n, n):
            raise DimensionMismatchError("damp_gram rows", n, D.shape[0])
        if not np.all(np.isfinite(D)):
            raise NonFiniteStateError("damp_gram contains non-finite entries")
        scale = np.max(np.abs(D))
        if scale > 0.0:
            if np.max(np.abs(D - D.T)) > _SYM_RTOL * scale:
                raise DomainError("damp_gram is not symmetric to 1e-14 relative")
            lam_min = float(np.linalg.eigvalsh(D)[0])
            if lam_min < -_PSD_RTOL * scale:
                raise DomainError(
                    f"damp_gram not positive semidefinite: min eigenvalue {lam_min:g}"
                )
        D = _readonly(D)

        bstar = _readonly(np.sqrt(np.maximum(np.diag(D), 0.0)))

        if labels is None:
            labels = ()
        labels = tuple(labels)
        if labels and len(labels) != n:
            raise DimensionMismatchError("labels", n, len(labels))

        return cls(eta=eta, mu=mu_arr, damp_gram=D, bstar_norms=bstar, labels=labels)


@dataclass(frozen=True)
class ModalState:
    """Real modal coefficient pair: displacement ``a`` and velocity ``b``."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _readonly(np.atleast_1d(self.a))
        b = _readonly(np.atleast_1d(self.b))
        if a.shape != b.shape or a.ndim != 1:
            raise DimensionMismatchError("velocity block", a.size, b.size)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise NonFiniteStateError("state contains NaN or Inf entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def zero(cls, n: int) -> "ModalState":
        return cls(np.zeros(n), np.zeros(n))

    def stacked(self) -> np.ndarray:
        """Return the stacked vector ``[a; b]`` (length 2n)."""
        return np.concatenate([self.a, self.b])

    @classmethod
    def from_stacked(cls, x) -> "ModalState":
        x = np.asarray(x, dtype=float)
        n = x.shape[0] // 2
        return cls(x[:n], x[n:])


def _check_conforms(sys: ModalSystem, state: ModalState) -> None:
    if state.n != sys.n:
        raise DimensionMismatchError("state", sys.n, state.n)


def _check_vector(sys: ModalSystem, w: np.ndarray, what: str = "vector") -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != sys.n:
        raise DimensionMismatchError(what, sys.n, w.shape[0] if w.ndim == 1 else -1)
    return w


def norm_graded(sys: ModalSystem, w, s: GradedLevel) -> float:
    """Graded modal norm ``sqrt(sum eta_j^{2s} w_j^2)``.

    ``s = 1/2`` gives the V-norm of a displacement, ``s = 0`` the X-norm,
    negative ``s`` the dual (weak) scales.
    """
    w = _check_vector(sys, w)
    return float(np.sqrt(np.sum(sys.eta ** (2.0 * s) * w**2)))


def pair_norm_sq(sys: ModalSystem, a, b, beta: float):
    """Squared pair norm on the ``-beta`` scale; broadcasts over columns.

    ``a`` and ``b`` may be (n,) vectors or (n, m) column batches.
    """
    wa = sys.eta ** (-2.0 * beta)
    wb = sys.eta ** (-2.0 * beta - 1.0)
    if np.ndim(a) == 2:
        wa = wa[:, None]
        wb = wb[:, None]
    return np.sum(wa * np.square(a), axis=0) + np.sum(wb * np.square(b), axis=0)


def norm_pair(sys: ModalSystem, state: ModalState, beta: float) -> float:
    """Pair norm ``sqrt(||a||_{-beta}^2 + ||b||_{-beta-1/2}^2)``.

    ``beta = -1/2`` gives the finite-energy (H) norm, ``beta = 0`` the weak
    norm used by the observability inequalities.
    """
    _check_conforms(sys, state)
    return float(np.sqrt(pair_norm_sq(sys, state.a, state.b, beta)))


def norm_domain(sys: ModalSystem, state: ModalState) -> float:
    """Generator-domain norm ``sqrt(sum eta^2 a^2 + sum eta b^2)``."""
    _check_conforms(sys, state)
    return float(np.sqrt(np.sum(sys.eta**2 * state.a**2) + np.sum(sys.eta * state.b**2)))


def energy(sys: ModalSystem, state: ModalState) -> float:
    """Energy ``(1/2)(sum eta a^2 + sum b^2)``; equals half the squared H-norm."""
    _check_conforms(sys, state)
    return 0.5 * float(np.sum(sys.eta * state.a**2) + np.sum(state.b**2))


def inner_h(sys: ModalSystem, z1: ModalState, z2: ModalState) -> float:
    """H-inner product ``sum eta a1 a2 + sum b1 b2`` inducing the pair norm."""
    _check_conforms(sys, z1)
    _check_conforms(sys, z2)
    return float(np.sum(sys.eta * z1.a * z2.a) + np.sum(z1.b * z2.b))


def project_filter(sys: ModalSystem, state: ModalState, cutoff: float):
    """Split a state into (low, high) parts across a frequency cutoff.

    ``low`` keeps modes with ``mu_j <= cutoff``, ``high`` the rest.  The
    split is componentwise, so ``low + high`` reproduces the input bitwise
    and the parts are orthogonal in every graded norm.
    """
    _check_conforms(sys, state)
    if not (cutoff > 0.0):
        raise DomainError("cutoff must be positive")
    keep = sys.mu <= cutoff
    low = ModalState(np.where(keep, state.a, 0.0), np.where(keep, state.b, 0.0))
    high = ModalState(np.where(keep, 0.0, state.a), np.where(keep, 0.0, state.b))
    return low, high


def apply_A(sys: ModalSystem, state: ModalState) -> ModalState:
    """Apply the first-order block generator: ``(a, b) -> (b, -eta * a)``."""
    _check_conforms(sys, state)
    return ModalState(state.b.copy(), -sys.eta * state.a)
