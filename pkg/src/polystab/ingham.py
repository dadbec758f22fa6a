"""Empirical constants for discrete Ingham-type exponential-sum estimates.

For a real frequency family ``omega_k`` and complex coefficients ``x_k``
the sampled quadratic form

    S(x, t) = sigma * sum_{j=-J..J} | sum_k x_k exp(i omega_k (t + j sigma)) |^2

is equivalent to a coefficient norm whenever the family has a uniform
gap:

* pairwise gap ``|omega_k - omega_n| >= gamma``:  S(x, t) ~ sum |x_k|^2,
  for ``0 < sigma <= pi/gamma``, ``J sigma > pi/gamma`` and coefficients
  supported strictly inside the sampling window
  ``|omega_k| <= pi/sigma - gamma/2``;

* 2-separated gap ``omega_{k+2} - omega_k >= 2 gamma_1`` (pairs may
  cluster):  S(x, 0) ~ Q(x) with the cluster-aware quadratic form

      Q(x) = sum_{isolated} |x_k|^2
           + sum_{2-clusters} |x_k + x_{k+1}|^2
             + (omega_{k+1} - omega_k)^2 (|x_k|^2 + |x_{k+1}|^2).

The theorems assert the existence of two-sided constants; this module
*measures* them: it draws seeded complex Gaussian coefficient vectors,
appends deterministic adversarial draws (cancelling pairs ``e_i -
e_{i+1}`` on every adjacent frequency pair), and reports the min/max
observed ratios as empirical envelopes.  These are estimates, not proofs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .spectra import cluster_partition

__all__ = [
    "InghamConfig",
    "InghamEstimate",
    "support_threshold",
    "ingham_ratio_scalar",
    "estimate_scalar",
    "q_form",
    "estimate_clustered",
    "cluster_seminorm",
]


@dataclass(frozen=True)
class InghamConfig:
    """Sampling parameters: period sigma, half-width J, gap constant, draws."""

    sigma: float
    J: int
    gamma: float
    trials: int = 1000
    seed: int = 0

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise DomainError("gamma must be positive and finite")
        if not (0.0 < self.sigma <= math.pi / self.gamma):
            raise DomainError("sigma must lie in (0, pi/gamma]")
        if self.J < 1:
            raise DomainError("J must be a positive integer")
        if not (self.J * self.sigma > math.pi / self.gamma):
            raise DomainError("J * sigma must exceed pi/gamma")
        if self.trials < 1:
            raise DomainError("trials must be positive")


@dataclass(frozen=True)
class InghamEstimate:
    """Empirical two-sided envelope of the sampled ratio."""

    c_lo: float
    c_hi: float
    n_active: int


def support_threshold(cfg: InghamConfig) -> float:
    """Window edge pi/sigma - gamma/2 of the coefficient support condition."""
    return math.pi / cfg.sigma - 0.5 * cfg.gamma


def _support_mask(freqs: np.ndarray, cfg: InghamConfig) -> np.ndarray:
    # Coefficients strictly above the window edge are zeroed; the edge
    # itself survives.
    return np.abs(freqs) <= support_threshold(cfg)


def _apply_support(freqs: np.ndarray, coeffs: np.ndarray, cfg: InghamConfig) -> np.ndarray:
    mask = _support_mask(freqs, cfg)
    zeroed = int(np.count_nonzero(coeffs[~mask]))
    if zeroed:
        warnings.warn(
            f"{zeroed} coefficient(s) beyond the support window were zeroed",
            stacklevel=3,
        )
    out = np.array(coeffs, dtype=complex)
    out[~mask] = 0.0
    return out


def _sample_matrix(freqs: np.ndarray, cfg: InghamConfig, t: float) -> np.ndarray:
    """(2J+1, n) matrix of exp(i omega (t + j sigma)) samples."""
    times = t + cfg.sigma * np.arange(-cfg.J, cfg.J + 1)
    return np.exp(1j * np.outer(times, freqs))


def _sampled_sums(freqs, X, cfg, t=0.0):
    """sigma * sum_j |sum_k x_k e^{i omega_k (t + j sigma)}|^2 per column."""
    E = _sample_matrix(freqs, cfg, t)
    return cfg.sigma * np.sum(np.abs(E @ X) ** 2, axis=0)


def ingham_ratio_scalar(freqs, coeffs, cfg: InghamConfig, t: float = 0.0) -> float:
    """Sampled-sum ratio against sum |x_k|^2 for one coefficient vector.

    Coefficients violating the support condition are zeroed (with a
    warning); the ratio is computed on the survivors.
    """
    freqs = np.asarray(freqs, dtype=float)
    coeffs = np.asarray(coeffs)
    if coeffs.shape != freqs.shape:
        raise DomainError("coeffs must match freqs in length")
    x = _apply_support(freqs, coeffs, cfg)
    denom = float(np.sum(np.abs(x) ** 2))
    if denom == 0.0:
        raise DomainError("all coefficients zeroed by the support condition")
    num = float(_sampled_sums(freqs, x[:, None], cfg, t)[0])
    return num / denom


def _draw_coefficients(freqs: np.ndarray, cfg: InghamConfig) -> np.ndarray:
    """Seeded Gaussian draws on the supported modes plus adversarial pairs.

    Columns 0..trials-1 are complex standard normal restricted to the
    support window (per-trial spawned streams keep the draws independent
    of execution order); the remaining columns are the deterministic
    cancelling draws e_i - e_{i+1} for every adjacent supported pair.
    """
    n = freqs.size
    mask = _support_mask(freqs, cfg)
    active = np.nonzero(mask)[0]
    if active.size == 0:
        raise DomainError("no frequencies inside the support window")
    X = np.zeros((n, cfg.trials), dtype=complex)
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.trials)
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        X[active, i] = rng.standard_normal(active.size) + 1j * rng.standard_normal(
            active.size
        )
    adversarial = []
    order = active[np.argsort(freqs[active])]
    for i, j in zip(order[:-1], order[1:]):
        col = np.zeros(n, dtype=complex)
        col[i] = 1.0
        col[j] = -1.0
        adversarial.append(col)
    if adversarial:
        X = np.concatenate([X, np.stack(adversarial, axis=1)], axis=1)
    return X


def estimate_scalar(freqs, cfg: InghamConfig) -> InghamEstimate:
    """Empirical envelope of the ratio against sum |x_k|^2 at t = 0."""
    freqs = np.asarray(freqs, dtype=float)
    X = _draw_coefficients(freqs, cfg)
    num = _sampled_sums(freqs, X, cfg)
    denom = np.sum(np.abs(X) ** 2, axis=0)
    ratios = num / denom
    return InghamEstimate(
        c_lo=float(np.min(ratios)),
        c_hi=float(np.max(ratios)),
        n_active=int(np.count_nonzero(_support_mask(freqs, cfg))),
    )


def q_form(freqs, coeffs, gamma1: float | None = None, partition=None) -> float:
    """Cluster-aware coefficient form Q(x) for a sorted frequency family."""
    freqs = np.asarray(freqs, dtype=float)
    coeffs = np.asarray(coeffs)
    if coeffs.shape != freqs.shape:
        raise DomainError("coeffs must match freqs in length")
    if partition is None:
        if gamma1 is None:
            raise DomainError("q_form needs gamma1 or an explicit partition")
        partition = cluster_partition(freqs, gamma1)
    total = 0.0
    for cluster in partition:
        if len(cluster) == 1:
            total += abs(coeffs[cluster[0]]) ** 2
        else:
            i, j = cluster
            gap = freqs[j] - freqs[i]
            total += (
                abs(coeffs[i] + coeffs[j]) ** 2
                + gap**2 * (abs(coeffs[i]) ** 2 + abs(coeffs[j]) ** 2)
            )
    return float(total)


def estimate_clustered(freqs, cfg: InghamConfig, partition=None) -> InghamEstimate:
    """Empirical envelope of the ratio against Q(x) at t = 0.

    ``cfg.gamma`` plays the role of the 2-separated constant and defines
    the default cluster partition.
    """
    freqs = np.asarray(freqs, dtype=float)
    if partition is None:
        partition = cluster_partition(freqs, cfg.gamma)
    X = _draw_coefficients(freqs, cfg)
    num = _sampled_sums(freqs, X, cfg)
    q = np.array([q_form(freqs, X[:, c], partition=partition) for c in range(X.shape[1])])
    good = q > 0.0
    if not np.any(good):
        raise DomainError("all draws have vanishing Q(x)")
    ratios = num[good] / q[good]
    return InghamEstimate(
        c_lo=float(np.min(ratios)),
        c_hi=float(np.max(ratios)),
        n_active=int(np.count_nonzero(_support_mask(freqs, cfg))),
    )


def cluster_seminorm(freqs, coeffs, partition, gram=None) -> float:
    """Cluster seminorm sum ||T_n C_n||^2 for vector-valued coefficients.

    ``coeffs`` has one row per frequency; rows are coordinates of Y-valued
    coefficients in a frame whose Gram matrix is ``gram`` (identity when
    omitted).  Isolated modes contribute ``||x_k||^2``; a 2-cluster with
    frequency gap g contributes ``||x_k + x_{k+1}||^2 + g^2 ||x_{k+1}||^2``
    (the printed row convention of the cluster matrices).
    """
    freqs = np.asarray(freqs, dtype=float)
    C = np.atleast_2d(np.asarray(coeffs))
    if C.shape[0] != freqs.size:
        # allow a 1-d scalar coefficient vector
        if C.shape == (1, freqs.size):
            C = C.T
        else:
            raise DomainError("coeffs must have one row per frequency")
    if gram is None:
        gram = np.eye(C.shape[1])
    gram = np.asarray(gram, dtype=float)

    def norm_sq(v):
        return float(np.real(np.conj(v) @ gram @ v))

    total = 0.0
    for cluster in partition:
        if len(cluster) == 1:
            total += norm_sq(C[cluster[0]])
        else:
            i, j = cluster
            gap = freqs[j] - freqs[i]
            total += norm_sq(C[i] + C[j]) + gap**2 * norm_sq(C[j])
    return total
