"""Resolvent of the shift on sampled sequences and directional Abel residues.

For a bounded sequence x and ``|lam| > 1`` the shift resolvent evaluated at
index n is ``g_n(lam) = sum_{k>=0} lam^{-(k+1)} x(n+k)``. Ray limits
``lam -> xi0`` are taken along ``lam = r xi0`` with ``r = 1 + 2^{-j}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InsufficientHorizon
from .linalg import resolvent_apply
from .orbit import OrbitSequence

J_MIN = 2
J_MAX = 14
TAIL_FRACTION = 0.25
TRUNC_REL = 1e-8
DIVERGENCE_RATIO = 1.8
MIN_USABLE = 8


@dataclass(frozen=True)
class RayGrid:
    xi0: complex
    j_min: int = J_MIN
    j_max: int = J_MAX

    def __post_init__(self):
        object.__setattr__(self, "xi0", complex(self.xi0))
        if abs(abs(self.xi0) - 1.0) > 1e-12:
            raise ValueError(f"ray base point {self.xi0} is not on the unit circle")
        if self.j_min < 1 or self.j_max - self.j_min < 2:
            raise ValueError("ray grid needs j_min >= 1 and at least three radii")

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    @property
    def radii(self) -> np.ndarray:
        return 1.0 + 2.0 ** (-self.js.astype(float))

    def capped(self, j_max: int) -> "RayGrid":
        return RayGrid(self.xi0, self.j_min, min(self.j_max, j_max))


@dataclass(frozen=True)
class AbelResidueEstimate:
    """Ray-limit estimate of ``(lam - xi0) R(lam) x`` as ``lam -> xi0``.

    ``rho[i]`` belongs to radius ``radii[i]``. ``residue_vector`` is None
    when the values blow up like ``(r - 1)^{-1}`` (``divergent``).
    """

    xi0: complex
    radii: np.ndarray = field(repr=False)
    rho: np.ndarray
    extrapolated_limit: float
    residue_vector: np.ndarray | None
    converged: bool
    truncation_terms_used: int
    tol: float
    divergent: bool = False
    reference_index: int | None = None
    fit_residual: float = 0.0

    @property
    def vanishes(self) -> bool:
        return (not self.divergent) and self.extrapolated_limit <= self.tol

    def to_dict(self) -> dict:
        from .io import complex_to_json, vector_to_json

        return {
            "xi0": complex_to_json(self.xi0),
            "radii": [float(r) for r in self.radii],
            "rho": [float(v) for v in self.rho],
            "extrapolated_limit": None if self.divergent else float(self.extrapolated_limit),
            "residue_vector": "Divergent" if self.divergent else vector_to_json(self.residue_vector),
            "divergent": self.divergent,
            "converged": self.converged,
            "vanishes": self.vanishes,
            "tol": self.tol,
            "truncation_terms_used": int(self.truncation_terms_used),
            "reference_index": self.reference_index,
            "fit_residual": float(self.fit_residual),
        }


def truncation_length(sup_norm: float, eps: float, lam_abs: float) -> int:
    """Terms needed so the dropped tail is below ``eps / (|lam| - 1)``."""
    if sup_norm == 0:
        return 0
    return max(math.ceil(math.log(sup_norm / eps) / math.log(lam_abs)), 0)


def _default_eps(x: OrbitSequence, eps_trunc: float | None) -> float:
    return eps_trunc if eps_trunc is not None else TRUNC_REL * x.sup_norm


def shift_resolvent_apply(x: OrbitSequence, lam: complex, n: int,
                          eps_trunc: float | None = None) -> np.ndarray:
    """Partial sum of ``g_n(lam)`` through ``k = K``.

    ``K = ceil(log(M / eps) / log|lam|)`` with ``M`` the sup norm, so the
    dropped tail is at most ``eps / (|lam| - 1)``.
    """
    lam = complex(lam)
    if not abs(lam) > 1:
        raise ValueError("need |lam| > 1")
    M = x.sup_norm
    if M == 0:
        return np.zeros(x.dim, dtype=complex)
    K = truncation_length(M, _default_eps(x, eps_trunc), abs(lam))
    if n < 1 or n + K > x.horizon:
        raise InsufficientHorizon(
            f"g_{n}({lam}) needs samples through n={n + K}, horizon is {x.horizon}",
            required=n + K)
    w = np.power(lam, -(np.arange(K + 1) + 1.0))
    return w @ x.samples[n - 1:n + K]


def _tail_sums(samples: np.ndarray, lam: complex) -> np.ndarray:
    """All-available-terms sums ``G_n``, n = 1..N, padded with ``G_{N+1} = 0``.

    Uses the backward recursion ``G_n = (x(n) + G_{n+1}) / lam``.
    """
    a = 1.0 / lam
    G = lfilter([a], [1.0, -a], samples[::-1], axis=0)[::-1]
    return np.vstack([G, np.zeros((1, samples.shape[1]), dtype=complex)])


def _truncated(G: np.ndarray, lam: complex, K: int, lo: int, hi: int) -> np.ndarray:
    # sum_{k=0}^{K} lam^{-(k+1)} x(n+k) = G_n - lam^{-(K+1)} G_{n+K+1}, n in [lo, hi]
    return G[lo - 1:hi] - lam ** (-(K + 1)) * G[lo + K:hi + K + 1]


def largest_usable_j(x: OrbitSequence, j_min: int = J_MIN, j_max: int = J_MAX,
                     eps_trunc: float | None = None) -> int | None:
    """Deepest ray index whose truncation still leaves ``MIN_USABLE`` indices."""
    M = x.sup_norm
    if M == 0:
        return j_max
    eps = _default_eps(x, eps_trunc)
    best = None
    for j in range(j_min, j_max + 1):
        K = truncation_length(M, eps, 1.0 + 2.0 ** -j)
        if x.horizon - K >= MIN_USABLE:
            best = j
        else:
            break
    return best


def fit_grid(x: OrbitSequence, xi0: complex, j_min: int = J_MIN, j_max: int = J_MAX,
             eps_trunc: float | None = None) -> RayGrid:
    """Ray grid for ``xi0`` capped at the largest j the horizon supports."""
    jm = largest_usable_j(x, j_min, j_max, eps_trunc)
    if jm is None or jm - j_min < 2:
        raise InsufficientHorizon(
            f"horizon {x.horizon} supports no three-radius ray grid from j={j_min}",
            required=_required_horizon(x, j_min + 2, eps_trunc), largest_usable_j=jm)
    return RayGrid(xi0, j_min, jm)


def _required_horizon(x, j, eps_trunc):
    eps = _default_eps(x, eps_trunc)
    return truncation_length(x.sup_norm, eps, 1.0 + 2.0 ** -j) + MIN_USABLE


def _linear_extrapolate(t: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares line in ``t`` through rows of ``y``; value at 0 and max residual."""
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit = A @ coef
    resid = np.abs(y - fit)
    if resid.ndim > 1:
        resid = np.linalg.norm(resid, axis=1)
    return coef[0], float(resid.max())


def abel_residue_sequence(x: OrbitSequence, xi0: complex, grid: RayGrid | None = None,
                          tol: float = 1e-3, eps_trunc: float | None = None) -> AbelResidueEstimate:
    """Directional Abel residue of the shift resolvent at ``xi0``.

    For each radius ``r_j`` the estimate ``rho(r_j)`` is the max over the
    last quarter of usable indices of ``||(r_j - 1) xi0 g_n(r_j xi0)||``.
    The last three values are extrapolated linearly in ``r - 1`` to
    ``r = 1``; the residue is declared zero iff that limit is ``<= tol``.
    """
    xi0 = complex(xi0)
    grid = grid or RayGrid(xi0)
    if abs(grid.xi0 - xi0) > 1e-12:
        raise ValueError("grid base point differs from xi0")
    N, d = x.horizon, x.dim
    M = x.sup_norm
    radii = grid.radii
    if M == 0:
        return AbelResidueEstimate(xi0, radii, np.zeros(len(radii)), 0.0,
                                   np.zeros(d, dtype=complex), True, 0, tol)
    jm = largest_usable_j(x, grid.j_min, grid.j_max, eps_trunc)
    if jm is None or jm < grid.j_max:
        raise InsufficientHorizon(
            f"horizon {N} too short for j_max={grid.j_max} (largest usable j: {jm})",
            required=_required_horizon(x, grid.j_max, eps_trunc), largest_usable_j=jm)

    eps = _default_eps(x, eps_trunc)
    Ks = [truncation_length(M, eps, r) for r in radii]
    U_last = N - Ks[-1]
    n_ref = max(math.floor((1 - TAIL_FRACTION) * U_last) + 1, 1)
    rho = np.empty(len(radii))
    ref_vals = np.empty((len(radii), d), dtype=complex)
    for i, (r, K) in enumerate(zip(radii, Ks)):
        lam = r * xi0
        G = _tail_sums(x.samples, lam)
        U = N - K
        lo = max(math.floor((1 - TAIL_FRACTION) * U) + 1, 1)
        g = _truncated(G, lam, K, lo, U)
        rho[i] = float(np.max(np.linalg.norm((lam - xi0) * g, axis=1)))
        ref_vals[i] = (lam - xi0) * _truncated(G, lam, K, n_ref, n_ref)[0]

    t = radii[-3:] - 1.0
    limit, resid = _linear_extrapolate(t, rho[-3:])
    vec, _ = _linear_extrapolate(t, ref_vals[-3:])
    converged = resid <= 0.1 * float(rho.max()) + tol
    return AbelResidueEstimate(
        xi0=xi0, radii=radii, rho=rho, extrapolated_limit=max(float(limit), 0.0),
        residue_vector=np.asarray(vec), converged=bool(converged),
        truncation_terms_used=int(Ks[-1]), tol=tol, reference_index=int(n_ref),
        fit_residual=resid)


def operator_abel_residue(B, xi0: complex, x0, grid: RayGrid | None = None,
                          tol: float = 1e-6) -> AbelResidueEstimate:
    """Ray limit of ``(lam - xi0) R(lam, B) x0`` along ``lam = r xi0``.

    Divergence (a pole of order >= 2 hit by ``x0``) is declared when the
    norms grow by a factor >= 1.8 over each of the last two radius steps.
    Otherwise the limit vector is the quadratic extrapolation of the last
    three values to ``r = 1``.
    """
    xi0 = complex(xi0)
    grid = grid or RayGrid(xi0)
    A = np.asarray(B, dtype=complex)
    x0 = np.asarray(x0, dtype=complex)
    eig = np.linalg.eigvals(A)
    radii = grid.radii
    vals = np.array([(r * xi0 - xi0) * resolvent_apply(A, r * xi0, x0, eig) for r in radii])
    rho = np.linalg.norm(vals, axis=1)

    last = rho[-3:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = last[1:] / last[:-1]
    divergent = bool(np.all(last > 0) and np.all(ratios >= DIVERGENCE_RATIO))
    t = radii[-3:] - 1.0
    _, resid = _linear_extrapolate(t, last)
    if divergent:
        return AbelResidueEstimate(xi0, radii, rho, math.inf, None, False, 0, tol,
                                   divergent=True, fit_residual=resid)
    # Lagrange weights at t = 0 for the last three nodes
    w = np.array([np.prod([tj / (tj - t[i]) for tj in np.delete(t, i)]) for i in range(3)])
    vec = w @ vals[-3:]
    limit = float(np.linalg.norm(vec))
    converged = resid <= 0.1 * float(rho.max()) + tol
    return AbelResidueEstimate(xi0, radii, rho, limit, vec, bool(converged), 0, tol,
                               fit_residual=resid)


@dataclass(frozen=True)
class BoundCheck:
    lam: complex
    value: float
    bound: float
    terms: int
    truncated: bool

    @property
    def margin(self) -> float:
        return self.bound - self.value

    @property
    def ok(self) -> bool:
        return self.value <= self.bound


@dataclass(frozen=True)
class ResolventBoundReport:
    entries: tuple[BoundCheck, ...]

    @property
    def all_ok(self) -> bool:
        return all(e.ok for e in self.entries)

    @property
    def min_margin(self) -> float:
        return min(e.margin for e in self.entries)

    def to_dict(self) -> dict:
        from .io import complex_to_json

        return {
            "all_ok": self.all_ok,
            "entries": [
                {"lambda": complex_to_json(e.lam), "value": e.value, "bound": e.bound,
                 "margin": e.margin, "ok": e.ok, "terms": e.terms, "truncated": e.truncated}
                for e in self.entries
            ],
        }


def shift_resolvent_bound_check(x: OrbitSequence, lam_grid, eps_trunc: float | None = None
                                ) -> ResolventBoundReport:
    """Check ``max_n ||g_n(lam)|| <= sup/(|lam| - 1) (1 + 1e-10) + eps`` on a grid.

    When the horizon is shorter than the truncation length, the partial
    sums over all available samples are used instead (they obey the same
    bound) and the entry is marked ``truncated``.
    """
    M = x.sup_norm
    eps = _default_eps(x, eps_trunc)
    out = []
    for lam in lam_grid:
        lam = complex(lam)
        if not abs(lam) > 1:
            raise ValueError(f"|lam| must exceed 1, got {lam}")
        K = truncation_length(M, eps, abs(lam)) if M > 0 else 0
        G = _tail_sums(x.samples, lam)
        U = x.horizon - K
        if U >= 1:
            g = _truncated(G, lam, K, 1, U)
            truncated = False
        else:
            g = G[:-1]
            truncated = True
        value = float(np.max(np.linalg.norm(g, axis=1)))
        bound = M / (abs(lam) - 1.0) * (1.0 + 1e-10) + eps
        out.append(BoundCheck(lam, value, bound, K, truncated))
    return ResolventBoundReport(tuple(out))
