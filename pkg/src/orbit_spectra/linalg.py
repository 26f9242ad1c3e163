"""Dense complex linear algebra for small operators.

Eigenvalue clustering, pole orders from rank scans, Riesz projections by
trapezoidal contour quadrature, and a power-boundedness estimate. Matrices
are ``numpy`` arrays of dtype ``complex128`` with dimension at most 64.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateGap, NearSpectrum, NoConvergence

MAX_DIM = 64
CLUSTER_TOL = 1e-7
PERIPHERAL_TOL = 1e-8
RESOLVENT_GUARD = 1e-10
MIN_GAP = 1e-6
RANK_RTOL = 1e-7
PROJECTION_NODES = 256
OVERFLOW_NORM = 1e6


def as_matrix(B) -> np.ndarray:
    """Validate and copy ``B`` into a square complex array."""
    A = np.array(B, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if not 1 <= A.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


@dataclass(frozen=True)
class Eigenvalue:
    value: complex
    multiplicity: int
    pole_order: int

    @property
    def is_peripheral(self) -> bool:
        return abs(abs(self.value) - 1.0) <= PERIPHERAL_TOL


@dataclass(frozen=True)
class SpectralData:
    """Clustered spectrum of a matrix together with its Riesz projections.

    ``projections[k]`` is the projection for ``eigenvalues[k]``.
    """

    matrix: np.ndarray = field(repr=False)
    eigenvalues: tuple[Eigenvalue, ...]
    projections: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def peripheral(self) -> tuple[Eigenvalue, ...]:
        return tuple(e for e in self.eigenvalues if e.is_peripheral)

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.eigenvalues], dtype=complex)

    @property
    def spectral_radius(self) -> float:
        return float(max(abs(e.value) for e in self.eigenvalues))

    def cluster_index(self, xi0: complex, tol: float = 1e-6) -> int:
        """Index of the cluster matching ``xi0``; ``ValueError`` if none does."""
        dist = np.abs(self.values - xi0)
        k = int(np.argmin(dist))
        if dist[k] > tol:
            raise ValueError(f"{xi0} does not match any eigenvalue cluster")
        return k

    def projection(self, xi0: complex) -> np.ndarray:
        return self.projections[self.cluster_index(xi0)]

    def to_dict(self) -> dict:
        from .io import complex_to_json, matrix_to_json

        return {
            "dim": self.dim,
            "eigenvalues": [
                {
                    "value": complex_to_json(e.value),
                    "algebraic_multiplicity": e.multiplicity,
                    "pole_order": e.pole_order,
                    "peripheral": e.is_peripheral,
                }
                for e in self.eigenvalues
            ],
            "peripheral": [complex_to_json(e.value) for e in self.peripheral],
            "spectral_radius": self.spectral_radius,
            "projections": [
                {"eigenvalue": complex_to_json(e.value), "matrix": matrix_to_json(P)}
                for e, P in zip(self.eigenvalues, self.projections)
            ],
        }


def _cluster(values: np.ndarray, tol: float) -> list[list[int]]:
    # single linkage: chains of eigenvalues closer than tol end up together
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def nullity(M: np.ndarray, rtol: float = RANK_RTOL, scale: float | None = None) -> int:
    """Number of singular values of ``M`` at or below ``rtol * scale``."""
    s = np.linalg.svd(M, compute_uv=False)
    if scale is None:
        scale = s[0] if s.size else 0.0
    return int(np.sum(s <= rtol * scale))


def pole_order(B: np.ndarray, lam: complex, multiplicity: int) -> int:
    """Length of the longest Jordan chain at ``lam``.

    Smallest ``k`` for which ``(lam I - B)^k`` has nullity equal to the
    algebraic multiplicity, i.e. where the rank sequence stabilises.
    """
    d = B.shape[0]
    M = lam * np.eye(d) - B
    norm_M = np.linalg.norm(M, 2)
    P = np.eye(d, dtype=complex)
    for k in range(1, multiplicity + 1):
        P = P @ M
        if nullity(P, scale=norm_M ** k) >= multiplicity:
            return k
    return multiplicity


def eigen_decompose(B, tol: float = 1e-8) -> SpectralData:
    """Cluster the eigenvalues of ``B`` and attach pole orders and projections.

    Eigenvalues within ``CLUSTER_TOL`` of each other are merged (the cluster
    is represented by their mean). Every cluster centre is validated by the
    smallest singular value of ``lam I - B``, which must not exceed
    ``tol * max(||B||, 1)``.
    """
    A = as_matrix(B)
    d = A.shape[0]
    try:
        raw = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed (limit {500 * d} sweeps): {exc}")
    if not np.all(np.isfinite(raw)):
        raise NoConvergence("eigenvalue iteration returned non-finite values")

    norm_B = max(np.linalg.norm(A, 2), 1.0)
    clusters = []
    for idx in _cluster(raw, CLUSTER_TOL):
        lam = complex(np.mean(raw[idx]))
        smin = np.linalg.svd(lam * np.eye(d) - A, compute_uv=False)[-1]
        if smin > tol * norm_B:
            raise NoConvergence(
                f"eigenvalue {lam} fails the residual check (sigma_min={smin:.3e})")
        clusters.append(Eigenvalue(lam, len(idx), pole_order(A, lam, len(idx))))

    # peripheral first, then by decreasing modulus and increasing argument
    clusters.sort(key=lambda e: (-round(abs(e.value), 10), round(float(np.angle(e.value)), 10)))
    eigs = tuple(clusters)
    values = np.array([e.value for e in eigs])
    projections = tuple(_riesz_projection(A, values, k) for k in range(len(eigs)))
    return SpectralData(matrix=A, eigenvalues=eigs, projections=projections)


def resolvent_apply(B, lam: complex, v, eigenvalues=None) -> np.ndarray:
    """Solve ``(lam I - B) w = v``.

    Raises :class:`NearSpectrum` when ``lam`` is within ``1e-10`` of an
    eigenvalue, or when the residual check fails after one step of
    iterative refinement.
    """
    A = np.asarray(B, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if eigenvalues is None:
        eigenvalues = np.linalg.eigvals(A)
    dist = np.min(np.abs(np.asarray(eigenvalues) - lam))
    if dist < RESOLVENT_GUARD:
        raise NearSpectrum(f"lambda={lam} is {dist:.2e} from the spectrum")
    M = lam * np.eye(A.shape[0]) - A
    w = np.linalg.solve(M, v)
    bound = 1e-10 * (np.linalg.norm(v) + np.linalg.norm(A, 2) * np.linalg.norm(w))
    r = M @ w - v
    if np.linalg.norm(r) > bound:
        w = w - np.linalg.solve(M, r)
        if np.linalg.norm(M @ w - v) > bound:
            raise NearSpectrum(f"resolvent solve at lambda={lam} is ill-conditioned")
    return w


def contour_nodes(center: complex, radius: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoid nodes on a circle; returns ``(lam_q, radius * e^{i theta_q})``."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    offs = radius * np.exp(1j * theta)
    return center + offs, offs


def _riesz_projection(A: np.ndarray, values: np.ndarray, k: int,
                      nodes: int = PROJECTION_NODES) -> np.ndarray:
    d = A.shape[0]
    xi0 = values[k]
    others = np.delete(values, k)
    if others.size == 0:
        radius = 1.0
    else:
        gap = float(np.min(np.abs(others - xi0)))
        if gap < MIN_GAP:
            raise DegenerateGap(f"cluster at {xi0} is {gap:.2e} from its neighbour")
        radius = 0.5 * gap
    lam, offs = contour_nodes(xi0, radius, nodes)
    M = lam[:, None, None] * np.eye(d)[None] - A[None]
    # (1/2 pi i) \oint R dlam with dlam = i offs dtheta  ->  mean of offs * R
    R = np.linalg.solve(M, np.broadcast_to(np.eye(d, dtype=complex), M.shape))
    return np.einsum("q,qij->ij", offs, R) / nodes


def spectral_projection(B, spec: SpectralData, xi0: complex) -> np.ndarray:
    """Riesz projection onto the generalized eigenspace of the cluster at ``xi0``.

    Trapezoidal quadrature with 256 nodes on the circle of radius half the
    distance to the nearest other cluster.
    """
    A = as_matrix(B)
    k = spec.cluster_index(xi0)
    return _riesz_projection(A, spec.values, k)


class PowerBound(NamedTuple):
    c_est: float
    power_bounded: bool


def power_bound_estimate(B, n_max: int = 1000, spec: SpectralData | None = None) -> PowerBound:
    """Estimate ``sup_n ||B^n||`` with the Frobenius norm over ``1 <= n <= n_max``.

    ``power_bounded`` is False when a power exceeds ``1e6`` in norm, the
    spectral radius exceeds ``1 + 1e-8``, or a peripheral eigenvalue has a
    nontrivial Jordan chain.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    A = as_matrix(B)
    if spec is None:
        spec = eigen_decompose(A)
    bounded = True
    c_est = 0.0
    P = np.eye(A.shape[0], dtype=complex)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n_max):
            P = P @ A
            nrm = float(np.linalg.norm(P, "fro"))
            if not np.isfinite(nrm) or nrm > OVERFLOW_NORM:
                bounded = False
                c_est = nrm if np.isfinite(nrm) else float("inf")
                break
            c_est = max(c_est, nrm)
    if spec.spectral_radius > 1.0 + PERIPHERAL_TOL:
        bounded = False
    if any(e.pole_order >= 2 for e in spec.peripheral):
        bounded = False
    return PowerBound(c_est, bounded)
