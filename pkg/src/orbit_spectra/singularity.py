"""Laurent coefficients by contour quadrature and singularity classification.

``classify_point`` works in the lambda chart; the coefficient inequality
check works in the chart ``lam = xi0 e^z`` where the hypothesis
``||f(z)|| <= beta / |Re z|`` lives.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .errors import QuadratureBlowup
from .linalg import contour_nodes, resolvent_apply
from .orbit import OrbitSequence
from .shiftres import AbelResidueEstimate, abel_residue_sequence, fit_grid

BLOWUP = 1e12
DEFAULT_NODES = 256
MAX_NODES = 4096
MAX_PROBE_ORDER = 4
MIN_SEPARATION = 1e-3


@dataclass(frozen=True)
class LaurentCoefficients:
    center: complex
    radius: float
    n_min: int
    n_max: int
    coefficients: dict = field(repr=False)
    nodes: int
    cross_radius_error: float
    scale: float

    def __getitem__(self, n: int) -> np.ndarray:
        return self.coefficients[n]


def _sample(f, lam: np.ndarray) -> np.ndarray:
    vals = [np.atleast_1d(np.asarray(f(z), dtype=complex)) for z in lam]
    F = np.array(vals)
    norms = np.linalg.norm(F, axis=1)
    if not np.all(np.isfinite(norms)) or norms.max() > BLOWUP:
        raise QuadratureBlowup("contour passes through a singularity (|f| > 1e12)")
    return F


def _coefficients(F: np.ndarray, offs: np.ndarray, ns: np.ndarray) -> np.ndarray:
    # a_n = (1/Q) sum_q f(lam_q) (lam_q - c)^{-n}
    W = np.power(offs[None, :], -ns[:, None].astype(float))
    return (W @ F) / len(offs)


def laurent_coeffs(f: Callable, center: complex, radius: float, n_min: int, n_max: int,
                   nodes: int = DEFAULT_NODES) -> LaurentCoefficients:
    """Trapezoidal Laurent coefficients of ``f`` about ``center``.

    Computed on ``|lam - center| = radius`` and again on half that radius;
    the largest discrepancy is kept as ``cross_radius_error``.
    """
    if nodes < 64:
        raise ValueError("need at least 64 nodes")
    if n_min > n_max:
        raise ValueError("empty index range")
    ns = np.arange(n_min, n_max + 1)
    lam, offs = contour_nodes(center, radius, nodes)
    F = _sample(f, lam)
    a = _coefficients(F, offs, ns)
    lam2, offs2 = contour_nodes(center, 0.5 * radius, nodes)
    a2 = _coefficients(_sample(f, lam2), offs2, ns)
    err = float(np.max(np.linalg.norm(a - a2, axis=1)))
    scale = float(np.max(np.linalg.norm(F, axis=1)))
    return LaurentCoefficients(complex(center), float(radius), n_min, n_max,
                               {int(n): a[i] for i, n in enumerate(ns)}, nodes, err, scale)


# -- classification -----------------------------------------------------------

@dataclass(frozen=True)
class Removable:
    kind = "Removable"

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True)
class SimplePole:
    residue: np.ndarray
    kind = "SimplePole"

    def to_dict(self):
        from .io import vector_to_json

        return {"kind": self.kind, "residue": vector_to_json(self.residue)}


@dataclass(frozen=True)
class HigherOrderPole:
    order: int
    kind = "HigherOrderPole"

    def __post_init__(self):
        if self.order < 2:
            raise ValueError("higher-order pole needs order >= 2")

    def to_dict(self):
        return {"kind": self.kind, "order": self.order,
                "order_is_lower_bound": self.order >= MAX_PROBE_ORDER}


@dataclass(frozen=True)
class Undetermined:
    diagnostics: dict
    kind = "Undetermined"

    def to_dict(self):
        return {"kind": self.kind, "diagnostics": self.diagnostics}


def auto_radius(xi0: complex, singularities: Iterable[complex] = (), cap: float = 0.5) -> float:
    """Half the distance from ``xi0`` to the nearest other known singularity.

    Points within ``MIN_SEPARATION`` of ``xi0`` count as ``xi0`` itself;
    computed eigenvalues of a defective block scatter around the true value.
    """
    others = [s for s in singularities if abs(s - xi0) >= MIN_SEPARATION]
    if not others:
        return cap
    return min(cap, 0.5 * min(abs(s - xi0) for s in others))


def classify_point(f: Callable, xi0: complex, tol: float = 1e-6, radius: float | None = None,
                   singularities: Iterable[complex] = (), nodes: int = DEFAULT_NODES):
    """Classify the isolated singularity of ``f`` at ``xi0``.

    Principal-part coefficients ``a_{-1} .. a_{-4}`` are compared against
    ``tol * scale`` where ``scale`` is the largest sampled ``||f||``. The
    node count is doubled (up to 4096) while the two-radius discrepancy
    exceeds ``10 tol scale``; if it never settles the point is
    ``Undetermined``. Returns ``(classification, LaurentCoefficients)``.
    """
    if radius is None:
        radius = auto_radius(xi0, singularities)
    Q = nodes
    while True:
        lc = laurent_coeffs(f, xi0, radius, -MAX_PROBE_ORDER, 2, Q)
        thresh = tol * lc.scale
        if lc.cross_radius_error <= 10 * thresh or Q >= MAX_NODES:
            break
        Q *= 2
    if lc.cross_radius_error > 10 * thresh:
        return Undetermined({"cross_radius_error": lc.cross_radius_error,
                             "scale": lc.scale, "nodes": Q}), lc
    big = [k for k in range(1, MAX_PROBE_ORDER + 1) if np.linalg.norm(lc[-k]) > thresh]
    if not big:
        return Removable(), lc
    order = max(big)
    if order == 1:
        return SimplePole(lc[-1]), lc
    return HigherOrderPole(order), lc


def resolvent_function(B, x0) -> Callable:
    """``lam -> R(lam, B) x0`` with the spectral guard pre-computed."""
    A = np.asarray(B, dtype=complex)
    x0 = np.asarray(x0, dtype=complex)
    eig = np.linalg.eigvals(A)
    return lambda lam: resolvent_apply(A, lam, x0, eig)


def classify_resolvent(B, x0, xi0: complex, tol: float = 1e-6, nodes: int = DEFAULT_NODES):
    """``classify_point`` for ``R(lam, B) x0`` with the radius taken from the spectrum."""
    eig = np.linalg.eigvals(np.asarray(B, dtype=complex))
    return classify_point(resolvent_function(B, x0), xi0, tol,
                          singularities=eig, nodes=nodes)


# -- coefficient inequality in the logarithmic chart -------------------------

@dataclass(frozen=True)
class InequalityEntry:
    r: float
    n: int
    lhs: float
    bound: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.lhs <= self.bound * (1.0 + self.slack)

    @property
    def margin(self) -> float:
        return self.bound * (1.0 + self.slack) - self.lhs


@dataclass(frozen=True)
class InequalityReport:
    beta: float
    entries: tuple[InequalityEntry, ...]

    @property
    def all_ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def to_dict(self):
        return {"beta": self.beta, "all_ok": self.all_ok,
                "entries": [{"r": e.r, "n": e.n, "lhs": e.lhs, "bound": e.bound,
                             "margin": e.margin, "ok": e.ok} for e in self.entries]}


def kt_coefficient_inequality_check(f_z: Callable, beta: float, r_list, n_list,
                                    eps_quad: float = 1e-6, nodes: int = DEFAULT_NODES
                                    ) -> InequalityReport:
    """Check ``||r^2 a_{-(n+1)} + a_{-(n+3)}|| <= 2 beta r^{n+2}`` for each (r, n).

    ``f_z`` is a function of ``z`` whose singularity sits at ``z = 0`` and
    for which the caller certifies ``||f(z)|| <= beta / |Re z|``. The
    coefficients come from the trapezoid rule on ``|z| = r``.
    """
    n_list = [int(n) for n in n_list]
    m_lo = -max(n_list) - 3
    m_hi = -min(n_list) - 1
    ns = np.arange(m_lo, m_hi + 1)
    entries = []
    for r in r_list:
        z, offs = contour_nodes(0.0, float(r), nodes)
        a = _coefficients(_sample(f_z, z), offs, ns)
        coef = {int(m): a[i] for i, m in enumerate(ns)}
        for n in n_list:
            lhs = float(np.linalg.norm(r * r * coef[-(n + 1)] + coef[-(n + 3)]))
            entries.append(InequalityEntry(float(r), n, lhs, 2.0 * beta * r ** (n + 2), eps_quad))
    return InequalityReport(float(beta), tuple(entries))


def resolvent_z_chart(B, x0, xi0: complex = 1.0) -> Callable:
    """``z -> R(xi0 e^z, B) x0``."""
    g = resolvent_function(B, x0)
    return lambda z: g(xi0 * np.exp(z))


# -- sequence spectrum --------------------------------------------------------

@dataclass(frozen=True)
class CandidateResult:
    point: complex
    classification: object
    residue_magnitude: float
    estimate: AbelResidueEstimate = field(repr=False)

    @property
    def in_spectrum(self) -> bool:
        return not self.estimate.vanishes

    def to_dict(self):
        from .io import complex_to_json

        return {"point": complex_to_json(self.point),
                "classification": self.classification.to_dict(),
                "residue_magnitude": self.residue_magnitude,
                "in_spectrum": self.in_spectrum,
                "estimate": self.estimate.to_dict()}


@dataclass(frozen=True)
class SequenceSpectrumEstimate:
    candidates: tuple[CandidateResult, ...]

    @property
    def sigma_x(self) -> tuple[complex, ...]:
        return tuple(c.point for c in self.candidates if c.in_spectrum)

    @property
    def is_empty(self) -> bool:
        return not self.sigma_x

    def to_dict(self):
        from .io import complex_to_json

        return {"candidates": [c.to_dict() for c in self.candidates],
                "sigma_x": [complex_to_json(z) for z in self.sigma_x]}


def check_separated(points, min_sep: float = MIN_SEPARATION) -> None:
    pts = [complex(p) for p in points]
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) < min_sep:
                raise ValueError(
                    f"candidates {pts[i]} and {pts[j]} are closer than {min_sep}")


def sequence_spectrum(x: OrbitSequence, candidates, tol: float = 1e-3,
                      j_min: int = 2, j_max: int = 14) -> SequenceSpectrumEstimate:
    """Estimate which candidate points belong to the spectrum of ``x``.

    Each candidate gets a directional Abel residue. At an isolated singular
    point of the shift resolvent the pole is at most simple, so a vanishing
    residue means the point is removable; a non-vanishing one puts it in
    the spectrum. Candidates whose estimate did not converge are reported
    ``Undetermined`` but still sorted by the residue size.
    """
    cands = [complex(c) for c in candidates]
    check_separated(cands)
    out = []
    for c in cands:
        if abs(abs(c) - 1.0) > 1e-12:
            c = c / abs(c)
        est = abel_residue_sequence(x, c, fit_grid(x, c, j_min, j_max), tol)
        if not est.converged:
            cls = Undetermined({"fit_residual": est.fit_residual,
                                "rho_max": float(est.rho.max())})
        elif est.vanishes:
            cls = Removable()
        else:
            cls = SimplePole(est.residue_vector)
        out.append(CandidateResult(c, cls, float(est.extrapolated_limit), est))
    return SequenceSpectrumEstimate(tuple(out))
