"""Bohr means, almost periodic parts and AAP decompositions of sequences."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ResolutionError
from .orbit import OrbitSequence, C0Result, c0_test

DROP_REL = 1e-6
FREQ_DISTINCT = 1e-9


@dataclass(frozen=True)
class TrigPolynomial:
    """z(n) = sum_j c_j lam_j^n."""

    terms: tuple[tuple[complex, np.ndarray], ...] = ()

    def __post_init__(self):
        freqs = [complex(f) for f, _ in self.terms]
        for f in freqs:
            if abs(abs(f) - 1.0) > 1e-12:
                raise ValueError(f"frequency {f} is not unimodular")
        for i in range(len(freqs)):
            for j in range(i + 1, len(freqs)):
                if abs(freqs[i] - freqs[j]) < FREQ_DISTINCT:
                    raise ValueError("trig polynomial frequencies must be distinct")
        object.__setattr__(self, "terms",
                           tuple((complex(f), np.asarray(c, dtype=complex)) for f, c in self.terms))

    @property
    def freqs(self) -> list[complex]:
        return [f for f, _ in self.terms]

    def coefficient(self, freq: complex) -> np.ndarray | None:
        for f, c in self.terms:
            if abs(f - freq) < FREQ_DISTINCT:
                return c
        return None

    def evaluate(self, n, dim: int | None = None) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if dim is None:
            dim = len(self.terms[0][1]) if self.terms else 1
        out = np.zeros((len(n), dim), dtype=complex)
        for f, c in self.terms:
            out += np.power(f, n)[:, None] * c[None, :]
        return out

    def to_dict(self) -> dict:
        from .io import complex_to_json, vector_to_json

        return {"terms": [{"freq": complex_to_json(f), "coef": vector_to_json(c)}
                          for f, c in self.terms]}


@dataclass(frozen=True)
class BohrCoefficient:
    freq: complex
    value: np.ndarray
    N: int
    convergence_error: float


def _mean_rows(A: np.ndarray) -> np.ndarray:
    # contiguous along the summed axis so numpy uses pairwise summation
    return np.ascontiguousarray(A.T).sum(axis=1) / A.shape[0]


def _window(x: OrbitSequence, N: int | None, offset: int) -> tuple[np.ndarray, np.ndarray]:
    if N is None:
        N = x.horizon - offset
    if N < 1 or offset < 0 or offset + N > x.horizon:
        raise ValueError(f"averaging window [{offset + 1}, {offset + N}] exceeds the horizon")
    n = np.arange(offset + 1, offset + N + 1)
    return n, x.samples[offset:offset + N]


def bohr_coefficient(x: OrbitSequence, xi: complex, N: int | None = None,
                     offset: int = 0) -> BohrCoefficient:
    """Cesaro mean ``(1/N) sum xi^{-n} x(n)``.

    The mean runs over ``n = offset+1 .. offset+N`` (``offset`` 0 is the
    plain Bohr mean). ``convergence_error`` compares against the mean over
    the first half of the same window.
    """
    xi = complex(xi)
    if abs(abs(xi) - 1.0) > 1e-12:
        raise ValueError(f"{xi} is not unimodular")
    n, X = _window(x, N, offset)
    Z = np.power(xi, -n.astype(float))[:, None] * X
    value = _mean_rows(Z)
    half = max(len(n) // 2, 1)
    err = float(np.linalg.norm(value - _mean_rows(Z[:half])))
    return BohrCoefficient(xi, value, len(n), err)


def check_resolvable(freqs, N: int) -> None:
    """Refuse frequency sets with angular separation below ``2 pi / N``."""
    angles = np.sort(np.mod(np.angle(np.asarray(freqs, dtype=complex)), 2 * np.pi))
    if len(angles) < 2:
        return
    gaps = np.diff(np.append(angles, angles[0] + 2 * np.pi))
    if gaps.min() < 2 * np.pi / N:
        raise ResolutionError(
            f"frequencies {gaps.min():.3e} rad apart, resolution at N={N} is {2 * np.pi / N:.3e}")


def ap_part(x: OrbitSequence, freqs, N: int | None = None, offset: int = 0) -> TrigPolynomial:
    """Almost periodic part of ``x`` on the given frequencies.

    The Bohr means at each frequency are corrected for mutual leakage on
    the finite window by solving the Gram system of the exponentials, so a
    trigonometric polynomial on these frequencies is recovered exactly.
    Terms with norm at most ``1e-6 * sup_norm`` are dropped.
    """
    freqs = [complex(f) / abs(complex(f)) for f in freqs]
    if not freqs:
        return TrigPolynomial(())
    n, X = _window(x, N, offset)
    check_resolvable(freqs, len(n))
    b = np.array([bohr_coefficient(x, f, len(n), offset).value for f in freqs])
    F = np.array(freqs)
    # G[i, j] = mean_n (f_j / f_i)^n over the window
    ratio = F[None, :] / F[:, None]
    G = np.empty((len(F), len(F)), dtype=complex)
    for i in range(len(F)):
        G[i] = _mean_rows(np.power(ratio[i][None, :], n[:, None].astype(float)))
    coef = np.linalg.solve(G, b)
    drop = DROP_REL * x.sup_norm
    terms = tuple((f, c) for f, c in zip(freqs, coef) if np.linalg.norm(c) > drop)
    return TrigPolynomial(terms)


@dataclass(frozen=True)
class AAPDecomposition:
    ap_part: TrigPolynomial
    remainder: OrbitSequence = field(repr=False)
    c0: C0Result
    restricted: bool = False

    @property
    def remainder_tail_sup(self) -> float:
        return self.c0.tail_sup

    @property
    def remainder_trend(self) -> float:
        return self.c0.trend_slope

    @property
    def is_aap(self) -> bool:
        return self.c0.tends_to_zero

    def to_dict(self) -> dict:
        out = self.ap_part.to_dict()
        out.update({"remainder_tail_sup": self.remainder_tail_sup,
                    "remainder_trend": self.remainder_trend,
                    "is_aap": self.is_aap})
        return out


def merge_frequencies(*groups) -> list[complex]:
    """Union of frequency lists, dropping near-duplicates (within 1e-9)."""
    out: list[complex] = []
    for g in groups:
        for f in g:
            f = complex(f)
            f = f / abs(f)
            if all(abs(f - h) >= FREQ_DISTINCT for h in out):
                out.append(f)
    return out


def aap_decompose(x: OrbitSequence, freqs="auto", tol: float = 1e-3, spectral=None,
                  burn_in: int = 0) -> AAPDecomposition:
    """Split ``x`` into an AP part on ``freqs`` and a remainder tested for c0.

    ``freqs="auto"`` takes the peripheral eigenvalues of the accompanying
    ``spectral`` data. ``burn_in`` skips that many leading samples when
    fitting the AP part (the remainder is still formed over the full range).
    """
    if isinstance(freqs, str):
        if freqs != "auto":
            raise ValueError("freqs must be 'auto' or a list")
        if spectral is None:
            raise ValueError("automatic frequencies need spectral data")
        freqs = [e.value for e in spectral.peripheral]
    ap = ap_part(x, freqs, x.horizon - burn_in, burn_in)
    n = np.arange(1, x.horizon + 1)
    remainder = OrbitSequence.from_samples(x.samples - ap.evaluate(n, x.dim))
    return AAPDecomposition(ap, remainder, c0_test(remainder, tol))
