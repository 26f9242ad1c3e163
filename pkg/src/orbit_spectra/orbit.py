"""Discrete systems x(n+1) = B x(n) + y(n), their orbits, and tail estimators.

Indices are 1-based in the mathematical sense: ``samples[0]`` is x(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence, Union

import numpy as np

from .errors import InsufficientHorizon
from .linalg import as_matrix

OVERFLOW_THRESHOLD = 1e9
UNIMODULAR_TOL = 1e-12
C0_WINDOW = 0.25
DEFAULT_WINDOW = 0.5


def _vec(v, name="vector") -> np.ndarray:
    a = np.atleast_1d(np.asarray(v, dtype=complex))
    if a.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


# -- forcing ------------------------------------------------------------------

@dataclass(frozen=True)
class Zero:
    def sample(self, n: np.ndarray, dim: int) -> np.ndarray:
        return np.zeros((len(n), dim), dtype=complex)

    @property
    def in_c0(self) -> bool:
        return True

    @property
    def frequencies(self) -> tuple[complex, ...]:
        return ()


@dataclass(frozen=True)
class PowerDecay:
    """y(n) = c n^(-alpha)."""

    c: np.ndarray
    alpha: float

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c, "c"))
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    def sample(self, n, dim):
        return np.power(np.asarray(n, dtype=float), -self.alpha)[:, None] * self.c[None, :]

    in_c0 = True
    frequencies = ()


@dataclass(frozen=True)
class Geometric:
    """y(n) = c rho^n with |rho| < 1."""

    c: np.ndarray
    rho: complex

    def __post_init__(self):
        object.__setattr__(self, "c", _vec(self.c, "c"))
        object.__setattr__(self, "rho", complex(self.rho))
        if not abs(self.rho) < 1:
            raise ValueError("|rho| must be < 1")

    def sample(self, n, dim):
        return np.power(self.rho, np.asarray(n, dtype=float))[:, None] * self.c[None, :]

    in_c0 = True
    frequencies = ()


@dataclass(frozen=True)
class TrigPoly:
    """y(n) = sum_j c_j lam_j^n with unimodular frequencies."""

    terms: tuple[tuple[np.ndarray, complex], ...]

    def __post_init__(self):
        terms = []
        for coef, freq in self.terms:
            freq = complex(freq)
            if abs(abs(freq) - 1.0) > UNIMODULAR_TOL:
                raise ValueError(f"frequency {freq} is not unimodular")
            terms.append((_vec(coef, "coef"), freq))
        object.__setattr__(self, "terms", tuple(terms))

    def sample(self, n, dim):
        n = np.asarray(n, dtype=float)
        out = np.zeros((len(n), dim), dtype=complex)
        for coef, freq in self.terms:
            out += np.power(freq, n)[:, None] * coef[None, :]
        return out

    @property
    def in_c0(self) -> bool:
        return all(not np.any(coef) for coef, _ in self.terms)

    @property
    def frequencies(self):
        return tuple(f for c, f in self.terms if np.any(c))


@dataclass(frozen=True)
class Sum:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))

    def sample(self, n, dim):
        out = np.zeros((len(n), dim), dtype=complex)
        for p in self.parts:
            out += p.sample(n, dim)
        return out

    @property
    def in_c0(self):
        flags = [p.in_c0 for p in self.parts]
        if any(f is False for f in flags):
            return False
        if any(f is None for f in flags):
            return None
        return True

    @property
    def frequencies(self):
        out = []
        for p in self.parts:
            out.extend(p.frequencies)
        return tuple(out)


@dataclass(frozen=True)
class Tabulated:
    """Explicit samples y(1), y(2), ...; membership in c0 is decided from data.

    ``freqs`` optionally lists the unimodular frequencies of its almost
    periodic part (used when deciding whether the forcing is AAP).
    """

    samples: np.ndarray
    freqs: tuple[complex, ...] = ()

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or not np.all(np.isfinite(s)):
            raise ValueError("tabulated samples must be a finite 2-D array")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "freqs", tuple(complex(f) for f in self.freqs))

    def sample(self, n, dim):
        n = np.asarray(n, dtype=int)
        if len(n) and n.max() > len(self.samples):
            raise InsufficientHorizon(
                f"tabulated forcing has {len(self.samples)} samples, {n.max()} needed",
                required=int(n.max()))
        return self.samples[n - 1]

    in_c0 = None

    @property
    def frequencies(self):
        return self.freqs


Forcing = Union[Zero, PowerDecay, Geometric, TrigPoly, Sum, Tabulated]


def forcing_is_aap_by_construction(f: Forcing) -> bool:
    if isinstance(f, Tabulated):
        return False
    if isinstance(f, Sum):
        return all(forcing_is_aap_by_construction(p) for p in f.parts)
    return True


def forcing_has_tabulated(f: Forcing) -> bool:
    if isinstance(f, Tabulated):
        return True
    if isinstance(f, Sum):
        return any(forcing_has_tabulated(p) for p in f.parts)
    return False


# -- systems and sequences ----------------------------------------------------

@dataclass(frozen=True)
class DiscreteSystem:
    B: np.ndarray
    x1: np.ndarray
    forcing: Forcing = field(default_factory=Zero)

    def __post_init__(self):
        B = as_matrix(self.B)
        x1 = _vec(self.x1, "x1")
        if x1.shape[0] != B.shape[0]:
            raise ValueError(f"x1 has length {x1.shape[0]}, matrix is {B.shape[0]}x{B.shape[0]}")
        for part in _flatten(self.forcing):
            width = part.samples.shape[1] if isinstance(part, Tabulated) else None
            coefs = [part.c] if isinstance(part, (PowerDecay, Geometric)) else \
                [c for c, _ in part.terms] if isinstance(part, TrigPoly) else []
            for c in coefs:
                if c.shape[0] != B.shape[0]:
                    raise ValueError("forcing vector length does not match the matrix")
            if width is not None and width != B.shape[0]:
                raise ValueError("tabulated forcing width does not match the matrix")
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "x1", x1)

    @property
    def dim(self) -> int:
        return self.B.shape[0]


def _flatten(f):
    if isinstance(f, Sum):
        for p in f.parts:
            yield from _flatten(p)
    else:
        yield f


def _unbounded_trend(norms: np.ndarray) -> bool:
    """Sustained growth of dyadic-window maxima.

    Flags sequences like harmonic partial sums that stay far below the
    overflow threshold but keep growing: the last four dyadic windows must
    have strictly increasing maxima, the latest increment must be at least
    half the earliest one, the total growth over those windows must exceed
    5%, and the latest maximum must exceed every earlier window.
    """
    sups = _dyadic_sups(norms)
    if len(sups) < 5:
        return False
    last = np.array(sups[-4:])
    inc = np.diff(last)
    if np.any(inc <= 0):
        return False
    if inc[-1] < 0.5 * inc[0]:
        return False
    if last[-1] <= max(sups[:-4]):
        return False
    return (last[-1] - last[0]) > 5e-2 * max(last[0], 1e-300)


def _dyadic_sups(norms: np.ndarray) -> list[float]:
    N = len(norms)
    out = []
    k = 0
    while 2 ** k <= N:
        lo, hi = 2 ** k - 1, min(2 ** (k + 1) - 1, N)
        out.append(float(np.max(norms[lo:hi])))
        k += 1
    return out


@dataclass(frozen=True)
class OrbitSequence:
    """A finite sample x(1..N) of a vector sequence.

    ``truncated_at`` is the index n at which a simulation stopped because
    ``||x(n)||`` exceeded the overflow threshold (None otherwise).
    """

    samples: np.ndarray = field(repr=False)
    bounded_flag: bool = True
    truncated_at: int | None = None

    @classmethod
    def from_samples(cls, samples, truncated_at: int | None = None) -> "OrbitSequence":
        s = np.array(samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise ValueError("samples must be a non-empty (N, d) array")
        if not np.all(np.isfinite(s)):
            raise ValueError("samples must be finite")
        s.setflags(write=False)
        norms = np.linalg.norm(s, axis=1)
        bounded = truncated_at is None and float(norms.max()) <= OVERFLOW_THRESHOLD \
            and not _unbounded_trend(norms)
        return cls(samples=s, bounded_flag=bool(bounded), truncated_at=truncated_at)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def horizon(self) -> int:
        return self.samples.shape[0]

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.samples, axis=1)

    @property
    def sup_norm(self) -> float:
        return float(self.norms.max())

    def __len__(self):
        return self.horizon


def sequence(fn, N: int) -> OrbitSequence:
    """Tabulate ``fn(n)`` for n = 1..N (``fn`` receives the integer array)."""
    n = np.arange(1, N + 1)
    return OrbitSequence.from_samples(fn(n))


def simulate(system: DiscreteSystem, N: int) -> OrbitSequence:
    """Iterate the recurrence from x(1) for N samples.

    Stops early, with ``bounded_flag`` False, once a sample exceeds
    ``1e9`` in norm; that sample is kept and its index recorded.
    """
    if N < 2:
        raise ValueError("horizon must be >= 2")
    B, d = system.B, system.dim
    Y = system.forcing.sample(np.arange(1, N), d)
    X = np.empty((N, d), dtype=complex)
    X[0] = system.x1
    x = X[0]
    chunk = 256
    with np.errstate(over="ignore", invalid="ignore"):
        for start in range(1, N, chunk):
            stop = min(start + chunk, N)
            for i in range(start, stop):
                x = B @ x + Y[i - 1]
                X[i] = x
            block = np.linalg.norm(X[start - 1:stop], axis=1)
            bad = ~(block <= OVERFLOW_THRESHOLD)
            if np.any(bad):
                cut = start - 1 + int(np.argmax(bad))
                keep = X[:cut + 1]
                if not np.all(np.isfinite(keep[-1])):
                    keep = keep[:-1]
                if len(keep) == 0:
                    keep = X[:1]
                return OrbitSequence.from_samples(keep, truncated_at=cut + 1)
    return OrbitSequence.from_samples(X)


def recurrence_defect(system: DiscreteSystem, orbit: OrbitSequence) -> float:
    """Replay the recurrence with the same arithmetic; returns the max defect."""
    N = orbit.horizon
    Y = system.forcing.sample(np.arange(1, N), system.dim)
    X = orbit.samples
    worst = 0.0
    for i in range(1, N):
        worst = max(worst, float(np.max(np.abs(X[i] - (system.B @ X[i - 1] + Y[i - 1])))))
    return worst


def difference_orbit(x: OrbitSequence) -> OrbitSequence:
    """The sequence x(n+1) - x(n), n = 1..N-1."""
    if x.horizon < 3:
        raise InsufficientHorizon("difference_orbit needs horizon >= 3", required=3)
    return OrbitSequence.from_samples(np.diff(x.samples, axis=0))


def limsup_norm_estimate(x: OrbitSequence, window_fraction: float = DEFAULT_WINDOW) -> float:
    """Max of ``||x(n)||`` over n in [ceil((1 - w) N), N]."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    if x.horizon < 10:
        raise InsufficientHorizon("limsup estimate needs horizon >= 10", required=10)
    N = x.horizon
    start = max(math.ceil((1.0 - window_fraction) * N), 1)
    return float(x.norms[start - 1:].max())


class C0Result(NamedTuple):
    tends_to_zero: bool
    tail_sup: float
    trend_slope: float


def trend_slope(x: OrbitSequence) -> float:
    """Least-squares slope of log(dyadic-window max norm) per dyadic step."""
    sups = np.array(_dyadic_sups(x.norms))
    if len(sups) < 2:
        return 0.0
    logs = np.log(np.maximum(sups, 1e-300))
    k = np.arange(len(sups), dtype=float)
    return float(np.polyfit(k, logs, 1)[0])


def c0_test(x: OrbitSequence, tol: float) -> C0Result:
    """Decide membership in c0 from a finite sample.

    True when the last-quarter sup is at most ``tol``, or at most
    ``10 tol`` while the dyadic trend is still decreasing.
    """
    if x.horizon < 100:
        raise InsufficientHorizon("c0_test needs horizon >= 100", required=100)
    tail = limsup_norm_estimate(x, C0_WINDOW)
    slope = trend_slope(x)
    ok = tail <= tol or (tail <= 10 * tol and slope < -1e-4)
    return C0Result(bool(ok), tail, slope)
