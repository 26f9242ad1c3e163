"""Randomized soundness sweeps over margin-separated systems.

Every generated matrix is ``B = V J V^{-1}`` with ``cond(V) <= 100`` and a
Jordan matrix ``J`` whose eigenvalues are either exactly unimodular
(pairwise at least 0.5 rad apart) or of modulus at most 0.9. Peripheral
components of initial vectors and forcing coefficients are either zeroed
exactly in the ``V`` basis or planted with norm at least 0.1, so the
hypothesis checks never sit on a threshold.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import NumericalError
from .io import complex_from_json, complex_to_json, dumps, system_from_json, system_to_json
from .linalg import eigen_decompose
from .orbit import DiscreteSystem, Geometric, PowerDecay, Sum, TrigPoly, Zero
from .verdict import THEOREMS, _num, run_verdict

MIN_ANGLE_SEP = 0.5
INTERIOR_RADIUS = 0.9
MAX_COND = 1e2
PLANT_MIN = 0.1


def _circ_dist(a: float, b: float) -> float:
    return abs(np.angle(np.exp(1j * (a - b))))


def _angles(rng, k: int, avoid=()) -> list[float]:
    out: list[float] = []
    taken = list(avoid)
    while len(out) < k:
        a = float(rng.uniform(-np.pi, np.pi))
        if all(_circ_dist(a, b) >= MIN_ANGLE_SEP for b in taken):
            out.append(a)
            taken.append(a)
    return out


def _basis(rng, d: int) -> np.ndarray:
    while True:
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        V = np.eye(d) + 0.5 * G / np.sqrt(d)
        if np.linalg.cond(V) <= MAX_COND:
            return V


def _interior(rng, r_max: float = INTERIOR_RADIUS) -> complex:
    return complex(r_max * np.sqrt(rng.uniform()) * np.exp(1j * rng.uniform(-np.pi, np.pi)))


@dataclass
class Construction:
    """Jordan data of a generated matrix.

    ``blocks`` lists ``(eigenvalue, size)``; ``peripheral_cols`` maps each
    peripheral eigenvalue to its column indices in ``V`` (eigenvector first).
    """

    V: np.ndarray
    blocks: list
    peripheral_cols: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    def matrix(self) -> np.ndarray:
        J = np.zeros((self.dim, self.dim), dtype=complex)
        i = 0
        for lam, size in self.blocks:
            for k in range(size):
                J[i + k, i + k] = lam
                if k + 1 < size:
                    J[i + k, i + k + 1] = 1.0
            i += size
        return self.V @ J @ np.linalg.solve(self.V, np.eye(self.dim))

    def vector(self, coords) -> np.ndarray:
        return self.V @ np.asarray(coords, dtype=complex)

    def random_coords(self, rng, scale: float = 1.0) -> np.ndarray:
        return scale * (rng.normal(size=self.dim) + 1j * rng.normal(size=self.dim)) / np.sqrt(2)

    def zero_peripheral(self, coords, keep_eigvec: bool = False) -> np.ndarray:
        c = np.array(coords, dtype=complex)
        for cols in self.peripheral_cols.values():
            c[cols[1:] if keep_eigvec else cols] = 0
        return c

    def plant(self, rng, coords, which) -> np.ndarray:
        """Set the eigenvector coordinate at each point in ``which`` to norm >= 0.1."""
        c = np.array(coords, dtype=complex)
        for lam in which:
            i = self.peripheral_cols[lam][0]
            mag = rng.uniform(2 * PLANT_MIN, 1.0) / np.linalg.norm(self.V[:, i])
            c[i] = mag * np.exp(1j * rng.uniform(-np.pi, np.pi))
        return c


def construct(rng, peripheral, d: int | None = None, peripheral_jordan: complex | None = None,
              interior_jordan: bool = False) -> Construction:
    """Build Jordan data with the given exactly unimodular eigenvalues.

    ``peripheral_jordan`` names one peripheral eigenvalue that gets a
    2x2 block; ``interior_jordan`` adds a 2x2 block inside radius 0.8.
    """
    peripheral = [complex(p) for p in peripheral]
    n_per = len(peripheral) + (1 if peripheral_jordan is not None else 0)
    n_int_j = 2 if interior_jordan else 0
    lo = max(2, n_per + n_int_j)
    if d is None:
        d = int(rng.integers(lo, 7))
    d = max(d, lo)
    blocks, cols = [], {}
    i = 0
    for p in peripheral:
        size = 2 if peripheral_jordan is not None and p == peripheral_jordan else 1
        blocks.append((p, size))
        cols[p] = list(range(i, i + size))
        i += size
    if interior_jordan:
        blocks.append((_interior(rng, 0.8), 2))
        i += 2
    while i < d:
        blocks.append((_interior(rng), 1))
        i += 1
    # resample V until the computed spectrum shows exactly the intended
    # blocks; a conjugated Jordan block can split by ~sqrt(eps cond(V))
    while True:
        con = Construction(_basis(rng, d), blocks, cols)
        try:
            spec = eigen_decompose(con.matrix())
        except NumericalError:
            continue
        found = sorted((e.multiplicity, e.pole_order) for e in spec.eigenvalues)
        if found == sorted((size, size) for _, size in blocks):
            return con


def _unimodular(angles) -> list[complex]:
    return [complex(np.exp(1j * a)) for a in angles]


def _decay_forcing(rng, con: Construction, coords_fn) -> object:
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return Zero()
    pd = PowerDecay(con.vector(coords_fn(con.random_coords(rng, 0.5))), float(rng.uniform(1.5, 3.0)))
    rho = _interior(rng)
    geo = Geometric(con.vector(coords_fn(con.random_coords(rng, 0.5))), rho)
    return (pd, geo, Sum((pd, geo)))[kind - 1]


def _trig_forcing(rng, con: Construction, avoid_angles, coords_fn, n_terms: int | None = None):
    k = int(rng.integers(1, 3)) if n_terms is None else n_terms
    freqs = _unimodular(_angles(rng, k, avoid_angles))
    terms = tuple((con.vector(con.random_coords(rng, 0.5)), f) for f in freqs)
    return TrigPoly(terms)


# -- per-theorem case generators ---------------------------------------------

def _case_kt(rng, zero_forcing=False):
    shape = int(rng.integers(0, 4))
    if shape == 0:
        con = construct(rng, [], interior_jordan=bool(rng.integers(0, 2)))
    elif shape == 3:
        con = construct(rng, [1.0], peripheral_jordan=1.0)
    else:
        con = construct(rng, [1.0], interior_jordan=bool(rng.integers(0, 2)))
    jordan = shape == 3
    # a Jordan block at 1 only keeps bounded orbits along its eigenvector
    coords_fn = (lambda c: con.zero_peripheral(c, keep_eigvec=True)) if jordan else (lambda c: c)
    x1 = con.vector(coords_fn(con.random_coords(rng)))
    forcing = Zero() if zero_forcing else _decay_forcing(rng, con, coords_fn)
    return {"system": DiscreteSystem(con.matrix(), x1, forcing)}


def _peripheral_construction(rng, k_min=0, k_max=3):
    k = int(rng.integers(k_min, k_max + 1))
    per = _unimodular(_angles(rng, k))
    return construct(rng, per, interior_jordan=bool(rng.integers(0, 4) == 0)), per


def _planted_x1(rng, con, per, plant: bool):
    coords = con.zero_peripheral(con.random_coords(rng))
    if plant and per:
        which = [p for p in per if rng.uniform() < 0.6] or [per[int(rng.integers(len(per)))]]
        coords = con.plant(rng, coords, which)
    return con.vector(coords)


def _case_stability(rng):
    con, per = _peripheral_construction(rng)
    plant = bool(rng.integers(0, 2))
    x1 = _planted_x1(rng, con, per, plant)
    forcing = _decay_forcing(rng, con, con.zero_peripheral)
    return {"system": DiscreteSystem(con.matrix(), x1, forcing), "peripheral": per}


def _case_ablv(rng, plant: bool | None = None, jordan_rate: float = 0.1):
    k = int(rng.integers(1, 4))
    per = _unimodular(_angles(rng, k))
    jordan = per[0] if rng.uniform() < jordan_rate else None
    con = construct(rng, per, peripheral_jordan=jordan, interior_jordan=bool(rng.integers(0, 4) == 0))
    if plant is None:
        plant = bool(rng.integers(0, 2))
    x0 = _planted_x1(rng, con, per, plant)
    return {"system": DiscreteSystem(con.matrix(), x0, Zero())}


def _case_kt_classical(rng):
    u = rng.uniform()
    if u < 0.15:
        con = construct(rng, [1.0], peripheral_jordan=1.0)
    elif u < 0.3:
        con = construct(rng, [1.0] + _unimodular(_angles(rng, 1, [0.0])))
    elif u < 0.45:
        con = construct(rng, [], interior_jordan=True)
    else:
        con = construct(rng, [1.0], interior_jordan=bool(rng.integers(0, 2)))
    return {"system": DiscreteSystem(con.matrix(), con.vector(con.random_coords(rng)), Zero())}


def _case_kt_aap(rng):
    con = construct(rng, [1.0] if rng.uniform() < 0.8 else [],
                    interior_jordan=bool(rng.integers(0, 4) == 0))
    x1 = con.vector(con.random_coords(rng))
    trig = _trig_forcing(rng, con, [0.0], lambda c: c)
    parts = [trig]
    decay = _decay_forcing(rng, con, lambda c: c)
    if not isinstance(decay, Zero):
        parts.append(decay)
    forcing = trig if len(parts) == 1 else Sum(tuple(parts))
    return {"system": DiscreteSystem(con.matrix(), x1, forcing)}


def _case_stability_aap(rng):
    con, per = _peripheral_construction(rng)
    x1 = con.vector(con.random_coords(rng))
    trig = _trig_forcing(rng, con, [np.angle(p) for p in per], lambda c: c)
    decay = _decay_forcing(rng, con, con.zero_peripheral)
    forcing = trig if isinstance(decay, Zero) else Sum((trig, decay))
    return {"system": DiscreteSystem(con.matrix(), x1, forcing)}


def _candidate_variant(rng, points):
    pts = list(points)
    u = rng.uniform()
    if u < 0.2 and pts:
        pts.pop(int(rng.integers(len(pts))))
    elif u < 0.4:
        pts += _unimodular(_angles(rng, 1, [np.angle(p) for p in pts]))
    return pts


def _case_tauberian(rng):
    case = _case_stability(rng)
    case["candidates"] = _candidate_variant(rng, case["peripheral"])
    return case


def _case_tauberian_aap(rng):
    con, per = _peripheral_construction(rng)
    x1 = _planted_x1(rng, con, per, bool(rng.integers(0, 2)))
    trig = _trig_forcing(rng, con, [np.angle(p) for p in per], lambda c: c)
    decay = _decay_forcing(rng, con, con.zero_peripheral)
    forcing = trig if isinstance(decay, Zero) else Sum((trig, decay))
    sys = DiscreteSystem(con.matrix(), x1, forcing)
    return {"system": sys, "candidates": _candidate_variant(rng, per + list(trig.frequencies))}


GENERATORS = {
    "KT_ORBIT": _case_kt,
    "KT_POINTWISE": lambda rng: _case_kt(rng, zero_forcing=True),
    "STABILITY": _case_stability,
    "ABLV_ORBIT": _case_ablv,
    "KT_CLASSICAL": _case_kt_classical,
    "KT_AAP": _case_kt_aap,
    "STABILITY_AAP": _case_stability_aap,
    "TAUBERIAN": _case_tauberian,
    "TAUBERIAN_AAP": _case_tauberian_aap,
}


def case_rng(seed: int, theorem_id: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, THEOREMS.index(theorem_id), index])


def generate_case(theorem_id: str, seed: int, index: int) -> dict:
    return GENERATORS[theorem_id](case_rng(seed, theorem_id, index))


# -- case files ---------------------------------------------------------------

def case_to_json(theorem_id: str, case: dict, cfg: RunConfig, index: int | None = None) -> dict:
    out = {"theorem": theorem_id, "system": system_to_json(case["system"]),
           "config": cfg.to_dict()}
    if "candidates" in case:
        out["candidates"] = [complex_to_json(c) for c in case["candidates"]]
    if index is not None:
        out["index"] = index
    return out


def case_from_json(obj: dict) -> tuple[str, dict, RunConfig]:
    case = {"system": system_from_json(obj["system"])}
    if "candidates" in obj:
        case["candidates"] = [complex_from_json(c) for c in obj["candidates"]]
    return obj["theorem"], case, RunConfig.from_dict(obj.get("config", {}))


def run_case(theorem_id: str, case: dict, cfg: RunConfig):
    return run_verdict(theorem_id, cfg, system=case["system"], candidates=case.get("candidates"))


def replay(obj: dict):
    """Re-run the verdict stored in a dumped case file."""
    theorem_id, case, cfg = case_from_json(obj)
    return run_case(theorem_id, case, cfg)


# -- sweeps -------------------------------------------------------------------

def _one(args):
    theorem_id, cfg, index = args
    case = generate_case(theorem_id, cfg.seed, index)
    v = run_case(theorem_id, case, cfg)
    return {"index": index, "applicable": v.applicable, "consistent": v.consistent,
            "empirical_pass": v.empirical.passed, "residual": float(v.empirical.residual),
            "cross_agrees": None if v.cross_check is None else v.cross_check["agrees"]}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("ORBSPEC_THREADS", "1")))
    except ValueError:
        return 1


def propcheck(theorem_id: str, count: int, cfg: RunConfig, dump_dir=None, dump_all: bool = False,
              workers: int | None = None) -> dict:
    """Sweep ``count`` random cases for one theorem.

    Results are aggregated by case index, so the report does not depend on
    the number of workers. Inconsistent cases (all cases with ``dump_all``)
    are written to ``dump_dir`` as replayable JSON.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if theorem_id not in GENERATORS:
        raise ValueError(f"unknown theorem {theorem_id!r}")
    workers = thread_count() if workers is None else workers
    jobs = [(theorem_id, cfg, i) for i in range(count)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_one, jobs, chunksize=max(1, count // (4 * workers))))
    else:
        rows = [_one(j) for j in jobs]
    rows.sort(key=lambda r: r["index"])
    bad = [r["index"] for r in rows if not r["consistent"]]
    applicable = [r for r in rows if r["applicable"]]
    report = {
        "theorem": theorem_id,
        "count": count,
        "seed": cfg.seed,
        "applicable": len(applicable),
        "consistent": count - len(bad),
        "inconsistent": len(bad),
        "inconsistent_cases": bad,
        "max_residual_applicable": _num(max((r["residual"] for r in applicable), default=0.0)),
    }
    crosses = [r["cross_agrees"] for r in rows if r["cross_agrees"] is not None]
    if crosses:
        report["oracle_disagreements"] = sum(1 for c in crosses if not c)
    if dump_dir is not None:
        dump = Path(dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        for i in (range(count) if dump_all else bad):
            case = generate_case(theorem_id, cfg.seed, i)
            payload = case_to_json(theorem_id, case, cfg, i)
            (dump / f"{theorem_id}_{i:05d}.json").write_text(dumps(payload), encoding="utf-8")
        report["dump_dir"] = str(dump)
    return report
