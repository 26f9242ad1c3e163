"""Theorem verdicts: hypothesis checks, prediction and empirical confirmation.

Each verdict evaluates the hypotheses of one stability theorem on concrete
finite data, states whether the theorem applies, and independently checks
its conclusion on a simulated or supplied sequence. A verdict whose
hypotheses all pass but whose conclusion fails is flagged inconsistent; for
proven theorems that can only come from a numerical or tolerance failure.
A theorem that does not apply makes no claim about the conclusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal.windows import blackmanharris

from .aap import aap_decompose, merge_frequencies
from .config import RunConfig
from .errors import InsufficientHorizon
from .io import complex_to_json
from .linalg import eigen_decompose, power_bound_estimate, spectral_projection, as_matrix
from .orbit import (DiscreteSystem, OrbitSequence, Zero, c0_test, difference_orbit,
                    forcing_is_aap_by_construction, limsup_norm_estimate, simulate)
from .shiftres import RayGrid, abel_residue_sequence, fit_grid, operator_abel_residue
from .singularity import check_separated

THEOREMS = ("KT_ORBIT", "TAUBERIAN", "STABILITY", "KT_CLASSICAL", "KT_POINTWISE",
            "ABLV_ORBIT", "KT_AAP", "TAUBERIAN_AAP", "STABILITY_AAP")
RESTRICTED = ("TAUBERIAN_AAP", "STABILITY_AAP")
COVERAGE_GUARD_BINS = 6
OVERFLOW_POWER = 1e12
MIN_HORIZON = 100


def _num(v):
    v = float(v)
    if math.isfinite(v):
        return 0.0 if v == 0 else v
    return "inf" if v > 0 else "-inf"


@dataclass(frozen=True)
class Hypothesis:
    name: str
    passed: bool
    evidence: dict

    def to_dict(self):
        return {"name": self.name, "pass": bool(self.passed), "evidence": self.evidence}


@dataclass(frozen=True)
class Empirical:
    passed: bool
    residual: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        out = {"pass": bool(self.passed), "residual": _num(self.residual)}
        out.update(self.details)
        return out


@dataclass(frozen=True)
class TheoremVerdict:
    """Outcome of checking one theorem on one input.

    ``prediction`` is ``"Applicable"`` when every hypothesis passed, in which
    case ``conclusion`` is what the theorem asserts; otherwise
    ``"NotApplicable"``.
    """

    theorem_id: str
    hypotheses: tuple[Hypothesis, ...]
    conclusion: str
    empirical: Empirical
    config: RunConfig
    cross_check: dict | None = None

    def __post_init__(self):
        if self.theorem_id not in THEOREMS:
            raise ValueError(f"unknown theorem {self.theorem_id!r}")

    @property
    def applicable(self) -> bool:
        return all(h.passed for h in self.hypotheses)

    @property
    def prediction(self) -> str:
        return "Applicable" if self.applicable else "NotApplicable"

    @property
    def consistent(self) -> bool:
        return not (self.applicable and not self.empirical.passed)

    @property
    def restricted(self) -> bool:
        return self.theorem_id in RESTRICTED

    def hypothesis(self, name: str) -> Hypothesis:
        for h in self.hypotheses:
            if h.name == name:
                return h
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = {
            "theorem": self.theorem_id,
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "prediction": self.prediction,
            "conclusion": self.conclusion,
            "empirical": self.empirical.to_dict(),
            "consistent": self.consistent,
            "restricted": self.restricted,
            "config": self.config.to_dict(),
        }
        if self.cross_check is not None:
            out["cross_check"] = self.cross_check
        return out


# -- shared hypothesis checks -------------------------------------------------

def _peripheral_in_one(spec, cfg) -> Hypothesis:
    per = [e.value for e in spec.peripheral]
    dist = max((abs(v - 1.0) for v in per), default=0.0)
    return Hypothesis("peripheral_subset_of_1", dist <= cfg.hyp_tol,
                      {"peripheral": [complex_to_json(v) for v in per],
                       "max_distance_from_1": _num(dist)})


def _peripheral_finite(spec) -> Hypothesis:
    # automatic for matrices; reported for completeness
    return Hypothesis("peripheral_finite", True, {"count": len(spec.peripheral)})


def _orbit_bounded(x: OrbitSequence, cfg) -> Hypothesis:
    sup = x.sup_norm
    ok = x.bounded_flag and sup <= cfg.bound_cap
    return Hypothesis("orbit_bounded", bool(ok),
                      {"sup_norm": _num(sup), "bounded_flag": x.bounded_flag,
                       "truncated_at": x.truncated_at, "bound_cap": cfg.bound_cap})


def _sampled_forcing(sys: DiscreteSystem, cfg) -> OrbitSequence:
    n = np.arange(1, cfg.horizon)
    return OrbitSequence.from_samples(sys.forcing.sample(n, sys.dim))


def _forcing_c0(sys: DiscreteSystem, cfg) -> Hypothesis:
    known = sys.forcing.in_c0
    if known is not None:
        return Hypothesis("forcing_in_c0", bool(known), {"method": "by construction"})
    res = c0_test(_sampled_forcing(sys, cfg), cfg.concl_tol)
    return Hypothesis("forcing_in_c0", res.tends_to_zero,
                      {"method": "c0_test", "tail_sup": _num(res.tail_sup),
                       "trend_slope": _num(res.trend_slope)})


def _forcing_aap(sys: DiscreteSystem, cfg) -> Hypothesis:
    if forcing_is_aap_by_construction(sys.forcing):
        return Hypothesis("forcing_aap", True, {"method": "by construction"})
    y = _sampled_forcing(sys, cfg)
    dec = aap_decompose(y, list(sys.forcing.frequencies), cfg.concl_tol, burn_in=y.horizon // 2)
    return Hypothesis("forcing_aap", dec.is_aap,
                      {"method": "aap_decompose",
                       "remainder_tail_sup": _num(dec.remainder_tail_sup),
                       "remainder_trend": _num(dec.remainder_trend)})


def _check_overflow(x: OrbitSequence, label: str) -> Empirical | None:
    if x.truncated_at is not None:
        return Empirical(False, math.inf, {"sequence": label, "note": "orbit overflowed"})
    if x.horizon < MIN_HORIZON:
        raise InsufficientHorizon(f"conclusion checks need horizon >= {MIN_HORIZON}",
                                  required=MIN_HORIZON)
    return None


def _c0_empirical(x: OrbitSequence, cfg, label: str) -> Empirical:
    bad = _check_overflow(x, label)
    if bad is not None:
        return bad
    res = c0_test(x, cfg.concl_tol)
    return Empirical(res.tends_to_zero, res.tail_sup,
                     {"sequence": label, "trend_slope": _num(res.trend_slope),
                      "limsup_window": _num(limsup_norm_estimate(x, cfg.window))})


def _aap_empirical(x: OrbitSequence, freqs, cfg, label: str) -> Empirical:
    bad = _check_overflow(x, label)
    if bad is not None:
        return bad
    dec = aap_decompose(x, freqs, cfg.concl_tol, burn_in=x.horizon // 2)
    details = {"sequence": label, "remainder_trend": _num(dec.remainder_trend)}
    details.update(dec.ap_part.to_dict())
    return Empirical(dec.is_aap, dec.remainder_tail_sup, details)


def _residue_hypothesis(x: OrbitSequence, points, cfg, name: str) -> Hypothesis:
    """Sequence Abel residues vanish (and the estimates converged) at ``points``."""
    items = []
    ok = True
    for p in points:
        est = abel_residue_sequence(x, p, fit_grid(x, p, cfg.j_min, cfg.j_max), cfg.res_tol)
        good = est.converged and est.vanishes
        ok = ok and good
        items.append({"point": complex_to_json(p), "limit": _num(est.extrapolated_limit),
                      "converged": est.converged, "vanishes": est.vanishes})
    return Hypothesis(name, ok, {"residues": items, "tol": cfg.res_tol})


def spectral_coverage(x: OrbitSequence, candidates, threshold: float,
                      guard_bins: int = COVERAGE_GUARD_BINS) -> tuple[bool, float, complex | None]:
    """Look for unimodular frequencies of ``x`` away from ``candidates``.

    A Blackman-Harris windowed DFT of the second half of the sample is
    normalised so a pure tone of amplitude ``a`` peaks near ``a``. Bins
    within ``guard_bins`` of a candidate are ignored. Returns
    ``(no peak above threshold, largest peak, its frequency)``.
    """
    tail = x.samples[x.horizon // 2:]
    L = len(tail)
    w = blackmanharris(L, sym=False)
    amp = np.linalg.norm(np.fft.fft(tail * w[:, None], axis=0), axis=1) / w.sum()
    theta = 2 * np.pi * np.arange(L) / L
    mask = np.ones(L, dtype=bool)
    for c in candidates:
        d = np.angle(np.exp(1j * (theta - np.angle(complex(c)))))
        mask &= np.abs(d) > guard_bins * 2 * np.pi / L
    if not mask.any():
        return True, 0.0, None
    k = int(np.argmax(np.where(mask, amp, -1.0)))
    peak = float(amp[k])
    return peak <= threshold, peak, complex(np.exp(1j * theta[k]))


def _coverage_hypothesis(x: OrbitSequence, candidates, cfg) -> Hypothesis:
    ok, peak, where = spectral_coverage(x, candidates, cfg.res_tol)
    return Hypothesis("candidates_cover_spectrum", ok,
                      {"largest_uncovered_peak": _num(peak),
                       "at": None if where is None else complex_to_json(where),
                       "threshold": cfg.res_tol})


def _candidates_hypothesis(candidates) -> tuple[Hypothesis, list[complex]]:
    pts = [complex(c) for c in candidates]
    try:
        check_separated(pts)
        unimodular = all(abs(abs(p) - 1.0) <= 1e-12 for p in pts)
        ok, msg = unimodular, None if unimodular else "candidate off the unit circle"
    except ValueError as exc:
        ok, msg = False, str(exc)
    ev = {"count": len(pts)}
    if msg:
        ev["problem"] = msg
    return Hypothesis("candidates_finite_separated", ok, ev), pts


# -- verdicts -----------------------------------------------------------------

def verdict_kt(sys: DiscreteSystem, cfg: RunConfig | None = None,
               theorem_id: str = "KT_ORBIT") -> TheoremVerdict:
    """Peripheral spectrum in {1}, bounded orbit, c0 forcing => differences vanish."""
    cfg = cfg or RunConfig()
    spec = eigen_decompose(sys.B)
    x = simulate(sys, cfg.horizon)
    hyps = (_peripheral_in_one(spec, cfg), _orbit_bounded(x, cfg), _forcing_c0(sys, cfg))
    if x.truncated_at is not None:
        emp = Empirical(False, math.inf, {"sequence": "difference_orbit", "note": "orbit overflowed"})
    else:
        emp = _c0_empirical(difference_orbit(x), cfg, "difference_orbit")
    return TheoremVerdict(theorem_id, hyps, "x(n+1) - x(n) -> 0", emp, cfg)


def verdict_kt_pointwise(B, x0, cfg: RunConfig | None = None) -> TheoremVerdict:
    """Pointwise classical variant: the unforced orbit of ``x0``."""
    return verdict_kt(DiscreteSystem(B, x0, Zero()), cfg, "KT_POINTWISE")


def verdict_kt_classical(B, cfg: RunConfig | None = None) -> TheoremVerdict:
    """Power bounded with peripheral spectrum in {1} => ``B^{n+1} - B^n -> 0``.

    The conclusion is checked on the Frobenius norms of ``B^n (B - I)``
    for ``n <= horizon``, maximised over the trailing ``window`` fraction.
    """
    cfg = cfg or RunConfig()
    A = as_matrix(B)
    spec = eigen_decompose(A)
    pb = power_bound_estimate(A, cfg.power_n_max, spec)
    hyps = (Hypothesis("power_bounded", pb.power_bounded, {"c_est": _num(pb.c_est)}),
            _peripheral_in_one(spec, cfg))
    D = A - np.eye(A.shape[0])
    norms = np.empty(cfg.horizon)
    overflow = False
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(cfg.horizon):
            norms[n] = np.linalg.norm(D, "fro")
            if not norms[n] <= OVERFLOW_POWER:
                overflow = True
                break
            D = A @ D
    if overflow:
        emp = Empirical(False, math.inf, {"sequence": "B^(n+1) - B^n", "note": "powers overflowed"})
    else:
        start = max(math.ceil((1.0 - cfg.window) * cfg.horizon), 1)
        tail = float(norms[start - 1:].max())
        emp = Empirical(tail <= cfg.concl_tol, tail, {"sequence": "B^(n+1) - B^n"})
    return TheoremVerdict("KT_CLASSICAL", hyps, "B^(n+1) - B^n -> 0", emp, cfg)


def verdict_tauberian(x: OrbitSequence, candidates, cfg: RunConfig | None = None) -> TheoremVerdict:
    """Vanishing Abel residues at every spectral candidate => ``x(n) -> 0``.

    Besides the residue condition, the candidates must account for every
    unimodular frequency visible in the data (``candidates_cover_spectrum``).
    """
    cfg = cfg or RunConfig()
    h_cand, pts = _candidates_hypothesis(candidates)
    hyps = [Hypothesis("sequence_bounded", x.bounded_flag, {"sup_norm": _num(x.sup_norm)}),
            h_cand, _coverage_hypothesis(x, pts, cfg)]
    if h_cand.passed:
        hyps.append(_residue_hypothesis(x, pts, cfg, "residues_vanish"))
    else:
        hyps.append(Hypothesis("residues_vanish", False, {"note": "candidates invalid"}))
    return TheoremVerdict("TAUBERIAN", tuple(hyps), "x(n) -> 0",
                          _c0_empirical(x, cfg, "x"), cfg)


def _orbit_residues(sys: DiscreteSystem, x: OrbitSequence, points, cfg, name: str) -> Hypothesis:
    if x.truncated_at is not None:
        return Hypothesis(name, False, {"note": "orbit overflowed"})
    return _residue_hypothesis(x, points, cfg, name)


def verdict_stability(sys: DiscreteSystem, cfg: RunConfig | None = None) -> TheoremVerdict:
    """c0 forcing, bounded orbit, vanishing residues at the peripheral spectrum => ``x(n) -> 0``."""
    cfg = cfg or RunConfig()
    spec = eigen_decompose(sys.B)
    x = simulate(sys, cfg.horizon)
    per = [e.value for e in spec.peripheral]
    hyps = (_forcing_c0(sys, cfg), _peripheral_finite(spec), _orbit_bounded(x, cfg),
            _orbit_residues(sys, x, per, cfg, "residues_vanish"))
    return TheoremVerdict("STABILITY", hyps, "x(n) -> 0", _c0_empirical(x, cfg, "orbit"), cfg)


def verdict_ablv_orbit(B, x0, cfg: RunConfig | None = None) -> TheoremVerdict:
    """Power bounded, vanishing operator residues at the peripheral spectrum => ``B^n x0 -> 0``.

    The residue decision at each peripheral cluster is cross-checked
    against the norm of the Riesz projection of ``x0``.
    """
    cfg = cfg or RunConfig()
    A = as_matrix(B)
    x0 = np.asarray(x0, dtype=complex).ravel()
    spec = eigen_decompose(A)
    pb = power_bound_estimate(A, cfg.power_n_max, spec)
    tol = cfg.op_res_tol * (1.0 + float(np.linalg.norm(x0)))
    items, checks = [], []
    ok = True
    for e in spec.peripheral:
        est = operator_abel_residue(A, e.value, x0, RayGrid(e.value, cfg.j_min, cfg.j_max), tol)
        ok = ok and est.vanishes
        comp = float(np.linalg.norm(spectral_projection(A, spec, e.value) @ x0))
        oracle_zero = comp <= tol
        items.append({"point": complex_to_json(e.value), "divergent": est.divergent,
                      "limit": _num(est.extrapolated_limit), "vanishes": est.vanishes})
        checks.append({"point": complex_to_json(e.value), "projection_norm": _num(comp),
                       "oracle_zero": oracle_zero, "agrees": oracle_zero == est.vanishes})
    hyps = (Hypothesis("power_bounded", pb.power_bounded, {"c_est": _num(pb.c_est)}),
            _peripheral_finite(spec),
            Hypothesis("operator_residues_vanish", ok, {"residues": items, "tol": _num(tol)}))
    x = simulate(DiscreteSystem(A, x0, Zero()), cfg.horizon)
    cross = {"oracle": "spectral_projection", "points": checks,
             "agrees": all(c["agrees"] for c in checks)}
    return TheoremVerdict("ABLV_ORBIT", hyps, "B^n x0 -> 0", _c0_empirical(x, cfg, "orbit"),
                          cfg, cross)


def verdict_kt_aap(sys: DiscreteSystem, cfg: RunConfig | None = None) -> TheoremVerdict:
    """Peripheral spectrum in {1}, bounded orbit, AAP forcing => AAP differences."""
    cfg = cfg or RunConfig()
    spec = eigen_decompose(sys.B)
    x = simulate(sys, cfg.horizon)
    hyps = (_peripheral_in_one(spec, cfg), _orbit_bounded(x, cfg), _forcing_aap(sys, cfg))
    freqs = merge_frequencies([e.value for e in spec.peripheral], sys.forcing.frequencies)
    if x.truncated_at is not None:
        emp = Empirical(False, math.inf, {"sequence": "difference_orbit", "note": "orbit overflowed"})
    else:
        emp = _aap_empirical(difference_orbit(x), freqs, cfg, "difference_orbit")
    return TheoremVerdict("KT_AAP", hyps, "x(n+1) - x(n) is asymptotically almost periodic",
                          emp, cfg)


def verdict_stability_aap(sys: DiscreteSystem, cfg: RunConfig | None = None) -> TheoremVerdict:
    """AAP analogue of the stability verdict (restricted).

    The AP part on the peripheral and forcing frequencies is removed first;
    residues are then taken of the remainder.
    """
    cfg = cfg or RunConfig()
    spec = eigen_decompose(sys.B)
    x = simulate(sys, cfg.horizon)
    per = [e.value for e in spec.peripheral]
    freqs = merge_frequencies(per, sys.forcing.frequencies)
    hyps = [_forcing_aap(sys, cfg), _peripheral_finite(spec), _orbit_bounded(x, cfg)]
    if x.truncated_at is not None:
        hyps.append(Hypothesis("remainder_residues_vanish", False, {"note": "orbit overflowed"}))
        emp = Empirical(False, math.inf, {"sequence": "orbit", "note": "orbit overflowed"})
    else:
        dec = aap_decompose(x, freqs, cfg.concl_tol, burn_in=x.horizon // 2)
        hyps.append(_residue_hypothesis(dec.remainder, per, cfg, "remainder_residues_vanish"))
        emp = _aap_empirical(x, freqs, cfg, "orbit")
    return TheoremVerdict("STABILITY_AAP", tuple(hyps), "x is asymptotically almost periodic",
                          emp, cfg)


def verdict_tauberian_aap(x: OrbitSequence, candidates, cfg: RunConfig | None = None,
                          freqs=None) -> TheoremVerdict:
    """AAP analogue of the Tauberian verdict (restricted).

    The AP part on ``freqs`` (default: the candidates) is removed; the
    residue and coverage conditions are then checked on the remainder.
    """
    cfg = cfg or RunConfig()
    h_cand, pts = _candidates_hypothesis(candidates)
    fr = merge_frequencies(pts if freqs is None else freqs)
    dec = aap_decompose(x, fr, cfg.concl_tol, burn_in=x.horizon // 2)
    r = dec.remainder
    hyps = [Hypothesis("sequence_bounded", x.bounded_flag, {"sup_norm": _num(x.sup_norm)}),
            h_cand, _coverage_hypothesis(r, pts, cfg)]
    if h_cand.passed:
        hyps.append(_residue_hypothesis(r, pts, cfg, "remainder_residues_vanish"))
    else:
        hyps.append(Hypothesis("remainder_residues_vanish", False, {"note": "candidates invalid"}))
    return TheoremVerdict("TAUBERIAN_AAP", tuple(hyps), "x is asymptotically almost periodic",
                          _aap_empirical(x, fr, cfg, "x"), cfg)


def run_verdict(theorem_id: str, cfg: RunConfig, system: DiscreteSystem | None = None,
                sequence: OrbitSequence | None = None, candidates=None, freqs=None
                ) -> TheoremVerdict:
    """Dispatch by theorem id. Sequence theorems take ``sequence``, the rest ``system``."""
    if theorem_id in ("TAUBERIAN", "TAUBERIAN_AAP"):
        if sequence is None:
            if system is None:
                raise ValueError(f"{theorem_id} needs a sequence or a system")
            sequence = simulate(system, cfg.horizon)
        if candidates is None:
            candidates = [e.value for e in eigen_decompose(system.B).peripheral] \
                if system is not None else []
        if theorem_id == "TAUBERIAN":
            return verdict_tauberian(sequence, candidates, cfg)
        return verdict_tauberian_aap(sequence, candidates, cfg, freqs)
    if system is None:
        raise ValueError(f"{theorem_id} needs a system")
    if theorem_id == "KT_ORBIT":
        return verdict_kt(system, cfg)
    if theorem_id == "STABILITY":
        return verdict_stability(system, cfg)
    if theorem_id == "KT_CLASSICAL":
        return verdict_kt_classical(system.B, cfg)
    if theorem_id == "KT_POINTWISE":
        return verdict_kt_pointwise(system.B, system.x1, cfg)
    if theorem_id == "ABLV_ORBIT":
        return verdict_ablv_orbit(system.B, system.x1, cfg)
    if theorem_id == "KT_AAP":
        return verdict_kt_aap(system, cfg)
    if theorem_id == "STABILITY_AAP":
        return verdict_stability_aap(system, cfg)
    raise ValueError(f"unknown theorem {theorem_id!r}")
