import json

import numpy as np
import pytest

from orbit_spectra.config import RunConfig
from orbit_spectra.errors import InsufficientHorizon
from orbit_spectra.orbit import DiscreteSystem, Tabulated, TrigPoly, Zero, sequence
from orbit_spectra.verdict import (THEOREMS, Empirical, Hypothesis, TheoremVerdict, run_verdict,
                                   spectral_coverage, verdict_ablv_orbit, verdict_kt,
                                   verdict_kt_aap, verdict_kt_classical, verdict_kt_pointwise,
                                   verdict_stability, verdict_stability_aap, verdict_tauberian,
                                   verdict_tauberian_aap)

from _util import D, jordan, randvec

CFG = RunConfig()


def _check_honest(v):
    # NotApplicable verdicts are never inconsistent and still carry an empirical result
    assert v.consistent == (not (v.applicable and not v.empirical.passed))
    if not v.applicable:
        assert v.consistent
    assert isinstance(v.empirical.passed, bool)
    json.dumps(v.to_dict(), allow_nan=False)


def test_verdict_semantics():
    good = Hypothesis("h", True, {})
    bad = Hypothesis("h", False, {})
    fail = Empirical(False, 1.0)
    v = TheoremVerdict("KT_ORBIT", (good,), "c", fail, CFG)
    assert v.prediction == "Applicable" and not v.consistent
    v = TheoremVerdict("KT_ORBIT", (good, bad), "c", fail, CFG)
    assert v.prediction == "NotApplicable" and v.consistent
    with pytest.raises(ValueError):
        TheoremVerdict("NOPE", (), "c", fail, CFG)
    assert TheoremVerdict("STABILITY_AAP", (), "c", fail, CFG).restricted
    assert v.hypothesis("h") is good
    assert set(v.to_dict()) == {"theorem", "hypotheses", "prediction", "conclusion", "empirical",
                                "consistent", "restricted", "config"}


# -- KT ----------------------------------------------------------------------

def test_kt_examples():
    v = verdict_kt(DiscreteSystem(D(1, 0.5), [1, 1]), CFG)
    assert v.applicable and v.empirical.passed and v.consistent

    v = verdict_kt(DiscreteSystem(D(1j, 0.5), [1, 1]), CFG)
    assert not v.hypothesis("peripheral_subset_of_1").passed
    assert v.prediction == "NotApplicable" and v.consistent
    assert not v.empirical.passed
    assert v.empirical.residual == pytest.approx(np.sqrt(2))

    v = verdict_kt(DiscreteSystem(jordan(0.0, 2), randvec(np.random.default_rng(0), 2)), CFG)
    assert v.applicable and v.empirical.passed and v.empirical.residual == 0
    _check_honest(v)


def test_kt_unbounded_orbit_not_applicable():
    v = verdict_kt(DiscreteSystem(jordan(1.0, 2), [0, 1]), CFG)
    assert not v.hypothesis("orbit_bounded").passed and v.consistent


def test_kt_pointwise_uses_unforced_orbit():
    v = verdict_kt_pointwise(D(1, 0.5), [3, 1], CFG)
    assert v.theorem_id == "KT_POINTWISE" and v.applicable and v.consistent


def test_short_horizon_refused():
    with pytest.raises(InsufficientHorizon):
        verdict_kt(DiscreteSystem(D(1, 0.5), [1, 1]), RunConfig(horizon=50))


def test_kt_tabulated_forcing_tested_for_c0():
    N = CFG.horizon
    n = np.arange(1, N + 1)
    y = np.stack([0 * n, 1.0 / n ** 2], axis=1)
    v = verdict_kt(DiscreteSystem(D(1, 0.5), [1, 1], Tabulated(y)), CFG)
    assert v.hypothesis("forcing_in_c0").passed and v.consistent
    y = np.stack([0 * n, 1j ** n], axis=1)
    v = verdict_kt(DiscreteSystem(D(1, 0.5), [1, 1], Tabulated(y)), CFG)
    assert not v.hypothesis("forcing_in_c0").passed


# -- classical ---------------------------------------------------------------

def test_kt_classical_examples():
    v = verdict_kt_classical(D(1, 0.5), CFG)
    assert v.applicable and v.empirical.passed
    # closed form ||B^n (B - I)||_F = 2^-(n+1); the tail starts at n = 1000
    assert v.empirical.residual == pytest.approx(2.0 ** -1001, rel=1e-9)

    v = verdict_kt_classical(D(-1, 0.5), CFG)
    assert not v.applicable and v.consistent

    v = verdict_kt_classical(np.array([[0.5, 1], [0, 0.5]]), CFG)
    assert v.applicable and v.empirical.passed


def test_kt_classical_overflow():
    v = verdict_kt_classical(np.array([[1.5]]), CFG)
    assert not v.applicable and not v.empirical.passed and v.consistent
    assert v.to_dict()["empirical"]["residual"] == "inf"


# -- Tauberian ---------------------------------------------------------------

def test_tauberian_examples():
    x = sequence(lambda n: 1.0 / n + 2.0 ** -n, CFG.horizon)
    v = verdict_tauberian(x, [1], CFG)
    assert v.applicable and v.empirical.passed

    x = sequence(lambda n: 1j ** n, CFG.horizon)
    v = verdict_tauberian(x, [1j], CFG)
    assert not v.hypothesis("residues_vanish").passed
    assert v.prediction == "NotApplicable" and not v.empirical.passed and v.consistent

    v = verdict_tauberian(sequence(lambda n: 0j * n, CFG.horizon), [1], CFG)
    assert v.applicable and v.consistent


def test_tauberian_coverage_guard():
    # residue at 1 vanishes, but the tone at i was not offered as a candidate
    x = sequence(lambda n: 1j ** n, CFG.horizon)
    v = verdict_tauberian(x, [1], CFG)
    assert v.hypothesis("residues_vanish").passed
    assert not v.hypothesis("candidates_cover_spectrum").passed
    assert v.consistent


def test_spectral_coverage():
    x = sequence(lambda n: 1j ** n + 0.5 * np.exp(2j * n), 4000)
    assert spectral_coverage(x, [1j, np.exp(2j)], 1e-2)[0]
    ok, peak, where = spectral_coverage(x, [1j], 1e-2)
    assert not ok and peak == pytest.approx(0.5, rel=0.1)
    assert abs(np.angle(where) - 2) < 2 * np.pi / 2000


def test_tauberian_rejects_bad_candidates():
    x = sequence(lambda n: 1.0 / n, CFG.horizon)
    v = verdict_tauberian(x, [1, np.exp(1e-5j)], CFG)
    assert not v.hypothesis("candidates_finite_separated").passed and v.consistent


# -- stability ---------------------------------------------------------------

def test_stability_examples():
    v = verdict_stability(DiscreteSystem(D(1j, 0.5), [0, 1]), CFG)
    assert v.applicable and v.empirical.passed

    v = verdict_stability(DiscreteSystem(D(1j, 0.5), [1, 0]), CFG)
    assert not v.applicable and not v.empirical.passed and v.consistent

    rng = np.random.default_rng(4)
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    B *= 0.9 / max(abs(np.linalg.eigvals(B)))
    v = verdict_stability(DiscreteSystem(B, randvec(rng, 4)), CFG)
    assert v.applicable and v.empirical.passed
    assert v.hypothesis("peripheral_finite").evidence["count"] == 0


# -- ABLV --------------------------------------------------------------------

def test_ablv_examples():
    B = D(np.exp(1j * np.pi / 4), 0.9)
    v = verdict_ablv_orbit(B, [0, 1], CFG)
    assert v.applicable and v.empirical.passed and v.cross_check["agrees"]

    v = verdict_ablv_orbit(B, [1, 0], CFG)
    assert not v.applicable and not v.empirical.passed and v.cross_check["agrees"]

    v = verdict_ablv_orbit(np.eye(1), [1], CFG)
    assert v.hypothesis("power_bounded").passed
    assert not v.hypothesis("operator_residues_vanish").passed
    assert v.prediction == "NotApplicable" and v.consistent
    assert "cross_check" in v.to_dict()


def test_ablv_jordan_block_not_power_bounded():
    v = verdict_ablv_orbit(jordan(1j, 2), [0, 1], CFG)
    assert not v.hypothesis("power_bounded").passed
    res = v.hypothesis("operator_residues_vanish").evidence["residues"][0]
    assert res["divergent"]


# -- AAP variants ------------------------------------------------------------

def test_kt_aap_examples():
    sys = DiscreteSystem(D(1, 0.5), [1, 1], TrigPoly((([0, 1], 1j),)))
    v = verdict_kt_aap(sys, CFG)
    assert v.applicable and v.empirical.passed

    N = CFG.horizon
    n = np.arange(1, N + 1)
    y = np.stack([0 * n, np.exp(1j * np.sqrt(n))], axis=1)
    v = verdict_kt_aap(DiscreteSystem(D(1, 0.5), [1, 1], Tabulated(y)), CFG)
    assert not v.hypothesis("forcing_aap").passed and v.prediction == "NotApplicable"

    v = verdict_kt_aap(DiscreteSystem(np.zeros((2, 2)), [0, 0]), CFG)
    assert v.applicable and v.consistent


def test_stability_aap():
    sys = DiscreteSystem(D(1j, 0.5), [1, 1], TrigPoly((([0, 1], -1),)))
    v = verdict_stability_aap(sys, CFG)
    assert v.restricted and v.applicable and v.empirical.passed
    v = verdict_stability_aap(DiscreteSystem(np.zeros((1, 1)), [0]), CFG)
    assert v.consistent


def test_tauberian_aap():
    x = sequence(lambda n: 2 * 1j ** n + 1.0 / n, CFG.horizon)
    v = verdict_tauberian_aap(x, [1j], CFG)
    assert v.restricted and v.applicable and v.empirical.passed
    v = verdict_tauberian_aap(sequence(lambda n: 0j * n, CFG.horizon), [1], CFG)
    assert v.consistent


# -- dispatch ----------------------------------------------------------------

@pytest.mark.parametrize("tid", THEOREMS)
def test_run_verdict_dispatch(tid):
    sys = DiscreteSystem(D(1, 0.5), [1, 1])
    v = run_verdict(tid, CFG, system=sys)
    assert v.theorem_id == tid
    _check_honest(v)
    assert v.to_dict()["config"] == CFG.to_dict()


def test_run_verdict_needs_inputs():
    with pytest.raises(ValueError):
        run_verdict("KT_ORBIT", CFG)
    with pytest.raises(ValueError):
        run_verdict("TAUBERIAN", CFG)
    v = run_verdict("TAUBERIAN", CFG, sequence=sequence(lambda n: 1.0 / n, CFG.horizon))
    assert v.applicable and isinstance(v.hypotheses[1], Hypothesis)
    assert DiscreteSystem(D(1), [1], Zero()).dim == 1
