import numpy as np
import pytest
from hypothesis import given, strategies as st

from orbit_spectra.errors import QuadratureBlowup
from orbit_spectra.linalg import eigen_decompose, power_bound_estimate
from orbit_spectra.orbit import DiscreteSystem, c0_test, sequence, simulate
from orbit_spectra.singularity import (HigherOrderPole, Removable, SimplePole, Undetermined,
                                       auto_radius, classify_point, classify_resolvent,
                                       kt_coefficient_inequality_check, laurent_coeffs,
                                       resolvent_function, resolvent_z_chart, sequence_spectrum)

from _util import D, conjugate, jordan, randvec, well_conditioned


def _jordan_oracle(B, xi0, x0):
    """Pole order of R(lam, B) x0 at xi0 from kernel/range splitting."""
    d = len(B)
    M = B - xi0 * np.eye(d)
    Md = np.linalg.matrix_power(M, d)
    U, sv, Wh = np.linalg.svd(Md)
    rank = int(np.sum(sv > 1e-8 * max(np.linalg.norm(B, 2), 1) ** d))
    K, R = Wh[rank:].conj().T, U[:, :rank]
    coef = np.linalg.lstsq(np.hstack([K, R]), x0, rcond=None)[0]
    u = K @ coef[:K.shape[1]]
    scale = np.linalg.norm(x0)
    for k in range(d + 1):
        if np.linalg.norm(np.linalg.matrix_power(M, k) @ u) <= 1e-8 * scale:
            return k
    raise AssertionError("kernel component not nilpotent")


# -- laurent_coeffs -----------------------------------------------------------

def test_laurent_examples():
    xi0 = np.exp(0.4j)
    lc = laurent_coeffs(lambda z: 1 / (z - xi0), xi0, 0.3, -4, 4)
    for n in range(-4, 5):
        assert np.linalg.norm(lc[n] - (n == -1)) <= 1e-12
    lc = laurent_coeffs(lambda z: (z - xi0) ** 2, xi0, 0.3, -4, 4)
    for n in range(-4, 5):
        assert np.linalg.norm(lc[n] - (n == 2)) <= 1e-12
    lc = laurent_coeffs(resolvent_function(jordan(1.0, 2), [0, 1]), 1.0, 0.5, -3, 1)
    assert np.allclose(lc[-2], [1, 0], atol=1e-12)
    assert np.allclose(lc[-1], [0, 1], atol=1e-12)
    assert np.linalg.norm(lc[-3]) <= 1e-12


def test_laurent_blowup_and_arguments():
    with pytest.raises(QuadratureBlowup):
        with np.errstate(divide="ignore", invalid="ignore"):
            laurent_coeffs(lambda z: 1 / (z - 1.5), 1.0, 0.5, -2, 2)
    with pytest.raises(ValueError):
        laurent_coeffs(lambda z: z, 0, 1, -1, 1, nodes=32)
    with pytest.raises(ValueError):
        laurent_coeffs(lambda z: z, 0, 1, 2, 1)


@given(st.integers(0, 2**32 - 1))
def test_quadrature_exact_on_laurent_polynomials(seed):
    rng = np.random.default_rng(seed)
    ns = np.arange(-16, 17)
    a = randvec(rng, len(ns)) * (rng.uniform(size=len(ns)) < 0.4)
    c = np.exp(1j * rng.uniform(0, 6.3))
    f = lambda z: np.sum(a * (z - c) ** ns)  # noqa: E731
    lc = laurent_coeffs(f, c, 1.0, -20, 20)
    for n in range(-20, 21):
        want = a[n + 16] if -16 <= n <= 16 else 0
        assert abs(lc[n][0] - want) <= 1e-12


# -- classify_point -----------------------------------------------------------

def test_classify_examples():
    cls, _ = classify_resolvent(D(1, 0.5), [0, 1], 1.0)
    assert isinstance(cls, Removable)
    cls, _ = classify_resolvent(D(1, 0.5), [1, 1], 1.0)
    assert isinstance(cls, SimplePole) and np.allclose(cls.residue, [1, 0], atol=1e-10)
    cls, _ = classify_resolvent(jordan(1.0, 2), [0, 1], 1.0)
    assert cls == HigherOrderPole(2)


def test_order_capped_at_four():
    cls, _ = classify_resolvent(jordan(1.0, 6), np.eye(6)[5], 1.0)
    assert cls.order == 4 and cls.to_dict()["order_is_lower_bound"]
    with pytest.raises(ValueError):
        HigherOrderPole(1)


def test_undetermined_on_inconsistent_radii():
    # a branch cut between the two radii defeats the two-radius check
    cls, _ = classify_point(lambda z: np.sqrt(z - 1.0 + 0.2), 1.0, radius=0.3)
    assert isinstance(cls, Undetermined)


def test_auto_radius():
    assert auto_radius(1.0) == 0.5
    assert auto_radius(1.0, [1.0, 0.6]) == pytest.approx(0.2)
    assert auto_radius(1.0, [1 + 1e-6, 0.9]) == pytest.approx(0.05)


def test_classify_matches_jordan_oracle_on_triangular_matrices():
    rng = np.random.default_rng(99)
    for _ in range(200):
        m = int(rng.integers(1, 4))
        k = int(rng.integers(1, 3))
        others = 0.6 * np.sqrt(rng.uniform(size=k)) * np.exp(2j * np.pi * rng.uniform(size=k))
        xi0 = np.exp(2j * np.pi * rng.uniform())
        diag = np.concatenate([[xi0] * m, others])
        d = len(diag)
        B = np.triu(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)), 1)
        B[np.diag_indices(d)] = diag
        if rng.uniform() < 0.3:
            V = well_conditioned(rng, d, 10)
            B = V @ B @ np.linalg.inv(V)
        x0 = randvec(rng, d)
        j = int(rng.integers(0, m + 1))
        x0 = np.linalg.matrix_power(B - xi0 * np.eye(d), j) @ x0
        want = _jordan_oracle(B, xi0, x0)
        cls, _ = classify_resolvent(B, x0, xi0)
        got = {"Removable": 0, "SimplePole": 1}.get(cls.kind, getattr(cls, "order", None))
        assert got == min(want, 4), (want, cls)


@given(st.integers(0, 2**32 - 1))
def test_two_radius_consistency(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    diag = 0.5 * np.exp(2j * np.pi * rng.uniform(size=d))
    diag[0] = 1.0
    B = conjugate(well_conditioned(rng, d), diag)
    _, lc = classify_resolvent(B, randvec(rng, d), 1.0)
    assert lc.cross_radius_error <= 1e-8 * lc.scale


# -- kt_coefficient_inequality_check ------------------------------------------

def test_inequality_single_term():
    c = np.array([0.6, 0.8j])
    rep = kt_coefficient_inequality_check(lambda z: c / z, 1.0, [0.1, 0.3], range(-2, 5))
    assert rep.all_ok
    e = [e for e in rep.entries if e.n == 0 and e.r == 0.3][0]
    assert e.lhs == pytest.approx(0.09, abs=1e-12) and e.bound == pytest.approx(0.18)


def test_inequality_for_power_bounded_resolvent():
    B, x0 = D(1, 0.5), np.array([1.0, 1.0])
    C, ok = power_bound_estimate(B, 1000)
    assert ok
    beta = C * np.linalg.norm(x0)
    rep = kt_coefficient_inequality_check(resolvent_z_chart(B, x0), beta, [0.1, 0.05], range(-2, 5))
    assert rep.all_ok
    assert rep.to_dict()["all_ok"]


def test_inequality_zero_function():
    rep = kt_coefficient_inequality_check(lambda z: np.zeros(2), 1.0, [0.1], [0, 1])
    assert rep.all_ok and all(e.lhs == 0 for e in rep.entries)


def test_inequality_detects_violation():
    # a double pole breaks the bound at small r
    rep = kt_coefficient_inequality_check(lambda z: 1 / z ** 3, 1.0, [0.1], [0])
    assert not rep.all_ok


# -- sequence_spectrum --------------------------------------------------------

def test_sequence_spectrum_examples():
    est = sequence_spectrum(sequence(lambda n: 1j ** n, 4000), [1, 1j, -1, -1j])
    assert est.sigma_x == (1j,)

    est = sequence_spectrum(sequence(lambda n: 1.0 / n, 16384), [1, 1j, -1, np.exp(1j)])
    assert est.is_empty

    x = simulate(DiscreteSystem(D(1, 0.5), [1, 1]), 4000)
    peripheral = [e.value for e in eigen_decompose(D(1, 0.5)).peripheral]
    est = sequence_spectrum(x, peripheral)
    assert est.sigma_x == (1,)
    assert isinstance(est.candidates[0].classification, SimplePole)


def test_sequence_spectrum_rejects_close_candidates():
    with pytest.raises(ValueError):
        sequence_spectrum(sequence(lambda n: 1j ** n, 4000), [1, np.exp(1e-4j)])


@pytest.mark.parametrize("seed", range(10))
def test_sequence_spectrum_inside_peripheral_spectrum(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 6))
    diag = 0.8 * np.sqrt(rng.uniform(size=d)) * np.exp(2j * np.pi * rng.uniform(size=d))
    k = int(rng.integers(1, min(d, 3) + 1))
    diag[:k] = np.exp(1j * (rng.uniform(0, 2 * np.pi) + np.arange(k) * 2.0))
    B = conjugate(well_conditioned(rng, d), diag)
    x = simulate(DiscreteSystem(B, randvec(rng, d)), 4000)
    assert x.bounded_flag
    probes = [np.exp(1j * (np.angle(diag[0]) + t)) for t in (0.7, 2.9, 4.4)]
    cands = list(diag[:k]) + [p for p in probes if np.min(np.abs(diag[:k] - p)) > 0.3]
    sigma = sequence_spectrum(x, cands, tol=1e-2).sigma_x
    assert all(np.min(np.abs(diag[:k] - s)) < 1e-9 for s in sigma)


CORPUS = [
    (lambda n: 1.0 / n, True),
    (lambda n: 2.0 ** -n, True),
    (lambda n: 0.0 * n, True),
    (lambda n: n ** -2.0 + 1j * 0.9 ** n, True),
    (lambda n: 1j ** n, False),
    (lambda n: 1 + 1.0 / n, False),
    (lambda n: (-1.0) ** n + 1.0 / n, False),
    (lambda n: np.exp(1j * n) * 0.3, False),
]


@pytest.mark.parametrize("fn,in_c0", CORPUS)
def test_empty_spectrum_iff_c0(fn, in_c0):
    x = sequence(fn, 16384)
    cands = [1, 1j, -1, -1j, np.exp(1j)]
    est = sequence_spectrum(x, cands, tol=1e-2)
    assert est.is_empty == in_c0 == c0_test(x, 1e-3).tends_to_zero
