import json

import numpy as np
import pytest

from orbit_spectra.config import RunConfig
from orbit_spectra.io import dumps
from orbit_spectra.linalg import eigen_decompose
from orbit_spectra.sweep import (GENERATORS, MAX_COND, construct, generate_case, propcheck,
                                 replay, run_case, thread_count)
from orbit_spectra.verdict import THEOREMS

CFG = RunConfig(seed=11)


def test_every_theorem_has_a_generator():
    assert set(GENERATORS) == set(THEOREMS)


@pytest.mark.parametrize("tid", THEOREMS)
def test_generation_is_deterministic(tid):
    a, b = generate_case(tid, 5, 3), generate_case(tid, 5, 3)
    assert np.array_equal(a["system"].B, b["system"].B)
    assert np.array_equal(a["system"].x1, b["system"].x1)
    assert not np.array_equal(a["system"].B, generate_case(tid, 5, 4)["system"].B) \
        or not np.array_equal(a["system"].x1, generate_case(tid, 5, 4)["system"].x1)


def test_construction_margins():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(0, 4))
        angles = list(np.sort(rng.uniform(0, 2 * np.pi, size=k)))
        if k > 1 and min(np.diff(angles + [angles[0] + 2 * np.pi])) < 0.5:
            continue
        con = construct(rng, [np.exp(1j * a) for a in angles])
        assert np.linalg.cond(con.V) <= MAX_COND
        spec = eigen_decompose(con.matrix())
        per = sorted(np.angle(e.value) % (2 * np.pi) for e in spec.peripheral)
        assert np.allclose(per, sorted(a % (2 * np.pi) for a in angles), atol=1e-8)
        others = [abs(e.value) for e in spec.eigenvalues if e not in spec.peripheral]
        assert all(r <= 0.9 + 1e-8 for r in others)


@pytest.mark.parametrize("tid", THEOREMS)
def test_small_sweep_is_consistent(tid):
    rep = propcheck(tid, 12, CFG)
    assert rep["inconsistent"] == 0 and rep["count"] == 12
    assert rep["consistent"] == 12 and rep["inconsistent_cases"] == []
    if tid == "ABLV_ORBIT":
        assert rep["oracle_disagreements"] == 0


def test_worker_count_does_not_change_report():
    assert propcheck("STABILITY", 8, CFG, workers=1) == propcheck("STABILITY", 8, CFG, workers=2)


def test_dump_and_replay_byte_identical(tmp_path):
    rep = propcheck("KT_AAP", 3, CFG, dump_dir=tmp_path, dump_all=True)
    files = sorted(tmp_path.glob("KT_AAP_*.json"))
    assert [f.name for f in files] == ["KT_AAP_00000.json", "KT_AAP_00001.json",
                                       "KT_AAP_00002.json"]
    assert rep["dump_dir"] == str(tmp_path)
    for i, f in enumerate(files):
        obj = json.loads(f.read_text())
        direct = run_case("KT_AAP", generate_case("KT_AAP", CFG.seed, i), CFG)
        assert dumps(replay(obj).to_dict()) == dumps(direct.to_dict())
        assert dumps(replay(obj).to_dict()) == dumps(replay(obj).to_dict())


def test_bad_arguments():
    with pytest.raises(ValueError):
        propcheck("KT_ORBIT", 0, CFG)
    with pytest.raises(ValueError):
        propcheck("NOPE", 1, CFG)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("ORBSPEC_THREADS", "3")
    assert thread_count() == 3
    monkeypatch.setenv("ORBSPEC_THREADS", "x")
    assert thread_count() == 1
