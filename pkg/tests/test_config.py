import pytest

from orbit_spectra.config import RunConfig


def test_defaults():
    cfg = RunConfig()
    assert (cfg.horizon, cfg.hyp_tol, cfg.concl_tol, cfg.j_min, cfg.j_max, cfg.nodes) == \
        (2000, 1e-8, 1e-3, 2, 14, 256)
    assert cfg.window == 0.5 and cfg.seed == 0 and cfg.out is None


@pytest.mark.parametrize("bad", [dict(horizon=1), dict(horizon=10**7 + 1), dict(hyp_tol=0),
                                 dict(concl_tol=1), dict(j_min=0), dict(j_min=5, j_max=6),
                                 dict(j_max=31), dict(nodes=32), dict(window=0),
                                 dict(window=1.5), dict(bound_cap=-1), dict(power_n_max=0),
                                 dict(seed=-1), dict(seed=2**64)])
def test_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_round_trip_and_overrides():
    cfg = RunConfig(horizon=500, seed=9)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.with_(horizon=None, seed=3) == RunConfig(horizon=500, seed=3)
    with pytest.raises(ValueError):
        RunConfig.from_dict({"horizon": 100, "colour": "red"})
