import pytest
from hypothesis import given
from hypothesis import strategies as st

from asom_ar.config import RunConfig


def test_defaults():
    c = RunConfig()
    assert c.asom_neurons == 900 and c.som_neurons == 1600
    assert (c.asom_alpha_i, c.asom_alpha_d, c.asom_alpha_f) == (0.1, 0.99, 0.01)
    assert (c.asom_rho_i, c.asom_rho_d, c.asom_rho_f) == (30.0, 0.999, 1.0)
    assert (c.asom_beta_i, c.asom_beta_d, c.asom_beta_f) == (0.35, 1.0, 0.01)
    assert c.asom_epochs == 300 and c.som_epochs == 1500
    assert c.output_gamma == 0.35


def test_ini_round_trip():
    c = RunConfig(dataset="/data/x", adapter="msr1", asom_sigma=0.123456789, run_seed=2 ** 63,
                  asom_constant_beta=False, output_sign="strict")
    assert RunConfig.from_ini(c.to_ini()) == c


@given(st.floats(1e-6, 1e9), st.integers(0, 2 ** 64 - 1), st.booleans())
def test_ini_round_trip_property(sigma, seed, flag):
    c = RunConfig(som_sigma=sigma, run_seed=seed, egocentric=flag)
    assert RunConfig.from_ini(c.to_ini()) == c


def test_ini_sections():
    text = RunConfig().to_ini()
    for s in ("[data]", "[preprocess]", "[asom]", "[som]", "[output]", "[run]"):
        assert s in text
    assert "attention_k = 0" in text


def test_unknown_key_rejected():
    with pytest.raises(ValueError, match="unknown"):
        RunConfig.from_ini("[asom]\nsigmaa = 2\n")


@pytest.mark.parametrize("bad", [dict(adapter="nope"), dict(asom_neurons=10),
                                 dict(asom_decay_per="week"), dict(run_jobs=0),
                                 dict(run_seed=-1), dict(output_sign="x")])
def test_validation(bad):
    with pytest.raises(ValueError):
        RunConfig(**bad)


def test_bad_bool():
    with pytest.raises(ValueError):
        RunConfig.from_ini("[preprocess]\nscale = maybe\n")


def test_layer_builders():
    c = RunConfig(asom_neurons=64, som_neurons=49, attention_k=5)
    assert c.asom_shape().rows == 8
    p = c.asom_params(7)
    assert p.seed == 7 and p.alpha.initial == 0.1
    assert c.som2().shape.size == 49
    assert c.preprocess().attention_k == 5
    assert RunConfig().preprocess().attention_k is None
