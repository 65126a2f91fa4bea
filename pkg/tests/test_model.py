import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from refract.errors import ModelError
from refract.model import (
    JumpMixture,
    MixtureTerm,
    ModelSpec,
    density_minus,
    density_plus,
    exponential_mixture,
    hyperexponential_mixture,
    kou_reference_model,
    load_model,
    model_from_dict,
    model_to_dict,
    save_model,
    validate_model,
)
from _oracles import quad_unit_mass


def simple_spec(mix_plus=None, lam_plus=1.0):
    mix_plus = mix_plus if mix_plus is not None else exponential_mixture(3.0)
    return ModelSpec(mu=0.0, sigma=0.3, lambda_plus=lam_plus, jumps_plus=mix_plus)


def test_single_exponential_passes_validation():
    report = validate_model(simple_spec())
    assert report.passed, report.summary()


def test_weights_not_normalized_fails():
    mix = JumpMixture(terms=(MixtureTerm(rate=3.0, order=1, weights=(0.9,)),))
    report = validate_model(simple_spec(mix))
    failed = [c.name for c in report.failures()]
    assert any("normalization" in name for name in failed)


def test_conjugate_complex_pair_passes():
    # density 10 e^{-2z} (1 - cos z) >= 0: real rate 2 and complex pair 2 +/- i
    mix = JumpMixture(terms=(
        MixtureTerm(rate=2.0, order=1, weights=(5.0,)),
        MixtureTerm(rate=2 + 1j, order=1, weights=(-2 + 1j,)),
        MixtureTerm(rate=2 - 1j, order=1, weights=(-2 - 1j,)),
    ))
    spec = simple_spec(mix)
    report = validate_model(spec)
    assert report.passed, report.summary()
    zs = np.linspace(1e-3, 20, 500)
    vals = np.array([density_plus(spec, z) for z in zs])
    expected = 10 * np.exp(-2 * zs) * (1 - np.cos(zs))
    assert np.max(np.abs(vals - expected)) < 1e-12
    assert np.all(vals >= -1e-10)


def test_broken_conjugate_pair_fails():
    mix = JumpMixture(terms=(
        MixtureTerm(rate=2.0, order=1, weights=(5.0,)),
        MixtureTerm(rate=2 + 1j, order=1, weights=(-2 + 1j,)),
        MixtureTerm(rate=2 - 1j, order=1, weights=(-2 + 1j,)),   # wrong conjugate
    ))
    assert not validate_model(simple_spec(mix)).passed


def test_sigma_must_be_positive():
    spec = ModelSpec(mu=0.0, sigma=0.0)
    assert not validate_model(spec).passed


def test_lambda_zero_requires_empty_mixture():
    spec = ModelSpec(mu=0.0, sigma=1.0, lambda_plus=0.0,
                     jumps_plus=exponential_mixture(3.0))
    assert not validate_model(spec).passed


def test_density_closed_forms():
    spec = simple_spec()
    assert density_plus(spec, 0.0) == pytest.approx(3.0, abs=1e-14)
    assert density_plus(spec, 1.0) == pytest.approx(3 * math.exp(-3), abs=1e-14)
    erlang = JumpMixture(terms=(MixtureTerm(rate=2.0, order=2, weights=(0.0, 1.0)),))
    spec2 = simple_spec(erlang)
    assert density_plus(spec2, 1.0) == pytest.approx(4 * math.exp(-2), abs=1e-14)


def test_density_empty_mixture_raises():
    spec = ModelSpec(mu=0.0, sigma=1.0)
    with pytest.raises(ModelError, match="no positive jumps"):
        density_plus(spec, 1.0)
    with pytest.raises(ModelError, match="no negative jumps"):
        density_minus(spec, 1.0)


def test_density_integrates_to_one():
    spec = kou_reference_model()
    mass = quad_unit_mass(lambda z: density_plus(spec, z), 0, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)
    mass_m = quad_unit_mass(lambda z: density_minus(spec, z), 0, np.inf)
    assert mass_m == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(
    rates=st.lists(st.floats(0.6, 9.0), min_size=1, max_size=3, unique=True),
    seed=st.integers(0, 2**31),
)
def test_hyperexponential_mass_property(rates, seed):
    rng = np.random.default_rng(seed)
    w = rng.random(len(rates)) + 0.1
    w = w / w.sum()
    mix = hyperexponential_mixture(rates, w.tolist())
    spec = simple_spec(mix)
    assert validate_model(spec).passed
    mass = quad_unit_mass(lambda z: density_plus(spec, z), 0, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)


def test_json_round_trip(tmp_path):
    spec = kou_reference_model()
    path = tmp_path / "m.json"
    save_model(spec, str(path))
    loaded = load_model(str(path))
    assert loaded == spec
    doc = json.loads(path.read_text())
    assert doc["jumps_plus"][0]["rate"] == [3.0, 0.0]
    assert doc["jumps_plus"][0]["weights"] == [[1.0, 0.0]]


def test_json_complex_round_trip():
    mix = JumpMixture(terms=(
        MixtureTerm(rate=2.0, order=1, weights=(5.0,)),
        MixtureTerm(rate=2 + 1j, order=1, weights=(-2 + 1j,)),
        MixtureTerm(rate=2 - 1j, order=1, weights=(-2 - 1j,)),
    ))
    spec = simple_spec(mix)
    again = model_from_dict(model_to_dict(spec))
    assert again == spec


def test_malformed_document_raises():
    with pytest.raises(ModelError, match="malformed"):
        model_from_dict({"sigma": 1.0})
