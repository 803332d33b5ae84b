import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varswap.models import (
    ConstVol,
    DomainError,
    Heston,
    HullWhite,
    SwapContract,
    ThreeHalves,
    UnsupportedModel,
    ValidationError,
    contract_from_config,
    ensure_valid,
    m,
    make_model,
    model_from_config,
    mu,
    read_config,
    sigma,
    transform_pair,
    validate,
)

HESTON = Heston(kappa=2.0, theta=0.04, nu=0.3, V0=0.04)
HW = HullWhite(mu=0.1, sigma=0.2, V0=0.04)
TH = ThreeHalves(p=1.0, q=0.2, eps=1.0, V0=0.04)


def test_coefficients():
    assert m(HESTON, 0.09) == pytest.approx(0.3)
    assert mu(HESTON, 0.01) == pytest.approx(2.0 * 0.03)
    assert sigma(HESTON, 0.04) == pytest.approx(0.3 * 0.2)
    assert mu(HW, 0.5) == pytest.approx(0.05)
    assert sigma(TH, 0.04) == pytest.approx(0.008)
    assert mu(ConstVol(V0=0.1), 0.3) == 0.0


@pytest.mark.parametrize("model", [HESTON, HW, TH, ConstVol(V0=0.04)])
@pytest.mark.parametrize("v", [0.0, -1e-3])
def test_domain_error(model, v):
    with pytest.raises(DomainError):
        m(model, v)
    with pytest.raises(DomainError):
        sigma(model, np.array([0.1, v]))


@pytest.mark.parametrize("model, bad", [
    (Heston(kappa=-1.0, theta=0.04, nu=0.3, V0=0.04), "kappa > 0"),
    (Heston(kappa=1.0, theta=0.0, nu=0.3, V0=0.04), "theta > 0"),
    (HullWhite(mu=0.1, sigma=0.0, V0=0.04), "sigma > 0"),
    (ThreeHalves(p=1.0, q=0.5, eps=1.0, V0=0.04), "q < eps^2/2"),
    (ConstVol(V0=-0.04), "V0 > 0"),
])
def test_validation_names_constraint(model, bad):
    rep = validate(model)
    assert not rep.ok
    assert any(bad in e for e in rep.errors)
    with pytest.raises(ValidationError):
        ensure_valid(model)


@pytest.mark.parametrize("contract, bad", [
    (SwapContract(T=0.0, n=1), "T > 0"),
    (SwapContract(T=1.0, n=0), "n positive integer"),
    (SwapContract(T=1.0, n=2.5), "n positive integer"),
    (SwapContract(T=1.0, n=4, r=-0.01), "r >= 0"),
    (SwapContract(T=1.0, n=4, rho=1.5), "rho in [-1, 1]"),
])
def test_contract_validation(contract, bad):
    rep = validate(HESTON, contract)
    assert any(bad in e for e in rep.errors)


def test_feller_is_only_a_warning():
    model = Heston(kappa=0.5, theta=0.01, nu=1.0, V0=0.04)
    rep = validate(model)
    assert rep.ok and rep.warnings and not model.feller
    assert HESTON.feller and not validate(HESTON).warnings


def test_three_halves_note_for_mean_reversion():
    rep = validate(ThreeHalves(p=1.0, q=-0.3, eps=1.0, V0=0.04))
    assert rep.ok and rep.notes


def test_models_are_frozen():
    with pytest.raises(dataclasses.FrozenInstanceError):
        HESTON.kappa = 3.0


def test_contract_grid():
    c = SwapContract(T=2.0, n=8)
    assert c.h == 0.25
    assert c.times[-1] == pytest.approx(2.0) and len(c.times) == 9
    assert c.with_(n=4).h == 0.5


@pytest.mark.parametrize("kind, cls", [("heston", Heston), ("HW", HullWhite), ("3/2", ThreeHalves),
                                       ("const-vol", ConstVol)])
def test_make_model_aliases(kind, cls):
    fields = {f.name: 0.5 for f in dataclasses.fields(cls)}
    assert isinstance(make_model(kind, **fields), cls)


def test_make_model_errors():
    with pytest.raises(UnsupportedModel):
        make_model("sabr", V0=0.04)
    with pytest.raises(ValidationError):
        make_model("heston", V0=0.04, kappa=1.0)


def test_config_roundtrip(tmp_path):
    toml = tmp_path / "c.toml"
    toml.write_text('[model]\ntype = "heston"\n[model.params]\nkappa = 2.0\ntheta = 0.04\n'
                    'nu = 0.3\nV0 = 0.04\n[contract]\nT = 1.0\nn = 12\nr = 0.03\nrho = -0.7\n')
    js = tmp_path / "c.json"
    js.write_text(json.dumps(read_config(toml)))
    for path in (toml, js):
        cfg = read_config(path)
        assert model_from_config(cfg) == HESTON
        assert contract_from_config(cfg) == SwapContract(T=1.0, n=12, r=0.03, rho=-0.7)


def test_config_missing_blocks():
    with pytest.raises(ValidationError):
        model_from_config({})
    with pytest.raises(ValidationError):
        contract_from_config({"contract": {"T": 1.0}})


@pytest.mark.parametrize("model", [HESTON, HW, TH])
@settings(max_examples=50, deadline=None)
@given(v=st.floats(1e-3, 2.0))
def test_transform_pair_generator(model, v):
    # f' = m / sigma and k = mu f' + sigma^2 f''/2
    tp = transform_pair(model)
    assert tp.df(v) * sigma(model, v) == pytest.approx(m(model, v), rel=1e-12)
    k = mu(model, v) * tp.df(v) + 0.5 * sigma(model, v) ** 2 * tp.d2f(v)
    assert tp.k(v) == pytest.approx(k, rel=1e-10, abs=1e-12)
    step = 1e-6 * v
    fd = (tp.f(v + step) - tp.f(v - step)) / (2 * step)
    assert fd == pytest.approx(tp.df(v), rel=1e-6)


def test_no_transform_for_const_vol():
    with pytest.raises(UnsupportedModel):
        transform_pair(ConstVol(V0=0.04))
