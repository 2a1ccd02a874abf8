import numpy as np
import pytest

from ngbvar.config import COUNTRIES, VariantSpec, load_config, euro_area_ordering, standard_variants
from ngbvar.errors import ConfigError, FrequencyError
from ngbvar.stages import load_sources, prepare_series, validate_ids

BASE = """
seed = 7
[data]
files = ["data.csv"]
[model]
lags = 2
ordering = ["a", "b"]
shock = { variable = "b" }
"""


def write(tmp_path, text, data="date,series_id,value\n2008-01,a,1\n2008-02,a,2\n2008-01,b,3\n2008-02,b,5\n"):
    (tmp_path / "data.csv").write_text(data)
    path = tmp_path / "c.toml"
    path.write_text(text)
    return path


def test_euro_area_ordering():
    ids = euro_area_ordering()
    assert len(ids) == 52 and len(set(ids)) == 52
    assert ids[:7] == [f"hicp_{c}" for c in COUNTRIES]
    assert ids[28:30] == [f"loan_supply_{c}_inv" for c in ("at", "be")]
    assert ids[35:37] == ["mro", "eonia"]
    assert ids[-1] == "stoxx"


def test_parse_defaults(tmp_path):
    cfg = load_config(write(tmp_path, BASE))
    assert cfg.seed == 7
    assert cfg.shock.size_pp == -0.25 and cfg.shock.horizons == 36
    assert cfg.hyper.theta_psi == 0.1 and cfg.hyper.d == 0.01
    assert cfg.out_dir == tmp_path / "out"
    assert cfg.with_seed(8).config_hash() != cfg.config_hash()
    assert cfg.all_variants() == ()


@pytest.mark.parametrize("edit,match", [
    (('shock = { variable = "b" }', 'shock = { variable = "z" }'), "not in model.ordering"),
    (('ordering = ["a", "b"]', 'ordering = ["a", "b", "a"]'), "duplicates"),
    (("lags = 2", "lags = 0"), "lags"),
    (("[model]", "[prior]\nbogus = 1\n[model]"), "unknown"),
    (("lags = 2", "lags = 2 ="), "c.toml"),
])
def test_parse_errors(tmp_path, edit, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, BASE.replace(*edit)))


def test_variant_validation():
    with pytest.raises(ConfigError):
        VariantSpec("x", lags=3, shock="spread").validate()
    with pytest.raises(ConfigError):
        VariantSpec("x", lags=0).validate()
    VariantSpec("x", lags=3).validate()


def test_standard_variants_move_loan_series_below_shock(tmp_path):
    text = BASE.replace('ordering = ["a", "b"]', 'ordering = ["gdp_at", "loan_demand_at", "loan_supply_at_inv", "mro", "eonia", "stoxx"]')
    text = text.replace('variable = "b"', 'variable = "eonia"')
    cfg = load_config(write(tmp_path, text))
    labels = [v.label for v in standard_variants(cfg)]
    assert labels == ["lags3", "lags4", "reorder", "spread"]
    reorder = standard_variants(cfg)[2].ordering
    assert reorder == ("gdp_at", "mro", "eonia", "loan_demand_at", "loan_supply_at_inv", "stoxx")


def test_series_rules_transform_and_disaggregate(tmp_path):
    rows = ["date,series_id,value"]
    rows += [f"2008-{m:02d},a,{100 + m}" for m in range(1, 13)]
    rows += [f"2008-Q{q},bls,{10 * q}" for q in range(1, 5)]
    text = BASE.replace('ordering = ["a", "b"]', 'ordering = ["a", "bls_inv"]').replace('"b"', '"bls_inv"')
    text += '[[data.series]]\nid = "bls"\ntransform = "invert"\naggregation = "last"\n'
    text += '[[data.series]]\nid = "a"\nunit = "index-level"\ntransform = "growth"\n'
    cfg = load_config(write(tmp_path, text, "\n".join(rows) + "\n"))
    prep = prepare_series(cfg, load_sources(cfg))
    validate_ids(cfg, prep)
    assert prep.series["bls_inv"].values[2] == -10.0
    assert prep.notes["extrapolated"]["bls"] == ["2008-01", "2008-02"]
    np.testing.assert_allclose(prep.series["a"].values[0], 100 * (102 / 101 - 1))


def test_quarterly_series_without_rule_is_named(tmp_path):
    data = "date,series_id,value\n2008-01,a,1\n2008-02,a,2\n2008-Q1,b,3\n2008-Q2,b,4\n"
    cfg = load_config(write(tmp_path, BASE, data))
    with pytest.raises(FrequencyError, match="disaggregation rule"):
        validate_ids(cfg, prepare_series(cfg, load_sources(cfg)))


def test_unknown_transform_rejected(tmp_path):
    with pytest.raises(ConfigError):
        load_config(write(tmp_path, BASE + '[[data.series]]\nid = "a"\ntransform = "square"\n'))
