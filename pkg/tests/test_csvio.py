import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_array_equal

from msdecomp import csvio
from msdecomp.core import Decomposition, DimensionMismatch
from msdecomp.pipeline import PipelineConfig


def write(tmp_path, text, name="s.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_read_two_rows(tmp_path):
    assert_array_equal(csvio.read_series_csv(write(tmp_path, "index,value\n0,1.5\n1,2.5\n")),
                       [1.5, 2.5])


def test_read_keeps_start_index(tmp_path):
    idx, vals = csvio.read_series_with_index(write(tmp_path, "index,value\n10,1\n11,2\n12,3\n"))
    assert_array_equal(idx, [10, 11, 12])
    assert_array_equal(vals, [1, 2, 3])


def test_gap_reports_line(tmp_path):
    with pytest.raises(csvio.GapError) as info:
        csvio.read_series_csv(write(tmp_path, "index,value\n0,1\n2,2\n"))
    assert info.value.line == 3
    assert ":3:" in str(info.value)


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("idx,value\n0,1\n", 1),
    ("index,value\n0,abc\n", 2),
    ("index,value\n0,1\n1,2,3\n", 3),
    ("index,value\n0,nan\n", 2),
    ("index,value\n", 2),
    ("index,other\n0,1\n", 1),
])
def test_parse_errors(tmp_path, text, line):
    with pytest.raises(csvio.ParseError) as info:
        csvio.read_series_csv(write(tmp_path, text))
    assert info.value.line == line


def test_non_utf8(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_bytes(b"index,value\n0,\xff\xfe\n")
    with pytest.raises(csvio.ParseError):
        csvio.read_series_csv(p)


def test_missing_file(tmp_path):
    with pytest.raises(csvio.IoError):
        csvio.read_series_csv(tmp_path / "nope.csv")


def test_blank_lines_skipped(tmp_path):
    assert_array_equal(csvio.read_series_csv(write(tmp_path, "index,value\n0,1\n\n1,2\n")), [1, 2])


@given(st.lists(st.floats(-1e12, 1e12, allow_nan=False), min_size=1, max_size=30))
def test_series_roundtrip_12_digits(tmp_path_factory, values):
    p = tmp_path_factory.mktemp("rt") / "s.csv"
    csvio.write_series_csv(p, values, start_index=5)
    idx, back = csvio.read_series_with_index(p)
    assert idx[0] == 5
    assert_array_equal(back, [float(f"{v:.12g}") for v in values])


def test_components_roundtrip(tmp_path, rng):
    d = Decomposition(*(rng.normal(size=7) for _ in range(4)))
    p = tmp_path / "c.csv"
    csvio.write_components_csv(p, d, start_index=100)
    assert p.read_text().splitlines()[0] == "index,trend,seasonal_short,seasonal_long,remainder"
    idx, back = csvio.read_components_csv(p)
    assert_array_equal(idx, np.arange(100, 107))
    for name in ("trend", "seasonal_short", "seasonal_long", "remainder"):
        assert_array_equal(getattr(back, name), [float(f"{v:.12g}") for v in getattr(d, name)])


def test_mse_examples(rng):
    assert csvio.mse([1, 2, 3], [1, 2, 3]) == 0.0
    assert csvio.mse([1, 2], [0, 2]) == 0.5
    a, b = rng.normal(size=500), rng.normal(size=500)
    loop = sum((x - y) ** 2 for x, y in zip(a, b)) / 500
    assert csvio.mse(a, b) == pytest.approx(loop, rel=1e-12)
    with pytest.raises(DimensionMismatch):
        csvio.mse([1], [1, 2])


# -- configuration ------------------------------------------------------------------

def test_parse_config_text():
    text = "# comment\nlength = 10  # trailing\n\nseed=3\n"
    assert csvio.parse_config_text(text) == {"length": "10", "seed": "3"}


@pytest.mark.parametrize("text", ["novalue\n", "a = \n", "= 3\n", "a = 1\na = 2\n"])
def test_parse_config_errors(text):
    with pytest.raises(csvio.ConfigError):
        csvio.parse_config_text(text)


def test_synth_config_from():
    cfg, split = csvio.synth_config_from({"length": "600", "period_short": "12",
                                          "period_long": "60", "recent_window": "0",
                                          "include_long": "false", "high_len": "120"})
    assert cfg.length == 600 and cfg.include_long is False
    assert split == {"high_len": 120}
    with pytest.raises(csvio.ConfigError):
        csvio.synth_config_from({"bogus": "1"})
    with pytest.raises(csvio.ConfigError):
        csvio.synth_config_from({"length": "ten"})


def test_pipeline_config_roundtrip():
    cfg = PipelineConfig()
    items = csvio.pipeline_config_items(cfg)
    parsed = csvio.parse_config_text(csvio.format_config(items))
    assert csvio.pipeline_config_from(parsed) == cfg


def test_pipeline_config_overrides():
    cfg = csvio.pipeline_config_from({"lambda2": "0.5", "max_iterations": "40",
                                      "bilateral_sigma_value": "2.0",
                                      "lowres_seasonal_include_own_period": "yes",
                                      "lowres_lambda_b": "4", "lowres_refine_passes": "1"})
    assert cfg.lambdas[1] == 0.5
    assert cfg.admm.max_iterations == 40
    assert cfg.bilateral.sigma_value == 2.0
    assert cfg.lowres_seasonal_filter.include_own_period is True
    assert cfg.lowres_trend_lambdas == (1.0, 4.0)
    assert cfg.lowres_refine_passes == 1


def test_pipeline_config_unknown_key():
    with pytest.raises(csvio.ConfigError):
        csvio.pipeline_config_from({"lambda4": "1"})


def test_read_config_file(tmp_path):
    p = write(tmp_path, "seed = 4\n", "c.conf")
    assert csvio.read_config(p) == {"seed": "4"}
    with pytest.raises(csvio.IoError):
        csvio.read_config(tmp_path / "missing.conf")
