import json
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import dblquad

from cfcusps.cf_engines import CFKind, in_fundamental_interval
from cfcusps.cli import main
from cfcusps.harness import (
    BitStream,
    ExperimentConfig,
    box_weight,
    config_from_mapping,
    gauss_bin_masses,
    parse_config_text,
    parse_value,
    push_natural_extension,
    run_distribution,
    run_measure_check,
    sample_input,
    sample_natural_extension,
)
from cfcusps.numerics import AlgebraicReal
from cfcusps.orbit import expand

REG = CFKind.regular()


def test_bitstream_prefix_consistent():
    a, b = BitStream(1, 2, 3), BitStream(1, 2, 3)
    big = a(1000)
    assert b(10) == big >> 990
    assert b(1000) == big
    assert BitStream(1, 2, 4)(64) != a(64)


def test_explicit_inputs():
    assert sample_input("explicit", 0, REG, value="2/5") == Fraction(2, 5)
    lam = AlgebraicReal.lam(5)
    assert parse_value("lam-1", CFKind.rosen(5)) == lam - 1
    assert parse_value("2*lam^2 - 3/4*lam + 1/2", CFKind.rosen(7)) == (
        2 * AlgebraicReal.lam(7) ** 2 - AlgebraicReal.lam(7) * Fraction(3, 4) + Fraction(1, 2))
    with pytest.raises(ValueError):
        sample_input("explicit", 0, REG, value="7/5")
    with pytest.raises(ValueError):
        parse_value("lam", REG)
    with pytest.raises(ValueError):
        parse_value("2/x", REG)


@pytest.mark.parametrize("kind", [REG, CFKind.alpha_cf(Fraction(3, 10)), CFKind.rosen(5), CFKind.rosen(3)], ids=str)
def test_random_inputs_deterministic_and_in_range(kind):
    for mode in ("random-adaptive", "random-rational"):
        a = expand(kind, sample_input(mode, 42, kind, 3), 300).steps
        b = expand(kind, sample_input(mode, 42, kind, 3), 300).steps
        assert a == b
    for i in range(20):
        x = sample_input("random-rational", 7, kind, i, rational_bits=64)
        assert in_fundamental_interval(kind, x)


def test_rational_bits_bound():
    with pytest.raises(ValueError):
        sample_input("random-rational", 0, REG, rational_bits=8)
    x = sample_input("random-rational", 0, REG, rational_bits=40)
    assert x.denominator.bit_length() <= 40


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(kind=REG, spec="mod:2", N=0, S=1)
    with pytest.raises(ValueError):
        ExperimentConfig(kind=REG, spec="mod:2", N=5, S=1, input_mode="random-rational", rational_bits=4)
    with pytest.raises(ValueError):
        config_from_mapping({"kind": "regular"})


def test_config_file_parsing():
    text = "# demo\nkind = alpha:1/2\nspec = mod:3\nN = 100  # digits\nS=2\nseed=9\n"
    cfg = config_from_mapping(parse_config_text(text))
    assert cfg.kind == CFKind.alpha_cf(Fraction(1, 2)) and cfg.N == 100 and cfg.S == 2 and cfg.seed == 9
    with pytest.raises(ValueError):
        parse_config_text("colour = blue\n")


def test_report_consistency_and_determinism():
    cfg = ExperimentConfig(kind=REG, spec="mod:3", N=2000, S=4, seed=5)
    r1 = run_distribution(cfg)
    r2 = run_distribution(cfg)
    assert r1.to_json() == r2.to_json()
    assert r1.to_csv() == r2.to_csv()
    assert sum(c["observed"] for c in r1.cusps) == pytest.approx(1)
    assert sum(c["expected"] for c in r1.cusps) == pytest.approx(1)
    for j, c in enumerate(r1.cusps):
        assert c["count"] == sum(s["counts"][j] for s in r1.samples)
    assert r1.total_steps == sum(s["steps"] for s in r1.samples) == 8000
    assert sum(c["count_k0"] for c in r1.cusps) == 8004
    d = json.loads(r1.to_json())
    for key in ("config", "group", "index", "cusps", "samples", "truncated_samples", "seed", "schema_version"):
        assert key in d
    assert {"id", "width", "expected", "observed", "count"} <= set(d["cusps"][0])


def test_stream_cache_gives_same_report():
    cfg = ExperimentConfig(kind=REG, spec="mod:2", N=1000, S=3, seed=1)
    cache = {}
    a = run_distribution(cfg, stream_cache=cache)
    assert len(cache) == 3
    b = run_distribution(cfg, stream_cache=cache)
    assert a.to_json() == b.to_json()


def test_truncation_accounting():
    cfg = ExperimentConfig(kind=REG, spec="mod:2", N=10 ** 4, S=5, seed=3, input_mode="random-rational",
                           rational_bits=32)
    r = run_distribution(cfg)
    assert r.truncated_samples == 5
    assert r.total_steps == sum(s["steps"] for s in r.samples) < 5 * 10 ** 4
    assert sum(c["count"] for c in r.cusps) == r.total_steps


def test_index_one_spec(tmp_path):
    p = tmp_path / "triv.json"
    p.write_text(json.dumps({"S": [0], "I": [0]}))
    r = run_distribution(ExperimentConfig(kind=REG, spec=f"perm:{p}", N=500, S=2))
    assert r.index == 1 and r.cusps[0]["observed"] == 1.0
    assert r.cusps[0]["hit_frequency"] == 1.0 and r.cusps[0]["psi"] == 0.5


def test_explicit_distribution():
    cfg = ExperimentConfig(kind=REG, spec="mod:2", N=10, S=1, input_mode="explicit", value="2/5")
    r = run_distribution(cfg)
    assert [c["count"] for c in r.cusps] == [1, 1, 0]


def test_gauss_masses():
    m = gauss_bin_masses(20)
    assert m.sum() == pytest.approx(1.0)
    assert m[0] == pytest.approx(np.log2(1.05))


def test_box_weight_oracles():
    w = box_weight(0.5, 0.5)
    assert w == pytest.approx(np.log(1.25) / np.log(2), abs=1e-12)
    w2 = box_weight(0.3, 0.8)
    raw, _ = dblquad(lambda y, x: (1 + x * y) ** -2, 0, 0.3, 0, 0.8)
    assert w2 == pytest.approx(raw / np.log(2), rel=1e-10)


def test_natural_extension_sampler():
    rng = np.random.default_rng(0)
    x, y = sample_natural_extension(400000, rng)
    w = box_weight(0.5, 0.5)
    se = np.sqrt(w * (1 - w) / len(x))
    assert abs(np.mean((x <= 0.5) & (y <= 0.5)) - w) < 4 * se
    x2, y2 = push_natural_extension(x, y)
    assert np.all((x2 >= 0) & (x2 < 1) & (y2 > 0) & (y2 <= 1))


def test_measure_check_small():
    rep = run_measure_check(REG, 20000, 1, bins=10, cloud=20000)
    assert rep["points"] == 20000
    assert rep["max_bin_deviation"] < 0.03
    assert rep["box"]["max_abs_z"] < 6
    assert run_measure_check(REG, 0, 1)["histogram"] == []
    other = run_measure_check(CFKind.rosen(5), 2000, 1, bins=10)
    assert other["box"] is None and "max_half_difference" in other


# ---------------------------------------------------------------------------
# command line


def _run(argv):
    import io
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def test_cli_cusps():
    code, out = _run(["cusps", "--group", "modular", "--spec", "mod:2"])
    assert code == 0 and "index 6" in out and "cusps 3  widths 2 2 2" in out
    code, out = _run(["cusps", "--group", "hecke:5", "--spec", "mod:2"])
    assert code == 0 and "index 10" in out and "widths 2 2 2 2 2" in out


def test_cli_expand(tmp_path):
    dump = tmp_path / "traj.tsv"
    code, out = _run(["expand", "--kind", "regular", "--x", "2/5", "--n", "10", "--dump", str(dump)])
    assert code == 0
    assert "digits 2 2" in out and "1/2" in out and "2/5" in out and "terminated" in out
    lines = dump.read_text().splitlines()
    assert lines[0] == "k\teps\td\tsigma\tlabel\tcusp_inf\tcusp_zero\tt" and len(lines) == 3


def test_cli_distribute(tmp_path):
    out_path = tmp_path / "r.json"
    code, _ = _run(["distribute", "--spec", "mod:2", "--N", "500", "--S", "2", "--output", str(out_path)])
    assert code == 0 and json.loads(out_path.read_text())["index"] == 6
    cfg = tmp_path / "c.txt"
    cfg.write_text("kind = regular\nspec = mod:3\nN = 300\nS = 1\nformat = csv\n")
    code, out = _run(["distribute", "--config", str(cfg)])
    assert code == 0 and out.startswith("id,width,expected")
    code, _ = _run(["distribute", "--spec", "mod:2", "--N", "50", "--S", "1", "--tolerance", "0.0001"])
    assert code == 1


def test_cli_usage_errors():
    assert _run(["distribute", "--N", "10"])[0] == 2
    assert _run([])[0] == 2
    assert _run(["frobnicate"])[0] == 2
    assert _run(["expand", "--kind", "zap", "--x", "1/2"])[0] == 2
    assert _run(["cusps", "--spec", "mod:1"])[0] == 2


def test_cli_crosscheck():
    code, out = _run(["crosscheck", "--quick"])
    assert code == 0 and "FAIL" not in out
