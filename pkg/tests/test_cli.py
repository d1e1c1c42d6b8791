"""Command surface: outputs, determinism, exit codes, config handling."""

import json
import math

import pytest

from carpetq.cli import ConfigError, load_config, main
from carpetq.report import read_csv


def _config(tmp_path, **overrides):
    cfg = {
        "n": 4, "m": 3,
        "maps": [
            {"i": 0, "j": 0, "p": "1/3"},
            {"i": 0, "j": 2, "p": "1/3"},
            {"i": 2, "j": 2, "p": "1/3"},
        ],
        "k_min": 2, "k_max": 3,
        "cloud_size": 20_000, "depth": 40, "seed": 24301,
        "outputs": ["csv", "json"],
    }
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_load_config_defaults(tmp_path):
    path = tmp_path / "min.json"
    path.write_text(json.dumps({
        "n": 4, "m": 3,
        "maps": [{"i": 0, "j": 0, "p": "1/2"}, {"i": 2, "j": 2, "p": "1/2"}],
    }))
    cfg = load_config(path)
    assert cfg.k_min == 2 and cfg.k_max == 4
    assert cfg.cloud_size == 1_000_000 and cfg.depth == 40
    assert cfg.seed == 0x5EED
    assert cfg.outputs == ("csv",)


@pytest.mark.parametrize("broken,needle", [
    ({"n": None}, "n"),
    ({"maps": []}, "maps"),
    ({"maps": [{"i": 0, "j": 0}]}, "map"),
    ({"k_min": 0}, "k_min"),
    ({"k_max": 1}, "k_max"),
    ({"outputs": ["pdf"]}, "outputs"),
    ({"depth": 5}, "depth"),
    ({"bogus": 1}, "bogus"),
])
def test_load_config_rejects(tmp_path, broken, needle):
    path = _config(tmp_path, **broken)
    with pytest.raises(ConfigError, match=needle):
        load_config(path)


def test_load_config_duplicate_cell(tmp_path):
    path = _config(tmp_path, maps=[
        {"i": 0, "j": 0, "p": "1/2"}, {"i": 0, "j": 0, "p": "1/2"}])
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(path)


def test_validate_command(tmp_path, capsys):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["validate", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "s0 = 0.912713497619" in text
    data = json.loads((out / "validate.json").read_text())
    assert data["s0"] == pytest.approx(0.9127134976190284, abs=1e-15)


def test_validate_command_fails_bad_carpet(tmp_path, capsys):
    cfg = _config(tmp_path, maps=[
        {"i": 0, "j": 0, "p": "1/2"}, {"i": 1, "j": 0, "p": "1/2"}])
    assert main(["validate", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 1
    err = capsys.readouterr().err
    assert "separation" in err


def test_invalid_carpet_other_commands_exit_2(tmp_path, capsys):
    cfg = _config(tmp_path, maps=[
        {"i": 0, "j": 0, "p": "1/2"}, {"i": 1, "j": 0, "p": "1/2"}])
    assert main(["partition", "--config", cfg, "--out",
                 str(tmp_path / "o")]) == 2
    assert "invalid carpet" in capsys.readouterr().err


def test_partition_command(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["partition", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "partition.csv")
    assert header[:4] == ["k", "phi_k", "xi_min", "xi_max"]
    assert [r[0] for r in rows] == ["2", "3"]
    assert [r[1] for r in rows] == ["189", "1701"]
    assert all(r[-1] == "true" for r in rows)


def test_antichain_command(tmp_path, capsys):
    cfg = _config(tmp_path, k_min=4, k_max=4)
    out = tmp_path / "out"
    assert main(["antichain", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "maximal: true, mass: 1 (exact), delta_k <= C1: true" in text
    header, rows = read_csv(out / "antichain.csv")
    assert rows[0][header.index("size")] == "10935"
    assert rows[0][header.index("pass")] == "true"


def test_sequences_command_exact_columns(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["sequences", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "sequences.csv")
    assert header == ["k", "phi_k", "xi_min", "xi_max", "d_k", "t_k", "s_k",
                      "s0", "bound_dk", "bound_sk", "pass"]
    assert len(rows) == 2
    for row in rows:
        assert float(row[7]) == pytest.approx(0.9127134976190284, abs=1e-15)
        assert row[10] == "true"


def test_sequences_constant_on_square_grid(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "n": 3, "m": 3,
        "maps": [{"i": 0, "j": 0, "p": "1/2"}, {"i": 2, "j": 2, "p": "1/2"}],
        "k_min": 2, "k_max": 5,
    }))
    out = tmp_path / "out"
    assert main(["sequences", "--config", str(path), "--out", str(out)]) == 0
    header, rows = read_csv(out / "sequences.csv")
    s0 = math.log(2) / math.log(3)
    for row in rows:
        assert float(row[header.index("s_k")]) == pytest.approx(s0,
                                                                abs=1e-12)


def test_quantize_command_exact_columns(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["quantize", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "quantize.csv")
    assert header == ["k", "phi_k", "lower_anchor", "upper_anchor",
                      "e_hat_est", "stderr", "R_k"]
    for row in rows:
        lower, upper = float(row[2]), float(row[3])
        est, stderr = float(row[4]), float(row[5])
        assert lower < upper
        assert est <= upper + 3 * stderr
    ball = json.loads((out / "quantize.json").read_text())["ball"]
    assert ball["skipped"] is False and ball["failures"] == 0


def test_quantize_ball_skip_reported(tmp_path, capsys):
    path = tmp_path / "b.json"
    path.write_text(json.dumps({
        "n": 4, "m": 3,
        "maps": [{"i": 0, "j": 0, "p": "1/2"}, {"i": 2, "j": 0, "p": "1/2"}],
        "k_min": 2, "k_max": 2, "cloud_size": 5000,
        "outputs": ["json"],
    }))
    out = tmp_path / "out"
    assert main(["quantize", "--config", str(path), "--out", str(out)]) == 0
    assert "skipped" in capsys.readouterr().out
    ball = json.loads((out / "quantize.json").read_text())["ball"]
    assert ball["skipped"] is True and "column" in ball["reason"]


def test_report_command(tmp_path):
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["sequences", "--config", cfg, "--out", str(out)]) == 0
    assert main(["quantize", "--config", cfg, "--out", str(out)]) == 0
    assert main(["report", "--config", cfg, "--out", str(out)]) == 0
    seq_svg = (out / "sequences.svg").read_text()
    assert seq_svg.startswith("<svg")
    assert "s_k" in seq_svg and "s0" in seq_svg
    assert (out / "quantize.svg").exists()


def test_report_nothing_to_report(tmp_path, capsys):
    cfg = _config(tmp_path)
    out = tmp_path / "empty"
    assert main(["report", "--config", cfg, "--out", str(out)]) == 2
    assert "nothing to report" in capsys.readouterr().err


def test_runs_byte_identical(tmp_path):
    cfg = _config(tmp_path)
    blobs = []
    for name, threads in (("r1", "1"), ("r2", "4"), ("r3", "16")):
        out = tmp_path / name
        for cmd in ("partition", "sequences", "quantize"):
            assert main([cmd, "--config", cfg, "--out", str(out),
                         "--threads", threads]) == 0
        blobs.append(tuple(
            (out / f).read_bytes()
            for f in ("partition.csv", "sequences.csv", "quantize.csv")))
    assert blobs[0] == blobs[1] == blobs[2]


def test_csv_values_round_trip_library(tmp_path, carpet_a):
    from carpetq.sequences import compute_d_k
    cfg = _config(tmp_path)
    out = tmp_path / "out"
    assert main(["sequences", "--config", cfg, "--out", str(out)]) == 0
    header, rows = read_csv(out / "sequences.csv")
    for row in rows:
        k = int(row[0])
        assert float(row[header.index("d_k")]) == compute_d_k(carpet_a, k)


def test_cap_words_streams_large_levels(tmp_path, capsys):
    cfg = _config(tmp_path, k_min=3, k_max=3)
    out = tmp_path / "out"
    assert main(["partition", "--config", cfg, "--out", str(out),
                 "--cap-words", "200"]) == 0
    text = capsys.readouterr().out
    assert "exceed --cap-words" in text
    header, rows = read_csv(out / "partition.csv")
    assert rows[0][header.index("disjoint")] == "skipped"


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["partition", "--config", str(path)]) == 2
    assert "error" in capsys.readouterr().err


def test_missing_config_exits_2(tmp_path):
    assert main(["partition", "--config", str(tmp_path / "absent.json"),
                 "--out", str(tmp_path / "o")]) == 2


def test_bad_flag_values_exit_2(tmp_path):
    cfg = _config(tmp_path)
    assert main(["partition", "--config", cfg, "--threads", "0",
                 "--out", str(tmp_path / "o")]) == 2


def test_usage_error_exit_code():
    assert main(["frobnicate", "--config", "x"]) == 2
    assert main([]) == 2
