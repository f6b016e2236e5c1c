import csv
import io
import json

import pytest

from satqkd.cli import CSV_HEADER, main

HEADER = "distance_km,loss_db,protocol,mode,mu,nu1,nu2,rate_bits_per_pulse,eve_info,qber"


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_header_contract():
    assert ",".join(CSV_HEADER) == HEADER


def test_sweep_to_file_is_byte_stable(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["sweep", "--scenario", "intersatellite", "--protocol", "all", "--lmax", "300",
            "--step", "100", "--mu-step", "0.01"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.splitlines()[0] == HEADER
    data = rows(text)
    keys = [(r["protocol"], float(r["distance_km"])) for r in data]
    order = ["bb84", "sarg04", "bb84-decoy", "sarg04-decoy"]
    assert keys == sorted(keys, key=lambda k: (order.index(k[0]), k[1]))
    decoy = [r for r in data if r["protocol"] == "sarg04-decoy"]
    assert all(r["nu1"] and r["nu2"] for r in decoy)


def test_empty_range_gives_header_only(capsys):
    code, out = run(capsys, "sweep", "--scenario", "downlink", "--lmin", "500", "--lmax", "100")
    assert code == 0 and out == HEADER + "\n"


def test_unknown_names_are_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--scenario", "moonlink"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--scenario", "downlink", "--protocol", "e91"])
    assert exc.value.code != 0


def test_pulse_rate_column(capsys):
    _, out = run(capsys, "sweep", "--scenario", "downlink", "--protocol", "bb84",
                 "--lmax", "300", "--step", "50", "--pulse-rate-hz", "1e9", "--mu-step", "0.01")
    data = rows(out)
    assert list(data[0]) == list(CSV_HEADER) + ["rate_bits_per_second"]
    for r in data:
        assert float(r["rate_bits_per_second"]) == pytest.approx(float(r["rate_bits_per_pulse"]) * 1e9)


def test_fixed_mu_mode(capsys):
    _, out = run(capsys, "sweep", "--scenario", "intersatellite", "--protocol", "bb84",
                 "--mode", "fixed-mu", "--lmax", "420", "--step", "40", "--mu-step", "0.01")
    data = rows(out)
    assert {r["mode"] for r in data} == {"fixed-mu"}
    assert len({r["mu"] for r in data if float(r["rate_bits_per_pulse"]) > 0}) == 1


def test_precedence_flags_over_config_over_preset(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "scenario": {"turb_loss_db": 8.0},
        "sweep": {"lmin": 300, "lmax": 300, "protocol": "bb84", "mu_step": 0.01},
    }))
    base = ["sweep", "--scenario", "uplink5db"]
    loss = lambda out: float(rows(out)[0]["loss_db"])  # noqa: E731
    _, preset_out = run(capsys, *base, "--lmin", "300", "--lmax", "300", "--protocol", "bb84")
    _, cfg_out = run(capsys, "--config", str(cfg), *base)
    _, flag_out = run(capsys, *base, "--config", str(cfg), "--turb-loss-db", "6")
    assert loss(cfg_out) == pytest.approx(loss(preset_out) + 3.0)
    assert loss(flag_out) == pytest.approx(loss(preset_out) + 1.0)
    assert len(rows(cfg_out)) == 1 and rows(cfg_out)[0]["protocol"] == "bb84"


def test_config_defines_new_scenario(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": {"name": "mylink", "scatter_loss_db": 3.0},
                               "sweep": {"lmin": 400, "lmax": 400, "protocol": "bb84"}}))
    code, out = run(capsys, "sweep", "--config", str(cfg), "--mu-step", "0.01")
    assert code == 0 and len(rows(out)) == 1


def test_bad_config_is_usage_error(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": {"name": "downlink", "bogus": 1}}))
    with pytest.raises(SystemExit):
        main(["sweep", "--scenario", "downlink", "--config", str(cfg)])


def test_crossing(capsys):
    code, out = run(capsys, "crossing")
    assert code == 0
    lines = out.splitlines()
    assert "13.29 dB" in lines[0] and lines[0].startswith("bb84")
    assert lines[1].startswith("sarg04")


def test_crossing_grows_as_mu_falls(capsys):
    _, hi = run(capsys, "crossing", "--mu", "0.1")
    _, lo = run(capsys, "crossing", "--mu", "0.001")
    db = lambda s: float(s.splitlines()[0].split(" at ")[1].split()[0])  # noqa: E731
    assert db(lo) > db(hi) + 15


def test_critical_distance_command(capsys):
    code, out = run(capsys, "critical-distance", "--scenario", "uplink11db", "--protocol", "bb84")
    assert code == 0 and out.strip() == "uplink11db,bb84,none"


def test_tables_single_scenario(capsys):
    code, out = run(capsys, "tables", "--scenario", "intersatellite", "--mu-step", "0.01")
    assert code == 0
    assert "Critical distance" in out and "Maximum rate" in out
    assert out.count("intersatellite") == 8
