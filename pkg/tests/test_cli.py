import csv

import pytest

from irsmimo.cli import main

TINY = """
num_tx_antennas = 16
num_rx_antennas = 16
num_irs_elements = 16
num_irs = 2
num_streams = 2
irs_positions = 5,4; 5,6
power_grid_dbm = 10,20
mp_snr_grid_db = 0,10
mp_antenna_counts = 16
mp_beam_ratios = 2
trials = 3
seed = 7
"""


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "scene.cfg"
    path.write_text(TINY)
    return str(path)


def read_rows(path):
    with open(path) as handle:
        return list(csv.DictReader(handle))


def test_quant_table(tmp_path):
    out = tmp_path / "q.csv"
    code = main(["quant-table", "--antennas", "8,16", "--ratios", "2",
                 "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert float(rows[0]["worst_error"]) > float(rows[0]["average_error"])


def test_codebook_export(tmp_path):
    out = tmp_path / "patterns.csv"
    code = main(["codebook", "--antennas", "8", "--beams", "16",
                 "--probes", "41", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    stages = {int(r["stage"]) for r in rows}
    assert stages == {1, 2, 3, 4}
    assert all(0.0 <= float(r["gain"]) <= 1.0 + 1e-9 for r in rows)


def test_mp_curve_deterministic(tmp_path, tiny_config):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert main(["mp-curve", "--config", tiny_config, "--trials", "200",
                 "--out", str(out_a)]) == 0
    assert main(["mp-curve", "--config", tiny_config, "--trials", "200",
                 "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()
    rows = read_rows(out_a)
    assert rows[0]["trials"] == "200"


def test_rate_curve(tmp_path, tiny_config):
    out = tmp_path / "rate.csv"
    assert main(["rate-curve", "--config", tiny_config, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert [r["power_dbm"] for r in rows] == ["10.0", "20.0"]
    for row in rows:
        assert float(row["rate_no_irs"]) < float(row["rate_proposed_est"])


def test_estimate_trace(tmp_path, tiny_config):
    out = tmp_path / "trace.csv"
    assert main(["estimate", "--config", tiny_config, "--out", str(out)]) == 0
    rows = read_rows(out)
    assert len(rows) == 2
    assert {r["irs_index"] for r in rows} == {"0", "1"}
    assert float(rows[0]["est_composite_loss"]) > 0


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("mystery = 12\n")
    out = tmp_path / "x.csv"
    assert main(["mp-curve", "--config", str(bad), "--out", str(out)]) == 2


def test_missing_out_flag_rejected(capsys):
    with pytest.raises(SystemExit):
        main(["mp-curve"])
