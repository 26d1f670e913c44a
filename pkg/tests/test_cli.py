import itertools

import numpy as np
import pytest

from riswipt.channel import channel_hash, synth_channels
from riswipt.cli import (CSV_SCHEMA_LINE, SweepSpec, apply_sweep_value, main,
                         read_rows, run_sweep, summarize)
from riswipt.errors import DomainError, FormatError
from riswipt.scenario import default_scenario, dbm_to_watt, save_config, trial_seed

FAST = dict(n_antennas=2, n_elements=4, n_ir=2, n_er=1, weights=(1.0, 1.0),
            eta=(0.8,), p_thresholds=(1e-8,), epsilon=1e-2)


def fast_scenario():
    return default_scenario().replace(**FAST)


def test_spec_validation():
    with pytest.raises(DomainError):
        SweepSpec(kind="volume", grid=(1.0,), trials=1, schemes=("active",),
                  master_seed=0, out_path="x.csv")
    with pytest.raises(DomainError):
        SweepSpec(kind="power", grid=(), trials=1, schemes=("active",),
                  master_seed=0, out_path="x.csv")
    with pytest.raises(DomainError):
        SweepSpec(kind="power", grid=(30.0,), trials=0, schemes=("active",),
                  master_seed=0, out_path="x.csv")


def test_apply_sweep_value():
    base = default_scenario()
    assert apply_sweep_value(base, "power", 30.0).p_total == pytest.approx(1.0)
    assert apply_sweep_value(base, "ris_location", 25.0).ris_pos == (25.0, 10.0)
    assert apply_sweep_value(base, "elements", 40).n_elements == 40


def test_single_point_single_row(tmp_path):
    spec = SweepSpec(kind="power", grid=(30.0,), trials=1, schemes=("active",),
                     master_seed=3, out_path=str(tmp_path / "one.csv"))
    path = run_sweep(spec, base=fast_scenario())
    rows = read_rows(path)
    assert len(rows) == 1
    assert rows[0]["scheme"] == "active" and rows[0]["status"] == "converged"
    assert float(rows[0]["wsr_bits"]) > 0


def test_rows_deterministic_with_injected_clock(tmp_path):
    spec_a = SweepSpec(kind="power", grid=(30.0, 34.0), trials=2,
                       schemes=("active", "none"), master_seed=1,
                       out_path=str(tmp_path / "a.csv"))
    spec_b = SweepSpec(kind="power", grid=(30.0, 34.0), trials=2,
                       schemes=("active", "none"), master_seed=1,
                       out_path=str(tmp_path / "b.csv"))
    clock = itertools.count(start=1).__next__
    run_sweep(spec_a, base=fast_scenario(), clock=lambda: float(clock()))
    clock = itertools.count(start=1).__next__
    run_sweep(spec_b, base=fast_scenario(), clock=lambda: float(clock()))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_schema_line_and_column_order(tmp_path):
    spec = SweepSpec(kind="power", grid=(30.0,), trials=1, schemes=("active",),
                     master_seed=0, out_path=str(tmp_path / "s.csv"))
    run_sweep(spec, base=fast_scenario())
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == CSV_SCHEMA_LINE
    assert lines[1] == ("scheme,trial,seed,sweep_kind,sweep_value,iterations,"
                        "status,wsr_bits,rate_1,rate_2,harvested_1,"
                        "bs_power_used,ris_power_used,runtime_ms")


def test_channel_sharing_across_schemes():
    base = fast_scenario()
    seed = trial_seed(9, 0)
    hashes = {channel_hash(synth_channels(
        apply_sweep_value(base, "power", 34.0).replace(scheme=sc), seed=seed))
        for sc in ("active", "passive", "none")}
    assert len(hashes) == 1


def test_summarize_rules(tmp_path):
    path = tmp_path / "fake.csv"
    path.write_text(
        CSV_SCHEMA_LINE + "\n"
        "scheme,trial,seed,sweep_kind,sweep_value,iterations,status,wsr_bits,"
        "rate_1,harvested_1,bs_power_used,ris_power_used,runtime_ms\n"
        "active,0,1,power,30.0,5,converged,1.0,1.0,0.0,0.1,0.1,10\n"
        "active,1,2,power,30.0,5,converged,3.0,3.0,0.0,0.1,0.1,10\n"
        "active,2,3,power,30.0,0,infeasible_start,0.0,0.0,0.0,0.0,0.0,1\n"
        "none,0,1,power,30.0,0,infeasible_start,0.0,0.0,0.0,0.0,0.0,1\n")
    table = summarize(path)
    active = next(r for r in table if r["scheme"] == "active")
    assert active["mean_wsr"] == pytest.approx(2.0)
    assert active["median_wsr"] == pytest.approx(2.0)
    assert active["trials"] == 3 and active["failures"] == 1
    none_row = next(r for r in table if r["scheme"] == "none")
    assert np.isnan(none_row["mean_wsr"]) and none_row["failures"] == 1


def test_summarize_accepts_own_output(tmp_path):
    spec = SweepSpec(kind="elements", grid=(4.0, 6.0), trials=2,
                     schemes=("active",), master_seed=5,
                     out_path=str(tmp_path / "e.csv"))
    run_sweep(spec, base=fast_scenario())
    table = summarize(tmp_path / "e.csv")
    assert len(table) == 2
    assert all(r["trials"] == 2 for r in table)


def test_summarize_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("not a csv at all\n")
    with pytest.raises(FormatError):
        summarize(bad)


def test_parallel_matches_serial(tmp_path):
    kwargs = dict(kind="power", grid=(30.0, 34.0), trials=2,
                  schemes=("active",), master_seed=2)
    clock = lambda: 0.0
    serial = SweepSpec(out_path=str(tmp_path / "serial.csv"), parallel=1, **kwargs)
    par = SweepSpec(out_path=str(tmp_path / "par.csv"), parallel=2, **kwargs)
    run_sweep(serial, base=fast_scenario(), clock=clock)
    run_sweep(par, base=fast_scenario(), clock=clock)
    assert (tmp_path / "serial.csv").read_bytes() == (tmp_path / "par.csv").read_bytes()


def test_dump_channels(tmp_path):
    from riswipt.channel import load_channels
    spec = SweepSpec(kind="power", grid=(30.0,), trials=2, schemes=("active",),
                     master_seed=4, out_path=str(tmp_path / "d.csv"),
                     dump_channels=str(tmp_path / "chans"))
    run_sweep(spec, base=fast_scenario())
    dumped = sorted((tmp_path / "chans").iterdir())
    assert len(dumped) == 2
    cs = load_channels(dumped[0])
    assert cs.bs_ris.shape == (4, 2)


def test_cli_main_end_to_end(tmp_path, capsys):
    cfg = tmp_path / "scen.cfg"
    save_config(fast_scenario(), cfg)
    out = tmp_path / "cli.csv"
    rc = main(["power", "--config", str(cfg), "--grid", "30,34", "--trials", "1",
               "--schemes", "active", "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert out.exists()
    rc = main(["summarize", str(out)])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "active" in printed and "mean=" in printed


def test_cli_main_bad_config_nonzero(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("mystery = 42\n")
    rc = main(["power", "--config", str(cfg), "--trials", "1",
               "--out", str(tmp_path / "x.csv")])
    assert rc == 2


def test_single_with_imported_channels(tmp_path):
    from riswipt.channel import save_channels
    base = fast_scenario()
    cfg = tmp_path / "scen.cfg"
    save_config(base, cfg)
    chan = tmp_path / "trial.chan"
    save_channels(synth_channels(base, seed=42), chan)
    out = tmp_path / "imported.csv"
    rc = main(["single", "--config", str(cfg), "--channels", str(chan),
               "--schemes", "active,none", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert [r["scheme"] for r in rows] == ["active", "none"]
    # wrong dimensions rejected
    other = fast_scenario().replace(n_elements=7)
    chan2 = tmp_path / "other.chan"
    save_channels(synth_channels(other, seed=1), chan2)
    rc = main(["single", "--config", str(cfg), "--channels", str(chan2),
               "--out", str(tmp_path / "nope.csv")])
    assert rc == 2


def test_exit_zero_even_with_failed_rows(tmp_path):
    # thresholds no scheme can reach: rows record infeasible_start, exit 0
    base = fast_scenario().replace(p_thresholds=(10.0,))
    spec = SweepSpec(kind="power", grid=(30.0,), trials=1, schemes=("active",),
                     master_seed=0, out_path=str(tmp_path / "f.csv"))
    run_sweep(spec, base=base)
    rows = read_rows(tmp_path / "f.csv")
    assert rows[0]["status"] == "infeasible_start"
