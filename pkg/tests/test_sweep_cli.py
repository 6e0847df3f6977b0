"""Sweeps, result files, bound verification, figures, and the CLI."""

import csv
import json
import math

import pytest
import yaml

import gossipsim as g
from gossipsim.cli import main
from gossipsim.config import ConfigError
from gossipsim.figures import reproduce
from gossipsim.sweep import (
    AGGREGATE_COLUMNS,
    RUN_COLUMNS,
    SweepSpec,
    aggregate,
    derive_seed,
    expand,
    load_sweep,
    run_sweep,
    write_rows_csv,
)
from gossipsim.verify import VerificationRefusal, load_results, verify_rows


def small_spec(**overrides):
    data = {
        "base": {"k": 2, "protocol": g.RANDOM_PULL},
        "axes": {"n": [8, 12]},
        "seeds": 3,
        "master_seed": 3,
    }
    data.update(overrides)
    return SweepSpec.from_mapping(data)


# ------------------------------------------------------------------- sweeps


def test_spec_from_mapping_rejects_bad_shapes():
    with pytest.raises(ConfigError, match="unknown keys"):
        SweepSpec.from_mapping({"base": {}, "extra": 1})
    with pytest.raises(ConfigError, match="'base'"):
        SweepSpec.from_mapping({"axes": {"n": [8]}})
    with pytest.raises(ConfigError, match="unknown axis"):
        small_spec(axes={"population": [8]})
    with pytest.raises(ConfigError, match="non-empty list"):
        small_spec(axes={"n": []})
    with pytest.raises(ConfigError, match="'seeds'"):
        small_spec(seeds=0)
    with pytest.raises(ConfigError, match="'master_seed'"):
        small_spec(master_seed=-1)


def test_expand_cell_and_seed_counts():
    plans = expand(small_spec())
    assert len(plans) == 6  # 2 cells x 3 seeds
    assert len({p.run_id for p in plans}) == 6
    assert len({p.config.seed for p in plans}) == 6
    assert {p.config.n for p in plans} == {8, 12}
    assert all(p.config.k == 2 for p in plans)


def test_expand_fails_fast_on_invalid_cells():
    # eta axis without eta seeding: rejected before any run executes
    bad = small_spec(axes={"eta": [0.5]})
    with pytest.raises(ConfigError, match="eta"):
        expand(bad)
    # fixed lists not selected in base, so an m axis cannot apply
    bad = small_spec(base={"n": 8, "k": 2, "protocol": g.RANDOM_PULL}, axes={"m": [4]})
    with pytest.raises(ConfigError, match="contact_list_size"):
        expand(bad)


def test_derive_seed_is_stable_and_sensitive():
    cell = (("n", 8),)
    s = derive_seed(3, cell, 0)
    assert s == derive_seed(3, cell, 0)
    assert 0 <= s < 2**64
    assert s != derive_seed(4, cell, 0)
    assert s != derive_seed(3, (("n", 12),), 0)
    assert s != derive_seed(3, cell, 1)


def test_run_sweep_rows_and_aggregate():
    rows, agg = run_sweep(small_spec())
    assert len(rows) == 6
    assert all(set(RUN_COLUMNS) == set(r) for r in rows)
    assert all(r["completed"] for r in rows)
    assert len(agg) == 2
    by_n = {a["n"]: a for a in agg}
    for n in (8, 12):
        members = [r["completion_slot"] for r in rows if r["n"] == n]
        assert by_n[n]["runs"] == 3
        assert by_n[n]["completed_runs"] == 3
        assert by_n[n]["mean_completion"] == pytest.approx(
            sum(members) / 3, abs=5e-4
        )
        assert by_n[n]["min_completion"] == min(members)
        assert by_n[n]["max_completion"] == max(members)


def test_parallel_sweep_matches_serial():
    spec = small_spec()
    rows1, agg1 = run_sweep(spec, jobs=1)
    rows2, agg2 = run_sweep(spec, jobs=2)
    strip = lambda rs: [{k: v for k, v in r.items() if k != "wall_time_s"} for r in rs]
    assert strip(rows1) == strip(rows2)
    assert agg1 == agg2


def test_priority_push_rows_record_reach():
    spec = SweepSpec.from_mapping(
        {
            "base": {"n": 64, "k": 8, "protocol": g.PRIORITY_PUSH, "max_slots": 60},
            "axes": {"l": [1, 2]},
            "seeds": 2,
            "master_seed": 11,
        }
    )
    rows, _ = run_sweep(spec)
    assert all(r["reach_fraction"] is not None for r in rows)
    assert all(0.0 <= r["reach_fraction"] <= 1.0 for r in rows)
    assert all(r["failed_piece_count"] is not None for r in rows)
    # pull rows carry neither statistic
    pull_rows, _ = run_sweep(small_spec())
    assert all(r["reach_fraction"] is None for r in pull_rows)
    assert all(r["failed_piece_count"] is None for r in pull_rows)


def test_csv_round_trip_and_coercion(tmp_path):
    rows, agg = run_sweep(small_spec())
    runs_path = write_rows_csv(rows, tmp_path / "runs.csv", RUN_COLUMNS)
    agg_path = write_rows_csv(agg, tmp_path / "aggregate.csv", AGGREGATE_COLUMNS)
    with open(runs_path, newline="") as fh:
        raw = list(csv.DictReader(fh))
    assert list(raw[0]) == list(RUN_COLUMNS)
    assert raw[0]["schema_version"] == "1"
    assert raw[0]["tool_version"] == g.__version__
    assert raw[0]["eta"] == ""  # None round-trips as empty
    back = load_results(runs_path)
    assert len(back) == 6
    assert isinstance(back[0]["n"], int)
    assert isinstance(back[0]["completed"], bool) and back[0]["completed"]
    assert back[0]["eta"] is None
    assert isinstance(back[0]["delay_limit"], float)
    with open(agg_path, newline="") as fh:
        assert list(next(iter(csv.DictReader(fh)))) == list(AGGREGATE_COLUMNS)


# ------------------------------------------------------------- verification


def interleave_rows():
    spec = SweepSpec.from_mapping(
        {
            "base": {"k": 8, "protocol": g.INTERLEAVE},
            "axes": {"n": [16, 32]},
            "seeds": 3,
            "master_seed": 7,
        }
    )
    rows, _ = run_sweep(spec)
    return rows


def test_verify_upper_bound_passes_on_real_runs():
    rows = interleave_rows()
    report = verify_rows(rows, "thm6")
    assert report.verdict is True
    assert report.kind == "upper"
    assert report.rows == 6
    assert report.fraction_within == 1.0
    # bound reported is the tightest across rows: the n=16 cell
    assert report.bound == pytest.approx(9 * 8 + 2.2 * 4)
    assert max(r["completion_slot"] for r in rows) <= report.bound


def test_verify_lower_bound_passes_on_real_runs():
    spec = SweepSpec.from_mapping(
        {
            "base": {"k": 8, "protocol": g.RANDOM_PULL},
            "axes": {"n": [32]},
            "seeds": 3,
            "master_seed": 7,
        }
    )
    rows, _ = run_sweep(spec)
    for theorem in ("thm1", "thm3"):
        report = verify_rows(rows, theorem)
        assert report.verdict is True, theorem


def test_verify_refuses_wrong_protocol():
    rows = interleave_rows()
    with pytest.raises(VerificationRefusal, match="thm1"):
        verify_rows(rows, "thm1")
    with pytest.raises(VerificationRefusal, match="thm7"):
        verify_rows(rows, "thm7")


def test_verify_refuses_empty_and_rejects_unknown():
    with pytest.raises(VerificationRefusal):
        verify_rows([], "thm6")
    with pytest.raises(ConfigError, match="unknown theorem"):
        verify_rows(interleave_rows(), "thm9")


def test_verify_never_passes_with_a_violation():
    rows = interleave_rows()
    doctored = [dict(r) for r in rows]
    doctored[0]["completion_slot"] = 10**6  # exceeds every thm6 bound
    report = verify_rows(doctored, "thm6")
    assert report.verdict is False
    assert report.details["violation_count"] == 1
    assert doctored[0]["run_id"] in report.details["violations"]
    # a capped, unfinished run can never satisfy an upper bound either
    doctored[0]["completion_slot"] = None
    doctored[0]["completed"] = False
    doctored[0]["slots"] = 5
    assert verify_rows(doctored, "thm6").verdict is False


def test_verify_whp_margin_mechanics():
    # thm2 tolerates a vanishing fraction of stragglers: with n = 1000 the
    # required coverage is 0.999 (1 - 1/1000) ~ 0.998001
    template = {
        "run_id": "r0",
        "protocol": g.RANDOM_PULL,
        "initial_state": g.ETA_SEEDED,
        "n": 1000,
        "k": 50,
        "eta": 0.5,
        "completed": True,
        "completion_slot": 60,
        "slots": 60,
    }
    rows = [dict(template, run_id=f"r{i}") for i in range(1000)]
    assert verify_rows(rows, "thm2").verdict is True
    rows[0]["completion_slot"] = 10**6
    assert verify_rows(rows, "thm2").verdict is True  # 0.999 >= 0.998001
    rows[1]["completion_slot"] = 10**6
    assert verify_rows(rows, "thm2").verdict is False


def test_verify_reach_mechanics():
    template = {
        "run_id": "r0",
        "protocol": g.PRIORITY_PUSH,
        "n": 500,
        "k": 600,
        "spacing": 1,
        "completed": False,
        "completion_slot": None,
        "slots": 700,
        "reach_fraction": 0.95,
    }
    rows = [dict(template, run_id=f"r{i}") for i in range(4)]
    report = verify_rows(rows, "thm5")
    assert report.verdict is True
    assert report.bound["fraction"] == pytest.approx(1 - math.exp(-1) - 0.08)
    low = [dict(r, reach_fraction=0.5) for r in rows]
    assert verify_rows(low, "thm5").verdict is False
    # recorded statistic pins delta: re-checking at another delta refuses
    with pytest.raises(VerificationRefusal, match="delta"):
        verify_rows(rows, "thm5", {"delta": 0.2})
    missing = [dict(r, reach_fraction=None) for r in rows]
    with pytest.raises(VerificationRefusal, match="reach_fraction"):
        verify_rows(missing, "thm5")


def test_verify_linear_mechanics():
    template = {
        "run_id": "r0",
        "protocol": g.ADVOCATE,
        "initial_state": g.ONE_UNIQUE,
        "constraint": g.SOFT,
        "n": 128,
        "k": 128,
        "completed": True,
        "completion_slot": 127,
        "slots": 127,
    }
    rows = [dict(template, run_id=f"r{i}") for i in range(5)]
    report = verify_rows(rows, "thm7")
    assert report.verdict is True
    assert report.empirical["max_excess_over_n_per_ln_n"] <= 0.0
    fast = [dict(r, completion_slot=100) for r in rows]  # below the n-1 floor
    assert verify_rows(fast, "thm7").verdict is False
    slow = [dict(r, completion_slot=128 + 200, slots=128 + 200) for r in rows]
    assert verify_rows(slow, "thm7").verdict is False  # exceeds n + C ln n


# ------------------------------------------------------------------ figures


def test_fig1_completion_falls_as_lists_grow():
    ds = reproduce("fig1", scale=0.1, seeds=2, master_seed=97)
    assert ds.params["n"] == 50 and ds.params["k"] == 100
    means = {r["m"]: r["mean_completion"] for r in ds.rows}
    fixed = [means[m] for m in (2, 3, 4, 5, 8, 16, 32)]
    assert all(b <= a for a, b in zip(fixed, fixed[1:]))
    assert means["full"] <= means[8]
    assert means[2] > 1.5 * means["full"]
    assert all(r["completed_runs"] == 2 for r in ds.rows)


def test_fig2_small_lists_track_the_full_view():
    ds = reproduce("fig2", scale=0.12, seeds=2, master_seed=97)
    by_m = {}
    for r in ds.rows:
        by_m.setdefault(r["m"], {})[r["d"]] = r["mean_D"]
    for prof in by_m.values():
        values = [prof[d] for d in sorted(prof)]
        assert all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
        assert values[-1] == pytest.approx(1.0)
    full = by_m["full"]
    full_limit = full[max(full)]
    worst = max(
        by_m[2][d] - full.get(d, full_limit) for d in sorted(by_m[2])
    )
    assert worst <= 0.05


def test_fig3_plateaus_match_release_spacing():
    ds = reproduce("fig3", scale=0.2, seeds=2, master_seed=97)
    assert ds.params["n"] == 100 and ds.params["k"] == 200
    plateaus = {}
    for r in ds.rows:  # rows are in d order per spacing: keep the last
        plateaus[r["l"]] = r["mean_D"]
    for l in (1, 2, 3, 4):
        assert plateaus[l] == pytest.approx(1 - math.exp(-l), abs=0.05)
    ordered = [plateaus[l] for l in (1, 2, 3, 4)]
    assert all(b > a for a, b in zip(ordered, ordered[1:]))


def test_reproduce_is_deterministic_and_validates():
    a = reproduce("fig1", scale=0.04, seeds=1, master_seed=5)
    b = reproduce("fig1", scale=0.04, seeds=1, master_seed=5)
    assert a.rows == b.rows
    c = reproduce("fig1", scale=0.04, seeds=1, master_seed=6)
    assert c.rows != a.rows
    with pytest.raises(ConfigError):
        reproduce("fig9")
    with pytest.raises(ConfigError):
        reproduce("fig1", scale=0.0)
    with pytest.raises(ConfigError):
        reproduce("fig1", seeds=0)


# ---------------------------------------------------------------------- CLI


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data))
    return str(path)


def sim_config(tmp_path, **overrides):
    data = {
        "schema_version": 1,
        "n": 16,
        "k": 4,
        "protocol": g.INTERLEAVE,
        "seed": 5,
    }
    data.update(overrides)
    return write_yaml(tmp_path / "run.yaml", data)


def test_cli_simulate_outputs_versioned_record(tmp_path, capsys):
    cfg = sim_config(tmp_path)
    assert main(["simulate", "--config", cfg]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["schema_version"] == 1
    assert record["tool_version"] == g.__version__
    assert record["config"]["n"] == 16
    assert record["completed"] is True
    assert record["metrics"]["pairs_served"] == 16 * 4
    assert record["metrics"]["failed_piece_count"] == 0
    assert "reach_fraction" not in record["metrics"]
    assert record["trace_hash"] is None


def test_cli_simulate_is_byte_identical(tmp_path, capsys):
    cfg = sim_config(tmp_path)
    main(["simulate", "--config", cfg])
    first = capsys.readouterr().out
    main(["simulate", "--config", cfg])
    assert capsys.readouterr().out == first


def test_cli_simulate_seed_override_and_out(tmp_path, capsys):
    cfg = sim_config(tmp_path)
    out = tmp_path / "res" / "run.jsonl"
    assert main(["simulate", "--config", cfg, "--seed", "9", "--out", str(out)]) == 0
    capsys.readouterr()
    record = json.loads(out.read_text())
    assert record["config"]["seed"] == 9


def test_cli_simulate_trace_csv(tmp_path, capsys):
    # pull grants are always novel, so events = pairs minus endowed pairs
    cfg = sim_config(tmp_path, n=8, k=2, protocol=g.RANDOM_PULL)
    trace = tmp_path / "trace.csv"
    assert main(["simulate", "--config", cfg, "--trace", str(trace)]) == 0
    record = json.loads(capsys.readouterr().out.splitlines()[0])
    assert record["trace_hash"] is not None
    with open(trace, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == [
        "schema_version",
        "tool_version",
        "slot",
        "from",
        "to",
        "piece",
        "kind",
    ]
    assert len(rows) == 1 + record["metrics"]["pairs_served"] - 2  # minus endowed


def test_cli_rejects_bad_configs(tmp_path, capsys):
    missing = write_yaml(tmp_path / "bad.yaml", {"schema_version": 1, "n": 16})
    assert main(["simulate", "--config", missing]) == 2
    assert "config error" in capsys.readouterr().err
    unversioned = write_yaml(tmp_path / "old.yaml", {"n": 16, "k": 4, "protocol": "random-pull"})
    assert main(["simulate", "--config", unversioned]) == 2
    capsys.readouterr()
    assert main(["simulate", "--config", str(tmp_path / "absent.yaml")]) == 2
    capsys.readouterr()


def test_cli_rejects_unknown_subcommand_and_theorem(tmp_path):
    with pytest.raises(SystemExit):
        main(["discombobulate"])
    with pytest.raises(SystemExit):
        main(["verify", "--results", "x.csv", "--theorem", "thm9"])


def sweep_yaml(tmp_path, name="sweep.yaml"):
    return write_yaml(
        tmp_path / name,
        {
            "schema_version": 1,
            "base": {"k": 8, "protocol": g.INTERLEAVE},
            "axes": {"n": [16, 32]},
            "seeds": 3,
            "master_seed": 7,
        },
    )


def test_cli_sweep_writes_both_csvs(tmp_path, capsys):
    cfg = sweep_yaml(tmp_path)
    out = tmp_path / "results"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed == [str(out / "runs.csv"), str(out / "aggregate.csv")]
    rows = load_results(out / "runs.csv")
    assert len(rows) == 6
    assert {r["n"] for r in rows} == {16, 32}


def test_cli_out_dir_from_environment(tmp_path, capsys, monkeypatch):
    cfg = sweep_yaml(tmp_path)
    monkeypatch.setenv("GOSSIPSIM_OUT", str(tmp_path / "envout"))
    assert main(["sweep", "--config", cfg]) == 0
    capsys.readouterr()
    assert (tmp_path / "envout" / "runs.csv").exists()
    assert (tmp_path / "envout" / "aggregate.csv").exists()


def test_cli_verify_exit_codes(tmp_path, capsys):
    cfg = sweep_yaml(tmp_path)
    out = tmp_path / "results"
    main(["sweep", "--config", cfg, "--out", str(out)])
    capsys.readouterr()
    runs = str(out / "runs.csv")

    assert main(["verify", "--results", runs, "--theorem", "thm6"]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert printed[-1] == "thm6: PASS"
    report = json.loads(printed[0])
    assert report["verdict"] is True and report["rows"] == 6

    # wrong hypothesis: refusal, not failure
    assert main(["verify", "--results", runs, "--theorem", "thm1"]) == 2
    assert "refused" in capsys.readouterr().err

    # doctor one run to violate the bound: exit 1
    rows = load_results(runs)
    rows[0]["completion_slot"] = 10**6
    doctored = tmp_path / "doctored.csv"
    write_rows_csv(rows, doctored, RUN_COLUMNS)
    assert main(["verify", "--results", str(doctored), "--theorem", "thm6"]) == 1
    assert "thm6: FAIL" in capsys.readouterr().out


def test_cli_verify_reads_jsonl(tmp_path, capsys):
    cfg = sim_config(tmp_path)
    out = tmp_path / "run.jsonl"
    main(["simulate", "--config", cfg, "--out", str(out)])
    capsys.readouterr()
    assert main(["verify", "--results", str(out), "--theorem", "thm6"]) == 0
    assert "thm6: PASS" in capsys.readouterr().out


def test_cli_verify_writes_report(tmp_path, capsys):
    cfg = sweep_yaml(tmp_path)
    out = tmp_path / "results"
    main(["sweep", "--config", cfg, "--out", str(out)])
    report_path = tmp_path / "report.json"
    assert (
        main(
            [
                "verify",
                "--results",
                str(out / "runs.csv"),
                "--theorem",
                "thm6",
                "--eps",
                "0.5",
                "--out",
                str(report_path),
            ]
        )
        == 0
    )
    capsys.readouterr()
    report = json.loads(report_path.read_text())
    assert report["params"]["eps"] == 0.5


def test_cli_reproduce_writes_figure_csv(tmp_path, capsys):
    out = tmp_path / "figs"
    code = main(
        [
            "reproduce",
            "--figure",
            "fig1",
            "--scale",
            "0.04",
            "--seeds",
            "1",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    capsys.readouterr()
    with open(out / "fig1.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["schema_version"] == "1"
    assert rows[-1]["m"] == "full"
    assert all(r["figure"] == "fig1" for r in rows)


def test_load_sweep_requires_schema_version(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(yaml.safe_dump({"base": {"k": 2, "protocol": "random-pull"}}))
    with pytest.raises(ConfigError, match="schema_version"):
        load_sweep(path)