import io
import json
import subprocess
import sys

import pytest

from bestow.cli import main


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), out=out, err=err)
    return code, out.getvalue(), err.getvalue()


def test_check_accepts_and_reports_type():
    code, out, _ = run("check", "corpus:core/ping", "--json", "--no-timestamps")
    assert code == 0
    assert json.loads(out) == {"file": "corpus:core/ping", "ok": True, "schema": 1, "type": "Unit", "variant": "core"}


def test_check_rejection_is_exit_two_with_location():
    code, out, err = run("check", "corpus:rejects/leak")
    assert code == 2 and out == ""
    assert err.startswith("bestow: type error: PassiveLeak at corpus:rejects/leak:4:")


def test_check_file_and_syntax_error(tmp_path):
    good = tmp_path / "ok.bst"
    good.write_text("new p\n")
    assert run("check", str(good))[0] == 0
    bad = tmp_path / "bad.bst"
    bad.write_text("fn (x : ) =>\n")
    code, _, err = run("check", str(bad))
    assert code == 2 and "parse error" in err


def test_missing_file_and_unknown_corpus_name(tmp_path):
    code, _, err = run("check", str(tmp_path / "nope.bst"))
    assert code == 2 and "cannot read" in err
    code, _, err = run("check", "corpus:core/nope")
    assert code == 2 and "corpus list" in err


def test_variant_gating_from_flag():
    code, _, err = run("--variant", "core", "check", "corpus:transfer/allocate")
    assert code == 2 and "error" in err


def test_global_flags_after_subcommand():
    a = run("--json", "--no-timestamps", "check", "corpus:core/ping")
    b = run("check", "corpus:core/ping", "--json", "--no-timestamps")
    assert a == b


def test_timestamps_present_by_default():
    _, out, _ = run("check", "corpus:core/ping", "--json")
    assert "generatedAt" in json.loads(out)


def test_run_fifo_reaches_quiescence():
    code, out, _ = run("run", "corpus:core/ping", "--json", "--no-timestamps", "--wf-every-step")
    doc = json.loads(out)
    assert code == 0 and doc["quiescent"] and doc["wfFailures"] == []
    assert doc["steps"] == len(doc["trace"]) > 0


def test_run_random_schedule_is_seeded():
    a = run("run", "corpus:core/two_producers", "--schedule", "random:5", "--json", "--no-timestamps")
    b = run("run", "corpus:core/two_producers", "--schedule", "random:5", "--json", "--no-timestamps")
    assert a == b and a[0] == 0


def test_run_script_schedule(tmp_path):
    _, out, _ = run("run", "corpus:core/ping", "--json", "--no-timestamps")
    labels = json.loads(out)["trace"]
    script = tmp_path / "s.trace"
    script.write_text("# replay\n" + "\n".join(labels[:3]) + "\n")
    code, out, _ = run("run", "corpus:core/ping", "--schedule", f"script:{script}", "--json", "--no-timestamps")
    assert code == 0 and json.loads(out)["trace"] == labels[:3]
    script.write_text("pop a7\n")
    code, _, err = run("run", "corpus:core/ping", "--schedule", f"script:{script}")
    assert code == 2 and "not enabled" in err


def test_run_bad_schedule():
    code, _, err = run("run", "corpus:core/ping", "--schedule", "lifo")
    assert code == 2 and "schedule" in err


def test_explore_clean_program(tmp_path):
    code, out, _ = run("explore", "corpus:transfer/transfer_pingpong", "--json", "--no-timestamps",
                       "--trace-dir", str(tmp_path))
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1
    assert list(tmp_path.iterdir()) == []


def test_explore_mutant_writes_replayable_trace(tmp_path):
    code, out, _ = run("explore", "corpus:rejects/leak_race", "--mutant", "leak-premise-dropped",
                       "--skip-typecheck", "--trace-dir", str(tmp_path), "--canonicalize")
    assert code == 1
    traces = sorted(tmp_path.glob("*.trace"))
    assert traces
    # the written trace is accepted as a scripted schedule for the same program
    drf = tmp_path / "leak_race.drf.trace"
    assert drf in traces
    labels = [l for l in drf.read_text().splitlines() if not l.startswith("#")]
    code, out, _ = run("run", "corpus:rejects/leak_race", "--mutant", "leak-premise-dropped", "--skip-typecheck",
                       "--schedule", f"script:{drf}", "--json", "--no-timestamps")
    assert code == 0 and json.loads(out)["trace"] == labels
    # without the flags the program is still rejected
    assert run("run", "corpus:rejects/leak_race", "--schedule", f"script:{drf}")[0] == 2


def test_explore_rejected_program_without_skip():
    code, _, err = run("explore", "corpus:rejects/leak")
    assert code == 2 and "PassiveLeak" in err


@pytest.mark.parametrize("scenario,extra", [("dht", ["--keys", "200"]), ("bank", ["--iterations", "300"]),
                                            ("graph", ["--nodes", "20"])])
def test_demos_pass(scenario, extra):
    code, out, _ = run("demo", scenario, "--deterministic", "--json", "--no-timestamps", *extra)
    assert code == 0 and json.loads(out)["ok"] is True


def test_deterministic_output_is_byte_identical():
    argv = ["demo", "bank", "--iterations", "200", "--deterministic", "--seed", "3", "--json", "--no-timestamps"]
    assert run(*argv) == run(*argv)


def test_bench_table_and_figure(tmp_path):
    fig = tmp_path / "ping.png"
    code, out, _ = run("bench", "ping", "--messages", "500", "--runs", "1", "--figure", str(fig))
    assert code == 0
    header, *rows = out.strip().splitlines()
    assert header.split("\t")[0] == "mode" and len(rows) == 3
    assert fig.stat().st_size > 1000 and fig.read_bytes()[:4] == b"\x89PNG"


def test_bench_json_single_mode():
    code, out, _ = run("bench", "ping", "--messages", "200", "--runs", "1", "--mode", "direct", "--json",
                       "--no-timestamps")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == 1 and "direct" in json.dumps(doc)


def test_corpus_export_round_trip(tmp_path):
    code, _, _ = run("corpus", "export", str(tmp_path), "--group", "core")
    assert code == 0
    files = sorted(tmp_path.rglob("*.bst"))
    assert files and all(run("check", str(f))[0] == 0 for f in files)


def test_corpus_export_needs_dir():
    assert run("corpus", "export")[0] == 2


def test_usage_errors_exit_two():
    assert run()[0] == 2
    assert run("frobnicate")[0] == 2
    assert run("run", "corpus:core/ping", "--max-steps", "0")[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bestow.cli", "check", "corpus:core/ping"],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
