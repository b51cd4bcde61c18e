import json

import pytest
import yaml
from click.testing import CliRunner

from famtarsim.cli import main
from famtarsim.scenario import bundled_scenario_names


@pytest.fixture
def runner():
    return CliRunner()


def tiny_doc(name, famtar=True):
    return {
        "version": 1,
        "name": name,
        "duration_s": 2.0,
        "seed": 3,
        "topology": {"builder": "parallel_paths", "paths": 1},
        "workload": {"kind": "single_cbr", "rate_bps": 800_000.0,
                     "packet_size_bytes": 1000},
        "famtar": {"enabled": famtar},
    }


def write_doc(path, doc):
    path.write_text(yaml.safe_dump(doc))
    return str(path)


def test_scenarios_lists_bundled(runner):
    result = runner.invoke(main, ["scenarios"])
    assert result.exit_code == 0
    assert result.output.splitlines() == bundled_scenario_names()


def test_validate_accepts_bundled_and_files(runner, tmp_path):
    path = write_doc(tmp_path / "ok.yaml", tiny_doc("ok"))
    result = runner.invoke(main, ["validate", "scenario4.ip", path])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].startswith("OK    scenario4.ip")
    assert lines[1].startswith(f"OK    {path}")


def test_validate_flags_broken_files(runner, tmp_path):
    broken = tmp_path / "broken.yaml"
    broken.write_text("version: 1\nname: x\n")   # missing required keys
    result = runner.invoke(main, ["validate", str(broken), "no-such-scenario"])
    assert result.exit_code == 1
    assert result.output.count("FAIL") == 2


def test_run_writes_reports(runner, tmp_path):
    path = write_doc(tmp_path / "mini.yaml", tiny_doc("mini"))
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "--scenario", path, "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "mini [famtar] x1" in result.output
    assert "conserved=yes" in result.output
    scen = out / "mini"
    assert (scen / "report.json").is_file()
    for name in ("metrics.csv", "flows.csv", "links.csv"):
        assert (scen / "rep0" / name).is_file()
    blob = json.loads((scen / "report.json").read_text())
    assert blob["name"] == "mini"
    assert blob["conserved"] is True
    assert blob["seeds"] == [3]


def test_run_famtar_override_and_jsonl(runner, tmp_path):
    path = write_doc(tmp_path / "mini.yaml", tiny_doc("mini"))
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "--scenario", path, "--famtar", "off",
                                  "--out", str(out), "--format", "jsonl"])
    assert result.exit_code == 0, result.output
    assert "mini [ip] x1" in result.output
    rep = out / "mini" / "rep0"
    rows = [json.loads(line)
            for line in (rep / "metrics.jsonl").read_text().splitlines()]
    assert [r["second"] for r in rows] == [0, 1]
    assert (rep / "flows.jsonl").is_file() and (rep / "links.jsonl").is_file()


def test_run_events_stream(runner, tmp_path):
    path = write_doc(tmp_path / "mini.yaml", tiny_doc("mini"))
    out = tmp_path / "out"
    result = runner.invoke(main, ["run", "--scenario", path, "--out", str(out),
                                  "--events"])
    assert result.exit_code == 0, result.output
    events = [json.loads(line) for line in
              (out / "mini" / "rep0" / "events.jsonl").read_text().splitlines()]
    assert events and {"t", "kind", "data"} <= set(events[0])
    assert any(e["kind"] == "deliver" for e in events)


def test_run_rejects_unknown_scenario(runner):
    result = runner.invoke(main, ["run", "--scenario", "no-such-scenario"])
    assert result.exit_code != 0
    assert "neither a scenario file nor a bundled scenario" in result.output


def test_diff_reports(runner, tmp_path):
    path = write_doc(tmp_path / "mini.yaml", tiny_doc("mini"))
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert runner.invoke(main, ["run", "--scenario", path, "--out",
                                    str(out)]).exit_code == 0
    rep_a = out_a / "mini" / "report.json"
    rep_b = out_b / "mini" / "report.json"
    result = runner.invoke(main, ["diff", str(rep_a), str(rep_b)])
    assert result.exit_code == 0
    assert "reports match" in result.output

    blob = json.loads(rep_b.read_text())
    blob["aggregate"]["delivered"]["mean"] *= 1.5
    perturbed = tmp_path / "perturbed.json"
    perturbed.write_text(json.dumps(blob))
    result = runner.invoke(main, ["diff", str(rep_a), str(perturbed)])
    assert result.exit_code == 1
    assert "delivered" in result.output


def test_suite_pairs_and_summarizes(runner, tmp_path):
    scen_dir = tmp_path / "scenarios"
    scen_dir.mkdir()
    write_doc(scen_dir / "pair.ip.yaml", tiny_doc("pair.ip", famtar=False))
    write_doc(scen_dir / "pair.famtar.yaml", tiny_doc("pair.famtar"))
    out = tmp_path / "out"
    result = runner.invoke(main, ["suite", str(scen_dir), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "pair.ip [ip] x1" in result.output
    assert "pair.famtar [famtar] x1" in result.output
    assert "== pair ==" in result.output
    assert "Without FAMTAR" in result.output
    summary = (out / "summary-pair.txt").read_text()
    assert "With FAMTAR" in summary
    assert (out / "pair.ip" / "report.json").is_file()


def test_suite_rejects_empty_directory(runner, tmp_path):
    result = runner.invoke(main, ["suite", str(tmp_path)])
    assert result.exit_code != 0
    assert "no *.yaml scenarios" in result.output
