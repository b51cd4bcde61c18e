"""Command-line front end: run scenarios, validate files, compare reports."""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from . import metrics as metrics_mod
from .scenario import (ExperimentResult, ScenarioError, ScenarioSpec,
                       bundled_scenario_names, diff_report_dicts, emit_summary,
                       load_bundled, pair_root, run_experiment, run_scenario)


def _load_spec(ref: str) -> ScenarioSpec:
    """Resolve a scenario reference: a file path or a bundled scenario name."""
    if os.path.exists(ref):
        return ScenarioSpec.load(ref)
    try:
        return load_bundled(ref)
    except ScenarioError:
        raise click.ClickException(
            f"{ref!r} is neither a scenario file nor a bundled scenario "
            f"(bundled: {', '.join(bundled_scenario_names())})")


def _write_rep_files(out_dir: Path, report, fmt: str) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        (out_dir / "metrics.csv").write_text(metrics_mod.metrics_csv(report))
        (out_dir / "flows.csv").write_text(metrics_mod.flows_csv(report))
        (out_dir / "links.csv").write_text(metrics_mod.links_csv(report))
        return
    with open(out_dir / "metrics.jsonl", "w", encoding="utf-8") as fh:
        s = report.series
        for i, sec in enumerate(report.seconds):
            json.dump({"second": sec, "generated": s["generated"][i],
                       "delivered": s["delivered"][i],
                       "bitrate_bps": s["bitrate_bps"][i],
                       "drops": s["drops"][i],
                       "delay_avg_ms": s["delay_avg_ms"][i],
                       "delay_max_ms": s["delay_max_ms"][i]}, fh)
            fh.write("\n")
    with open(out_dir / "flows.jsonl", "w", encoding="utf-8") as fh:
        for f in report.flows:
            json.dump({"flow_id": f.flow_id, "label": f.label, "src": f.src,
                       "dst": f.dst, "sent": f.sent, "delivered": f.delivered,
                       "dropped": f.drops_total, "bytes": f.bytes,
                       "delay_avg_ms": f.delay_avg_ms,
                       "delay_max_ms": f.delay_max_ms}, fh)
            fh.write("\n")
    with open(out_dir / "links.jsonl", "w", encoding="utf-8") as fh:
        for name in sorted(report.link_utilization):
            util = report.link_utilization[name]
            for i, sec in enumerate(report.seconds):
                json.dump({"second": sec, "link": name,
                           "utilization": util[i]}, fh)
                fh.write("\n")


def _run_one(spec: ScenarioSpec, repetitions, seed, famtar, out, fmt,
             workers, events) -> ExperimentResult:
    reps = repetitions if repetitions is not None else spec.repetitions
    base = seed if seed is not None else spec.seed
    if events and out is not None:
        # Event streaming needs the engine in-process, so run serially.
        reports = []
        seeds = []
        for i in range(reps):
            rep_dir = Path(out) / spec.name / f"rep{i}"
            rep_dir.mkdir(parents=True, exist_ok=True)
            with open(rep_dir / "events.jsonl", "w", encoding="utf-8") as fh:
                result = run_scenario(spec, seed=base + i, famtar=famtar,
                                      log_stream=fh)
            reports.append(metrics_mod.collect(result))
            seeds.append(base + i)
        enabled = spec.famtar_enabled if famtar is None else famtar
        experiment = ExperimentResult(name=spec.name, famtar_enabled=enabled,
                                      seeds=seeds, reports=reports)
    else:
        experiment = run_experiment(spec, repetitions=reps, seed_base=base,
                                    famtar=famtar, workers=workers)
    if out is not None:
        scen_dir = Path(out) / spec.name
        scen_dir.mkdir(parents=True, exist_ok=True)
        for i, report in enumerate(experiment.reports):
            _write_rep_files(scen_dir / f"rep{i}", report, fmt)
        with open(scen_dir / "report.json", "w", encoding="utf-8") as fh:
            json.dump(experiment.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return experiment


def _echo_experiment(experiment: ExperimentResult) -> None:
    agg = experiment.aggregate()
    mode = "famtar" if experiment.famtar_enabled else "ip"
    parts = [f"{experiment.name} [{mode}] x{experiment.repetitions}"]
    for key in ("delivered", "dropped", "drop_ratio", "delay_avg_ms"):
        if key in agg:
            mean, std = agg[key]
            parts.append(f"{key}={mean:.3f}±{std:.3f}")
    conserved = all(r.conserved for r in experiment.reports)
    parts.append(f"conserved={'yes' if conserved else 'NO'}")
    click.echo("  ".join(parts))


@click.group()
@click.version_option(package_name="famtarsim")
def main() -> None:
    """Flow-aware adaptive multipath routing simulator."""


@main.command()
@click.option("--scenario", required=True,
              help="Scenario file path or bundled scenario name.")
@click.option("--repetitions", type=int, default=None,
              help="Override the scenario's repetition count.")
@click.option("--seed", type=int, default=None,
              help="Override the scenario's base seed.")
@click.option("--famtar", type=click.Choice(["on", "off"]), default=None,
              help="Force the adaptive mechanism on or off.")
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for per-repetition metrics and report.json.")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]),
              default="csv", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True,
              help="Worker processes for repetitions.")
@click.option("--events", is_flag=True,
              help="Also write the full event log (events.jsonl, needs --out).")
def run(scenario, repetitions, seed, famtar, out, fmt, workers, events):
    """Run one scenario (all repetitions) and print its aggregate."""
    spec = _load_spec(scenario)
    override = None if famtar is None else (famtar == "on")
    experiment = _run_one(spec, repetitions, seed, override, out, fmt,
                          workers, events)
    _echo_experiment(experiment)
    if not all(r.conserved for r in experiment.reports):
        raise click.ClickException("packet conservation violated")


@main.command()
@click.argument("directory", required=False,
                type=click.Path(exists=True, file_okay=False))
@click.option("--repetitions", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(file_okay=False), default=None)
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]),
              default="csv", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
def suite(directory, repetitions, seed, out, fmt, workers):
    """Run every scenario in DIRECTORY (default: the bundled set).

    Scenarios named <root>.ip / <root>.famtar are paired into a comparison
    table after all runs finish.
    """
    if directory is None:
        specs = [load_bundled(name) for name in bundled_scenario_names()]
    else:
        paths = sorted(Path(directory).glob("*.yaml"))
        if not paths:
            raise click.ClickException(f"no *.yaml scenarios in {directory}")
        specs = [ScenarioSpec.load(p) for p in paths]

    experiments: dict[str, ExperimentResult] = {}
    for spec in specs:
        experiment = _run_one(spec, repetitions, seed, None, out, fmt,
                              workers, events=False)
        experiments[spec.name] = experiment
        _echo_experiment(experiment)

    roots: dict[str, dict[str, ExperimentResult]] = {}
    for name, experiment in experiments.items():
        if name.endswith(".ip") or name.endswith(".famtar"):
            roots.setdefault(pair_root(name), {})[name.rsplit(".", 1)[1]] = experiment
    for root, pair in sorted(roots.items()):
        if "ip" not in pair or "famtar" not in pair:
            continue
        table = emit_summary(pair["ip"], pair["famtar"])
        click.echo(f"\n== {root} ==")
        click.echo(table, nl=False)
        if out is not None:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / f"summary-{root}.txt").write_text(table)

    if not all(r.conserved for e in experiments.values() for r in e.reports):
        raise click.ClickException("packet conservation violated")


@main.command()
@click.argument("scenarios", nargs=-1, required=True)
def validate(scenarios):
    """Validate scenario files (or bundled names) without running them."""
    failed = False
    for ref in scenarios:
        try:
            spec = _load_spec(ref)
        except (ScenarioError, click.ClickException, OSError) as exc:
            message = getattr(exc, "message", None) or str(exc)
            click.echo(f"FAIL  {ref}: {message}")
            failed = True
        else:
            click.echo(f"OK    {ref} ({spec.name}, {spec.duration_s}s, "
                       f"seed {spec.seed})")
    if failed:
        sys.exit(1)


@main.command()
@click.argument("report_a", type=click.Path(exists=True, dir_okay=False))
@click.argument("report_b", type=click.Path(exists=True, dir_okay=False))
@click.option("--rel-tol", type=float, default=0.05, show_default=True)
@click.option("--abs-tol", type=float, default=1e-9, show_default=True)
def diff(report_a, report_b, rel_tol, abs_tol):
    """Compare two report.json files; exit nonzero outside tolerance."""
    with open(report_a, encoding="utf-8") as fh:
        a = json.load(fh)
    with open(report_b, encoding="utf-8") as fh:
        b = json.load(fh)
    violations = diff_report_dicts(a, b, rel_tol=rel_tol, abs_tol=abs_tol)
    if violations:
        for line in violations:
            click.echo(line)
        sys.exit(1)
    click.echo("reports match within tolerance")


@main.command()
def scenarios():
    """List the bundled scenarios."""
    for name in bundled_scenario_names():
        click.echo(name)
