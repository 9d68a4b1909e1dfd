"""Command-line front end: build, assess, experiments, and the HTTP service.

All randomness is seeded through ``--seed`` and outputs are deterministic for
identical invocations; ``BAM_LOG`` selects the log level.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import time
from pathlib import Path

import click

from .engine import EngineError, RiskEngine, load_events
from .params import ModelParams
from .topology import TopologyError, load_topology

log = logging.getLogger("bamrisk")


def _setup_logging() -> None:
    level = os.environ.get("BAM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _param_options(fn):
    decorators = [
        click.option("--nb-steps", type=int, default=None, help="Attack-path depth kept per tree."),
        click.option("--pua", type=float, default=None, help="Probability of an unknown attack."),
        click.option("--pnas", type=float, default=None, help="Probability the attacker takes a new step."),
        click.option("--fp", type=float, default=None, help="Default sensor false-positive rate."),
        click.option("--fn", "fn_", type=float, default=None, help="Default sensor false-negative rate."),
        click.option("--prior-internet", type=float, default=None, help="Attack-source prior of the internet."),
        click.option("--prior-hosts", type=float, default=None, help="Attack-source prior of other hosts."),
        click.option("--workers", type=int, default=None, help="Per-tree worker threads."),
        click.option("--backend", type=click.Choice(["numba", "python"]), default=None, help="Kernel backend."),
    ]
    for dec in reversed(decorators):
        fn = dec(fn)
    return fn


def _build_params(nb_steps, pua, pnas, fp, fn_, prior_internet, prior_hosts) -> ModelParams:
    overrides = {}
    if nb_steps is not None:
        overrides["nb_steps"] = nb_steps
    if pua is not None:
        overrides["probability_unknown_attack"] = pua
    if pnas is not None:
        overrides["probability_new_attack_step"] = pnas
    if fp is not None:
        overrides["false_positive"] = fp
    if fn_ is not None:
        overrides["false_negative"] = fn_
    if prior_internet is not None:
        overrides["probability_internet"] = prior_internet
    if prior_hosts is not None:
        overrides["probability_other_hosts"] = prior_hosts
    return ModelParams().with_overrides(**overrides)


def _fail(message: str) -> None:
    raise click.ClickException(message)


@click.group()
def main() -> None:
    """Risk assessment over Bayesian attack models."""
    _setup_logging()


@main.command()
@click.option("--topology", "topology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@_param_options
def build(topology_path, out_dir, workers, backend, **param_kw):
    """Generate the attack graph and model; write the export and a summary."""
    try:
        params = _build_params(**param_kw)
    except ValueError as exc:
        _fail(str(exc))
    try:
        topology = load_topology(topology_path)
    except (TopologyError, OSError) as exc:
        _fail(f"{topology_path}: {exc}")
    t0 = time.perf_counter()
    try:
        engine = RiskEngine(topology, params, workers=workers, backend=backend)
    except ValueError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    engine.tag.dump(out / "tag.json")
    summary = engine.bam.summary()
    summary["buildSeconds"] = time.perf_counter() - t0
    (out / "bam-summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    click.echo(f"built {summary['batCount']} attack trees, {summary['totalNodes']} nodes total")
    click.echo(f"wrote {out / 'tag.json'} and {out / 'bam-summary.json'}")


@main.command()
@click.option("--topology", "topology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None)
@click.option("--watch", is_flag=True, help="Re-emit the report whenever the events file grows.")
@click.option("--no-auto-silent", is_flag=True, help="Do not assume deployed sensors are silent by default.")
@_param_options
def assess(topology_path, events_path, out_path, watch, no_auto_silent, workers, backend, **param_kw):
    """Apply an event log and emit the consolidated risk report."""
    try:
        params = _build_params(**param_kw)
    except ValueError as exc:
        _fail(str(exc))
    try:
        topology = load_topology(topology_path)
    except (TopologyError, OSError) as exc:
        _fail(f"{topology_path}: {exc}")
    engine = RiskEngine(topology, params, workers=workers, auto_silent=not no_auto_silent, backend=backend)

    def run_once() -> None:
        engine.events.clear()
        if events_path:
            try:
                for event in load_events(events_path):
                    engine.apply_event(event)
            except EngineError as exc:
                _fail(str(exc))
        report = engine.assess()
        doc = json.dumps(report.to_dict(), indent=2)
        if out_path:
            Path(out_path).write_text(doc + "\n")
            click.echo(f"wrote {out_path}")
        else:
            click.echo(doc)

    run_once()
    if watch:
        if not events_path:
            _fail("--watch requires --events")
        last_size = os.path.getsize(events_path)
        click.echo("watching for appended events (ctrl-c to stop)", err=True)
        try:
            while True:
                time.sleep(0.5)
                size = os.path.getsize(events_path)
                if size != last_size:
                    last_size = size
                    run_once()
        except KeyboardInterrupt:
            pass


def _parse_hosts_grid(raw: str) -> list[int]:
    if ".." in raw:
        lo, _, rest = raw.partition("..")
        hi, _, step = rest.partition(":")
        return list(range(int(lo), int(hi) + 1, int(step) if step else 10))
    return [int(x) for x in raw.split(",") if x]


@main.command()
@click.argument("kind", type=click.Choice(["usecase", "accuracy", "bench", "sensitivity"]))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--hosts", default="10..70", help="Host-count grid for bench, e.g. 10..70:10 or 10,30,70.")
@click.option("--runs", type=int, default=10, help="Scenario count for accuracy.")
@click.option("--param", "param_name", default=None, help="Restrict the sensitivity sweep to one parameter.")
@click.option("--seed", type=int, default=0)
@_param_options
def experiment(kind, out_dir, hosts, runs, param_name, seed, workers, backend, **param_kw):
    """Run one of the evaluation experiments and write its report files."""
    from . import simharness

    try:
        params = _build_params(**param_kw)
    except ValueError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    if kind == "usecase":
        reports = simharness.run_use_case(params, workers=workers, backend=backend)
        doc = {str(sid): r.to_dict() for sid, r in reports.items()}
        (out / "usecase.json").write_text(json.dumps(doc, indent=2) + "\n")
        csv_lines = ["scenario,host,probability,riskLevel"]
        for sid, r in sorted(reports.items()):
            for h in sorted(r.per_asset):
                csv_lines.append(f"{sid},{h},{r.per_asset[h]:.9f},{r.levels[h]}")
        (out / "usecase.csv").write_text("\n".join(csv_lines) + "\n")
        click.echo(f"{'scenario':>8}  {'host':<8} {'probability':>11}  band")
        for sid, r in sorted(reports.items()):
            for h in r.ranking[:4]:
                click.echo(f"{sid:>8}  {h:<8} {r.per_asset[h]:>11.4f}  {r.levels[h]}")
        click.echo(f"wrote {out / 'usecase.json'} and {out / 'usecase.csv'}")

    elif kind == "accuracy":
        spec = simharness.TopologyGenSpec(n_hosts=30, seed=seed)
        report = simharness.evaluate_accuracy(
            spec, n_scenarios=runs, params=params, host_range=(20, 40), workers=workers, backend=backend
        )
        (out / "accuracy.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        click.echo(
            f"min compromised {report.min_compromised:.4f} > max healthy {report.max_healthy:.4f}"
            f" -> separable={report.separable}"
        )
        click.echo(f"wrote {out / 'accuracy.json'}")

    elif kind == "bench":
        grid = _parse_hosts_grid(hosts)
        specs = [simharness.TopologyGenSpec(n_hosts=n, seed=seed) for n in grid]
        workers_list = [1]
        parallel = workers or os.cpu_count() or 1
        if parallel > 1:
            workers_list.append(parallel)
        reports = simharness.benchmark(specs, params, workers_list=workers_list, backend=backend)
        (out / "bench.csv").write_text(simharness.perf_csv(reports))
        (out / "bench.json").write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n")
        for r in reports:
            click.echo(
                f"hosts={r.n_hosts:<3} workers={r.worker_count} build={r.build_seconds:.2f}s"
                f" assess={r.infer_seconds:.2f}s nodes={r.total_nodes}"
            )
        click.echo(f"wrote {out / 'bench.csv'} and {out / 'bench.json'}")

    else:  # sensitivity
        grids = None
        if param_name:
            if param_name not in simharness.DEFAULT_GRIDS:
                _fail(f"unknown parameter {param_name!r}; pick from {sorted(simharness.DEFAULT_GRIDS)}")
            grids = {param_name: simharness.DEFAULT_GRIDS[param_name]}
        report = simharness.sensitivity_sweep(grids=grids, params=params, workers=workers, backend=backend)
        (out / "sensitivity.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
        click.echo(f"{'parameter':<26} {'minRankCorr':>11}  rankChanged  maxProbDelta")
        for name, agg in sorted(report.per_parameter().items()):
            click.echo(
                f"{name:<26} {agg['minRankCorrelation']:>11.4f}  {str(agg['rankChanged']):<11}"
                f"  {agg['maxProbDelta']:.4f}"
            )
        click.echo(f"wrote {out / 'sensitivity.json'}")


@main.command()
@click.option("--topology", "topology_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=None, help="Defaults to BAM_PORT or 8787.")
@click.option("--host", default="127.0.0.1")
@click.option("--events", "events_path", type=click.Path(dir_okay=False), default=None,
              help="Append-only event log for persistence across restarts.")
@click.option("--console", "console_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with the built operator console bundle.")
@click.option("--no-auto-silent", is_flag=True)
@_param_options
def serve(topology_path, port, host, events_path, console_dir, no_auto_silent, workers, backend, **param_kw):
    """Serve the HTTP API (and the operator console, when built)."""
    import uvicorn

    from .service import create_app

    try:
        params = _build_params(**param_kw)
    except ValueError as exc:
        _fail(str(exc))
    try:
        topology = load_topology(topology_path)
    except (TopologyError, OSError) as exc:
        _fail(f"{topology_path}: {exc}")
    engine = RiskEngine(topology, params, workers=workers, auto_silent=not no_auto_silent, backend=backend)
    app = create_app(engine, persist_path=events_path, console_dir=console_dir)
    port = port if port is not None else int(os.environ.get("BAM_PORT", "8787"))
    uvicorn.run(app, host=host, port=port, log_level=os.environ.get("BAM_LOG", "warning").lower())


if __name__ == "__main__":
    sys.exit(main())
