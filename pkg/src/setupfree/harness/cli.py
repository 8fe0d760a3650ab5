"""Command line runner: ``setupfree run | fit | replay``.

Exit codes: 0 all preset checks passed, 1 a check or replay failed,
2 usage error.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click

from ..errors import IntegrityError, ParameterError
from ..simnet import Transcript
from .experiments import ExperimentConfig, fit_rows, format_table, run_trial, summarize
from .presets import PRESETS, replay

OUT_ENV = "SETUPFREE_OUT"


def _out_dir(out):
    d = Path(out or os.environ.get(OUT_ENV) or "runs")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_jsonl(path, rows):
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")


def _ints(value):
    try:
        return [int(x) for x in value.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated integers, got {value!r}") from None


@click.group()
def main():
    """Simulate the setup-free asynchronous protocols."""


@main.command("run")
@click.option("--preset", type=click.Choice(sorted(PRESETS, key=lambda k: int(k[1:]))), default=None,
              help="Run one acceptance preset (c1..c10).")
@click.option("--scale", type=float, default=1.0, show_default=True, help="Trial-count multiplier for presets.")
@click.option("--protocol", type=click.Choice(["rbc", "avss", "seeding", "coin", "aba", "election"]))
@click.option("--n", "ns", default="4", show_default=True, help="Comma-separated party counts.")
@click.option("--f", "f", type=int, default=None, help="Corruption bound (default floor((n-1)/3)).")
@click.option("--crypto", type=click.Choice(["mock", "real"]), default="mock", show_default=True)
@click.option("--coin", type=click.Choice(["genesis", "seeding", "perfect"]), default="genesis", show_default=True)
@click.option("--scheduler", default="random", show_default=True,
              help="fifo | random | starve | delay:<kind>:<idx> | delay-from:<i,j>")
@click.option("--adversary", default="none", show_default=True,
              help="none | crash | equivocate | mutate | random | spam | vote-forger | mixed | bad-dealer[:strategy],"
                   " optionally :<party> or :others")
@click.option("--inputs", default="mixed", show_default=True, help="ABA inputs: mixed | split | 0 | 1")
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file with any of the options above; flags given explicitly win.")
@click.option("--transcripts", type=int, default=0, help="Save transcripts of the first K trials per n.")
@click.option("--out", default=None, help=f"Output directory (default ${OUT_ENV} or ./runs).")
@click.pass_context
def cmd_run(ctx, preset, scale, protocol, ns, f, crypto, coin, scheduler, adversary, inputs, trials, seed,
            config_file, transcripts, out):
    """Run an experiment sweep or a named preset."""
    out_dir = _out_dir(out)
    if preset:
        res = PRESETS[preset](scale)
        click.echo(f"[{preset}] {res.title}")
        if res.rows:
            click.echo(format_table(res.rows))
        for c in res.checks:
            click.echo(c.line())
        _write_jsonl(out_dir / f"{preset}.summary.jsonl", res.rows)
        _write_jsonl(out_dir / f"{preset}.checks.jsonl",
                     [{"name": c.name, "ok": c.ok, "value": c.value, "bound": c.bound} for c in res.checks])
        sys.exit(0 if res.ok else 1)

    opts = {"protocol": protocol, "ns": _ints(ns), "f": f, "crypto": crypto, "coin": coin,
            "scheduler": scheduler, "adversary": adversary, "inputs": inputs, "trials": trials, "seed": seed}
    if config_file:
        try:
            loaded = json.loads(Path(config_file).read_text())
        except ValueError as e:
            raise click.UsageError(f"config: {e}") from None
        for k, v in loaded.items():
            key = "ns" if k == "n" else k
            if key not in opts:
                raise click.UsageError(f"config: unknown field {k!r}")
            src = ctx.get_parameter_source("ns" if key == "ns" else key)
            if src is None or src.name == "DEFAULT":
                opts[key] = v if key != "ns" or isinstance(v, list) else [v]
    if not opts["protocol"]:
        raise click.UsageError("protocol: required unless --preset is given")
    try:
        cfg = ExperimentConfig(**opts)
    except ParameterError as e:
        raise click.UsageError(str(e)) from None

    name = f"{cfg.protocol}-s{cfg.seed}"
    records = []
    for n in cfg.ns:
        for t in range(cfg.trials):
            try:
                rec, res = run_trial(cfg, n, t, record=t < transcripts)
            except ParameterError as e:
                raise click.UsageError(str(e)) from None
            records.append(rec)
            if res.transcript is not None:
                (out_dir / f"{name}-n{n}-t{t}.sftr").write_bytes(res.transcript.to_bytes())
    rows = summarize(records)
    _write_jsonl(out_dir / f"{name}.records.jsonl", records)
    _write_jsonl(out_dir / f"{name}.summary.jsonl", rows)
    click.echo(format_table(rows))
    click.echo(f"wrote {out_dir / (name + '.summary.jsonl')}")


@main.command("fit")
@click.argument("summary", type=click.Path(exists=True, dir_okay=False))
@click.option("--metric", default="mean_bits", show_default=True)
@click.option("--protocol", default=None, help="Only rows of this protocol.")
def cmd_fit(summary, metric, protocol):
    """Least-squares slope of log(metric) against log(n)."""
    rows = [json.loads(line) for line in Path(summary).read_text().splitlines() if line.strip()]
    if protocol:
        rows = [r for r in rows if r.get("protocol") == protocol]
    if rows and metric not in rows[0]:
        raise click.UsageError(f"metric: {metric!r} not in summary rows")
    try:
        slope, icept = fit_rows(rows, metric)
    except ParameterError as e:
        raise click.UsageError(str(e)) from None
    click.echo(json.dumps({"metric": metric, "slope": round(slope, 6), "intercept": round(icept, 6),
                           "points": len(rows)}, sort_keys=True))


@main.command("replay")
@click.argument("transcript", type=click.Path(exists=True, dir_okay=False))
def cmd_replay(transcript):
    """Re-execute a saved run and report divergences from its transcript."""
    try:
        t = Transcript.from_bytes(Path(transcript).read_bytes())
    except IntegrityError as e:
        click.echo(f"integrity error: {e}")
        sys.exit(1)
    try:
        res, diff = replay(t)
    except (ParameterError, TypeError, KeyError) as e:
        click.echo(f"cannot rebuild run from header: {e}")
        sys.exit(1)
    if diff:
        for d in diff:
            click.echo(json.dumps(d, sort_keys=True))
        sys.exit(1)
    click.echo(f"replayed {len(t.records)} events, no divergence; metrics {res.metrics.record()}")


if __name__ == "__main__":  # pragma: no cover
    main()
