"""Command-line entry points: synth, lock, adev, chain, run, compare."""
from __future__ import annotations

import json
import os
import sys

import click

from . import chain as chainmod
from .errors import ParameterError
from .lockloop import simulate_lock, servo_for_bandwidth
from .metrology import (
    UNITS_HZ,
    adev_nonoverlapping,
    adev_overlapping,
    read_series_csv,
    to_fractional,
    write_allan_csv,
)
from .noisegen import synth_power_law, write_trace_csv
from .scenario import (
    OUT_DIR_ENV,
    RunReport,
    compare_expected,
    expand_seeds,
    load_config,
    noise_spec_from_dict,
    run_scenario,
    validate_config,
)


def _out_root(explicit):
    return explicit or os.environ.get(OUT_DIR_ENV, "runs")


@click.group()
def main():
    """Offset-lock simulation and time-frequency metrology toolkit."""


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), required=True,
              help="NoiseSpec JSON: {\"h\": {\"0\": 2.0}, \"drift_rate_hz_per_s\": 0, ...}")
@click.option("--duration", type=float, required=True, help="Trace duration, s.")
@click.option("--dt", type=float, required=True, help="Sample spacing, s.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--nominal-hz", type=int, default=0, show_default=True)
@click.option("--out", "-o", type=click.Path(), required=True)
def synth(spec_path, duration, dt, seed, nominal_hz, out):
    """Synthesize a power-law frequency-noise trace to a CSV."""
    with open(spec_path) as fh:
        spec = noise_spec_from_dict(json.load(fh))
    trace = synth_power_law(spec, duration, dt, seed)
    if nominal_hz:
        from dataclasses import replace
        trace = replace(trace, nominal_hz=nominal_hz)
    write_trace_csv(trace, out)
    click.echo(f"wrote {len(trace)} samples to {out}")


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--lock-id", required=True, help="Which lock block of the scenario to run.")
@click.option("--out-dir", "-o", type=click.Path(), default=None)
def lock(config, lock_id, out_dir):
    """Run one time-domain lock block of a scenario; export a LockRun directory."""
    cfg = load_config(config)
    block = next((b for b in cfg.locks if b.id == lock_id), None)
    if block is None:
        raise click.ClickException(f"no lock block with id {lock_id!r}")
    if block.fidelity != "time-domain":
        raise click.ClickException(
            "the lock command runs time-domain blocks only; "
            "use 'offsetlock run' for spectral-fidelity scenarios")
    from .lockloop import lock_points
    from .noisegen import comb_line_oscillator, derive_seed
    from .scenario import resolve_comb_line
    laser = cfg.oscillators[block.laser]
    comb = cfg.combs[block.comb]
    n, _ = resolve_comb_line(laser, comb)
    line = comb_line_oscillator(comb, n)
    pts = lock_points(block.disc, 0.0, block.f_lock_hz * 2.0 + 1.0 / block.disc.delay_s)
    if not pts:
        raise click.ClickException(f"lock {lock_id!r}: no lock point near f_lock")
    f0 = min((p.f_hz for p in pts), key=lambda f: abs(f - block.f_lock_hz))
    servo = block.servo or servo_for_bandwidth(block.disc, f0, block.loop_bandwidth_hz)
    run = simulate_lock(laser, line, block.disc, servo, f0,
                        cfg.duration_s, cfg.dt_s, derive_seed(cfg.seed, f"lock:{block.id}"),
                        thermal=block.thermal)
    out_dir = out_dir or os.path.join(_out_root(None), f"{cfg.name}_{lock_id}")
    written = run.export(out_dir)
    click.echo(f"lock fraction {run.status['lock_fraction']:.3f}; wrote {len(written)} files to {out_dir}")


@main.command()
@click.argument("series_csv", type=click.Path(exists=True))
@click.option("--taus", default="octave", show_default=True,
              help="Comma-separated taus in seconds, or 'octave'.")
@click.option("--overlapping/--nonoverlapping", "overlapping", default=True, show_default=True)
@click.option("--fractional", "fractional_hz", type=int, default=None,
              help="Convert sigmas to fractional units at this carrier (Hz).")
@click.option("--out", "-o", type=click.Path(), default=None,
              help="Output CSV (default: stdout).")
def adev(series_csv, taus, overlapping, fractional_hz, out):
    """Allan standard deviation of a CounterSeries CSV."""
    series = read_series_csv(series_csv)
    if taus == "octave":
        from .metrology import octave_taus
        tau_list = octave_taus(series.gate_s, series.span_s)
    else:
        tau_list = [float(t) for t in taus.split(",")]
    fn = adev_overlapping if overlapping else adev_nonoverlapping
    result = fn(series, tau_list)
    if fractional_hz is not None:
        result = to_fractional(result, fractional_hz)
    if out:
        write_allan_csv(result, out)
        click.echo(f"wrote {result.taus_s.size} points to {out}")
    else:
        click.echo("tau_s,sigma,units,n_pairs")
        for tau, sigma, n in zip(result.taus_s, result.sigmas, result.n_pairs):
            click.echo(f"{tau:.17g},{sigma:.17g},{result.units},{n}")
    if result.omitted_taus_s:
        click.echo(f"warning: omitted taus {list(result.omitted_taus_s)}", err=True)


@main.command("chain")
@click.argument("chain_json", type=click.Path(exists=True))
@click.option("--out", "-o", type=click.Path(), default=None,
              help="BudgetReport JSON (default: stdout).")
def chain_cmd(chain_json, out):
    """Evaluate a chain-description JSON; emit the budget report."""
    doc = chainmod.load_chain(chain_json)
    result = chainmod.evaluate_chain(doc)
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        click.echo(f"wrote {out}")
    else:
        click.echo(text, nl=False)
    budget = result.get("budget")
    if budget is not None and not (budget["stability_pass"] and budget["offset_pass"]):
        sys.exit(1)


@main.command()
@click.argument("config", type=click.Path(exists=True))
@click.option("--out-dir", "-o", type=click.Path(), default=None)
@click.option("--seeds", type=int, default=1, show_default=True,
              help="Expand into N runs with consecutive seeds.")
def run(config, out_dir, seeds):
    """Run a full scenario config; exit nonzero if any envelope fails."""
    with open(config) as fh:
        doc = json.load(fh)
    docs = [doc] if seeds == 1 else expand_seeds(doc, seeds)
    worst = 0
    for d in docs:
        cfg, errors = validate_config(d)
        if errors:
            for e in errors:
                click.echo(f"config error: {e}", err=True)
            sys.exit(2)
        target = out_dir
        if target is not None and len(docs) > 1:
            target = os.path.join(out_dir, cfg.name)
        report = run_scenario(cfg, target)
        code, verdict = compare_expected(report)
        click.echo(json.dumps(verdict, indent=2, sort_keys=True))
        worst = max(worst, code)
    sys.exit(worst)


@main.command()
@click.argument("report_json", type=click.Path(exists=True))
def compare(report_json):
    """Re-check a report's envelopes; exit zero iff all pass."""
    with open(report_json) as fh:
        report = RunReport.from_dict(json.load(fh))
    code, verdict = compare_expected(report)
    click.echo(json.dumps(verdict, indent=2, sort_keys=True))
    sys.exit(code)


if __name__ == "__main__":
    main()
