import logging
import math
from dataclasses import replace

import click

from repeaterlab.services import montecarlo, pipeline, qubus
from repeaterlab.services.montecarlo import McConfig
from repeaterlab.utils import csv_writer, reports
from repeaterlab.utils.config_parser import ConfigError, Subcommand, load_config

logger = logging.getLogger(__name__)


def _config_options(command):
    command = click.option(
        "--set", "overrides", multiple=True, metavar="KEY=VALUE",
        help="Override a parameter; repeatable, applied after --config.",
    )(command)
    command = click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Output file (default stdout).")(command)
    command = click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                           help="key=value parameter file.")(command)
    return command


def _load(subcommand, config_path, overrides, out_path=None):
    try:
        return load_config(config_path, overrides, subcommand, out_path)
    except ConfigError as e:
        logger.error(f"Error loading configuration: {e}")
        click.echo(f"config error: {e}", err=True)
        raise SystemExit(2)


def _write_rows(rows, out_path, columns):
    try:
        text = csv_writer.emit_csv(rows, out_path, columns)
    except Exception as e:
        logger.error(f"Error writing results: {e}")
        click.echo(f"error: {e}", err=True)
        raise SystemExit(1)
    if text is not None:
        click.echo(text, nl=False)


def _write_gnuplot(rows, gnuplot_path):
    try:
        csv_writer.emit_gnuplot(rows, gnuplot_path)
    except Exception as e:
        logger.error(f"Error writing gnuplot data: {e}")
        click.echo(f"error: {e}", err=True)
        raise SystemExit(1)


def _write_table(table, out_path, float_format):
    try:
        table.to_csv(out_path, index=False, float_format=float_format, na_rep="")
    except OSError as e:
        logger.error(f"Error writing table to {out_path}: {e}")
        click.echo(f"error: cannot write {out_path}", err=True)
        raise SystemExit(1)


def _exit_on_row_errors(rows):
    failed = [row for row in rows if row.error is not None]
    for row in failed:
        click.echo(f"row error: {row.code_label} k={row.k} F={row.F:.6g}: {row.error}", err=True)
    if failed:
        raise SystemExit(1)


# -----------------------------------------
# 1. Rate Sweep
# -----------------------------------------
@click.command("rate-sweep")
@_config_options
@click.option("--gnuplot", "gnuplot_path", type=click.Path(dir_okay=False), help="Companion gnuplot data file.")
def rate_sweep(config_path, out_path, overrides, gnuplot_path):
    """Tabulate F_final and rate per memory over the F grid of every config."""
    run, configs = _load(Subcommand.RATE_SWEEP, config_path, overrides, out_path)

    logger.info(f"Running rate sweep over {len(configs)} configs")
    rows = pipeline.sweep(pipeline.build_grid(configs, run.settings.fidelity_grid()))
    _write_rows(rows, out_path, csv_writer.SWEEP_COLUMNS)
    if gnuplot_path:
        _write_gnuplot(rows, gnuplot_path)
    _exit_on_row_errors(rows)


# -----------------------------------------
# 2. Final Fidelity Table
# -----------------------------------------
@click.command("fidelity")
@_config_options
def fidelity(config_path, out_path, overrides):
    """Tabulate the final fidelity for the F grid (or the alpha/theta channel)."""
    run, configs = _load(Subcommand.FIDELITY, config_path, overrides, out_path)

    rows = pipeline.sweep(pipeline.build_grid(configs, run.settings.fidelity_grid()))
    _write_rows(rows, out_path, csv_writer.FIDELITY_COLUMNS)
    _exit_on_row_errors(rows)


# -----------------------------------------
# 3. Operating Points
# -----------------------------------------
@click.command("operating-point")
@_config_options
def operating_point(config_path, out_path, overrides):
    """Solve for the F reaching the target F_final; without parameters, print the quoted points."""
    if config_path is None and not overrides:
        try:
            table = reports.report_operating_points()
        except Exception as e:
            logger.error(f"Error building operating point report: {e}")
            click.echo("error: failed to build operating point report", err=True)
            raise SystemExit(1)
        if out_path:
            _write_table(table, out_path, csv_writer.FLOAT_FORMAT)
        else:
            click.echo(table.to_string(index=False))
        if table["error"].notna().any():
            raise SystemExit(1)
        return

    run, configs = _load(Subcommand.OPERATING_POINT, config_path, overrides, out_path)
    rows = []
    for cfg in configs:
        try:
            point = pipeline.operating_point(cfg, run.settings.target)
        except Exception as e:
            logger.error(f"Error solving operating point for {cfg.code.label}: {e}")
            rows.append(pipeline.failed_result(cfg, math.nan, str(e)))
            continue
        if point.feasible:
            rows.append(point.result)
            continue
        click.echo(
            f"infeasible: {cfg.code.label} k={cfg.rounds} tau_c={cfg.hardware.memory_coherence_s:g}: "
            f"max F_final={point.max_final_fidelity:.6f} < {run.settings.target}",
            err=True,
        )
        try:
            rows.append(pipeline.best_reachable_point(cfg))
        except Exception as e:
            logger.error(f"Error evaluating best reachable point for {cfg.code.label}: {e}")
            rows.append(pipeline.failed_result(cfg, math.nan, str(e)))
    _write_rows(rows, out_path, csv_writer.SWEEP_COLUMNS)
    _exit_on_row_errors(rows)


# -----------------------------------------
# 4. Oracle Verification
# -----------------------------------------
@click.command("oracle-verify")
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for the random test states.")
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True, help="Random states per check.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Write the deviation table as CSV.")
def oracle_verify(seed, trials, out_path):
    """Check the closed forms against density-matrix simulation and enumeration."""
    try:
        table, passed = reports.oracle_report(samples=trials, seed=seed)
    except Exception as e:
        logger.error(f"Error running oracle verification: {e}")
        click.echo("error: oracle verification failed to run", err=True)
        raise SystemExit(1)

    if out_path:
        _write_table(table, out_path, "%.3e")
    click.echo(table.to_string(index=False))
    if not passed:
        click.echo("oracle verification FAILED", err=True)
        raise SystemExit(1)


# -----------------------------------------
# 5. Qubus Feasibility
# -----------------------------------------
@click.command("qubus-check")
@_config_options
def qubus_check(config_path, out_path, overrides):
    """Print the single-qubus phase table, feasibility and homodyne error."""
    run, _ = _load(Subcommand.QUBUS_CHECK, config_path, overrides, out_path)
    n, theta, beta = run.settings.qubus_n, run.settings.qubus_theta, run.settings.beta

    verdict = qubus.feasibility(n, theta)
    lines = [f"n={n} theta={theta:g} rad"]
    if n <= 10:
        plan = qubus.single_qubus_phases(n, theta)
        lines += [f"  {pattern}  {round(phase / theta):+d} theta" for pattern, phase in plan.per_state_phases.items()]
    lines.append(f"max phase = {verdict.max_phase:.6g} rad = {verdict.max_phase / math.pi:.4f} pi")
    lines.append(f"single qubus feasible: {verdict.feasible}")
    if verdict.collisions:
        lines.append(f"colliding patterns: {', '.join('/'.join(pair) for pair in verdict.collisions)}")
    chained = qubus.chained_qubus_phases(n, theta)
    steps = sorted({round(phase / theta) for phase_map in chained.per_state_phases for phase in phase_map.values()})
    lines.append(
        f"chained scheme: {chained.qubus_count} qubuses, phases in {{{', '.join(f'{s:+d}' for s in steps)}}} theta"
    )
    if n <= 10:
        for pattern in chained.per_state_phases[0]:
            phases = " ".join(f"{round(phase_map[pattern] / theta):+d}" for phase_map in chained.per_state_phases)
            lines.append(f"  {pattern}  ({phases}) theta")
    lines.append(f"homodyne error at beta={beta:g}: {qubus.homodyne_error(beta, theta):.3e}")
    if theta <= math.pi:
        lines.append(f"min beta for 1e-5: {qubus.min_beta(theta, 1e-5):.6g}")
    text = "\n".join(lines) + "\n"
    if not out_path:
        click.echo(text, nl=False)
        return
    try:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    except OSError as e:
        logger.error(f"Error writing qubus report to {out_path}: {e}")
        click.echo(f"error: cannot write {out_path}", err=True)
        raise SystemExit(1)


# -----------------------------------------
# 6. Monte Carlo Rates
# -----------------------------------------
@click.command("montecarlo")
@_config_options
@click.option("--seed", type=int, default=None, help="Overrides the seed key.")
@click.option("--trials", type=click.IntRange(min=1), default=None, help="Overrides the trials key.")
def montecarlo_rates(config_path, out_path, overrides, seed, trials):
    """Stochastic replica of the rate at F (or at the target operating point)."""
    run, configs = _load(Subcommand.MONTECARLO, config_path, overrides, out_path)
    settings = run.settings
    seed = settings.seed if seed is None else seed
    trials = settings.trials if trials is None else trials

    rows, errors = [], False
    for cfg in configs:
        if settings.F is not None:
            fidelities = list(settings.F)
        else:
            try:
                point = pipeline.operating_point(cfg, settings.target)
            except Exception as e:
                logger.error(f"Error solving operating point for {cfg.code.label}: {e}")
                click.echo(f"row error: {cfg.code.label} k={cfg.rounds}: {e}", err=True)
                errors = True
                continue
            if not point.feasible:
                click.echo(f"infeasible: {cfg.code.label} k={cfg.rounds}; skipping", err=True)
                continue
            fidelities = [point.F]
        for F in fidelities:
            try:
                analytic = pipeline.evaluate_point(cfg, F)
                mc = McConfig(blocks=settings.blocks, rounds=cfg.rounds, trials=trials, seed=seed)
                result = montecarlo.simulate_rate(cfg, F, mc)
                blocks_needed = montecarlo.required_blocks(analytic.P0, cfg.rounds, settings.confidence)
            except Exception as e:
                logger.error(f"Error simulating {cfg.code.label} at F={F}: {e}")
                click.echo(f"row error: {cfg.code.label} k={cfg.rounds} F={F:.6g}: {e}", err=True)
                errors = True
                continue
            row = csv_writer.result_row(replace(analytic, rate_per_memory_hz=result.rate_hz))
            row.update(
                rate_stderr_hz_per_memory=result.stderr_hz,
                trials=result.trials,
                blocks=result.blocks,
                seed=result.seed,
                rng=result.rng,
                required_blocks=blocks_needed,
            )
            rows.append(row)
    _write_rows(rows, out_path, csv_writer.MONTECARLO_COLUMNS)
    if errors:
        raise SystemExit(1)


ANALYSIS_COMMANDS = (rate_sweep, fidelity, operating_point, oracle_verify, qubus_check, montecarlo_rates)
