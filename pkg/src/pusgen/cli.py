"""Command-line interface: ``pusgen fit | inspect | sample | export | check``.

Exit codes: 0 success, 1 user or data error, 2 internal error.
"""

import csv
import hashlib
import io
import json
import sys

import click
import numpy as np

from ._rng import substream
from ._validation import HOURS
from .config import PipelineConfig
from .dataset import component_names, load_csv
from .exceptions import DimensionMismatch, PusError, UnknownCluster
from .model import ScenarioPUSModel, month_proportions
from .multiday import chain_membership, chain_sample, export_chain
from .scenarios import format_key, parse_key, scenario_count_curve


def _writer(stream):
    return csv.writer(stream)


def _load_model(path):
    return ScenarioPUSModel.load(path)


def _target(model, scenario, chain, c=None):
    """Resolve ``--scenario``/``--chain`` into ``(object, is_chain)``."""
    if bool(scenario) == bool(chain):
        raise click.UsageError("give exactly one of --scenario or --chain")
    if scenario:
        key = parse_key(scenario, model.n_groups)
        if not model.is_retained(key):
            click.echo(f"warning: scenario {format_key(key)} is below the probability threshold", err=True)
        return model.scenario(key), False
    keys = [parse_key(k, model.n_groups) for k in chain.split(",")]
    return model.chain(keys, c=c), True


def _columns(model, n_days=None):
    names = component_names(model.standardization_.attribute_names)
    if n_days is None:
        return names
    return [f"d{i}:{n}" for i in range(n_days) for n in names]


@click.group()
def cli():
    """Scenario-indexed polyhedral uncertainty sets from historical hourly data."""


@cli.command()
@click.argument("data", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="TOML configuration.")
@click.option("--model", "model_path", default="model.json", show_default=True, type=click.Path(dir_okay=False))
def fit(data, config_path, model_path):
    """Fit the model on an hourly CSV and write the model file."""
    cfg = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    raw = load_csv(data)
    model = ScenarioPUSModel(**cfg.estimator_params()).fit(raw)
    doc = model.to_dict()
    with open(data, "rb") as fh:
        doc["source_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    with open(model_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, sort_keys=True, indent=1) + "\n")
    sc = model.scenarios_
    click.echo(
        f"fitted {len(model.group_models_)} groups, {len(sc)} scenarios retained "
        f"(dropped mass {sc.dropped_mass:.4f}) -> {model_path}",
        err=True,
    )


def _parse_grid(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise click.BadParameter("grid must be 'start:stop:num' or a comma list")
        return np.linspace(float(parts[0]), float(parts[1]), int(parts[2])).tolist()
    return [float(x) for x in text.split(",") if x.strip()]


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--threshold-curve", "grid", help="Thresholds as 'start:stop:num' or a comma list.")
@click.option("--groups", "show_groups", is_flag=True, help="Per-group summary instead of the scenario table.")
@click.option("--months", is_flag=True, help="Share of each month's days per cluster.")
def inspect(model_path, grid, show_groups, months):
    """Print the scenario table (or another summary) as CSV."""
    model = _load_model(model_path)
    out = _writer(sys.stdout)
    if grid is not None:
        out.writerow(["p_tilde", "n_scenarios"])
        for t, n in scenario_count_curve(model.joint_probabilities_, _parse_grid(grid)):
            out.writerow([repr(t), n])
    elif show_groups:
        out.writerow(["group", "attributes", "dim", "rank", "reduction_factor", "cluster", "probability", "days",
                      "low_sample"])
        names = model.standardization_.attribute_names
        for g in model.group_models_:
            for k in range(g.clusters.n_clusters):
                out.writerow([g.name, " ".join(names[a] for a in g.attributes), g.basis.dim, g.rank,
                              repr(g.reduction_factor), k, repr(float(g.clusters.probabilities[k])),
                              int(g.clusters.counts[k]), int(g.clusters.counts[k] < 8)])
    elif months:
        out.writerow(["group", "cluster", "month", "proportion"])
        for row in month_proportions(model):
            out.writerow([row[0], row[1], row[2], repr(row[3])])
    else:
        out.writerow(["key", "p_hat", "p", "days"])
        for s in model.scenarios_.retained:
            out.writerow([format_key(s.key), repr(s.p_hat), repr(s.p), s.days])


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", help="Scenario key: per-group cluster labels joined by '-', e.g. 0-2-1.")
@click.option("--chain", help="Comma-separated scenario keys, one per day.")
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, help="Defaults to the model's configured seed.")
@click.option("--raw-units", is_flag=True, help="Write physical units instead of standardized values.")
@click.option("--c", "c", type=float, help="Override the continuity parameter for chains.")
@click.option("--max-attempts", type=int, default=1000, show_default=True, help="Chain candidates per day.")
@click.option("--out", "out_path", type=click.Path(dir_okay=False), help="Output CSV (default stdout).")
def sample(model_path, scenario, chain, count, seed, raw_units, c, max_attempts, out_path):
    """Draw realizations from a scenario or chain set as CSV rows."""
    if count < 1:
        raise PusError(f"--count must be >= 1, got {count}")
    model = _load_model(model_path)
    target, is_chain = _target(model, scenario, chain, c)
    base = model.random_state if seed is None else seed
    if is_chain:
        rows = chain_sample(target, count, substream(base, "chain"), max_attempts_per_day=max_attempts)
        verdicts = [chain_membership(target, r) for r in rows]
        cols = _columns(model, target.n_days)
    else:
        rows = target.sample(count, substream(base, "sampler"))
        verdicts = [target.membership(r) for r in rows]
        cols = _columns(model)
    bad = [i for i, v in enumerate(verdicts) if not v]
    if bad:
        raise RuntimeError(f"{len(bad)} sampled rows failed membership (first: row {bad[0]}, {verdicts[bad[0]]})")
    if raw_units:
        d = model.standardization_.dim
        rows = np.hstack([model.destandardize(rows[:, i * d:(i + 1) * d]) for i in range(rows.shape[1] // d)])
    buf = io.StringIO()
    out = _writer(buf)
    out.writerow(["sample"] + cols)
    for i, row in enumerate(rows):
        out.writerow([i] + [repr(float(x)) for x in row])
    _emit(buf.getvalue(), out_path)


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario")
@click.option("--chain")
@click.option("--c", "c", type=float, help="Override the continuity parameter for chains.")
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
def export(model_path, scenario, chain, c, out_path):
    """Write the lifted linear description of a scenario or chain set as JSON."""
    model = _load_model(model_path)
    target, is_chain = _target(model, scenario, chain, c)
    exp = export_chain(target) if is_chain else target.export()
    try:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(exp.to_json(indent=1) + "\n")
    except OSError as exc:
        raise PusError(f"cannot write {out_path}: {exc}") from exc
    click.echo(f"{len(exp.constraints)} constraints over {exp.n_variables} variables -> {out_path}", err=True)


@cli.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario")
@click.option("--chain")
@click.option("--c", "c", type=float, help="Override the continuity parameter for chains.")
@click.option("--raw-units", is_flag=True, help="Profiles are in physical units.")
@click.argument("profiles", type=click.Path(exists=True, dir_okay=False))
def check(model_path, scenario, chain, c, raw_units, profiles):
    """Membership verdict per profile row; exit 0 iff every row is inside."""
    model = _load_model(model_path)
    target, is_chain = _target(model, scenario, chain, c)
    dim = target.dim
    d = model.standardization_.dim
    with open(profiles, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header = rows[0] if rows else []
    skip = 1 if header and header[0] == "sample" else 0
    out = _writer(sys.stdout)
    out.writerow(["row", "verdict", "reason", "detail"])
    all_inside = bool(rows[1:])
    for i, row in enumerate(rows[1:]):
        cells = row[skip:]
        try:
            if len(cells) != dim:
                raise DimensionMismatch(f"{len(cells)} values, expected {dim}")
            try:
                v = np.array([float(x) for x in cells])
            except ValueError:
                raise PusError("non-numeric value") from None
            if not np.all(np.isfinite(v)):
                raise PusError("non-finite value")
            if raw_units:
                v = np.concatenate([model.standardize(v[k:k + d]) for k in range(0, dim, d)])
            verdict = chain_membership(target, v) if is_chain else target.membership(v)
        except PusError as exc:
            all_inside = False
            out.writerow([i, "error", type(exc).__name__, str(exc)])
            continue
        all_inside &= bool(verdict)
        if verdict:
            out.writerow([i, "inside", "", ""])
        else:
            out.writerow([i, "outside", str(verdict)[len("outside("):-1], verdict.detail])
    sys.stdout.flush()
    if not all_inside:
        sys.exit(1)


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="pusgen", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except PusError as exc:
        click.echo(f"error [{exc.module}] {type(exc).__name__}: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error [io] {exc}", err=True)
        return 1
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    except Exception as exc:  # noqa: BLE001
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
