"""Batch entry points: impute, evaluate, layout, synth, serve.

Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.  The
report-style commands (impute, evaluate) write a rendered figure next to
their delimited output; layout can add an SVG of the scene.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from .cluster import ClusterLabels, dbscan, knee_eps
from .embedding import read_embedding_csv
from .errors import DataError, SparseScopeError, UsageError
from .evaluate import IMPUTERS, booster_spec, comparison_table, knn_spec, mean_spec
from .boost import BoostParams
from .impute import CamiParams, cami_impute
from .figures import comparison_figure, missingness_figure
from .layout.sampling import density_sample
from .layout.scene import SceneParams, assemble_scene, save_scene, write_scene_svg
from .synth import SynthSpec, synth_generate
from .table import dump_csv, load_csv, missing_stats


def _parse_pairs(pairs) -> dict:
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise UsageError(f"expected key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _merged_params(config_path, pairs) -> dict:
    """Config-file values with --params overrides, all as strings."""
    from .service import load_config

    merged = load_config(config_path) if config_path else {}
    merged.update(_parse_pairs(pairs))
    return merged


def _common(f):
    f = click.option("--config", "config_path", type=click.Path(path_type=Path), default=None)(f)
    f = click.option("--seed", type=int, default=None)(f)
    f = click.option("--params", "params", multiple=True, help="key=value (repeatable)")(f)
    return f


@click.group()
def cli():
    """Sparse-tabular exploration toolkit."""


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@_common
def impute(input_path, output_path, config_path, seed, params):
    """Fill missing cells; write CSV, audit JSON, and a missingness figure."""
    p = _merged_params(config_path, params)
    cp = CamiParams(
        a=float(p.get("a", 0.6)),
        b=float(p.get("b", 0.6)),
        c=int(p.get("c", 5)),
        d=int(p.get("d", 5)),
    )
    table = load_csv(Path(input_path).read_text(encoding="utf-8"))
    filled, _, report = cami_impute(table, cp)
    output_path.write_text(dump_csv(filled), encoding="utf-8")
    report_path = output_path.with_suffix(".report.json")
    report_path.write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
    figure_path = missingness_figure(missing_stats(table), output_path.with_suffix(".missingness.png"))
    click.echo(f"wrote {output_path}, {report_path}, {figure_path}")


@cli.command()
@click.option("--input", "input_path", type=click.Path(path_type=Path), default=None)
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@click.option("--synth", "synth_pairs", multiple=True, help="generate input: rows/cols/correlation/missing")
@_common
def evaluate(input_path, output_path, synth_pairs, config_path, seed, params):
    """Score imputer x predictor MAPE on held-out cells; write CSV + figure."""
    p = _merged_params(config_path, params)
    if seed is None:
        seed = int(p.get("seed", 0))
    if input_path is not None:
        masked = load_csv(Path(input_path).read_text(encoding="utf-8"))
    else:
        sp = _parse_pairs(synth_pairs)
        spec = SynthSpec(
            n_rows=int(sp.get("rows", p.get("rows", 200))),
            n_cols=int(sp.get("cols", p.get("cols", 8))),
            correlation=float(sp.get("correlation", p.get("correlation", 0.0))),
            missing_fraction=float(sp.get("missing", p.get("missing", 0.2))),
            seed=seed,
        )
        _, masked = synth_generate(spec)
    target = p.get("target", masked.names[-1])
    predictors = [
        booster_spec(params=BoostParams(stages=int(p.get("stages", 300)), seed=seed)),
        mean_spec(),
        knn_spec(),
    ]
    grid = comparison_table(
        masked, target, predictors, repeats=int(p.get("repeats", 5)), seed=seed
    )
    model_names = [m.name for m in predictors]
    lines = ["imputer," + ",".join(model_names)]
    for imputer in IMPUTERS:
        row = grid[imputer]
        lines.append(imputer + "," + ",".join(format(row[m], ".10g") for m in model_names))
    output_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    figure_path = comparison_figure(grid, output_path.with_suffix(".png"), target=target)
    click.echo(f"wrote {output_path}, {figure_path}")


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(path_type=Path))
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@click.option("--svg", is_flag=True, default=False)
@_common
def layout(input_path, output_path, svg, config_path, seed, params):
    """Cluster an embedding and build the glyph scene JSON (optionally SVG)."""
    p = _merged_params(config_path, params)
    if seed is None:
        seed = int(p.get("seed", 0))
    ids, points = read_embedding_csv(Path(input_path).read_text(encoding="utf-8"))
    min_pts = int(p.get("min_pts", 4))
    if points.shape[0] <= min_pts + 1:
        labels = ClusterLabels(
            labels=np.zeros(points.shape[0], dtype=int), n_clusters=1, sizes=(points.shape[0],)
        )
    else:
        eps = float(p["eps"]) if "eps" in p else knee_eps(points, k=min(4, points.shape[0] - 1))
        labels = dbscan(points, eps=eps, min_pts=min_pts)
        if labels.n_clusters == 0:
            # nothing dense enough: lay the whole set out as one region
            labels = ClusterLabels(
                labels=np.zeros(points.shape[0], dtype=int), n_clusters=1, sizes=(points.shape[0],)
            )
    sample = density_sample(points, labels, target=int(p.get("target", 100)), seed=seed)
    kept = sample.kept_indices()
    sub = labels.labels[kept]
    sizes = tuple(int(np.sum(sub == c)) for c in range(labels.n_clusters))
    weights = {c: float(labels.sizes[c]) for c in range(labels.n_clusters)}
    scene = assemble_scene(
        points[kept],
        ClusterLabels(labels=sub, n_clusters=labels.n_clusters, sizes=sizes),
        weights=weights,
        params=SceneParams(
            buffer_radius=float(p.get("buffer_radius", 0.04)),
            glyph_radius=float(p.get("glyph_radius", 0.012)),
        ),
    )
    save_scene(scene, output_path)
    written = [str(output_path)]
    if svg:
        svg_path = output_path.with_suffix(".svg")
        write_scene_svg(scene, svg_path)
        written.append(str(svg_path))
    click.echo("wrote " + ", ".join(written))


@cli.command()
@click.option("--output", "output_path", required=True, type=click.Path(path_type=Path))
@_common
def synth(output_path, config_path, seed, params):
    """Generate a (truth, masked) dataset pair."""
    p = _merged_params(config_path, params)
    if seed is None:
        seed = int(p.get("seed", 0))
    spec = SynthSpec(
        n_rows=int(p.get("rows", 200)),
        n_cols=int(p.get("cols", 8)),
        correlation=float(p.get("correlation", 0.0)),
        missing_fraction=float(p.get("missing", 0.2)),
        seed=seed,
    )
    truth, masked = synth_generate(spec)
    base = output_path.with_suffix("") if output_path.suffix == ".csv" else output_path
    truth_path = base.parent / (base.name + ".truth.csv")
    masked_path = base.parent / (base.name + ".masked.csv")
    truth_path.write_text(dump_csv(truth), encoding="utf-8")
    masked_path.write_text(dump_csv(masked), encoding="utf-8")
    click.echo(f"wrote {truth_path}, {masked_path}")


@cli.command()
@_common
def serve(config_path, seed, params):
    """Run the HTTP session service until interrupted."""
    from .service import serve as run_service

    p = _parse_pairs(params)
    port = int(p["port"]) if "port" in p else None
    run_service(config_path, port=port)


def main(argv=None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, prog_name="sparsescope")
        return 0
    except click.exceptions.Exit as e:  # --help and friends
        return int(e.exit_code)
    except click.ClickException as e:
        e.show()
        return 1
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except UsageError as e:
        click.echo(f"usage error: {e}", err=True)
        return 1
    except DataError as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except OSError as e:
        click.echo(f"data error: {e}", err=True)
        return 2
    except SparseScopeError as e:
        click.echo(f"error: {e}", err=True)
        return 3
    except Exception as e:  # noqa: BLE001 - the CLI boundary reports, not raises
        click.echo(f"internal error: {e}", err=True)
        return 3


if __name__ == "__main__":
    sys.exit(main())
