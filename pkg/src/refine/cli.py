"""Command-line entry points: data preparation, experiments, exports, server."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .data import (
    Dataset,
    DatasetSplit,
    load_features,
    load_manifest,
    read_feature_matrix,
    split_dataset,
    write_feature_matrix,
    write_manifest,
)
from .errors import RefineError
from .export import export_class_dataset, export_pairs, write_class_manifest, write_pairs_csv
from .groups import GroupStore, load_events
from .pca import PcaReducer
from .session import SessionConfig, WeightMode
from .simulate import (
    generate_synthetic,
    run_baseline,
    run_grouping_experiment,
    run_sampling_protocol,
)


def _load_dataset(manifest: str, features: str | None) -> Dataset:
    dataset = load_manifest(manifest)
    if features:
        dataset = load_features(features, dataset)
    return dataset


def _session_config(scope, max_iterations, delta, weight_mode, grouping, seed) -> SessionConfig:
    return SessionConfig(
        scope=scope,
        max_iterations=max_iterations,
        delta=delta,
        weight_mode=WeightMode(weight_mode),
        grouping_enabled=grouping,
        rng_seed=seed,
    )


def _write_report(report, path: str) -> None:
    Path(path).write_text(report.to_json(), encoding="utf-8")
    click.echo(f"report written to {path}")


session_options = [
    click.option("--scope", default=20, show_default=True, help="Relevant items the user wants."),
    click.option("--max-iterations", default=6, show_default=True),
    click.option("--delta", default=1e-6, show_default=True, help="Floor for the std-ratio denominator."),
    click.option(
        "--weight-mode",
        type=click.Choice([m.value for m in WeightMode]),
        default=WeightMode.DISCRIMINANT.value,
        show_default=True,
    ),
    click.option("--seed", default=0, show_default=True),
]


def with_session_options(fn):
    for option in reversed(session_options):
        fn = option(fn)
    return fn


@click.group()
def main() -> None:
    """Relevance-feedback retrieval engine."""


@main.group()
def data() -> None:
    """Dataset loading, splitting, reduction, synthesis."""


@data.command("split")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", type=click.Path(exists=True), help="Validated when given; labels suffice for splitting.")
@click.option("--seed", default=0, show_default=True)
@click.option("--test-per-label", default=1, show_default=True)
@click.option("--validation", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(), help="Directory for split.json.")
def data_split(manifest, features, seed, test_per_label, validation, out):
    """Partition a dataset into test / validation / retrieval lists."""
    dataset = _load_dataset(manifest, features)
    split = split_dataset(dataset, seed, test_per_label, validation)
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "split.json"
    path.write_text(json.dumps(split.to_dict(), indent=2) + "\n", encoding="utf-8")
    click.echo(
        f"split written to {path} "
        f"(test={len(split.test)}, validation={len(split.validation)}, "
        f"retrieval_db={len(split.retrieval_db)})"
    )


@data.command("pca")
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--k", default=100, show_default=True, help="Components; clamped to min(rows-1, cols).")
@click.option("--out", required=True, type=click.Path(), help="Reduced FVEC1 feature file.")
@click.option("--model-out", type=click.Path(), help="Optional path for the fitted model.")
def data_pca(features, k, out, model_out):
    """Reduce a feature file to its top principal components."""
    matrix = read_feature_matrix(features)
    reducer = PcaReducer(n_components=k, clamp=True).fit(matrix)
    write_feature_matrix(reducer.transform(matrix), out)
    click.echo(f"reduced {matrix.shape[0]}x{matrix.shape[1]} -> k={reducer.components_.shape[0]} at {out}")
    if model_out:
        reducer.save(model_out)
        click.echo(f"model written to {model_out}")


@data.command("synth")
@click.option("--labels", default=10, show_default=True)
@click.option("--per-label", default=100, show_default=True)
@click.option("--dim", default=32, show_default=True)
@click.option("--separation", default=10.0, show_default=True)
@click.option("--noise", default=1.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out-manifest", required=True, type=click.Path())
@click.option("--out-features", required=True, type=click.Path())
def data_synth(labels, per_label, dim, separation, noise, seed, out_manifest, out_features):
    """Generate a synthetic clustered dataset for desk-scale experiments."""
    dataset = generate_synthetic(labels, per_label, dim, separation, noise, seed)
    write_manifest(dataset, out_manifest)
    write_feature_matrix(dataset.features, out_features)
    click.echo(f"{len(dataset)} items x {dataset.dim} dims -> {out_manifest}, {out_features}")


@main.group()
def groups() -> None:
    """Inspect and export the persistent group store."""


@groups.command("export")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
def groups_export(store_path, out):
    """Rewrite a group store in canonical form."""
    GroupStore.load(store_path).save(out)
    click.echo(f"groups written to {out}")


@groups.command("stats")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
def groups_stats(store_path):
    """Print group count and size histogram."""
    store = GroupStore.load(store_path)
    click.echo(f"groups: {store.group_count}")
    click.echo(f"grouped items: {len(store)}")
    click.echo(f"generation: {store.generation}")
    for size, count in store.size_histogram().items():
        click.echo(f"  size {size}: {count}")


@main.group(name="export")
def export_group() -> None:
    """Export feedback-derived training datasets."""


@export_group.command("pairs")
@click.option("--events", "events_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--manifest", type=click.Path(exists=True), help="Adds thumbnail sidecar columns.")
def export_pairs_cmd(events_path, out, manifest):
    """Similar/dissimilar item pairs from a feedback-event log."""
    events = load_events(events_path)
    records = export_pairs(events)
    thumbnails = None
    if manifest:
        dataset = load_manifest(manifest)
        thumbnails = {item.id: item.thumbnail for item in dataset.items}
    write_pairs_csv(records, out, thumbnails=thumbnails)
    similar = sum(1 for r in records if r.label == 1)
    click.echo(f"{len(records)} pairs ({similar} similar) written to {out}")


@export_group.command("classes")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--min-size", default=10, show_default=True)
@click.option("--val-fraction", default=0.2, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path())
def export_classes_cmd(store_path, min_size, val_fraction, seed, out):
    """Per-group train/validation manifest from the group store."""
    store = GroupStore.load(store_path)
    manifest = export_class_dataset(store, min_size=min_size, val_fraction=val_fraction, seed=seed)
    write_class_manifest(manifest, out)
    click.echo(
        f"{len(manifest.groups)} groups exported, {len(manifest.pruned_groups)} pruned -> {out}"
    )


@main.group()
def sim() -> None:
    """Reproducible oracle-driven experiments."""


def _split_for(dataset, seed, test_per_label, validation) -> DatasetSplit:
    return split_dataset(dataset, seed, test_per_label, validation)


@sim.command("baseline")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@with_session_options
@click.option("--test-per-label", default=1, show_default=True)
@click.option("--validation", default=0, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
def sim_baseline(manifest, features, scope, max_iterations, delta, weight_mode, seed,
                 test_per_label, validation, report_path):
    """Feedback sessions without grouping over the test queries."""
    dataset = _load_dataset(manifest, features)
    cfg = _session_config(scope, max_iterations, delta, weight_mode, False, seed)
    split = _split_for(dataset, seed, test_per_label, validation)
    report = run_baseline(dataset, split.retrieval_db, split.test, cfg)
    _write_report(report, report_path)
    click.echo(
        f"mean accuracy {report.baseline['mean_accuracy']:.4f}, "
        f"mean RF iterations {report.baseline['mean_rf_iteration_number']:.2f}"
    )


@sim.command("grouping")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@with_session_options
@click.option("--test-per-label", default=1, show_default=True)
@click.option("--validation", default=200, show_default=True)
@click.option("--checkpoints", default=5, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), help="Checkpoint trajectory as CSV.")
def sim_grouping(manifest, features, scope, max_iterations, delta, weight_mode, seed,
                 test_per_label, validation, checkpoints, report_path, csv_path):
    """Group-memory trajectory over a stream of validation queries."""
    dataset = _load_dataset(manifest, features)
    cfg = _session_config(scope, max_iterations, delta, weight_mode, True, seed)
    split = _split_for(dataset, seed, test_per_label, validation)
    report = run_grouping_experiment(dataset, split, cfg, checkpoints=checkpoints)
    _write_report(report, report_path)
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["after_queries", "mean_accuracy", "mean_rf_iteration_number", "group_count"]
            )
            for entry in report.checkpoints:
                writer.writerow(
                    [
                        entry["after_queries"],
                        entry["mean_accuracy"],
                        entry["mean_rf_iteration_number"],
                        entry["group_count"],
                    ]
                )
        click.echo(f"trajectory written to {csv_path}")
    final = report.checkpoints[-1]
    click.echo(
        f"baseline iterations {report.baseline['mean_rf_iteration_number']:.2f} -> "
        f"final {final['mean_rf_iteration_number']:.2f} with {final['group_count']} groups"
    )


@sim.command("sampling")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@with_session_options
@click.option(
    "--fractions",
    default="0,0.05,0.1,0.3,0.5,0.7,0.9,1.0",
    show_default=True,
    help="Comma-separated query-sample fractions in [0, 1].",
)
@click.option(
    "--swap",
    "swaps",
    multiple=True,
    help="FRACTION=FEATURES_FILE; evaluation features for that fraction (repeatable).",
)
@click.option("--pairs-dir", type=click.Path(), help="Directory for per-fraction pair CSVs.")
@click.option("--report", "report_path", required=True, type=click.Path())
@click.option("--csv", "csv_path", type=click.Path(), help="Precision table as CSV.")
def sim_sampling(manifest, features, scope, max_iterations, delta, weight_mode, seed,
                 fractions, swaps, pairs_dir, report_path, csv_path):
    """Precision versus the fraction of database images used as queries."""
    dataset = _load_dataset(manifest, features)
    cfg = _session_config(scope, max_iterations, delta, weight_mode, False, seed)
    fraction_values = [float(x) for x in fractions.split(",") if x.strip() != ""]
    encoder_swaps = {}
    for spec_item in swaps:
        fraction_text, _, path = spec_item.partition("=")
        if not path:
            raise click.BadParameter(f"--swap expects FRACTION=PATH, got {spec_item!r}")
        encoder_swaps[float(fraction_text)] = path
    if pairs_dir:
        Path(pairs_dir).mkdir(parents=True, exist_ok=True)
    report = run_sampling_protocol(
        dataset, fraction_values, cfg, encoder_swaps=encoder_swaps, pairs_dir=pairs_dir
    )
    _write_report(report, report_path)
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["Sample (%)", "Overall Precision (%)", "In Sample Precision (%)", "Out of Sample Precision (%)"]
            )
            for row in report.fractions:
                def pct(value):
                    return "-" if value is None else f"{100 * value:.2f}"
                writer.writerow(
                    [
                        f"{row['sample_percent']:g}",
                        pct(row["overall_precision"]),
                        pct(row["in_sample_precision"]),
                        pct(row["out_of_sample_precision"]),
                    ]
                )
        click.echo(f"precision table written to {csv_path}")


@main.command("serve")
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--features", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--store", "store_path", type=click.Path(), help="Group store persisted here.")
@click.option("--events", "events_path", type=click.Path(), help="Feedback-event log (JSON lines).")
@click.option("--thumbnail-root", type=click.Path(exists=True))
@click.option("--ui-root", type=click.Path(exists=True), help="Static web UI build directory.")
@with_session_options
@click.option("--grouping/--no-grouping", default=True, show_default=True)
def serve_cmd(manifest, features, host, port, store_path, events_path, thumbnail_root, ui_root,
              scope, max_iterations, delta, weight_mode, seed, grouping):
    """Serve the HTTP API (and optionally the web UI)."""
    from .server import serve

    dataset = _load_dataset(manifest, features)
    cfg = _session_config(scope, max_iterations, delta, weight_mode, grouping, seed)
    click.echo(f"serving {len(dataset)} items on http://{host}:{port}")
    serve(
        dataset,
        cfg,
        host=host,
        port=port,
        store_path=store_path,
        events_path=events_path,
        thumbnail_root=thumbnail_root,
        ui_root=ui_root,
    )


def run() -> None:
    try:
        main(standalone_mode=True)
    except RefineError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    run()
