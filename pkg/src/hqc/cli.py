"""Command-line driver.

``hqc run`` clusters the values of one CSV column and writes every artifact
into an output directory; ``hqc synth`` writes synthetic CSV fixtures.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 internal error.
"""

import argparse
import dataclasses
import json
import logging
import os
import shutil
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .data import group_by_value, load_csv, standardize
from .embedding import Embedding2D, embed_dissimilarity
from .engine import ColumnLinkage, TokenSetLinkage, agglomerate, run_hqc
from .estimator import restrict
from .exceptions import ConfigError, DataError, HQCError
from .io import (
    dendrogram_dot,
    dendrogram_json,
    dissimilarity_to_csv,
    embedding_to_csv,
    linkage_to_csv,
    render_dendrogram_svg,
    render_scatter_svg,
    write_text,
)
from .statdist import GAMMA_MODES, KernelConfig, mmd_test

logger = logging.getLogger("hqc")

OUTPUT_DIR_ENV = "HQC_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "hqc_output"
BASELINES = ("none", "jaccard", "overlap", "ks", "ad")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 2, 3, 4


@dataclass
class RunConfig:
    input: str
    label_column: str
    feature_columns: object = "all"
    top_k: int = None
    min_count: int = 2
    gamma_mode: str = "unit_variance_default"
    gamma: float = None
    cap: int = None
    seed: int = 0
    bootstrap_b: int = 0
    output_dir: str = field(default_factory=lambda: os.environ.get(OUTPUT_DIR_ENV,
                                                                   DEFAULT_OUTPUT_DIR))
    baseline: str = "none"

    def validate(self):
        if self.top_k is not None and self.top_k < 2:
            raise ConfigError("top-k must be at least 2")
        if self.min_count < 2:
            raise ConfigError("min-count must be at least 2")
        if self.cap is not None and self.cap < 2:
            raise ConfigError("cap must be at least 2")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.bootstrap_b < 0:
            raise ConfigError("bootstrap-b must be non-negative")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigError(f"gamma-mode must be one of {', '.join(GAMMA_MODES)}")
        if self.gamma_mode == "fixed" and self.gamma is None:
            raise ConfigError("gamma-mode fixed needs --gamma")
        if self.gamma is not None and self.gamma_mode != "fixed":
            raise ConfigError("--gamma is only used with --gamma-mode fixed")
        self.baseline_spec()

    def baseline_spec(self):
        """``(name, column)`` parsed from ``baseline``; column is None for 'none'."""
        name, _, column = self.baseline.partition(":")
        if name not in BASELINES:
            raise ConfigError(f"unknown baseline {self.baseline!r}; "
                              f"use none, jaccard:COL, overlap:COL, ks:COL or ad:COL")
        if name == "none":
            return name, None
        if not column:
            raise ConfigError(f"baseline {name} needs a column, e.g. {name}:COLUMN")
        return name, column


ARTIFACTS = (
    "linkage.csv",
    "dissimilarity.csv",
    "embedding.csv",
    "dendrogram.json",
    "dendrogram.dot",
    "dendrogram.svg",
    "scatter.svg",
)


def _pvalue_csv(dataset, groups, config, b, seed):
    lines = ["label_a,label_b,distance,raw_mmd2,p_value"]
    X = dataset.quantitative
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            res = mmd_test(X[groups[i].row_indices], X[groups[j].row_indices], config, b,
                           seed=[seed, i, j])
            lines.append(",".join([_csv_cell(groups[i].value), _csv_cell(groups[j].value),
                                   repr(res.statistic), repr(res.raw_statistic),
                                   repr(res.p_value)]))
    return "\n".join(lines) + "\n"


def _csv_cell(text):
    if any(c in text for c in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def _baseline_linkage(dataset, name, column):
    if name in ("ks", "ad"):
        if column not in dataset.column_names:
            raise ConfigError(f"baseline column {column!r} is not a selected feature column")
        values = dataset.quantitative[:, dataset.column_names.index(column)]
        return ColumnLinkage(values, name)
    return TokenSetLinkage(dataset.context[column], name)


def compute_artifacts(config):
    """Run the clustering and return ``(files, summary)`` without touching disk."""
    config.validate()
    name, column = config.baseline_spec()
    context = (column,) if name in ("jaccard", "overlap") else ()
    raw = load_csv(config.input, config.label_column, config.feature_columns, context)
    groups = group_by_value(raw, config.top_k, config.min_count)
    data, groups = restrict(raw, groups)
    data = standardize(data)
    kernel = KernelConfig.resolve(config.gamma_mode, config.gamma, data.quantitative, config.seed)
    labels = [g.value for g in groups]
    nodes, records, initial = run_hqc(data, groups, kernel, cap=config.cap, seed=config.seed)

    files = {
        "linkage.csv": linkage_to_csv(records),
        "dissimilarity.csv": dissimilarity_to_csv(initial.entries, labels),
        "dendrogram.json": dendrogram_json(records, labels, [g.count for g in groups]),
        "dendrogram.dot": dendrogram_dot(records, labels),
        "dendrogram.svg": render_dendrogram_svg(records, labels),
    }
    embedding = None
    if len(groups) >= 3:
        embedding = embed_dissimilarity(initial, labels)
        files["embedding.csv"] = embedding_to_csv(embedding)
        files["scatter.svg"] = render_scatter_svg(embedding)
    else:
        logger.warning("fewer than 3 clusters; embedding.csv has no rows")
        files["embedding.csv"] = "label,pc1,pc2\n"
        files["scatter.svg"] = render_scatter_svg(Embedding2D((), np.zeros((0, 2)), (0.0, 0.0)))
    if config.bootstrap_b > 0:
        files["pvalues.csv"] = _pvalue_csv(data, groups, kernel, config.bootstrap_b, config.seed)
    if name != "none":
        linkage = _baseline_linkage(data, name, column)
        _, b_records, b_initial = agglomerate(groups, linkage)
        files["baseline_linkage.csv"] = linkage_to_csv(b_records)
        files["baseline_dissimilarity.csv"] = dissimilarity_to_csv(b_initial.entries, labels)

    summary = {
        "rows_retained": data.n_rows,
        "rows_dropped": raw.dropped_rows,
        "rows_excluded_by_grouping": raw.n_rows - data.n_rows,
        "n_clusters": len(groups),
        "features": list(data.column_names),
        "zero_variance_columns": list(data.zero_variance_columns),
        "gamma": kernel.gamma,
        "explained_variance_ratio": None if embedding is None
        else list(embedding.explained_variance_ratio),
    }
    return files, summary


def run_pipeline(config):
    """Compute every artifact and move them into ``config.output_dir`` atomically.

    Files are written to a temporary directory first; nothing lands in the
    output directory unless the whole run succeeds.

    Returns
    -------
    dict
        The run manifest.
    """
    start = time.perf_counter()
    files, summary = compute_artifacts(config)
    manifest = {
        "version": __version__,
        "config": dataclasses.asdict(config),
        **summary,
        "outputs": sorted([*files, "run_manifest.json"]),
        "wall_time_s": round(time.perf_counter() - start, 3),
    }
    files["run_manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"

    out = os.path.abspath(config.output_dir)
    os.makedirs(out, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".hqc-", dir=out)
    try:
        for fname, text in files.items():
            write_text(os.path.join(tmp, fname), text)
        for fname in files:
            os.replace(os.path.join(tmp, fname), os.path.join(out, fname))
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    logger.info("wrote %d files to %s in %.1f s", len(files), out, manifest["wall_time_s"])
    return manifest


def _feature_list(text):
    if text == "all":
        return "all"
    cols = [c.strip() for c in text.split(",") if c.strip()]
    if not cols:
        raise argparse.ArgumentTypeError("empty feature column list")
    return cols


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hqc",
        description="Hierarchical clustering of qualitative values by the MMD "
                    "between their conditional quantitative distributions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cluster the values of a CSV column")
    run.add_argument("--input", required=True, help="CSV file with a header row")
    run.add_argument("--label-column", required=True, help="qualitative column to cluster")
    run.add_argument("--feature-columns", type=_feature_list, default="all",
                     help="comma-separated quantitative columns, or 'all' (default)")
    run.add_argument("--top-k", type=int, default=None,
                     help="keep only the K most frequent values")
    run.add_argument("--min-count", type=int, default=2,
                     help="drop values with fewer rows (default 2)")
    run.add_argument("--gamma-mode", choices=GAMMA_MODES, default="unit_variance_default")
    run.add_argument("--gamma", type=float, default=None, help="RBF gamma for --gamma-mode fixed")
    run.add_argument("--cap", type=int, default=None, help="max rows per cluster sample")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--bootstrap-b", type=int, default=0,
                     help="permutation resamples for pairwise p-values (0 = off)")
    run.add_argument("--output-dir", default=None,
                     help=f"default: ${OUTPUT_DIR_ENV} or ./{DEFAULT_OUTPUT_DIR}")
    run.add_argument("--baseline", default="none",
                     help="extra comparison run: jaccard:COL, overlap:COL, ks:COL or ad:COL")

    synth = sub.add_parser("synth", help="write a synthetic CSV fixture")
    synth.add_argument("kind", choices=("planted", "nonmonotone", "many"))
    synth.add_argument("--output", required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--groups", type=int, default=30, help="for 'many'")
    synth.add_argument("--rows", type=int, default=11500, help="for 'many'")
    synth.add_argument("--features", type=int, default=14, help="for 'many'")
    return parser


def _config_from_args(args):
    values = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)
              if f.name != "output_dir"}
    cfg = RunConfig(**values)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    return cfg


def _synth(args):
    from . import synthetic

    if args.kind == "planted":
        X, y = synthetic.planted_groups(seed=args.seed)
    elif args.kind == "nonmonotone":
        X, y = synthetic.nonmonotone_groups(seed=args.seed)
    else:
        X, y = synthetic.many_groups(args.groups, args.rows, args.features, seed=args.seed)
    synthetic.write_csv(args.output, X, y)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.command == "synth":
            _synth(args)
        else:
            run_pipeline(_config_from_args(args))
    except ConfigError as exc:
        print(f"hqc: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"hqc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except HQCError as exc:
        print(f"hqc: error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 4
        logger.debug("internal error", exc_info=True)
        print(f"hqc: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
