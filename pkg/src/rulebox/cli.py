"""Command line front end.

Subcommands:

* ``extract``      full pipeline: model -> contributions -> factorization
                   -> rules -> fidelity reports
* ``ksweep``       re-factorize shared contribution matrices for several
                   ranks and tabulate macro F1 per rank
* ``purity``       cluster embedded explanations for several cluster
                   counts and tabulate purity statistics
* ``train-model``  train the builtin forest and report its accuracy
* ``explain-dump`` export the feature catalog and contribution matrices
* ``render``       turn a structured report back into readable text

Every run is driven by a config file plus per-field override flags;
environment variables are never consulted.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from .blackbox import ForestConfig, connect_oracle, train_forest
from .config import RunConfig, _parse_value, apply_overrides, load_config
from .errors import ConfigError, ParseError, RuleboxError
from .evaluation import build_report, purity_summary, render_report, parse_structured_report
from .explain import PerturbationConfig, build_contribution_matrices
from .factorization import nmf, stack_nonnegative
from .features import build_catalog, load_catalog, save_catalog
from .matrixio import load_contribution_matrix, save_contribution_matrix
from .rules import search_params, cluster_embeddings
from .tabular import LabeledDataset, label_with, load_dataset, split

DUMP_FORMAT = "rulebox-dump"
DUMP_VERSION = 1


def _merged_config(args) -> RunConfig:
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    else:
        cfg = RunConfig()
    overrides = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    return apply_overrides(cfg, overrides).validate()


def _perturbation_config(cfg: RunConfig) -> PerturbationConfig:
    return PerturbationConfig(num_samples=cfg.num_samples,
                              kernel_width=cfg.kernel_width,
                              ridge_strength=cfg.ridge_strength,
                              seed=cfg.explain_seed)


def _check_rank(k: int, num_features: int, num_instances: int):
    limit = min(2 * num_features, num_instances)
    if k > limit:
        raise ConfigError(
            f"k = {k} violates k <= min(2M, N) = {limit} "
            f"(M = {num_features} features, N = {num_instances} instances)")


def _build_model(cfg: RunConfig, train):
    if cfg.model == "forest":
        forest_config = ForestConfig(num_trees=cfg.num_trees, max_depth=cfg.max_depth,
                                     min_leaf=cfg.min_leaf,
                                     features_per_split=cfg.features_per_split,
                                     seed=cfg.forest_seed)
        model = train_forest(train, forest_config)
        return model, model.describe()
    model = connect_oracle(cfg.oracle_command, cfg.num_categories,
                           train.num_attributes, timeout=cfg.oracle_timeout)
    return model, f"oracle(command={cfg.oracle_command!r}, categories={cfg.num_categories})"


def _prepare_matrices(cfg: RunConfig, quiet=False):
    """Shared front half of the pipeline: data -> model -> contributions."""
    dataset = load_dataset(cfg.dataset, delimiter=cfg.delimiter,
                           label_column=cfg.label_column, has_header=cfg.has_header)
    train, test = split(dataset, cfg.train_fraction, cfg.split_seed)
    model, descriptor = _build_model(cfg, train)
    train_labeled = label_with(train, model)
    test_labeled = label_with(test, model)
    catalog = build_catalog(train, cfg.q)
    categories = range(1, train_labeled.num_categories + 1)
    if not quiet:
        print(f"model: {descriptor}")
        print(f"features: M = {catalog.size} over {train.num_attributes} attributes; "
              f"train N = {train.num_rows}, test N = {test.num_rows}")
    matrices = build_contribution_matrices(model, catalog, train_labeled,
                                           categories, _perturbation_config(cfg))
    if cfg.model == "oracle":
        model.close()
    return train_labeled, test_labeled, catalog, matrices, descriptor


def _extract_all(cfg: RunConfig, catalog, matrices, train_labeled, k: int):
    """Back half: factorize each category and search extraction params."""
    _check_rank(k, catalog.size, train_labeled.dataset.num_rows)
    explanations = {}
    params = {}
    for category in sorted(matrices):
        stacked = stack_nonnegative(matrices[category])
        factorization = nmf(stacked.values, k, max_iters=cfg.nmf_max_iters,
                            tol=cfg.nmf_tol, seed=cfg.nmf_seed)
        best_params, explanation = search_params(
            factorization, stacked.labels, catalog, train_labeled.dataset.rows,
            r_max=cfg.r_max, theta_grid=cfg.theta_grid, seed=cfg.cluster_seed,
            restarts=cfg.kmeans_restarts, category=category)
        explanations[category] = explanation
        params[category] = best_params
    return explanations, params


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_dump(out: Path, cfg: RunConfig, catalog, matrices, descriptor,
                train_labeled: LabeledDataset):
    out.mkdir(parents=True, exist_ok=True)
    save_catalog(catalog, out / "catalog.txt")
    for category, matrix in matrices.items():
        save_contribution_matrix(out / f"matrix_c{category}.txt", matrix)
    manifest = {
        "format": DUMP_FORMAT,
        "version": DUMP_VERSION,
        "model": descriptor,
        "num_categories": train_labeled.num_categories,
        "attribute_names": list(train_labeled.dataset.attribute_names),
        "category_names": list(train_labeled.category_names),
        "dataset": cfg.dataset,
        "label_column": cfg.label_column,
        "delimiter": cfg.delimiter,
        "has_header": cfg.has_header,
        "train_fraction": cfg.train_fraction,
        "split_seed": cfg.split_seed,
    }
    _write(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_dump(dump_dir: Path):
    """Rebuild the pipeline front half from an explain-dump directory."""
    with open(dump_dir / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if manifest.get("format") != DUMP_FORMAT or manifest.get("version") != DUMP_VERSION:
        raise ParseError(f"{dump_dir}: not a rulebox dump directory")
    dataset = load_dataset(manifest["dataset"], delimiter=manifest["delimiter"],
                           label_column=manifest["label_column"],
                           has_header=manifest["has_header"])
    train, _ = split(dataset, manifest["train_fraction"], manifest["split_seed"])
    catalog = load_catalog(dump_dir / "catalog.txt", train.attribute_names)
    num_categories = manifest["num_categories"]
    matrices = {}
    member_of = np.zeros(train.num_rows, dtype=int)
    claimed = 0
    for category in range(1, num_categories + 1):
        matrix = load_contribution_matrix(dump_dir / f"matrix_c{category}.txt")
        if matrix.target_category != category:
            raise ParseError(f"matrix_c{category}.txt targets {matrix.target_category}")
        if matrix.values.shape[1] != train.num_rows:
            raise ParseError(f"matrix_c{category}.txt has {matrix.values.shape[1]} "
                             f"columns for {train.num_rows} training rows")
        member_of[matrix.labels] = category
        claimed += int(matrix.labels.sum())
        matrices[category] = matrix
    if claimed != train.num_rows or (member_of == 0).any():
        raise ParseError("dump labels do not partition the training instances")
    train_labeled = LabeledDataset(train, member_of,
                                   tuple(manifest["category_names"]))
    return train_labeled, catalog, matrices, manifest["model"]


def _print_report(report):
    for m in report.per_category:
        print(f"  category {m.category}: F1 {m.f1:.4f} "
              f"({m.rectangle_count} rectangles)")
    print(f"  macro F1 ({report.dataset_split}): {report.macro_f1:.4f}")


def cmd_extract(args) -> int:
    stage = "config"
    try:
        cfg = _merged_config(args)
        out = Path(cfg.out_dir)
        started = time.monotonic()
        if args.reuse_matrices:
            stage = "reuse"
            train_labeled, catalog, matrices, descriptor = _load_dump(
                Path(args.reuse_matrices))
            test_labeled = None
        else:
            stage = "contributions"
            train_labeled, test_labeled, catalog, matrices, descriptor = \
                _prepare_matrices(cfg)
            if args.dump_matrices:
                _write_dump(out, cfg, catalog, matrices, descriptor, train_labeled)
        stage = "extraction"
        explanations, params = _extract_all(cfg, catalog, matrices, train_labeled,
                                            cfg.k)
        stage = "report"
        train_report = build_report(explanations, train_labeled, "train", descriptor)
        names = catalog.attribute_names
        categories = train_labeled.category_names
        _write(out / "ruleset.json",
               render_report(train_report, explanations, "structured", names,
                             categories, params))
        documents = [render_report(train_report, explanations, "text", names,
                                   categories, params)]
        print("train fidelity:")
        _print_report(train_report)
        if test_labeled is not None:
            test_report = build_report(explanations, test_labeled, "test", descriptor)
            _write(out / "report_test.json",
                   render_report(test_report, explanations, "structured", names,
                                 categories, params))
            documents.append(render_report(test_report, explanations, "text", names,
                                           categories, params))
            print("test fidelity:")
            _print_report(test_report)
        _write(out / "report.txt", "\n".join(documents))
        print(f"wrote {out / 'ruleset.json'} ({time.monotonic() - started:.1f}s)")
        return 0
    except RuleboxError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_ksweep(args) -> int:
    stage = "config"
    try:
        cfg = _merged_config(args)
        k_values = [int(part) for part in args.k_values.split(",")]
        stage = "contributions"
        train_labeled, test_labeled, catalog, matrices, descriptor = \
            _prepare_matrices(cfg)
        rows = []
        for k in k_values:
            try:
                explanations, _ = _extract_all(cfg, catalog, matrices,
                                               train_labeled, k)
                train_f1 = build_report(explanations, train_labeled, "train",
                                        descriptor).macro_f1
                test_f1 = build_report(explanations, test_labeled, "test",
                                       descriptor).macro_f1
                rows.append({"k": k, "failed": False, "macro_f1_train": train_f1,
                             "macro_f1_test": test_f1})
            except RuleboxError as exc:
                rows.append({"k": k, "failed": True, "error": str(exc)})
        stage = "report"
        lines = [f"{'k':>4}  {'train F1':>9}  {'test F1':>9}"]
        for row in rows:
            if row["failed"]:
                lines.append(f"{row['k']:>4}  failed: {row['error']}")
            else:
                lines.append(f"{row['k']:>4}  {row['macro_f1_train']:>9.4f}  "
                             f"{row['macro_f1_test']:>9.4f}")
        table = "\n".join(lines) + "\n"
        print(table, end="")
        out = Path(cfg.out_dir)
        _write(out / "ksweep.txt", table)
        _write(out / "ksweep.json",
               json.dumps({"model": descriptor, "rows": rows},
                          indent=2, sort_keys=True) + "\n")
        return 0
    except RuleboxError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def purity_pool(stacked_by_category, k: int, r_values, seeds, restarts: int = 10,
                nmf_max_iters: int = 500, nmf_tol: float = 1e-5):
    """Cluster every category's embedded explanations at each r and seed.

    Each sweep seed re-runs both the factorization and the clustering, so
    the spread reflects every stochastic stage downstream of the
    contribution matrices.  Returns {r: [Clustering, ...]} pooled over
    categories and seeds, ready for purity_summary.
    """
    pooled = {r: [] for r in r_values}
    for seed in seeds:
        for stacked in stacked_by_category.values():
            factorization = nmf(stacked.values, k, max_iters=nmf_max_iters,
                                tol=nmf_tol, seed=seed)
            for r in r_values:
                pooled[r].append(cluster_embeddings(
                    factorization.H, stacked.labels, r, restarts, seed))
    return pooled


def cmd_purity(args) -> int:
    stage = "config"
    try:
        cfg = _merged_config(args)
        r_values = [int(part) for part in args.r_values.split(",")]
        seeds = [int(part) for part in args.seeds.split(",")]
        if min(r_values) < 1:
            raise ConfigError("r values must be >= 1")
        stage = "contributions"
        train_labeled, _, catalog, matrices, descriptor = _prepare_matrices(cfg)
        stage = "clustering"
        _check_rank(cfg.k, catalog.size, train_labeled.dataset.num_rows)
        stacked_by_category = {category: stack_nonnegative(matrices[category])
                               for category in sorted(matrices)}
        pooled = purity_pool(stacked_by_category, cfg.k, r_values, seeds,
                             restarts=cfg.kmeans_restarts,
                             nmf_max_iters=cfg.nmf_max_iters,
                             nmf_tol=cfg.nmf_tol)
        summary = purity_summary(pooled)
        stage = "report"
        lines = [f"{'r':>4}  {'median':>8}  {'mean':>8}  {'min':>8}"]
        for r in sorted(summary):
            median, mean, minimum = summary[r]
            lines.append(f"{r:>4}  {median:>8.4f}  {mean:>8.4f}  {minimum:>8.4f}")
        table = "\n".join(lines) + "\n"
        print(table, end="")
        out = Path(cfg.out_dir)
        _write(out / "purity.txt", table)
        _write(out / "purity.json", json.dumps(
            {"model": descriptor, "seeds": seeds,
             "rows": [{"r": r, "median": summary[r][0], "mean": summary[r][1],
                       "min": summary[r][2]} for r in sorted(summary)]},
            indent=2, sort_keys=True) + "\n")
        return 0
    except RuleboxError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_train_model(args) -> int:
    stage = "config"
    try:
        cfg = _merged_config(args)
        if cfg.model != "forest":
            raise ConfigError("train-model requires the builtin forest model")
        stage = "train"
        dataset = load_dataset(cfg.dataset, delimiter=cfg.delimiter,
                               label_column=cfg.label_column,
                               has_header=cfg.has_header)
        train, test = split(dataset, cfg.train_fraction, cfg.split_seed)
        model, descriptor = _build_model(cfg, train)
        train_acc = float(np.mean(model.predict(train.rows) == train.source_labels))
        test_acc = float(np.mean(model.predict(test.rows) == test.source_labels))
        print(descriptor)
        print(f"train accuracy: {train_acc:.4f}")
        print(f"test accuracy: {test_acc:.4f}")
        return 0
    except RuleboxError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_explain_dump(args) -> int:
    stage = "config"
    try:
        cfg = _merged_config(args)
        stage = "contributions"
        train_labeled, _, catalog, matrices, descriptor = _prepare_matrices(cfg)
        stage = "dump"
        out = Path(cfg.out_dir)
        _write_dump(out, cfg, catalog, matrices, descriptor, train_labeled)
        print(f"wrote catalog and {len(matrices)} matrices to {out}")
        return 0
    except RuleboxError as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def cmd_render(args) -> int:
    stage = "render"
    try:
        with open(args.input, "r", encoding="utf-8") as fh:
            text = fh.read()
        report, explanations, params = parse_structured_report(text)
        payload = json.loads(text)
        names = payload.get("attribute_names", ())
        category_names = [entry.get("category_name", str(entry["category"]))
                          for entry in payload["categories"]]
        rendered = render_report(report, explanations, "text", names,
                                 category_names, params)
        if args.output:
            _write(Path(args.output), rendered)
        else:
            print(rendered, end="")
        return 0
    except (RuleboxError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error [{stage}]: {exc}", file=sys.stderr)
        return 1


def _add_config_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="path to a run config file")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        parser.add_argument(flag, default=None, metavar="V",
                            type=lambda raw, key=f.name: _parse_value(key, raw),
                            help=f"override config field {f.name}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rulebox",
        description="Rectangle-rule explanations of black-box tabular classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="run the full extraction pipeline")
    _add_config_flags(p)
    p.add_argument("--dump-matrices", action="store_true",
                   help="also export catalog and contribution matrices")
    p.add_argument("--reuse-matrices", metavar="DIR",
                   help="skip the model stage and reuse a previous dump")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("ksweep", help="macro F1 for several factorization ranks")
    _add_config_flags(p)
    p.add_argument("--k-values", required=True, metavar="K1,K2,...",
                   help="comma-separated ranks to sweep")
    p.set_defaults(func=cmd_ksweep)

    p = sub.add_parser("purity", help="cluster purity for several cluster counts")
    _add_config_flags(p)
    p.add_argument("--r-values", required=True, metavar="R1,R2,...",
                   help="comma-separated cluster counts")
    p.add_argument("--seeds", default="0,1,2,3,4", metavar="S1,S2,...",
                   help="clustering seeds to pool (default 0,1,2,3,4)")
    p.set_defaults(func=cmd_purity)

    p = sub.add_parser("train-model", help="train the builtin forest and report accuracy")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train_model)

    p = sub.add_parser("explain-dump", help="export catalog and contribution matrices")
    _add_config_flags(p)
    p.set_defaults(func=cmd_explain_dump)

    p = sub.add_parser("render", help="render a structured report as text")
    p.add_argument("--input", required=True, help="structured report (JSON)")
    p.add_argument("--output", help="write text here instead of stdout")
    p.set_defaults(func=cmd_render)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
