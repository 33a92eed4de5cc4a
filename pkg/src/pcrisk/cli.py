"""Pipeline command line: build-dataset, test-univariate, learn-tree,
eval-hypotheses, train-suite, riskmap.

Every command reads a JSON run config (CLI flags override a few common
fields), writes its artifacts plus a manifest.json capturing the resolved
config and input digests, and is byte-identical when rerun with the same
config and seed.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import features, grid as gridmod, hypotheses, ingest, ml, riskmap, stats
from .errors import (
    DegeneratePartitionError,
    InsufficientDataError,
    InvalidInputError,
    NonConvergenceError,
    PCRiskError,
    SchemaError,
    StratificationError,
    UndefinedTestError,
    ValidationError,
)

_USAGE_ERRORS = (InvalidInputError, SchemaError, ValidationError)
_DATA_ERRORS = (InsufficientDataError, UndefinedTestError, DegeneratePartitionError,
                StratificationError, NonConvergenceError)

_DEFAULTS = {
    "country": "Synthia",
    "bbox": [0.0, 10.0, 4.5, 14.5],  # lat_min, lon_min, lat_max, lon_max
    "mask_polygon": None,
    "cell_km": 100.0,
    "granularities": [100.0, 75.0, 50.0],
    "window": {"start": "2015-01-01", "end": "2022-09-30"},
    "source": {"kind": "synthetic", "months": None, "planted": {}},
    "seed": None,
    "tree": {"max_depth": 4, "min_leaf": 1, "min_support": 5, "min_purity": 0.6},
    "ml": {"test_fraction": 0.2, "class_weight": None},
    "stats": {"bonferroni_m": None},
    "riskmap": {"model": "DecisionTree"},
}


@dataclass
class RunConfig:
    country: str
    bbox: gridmod.BBox
    mask_polygon: list | None
    cell_km: float
    granularities: tuple
    window: ingest.Window
    seed: int
    source: dict
    tree: dict
    ml: dict
    stats: dict
    riskmap: dict
    out_dir: Path
    raw: dict  # resolved JSON-serializable view, recorded in manifests


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def resolve_config(args) -> RunConfig:
    raw = dict(_DEFAULTS)
    if args.config:
        cfg_path = Path(args.config)
        if not cfg_path.exists():
            raise InvalidInputError(f"config file {cfg_path} does not exist")
        raw = _merge(raw, json.loads(cfg_path.read_text(encoding="utf-8")))
    if args.seed is not None:
        raw["seed"] = args.seed
    if getattr(args, "cell_km", None) is not None:
        raw["cell_km"] = float(args.cell_km)
    if raw["seed"] is None:
        raise InvalidInputError("a seed is required: set it in the config or pass --seed")
    src = dict(raw["source"])
    if src.get("kind") == "files":
        for key in ("events_csv", "series_csv"):
            if key not in src:
                raise InvalidInputError(f"file source needs {key!r}")
            if not Path(src[key]).exists():
                raise InvalidInputError(f"input path {src[key]} does not exist")
        if "keyword_rules" in src and not Path(src["keyword_rules"]).exists():
            raise InvalidInputError(f"input path {src['keyword_rules']} does not exist")
    window = ingest.Window(
        start=dt.date.fromisoformat(raw["window"]["start"]),
        end=dt.date.fromisoformat(raw["window"]["end"]))
    window.validate()
    bbox = gridmod.BBox(*[float(v) for v in raw["bbox"]])
    out_dir = Path(args.out_dir)
    raw["out_dir"] = str(out_dir)
    return RunConfig(
        country=raw["country"], bbox=bbox, mask_polygon=raw["mask_polygon"],
        cell_km=float(raw["cell_km"]),
        granularities=tuple(float(g) for g in raw["granularities"]),
        window=window, seed=int(raw["seed"]), source=src,
        tree=raw["tree"], ml=raw["ml"], stats=raw["stats"], riskmap=raw["riskmap"],
        out_dir=out_dir, raw=raw)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(cfg: RunConfig, command: str, outputs: list[Path]) -> None:
    inputs = {}
    if cfg.source.get("kind") == "files":
        for key in ("events_csv", "series_csv", "keyword_rules"):
            if key in cfg.source:
                p = Path(cfg.source[key])
                inputs[key] = {"path": str(p), "sha256": _sha256(p)}
    doc = {
        "command": command,
        "config": cfg.raw,
        "inputs": inputs,
        "outputs": sorted(p.name for p in outputs),
    }
    (cfg.out_dir / "manifest.json").write_text(
        json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# dataset construction shared by several commands


def _build(cfg: RunConfig, cell_km: float):
    """(grid, rows, edges) for one granularity from the configured source."""
    g = gridmod.build_grid(cfg.bbox, cell_km, cfg.mask_polygon)
    src = cfg.source
    if src.get("kind", "synthetic") == "synthetic":
        months = src.get("months") or cfg.window.months
        planted = ingest.PlantedEffect(**(src.get("planted") or {}))
        series, events = ingest.synth_country(
            cfg.seed, g, months, planted, start=cfg.window.start, country=cfg.country)
    elif src["kind"] == "files":
        schema = ingest.EventSchema(**src.get("event_schema", {}))
        events = ingest.parse_events(src["events_csv"], schema)
        rules = (ingest.load_keyword_rules(src["keyword_rules"])
                 if "keyword_rules" in src else ingest.default_keyword_rules())
        events = ingest.filter_pastoral(events, cfg.window, rules)
        series = []
        for var in ingest.VARIABLES:
            series.extend(ingest.parse_series(src["series_csv"], var, g))
    else:
        raise InvalidInputError(f"unknown source kind {src.get('kind')!r}")
    edges = features.fit_bin_edges(series)
    rows = features.assemble_dataset(g, series, events, cfg.window, edges)
    return g, rows, edges


def _load_dataset(cfg: RunConfig):
    ds = cfg.out_dir / "dataset.csv"
    gj = cfg.out_dir / "grid.json"
    if not ds.exists():
        raise InvalidInputError(f"{ds} not found; run build-dataset first")
    rows = features.read_dataset_csv(ds)
    g = gridmod.load_grid(gj) if gj.exists() else None
    return g, rows


# ---------------------------------------------------------------------------
# commands


def cmd_build_dataset(cfg: RunConfig) -> int:
    g, rows, edges = _build(cfg, cfg.cell_km)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out_ds = cfg.out_dir / "dataset.csv"
    out_grid = cfg.out_dir / "grid.json"
    out_edges = cfg.out_dir / "bin_edges.json"
    features.write_dataset_csv(rows, out_ds)
    gridmod.save_grid(g, out_grid)
    features.write_bin_edges_json(edges, out_edges)
    _write_manifest(cfg, "build-dataset", [out_ds, out_grid, out_edges])
    n1 = sum(r.label for r in rows)
    print(f"dataset: {len(rows)} cells ({g.n_rows}x{g.n_cols} grid at "
          f"{cfg.cell_km:g} km), {n1} with conflicts, {len(rows) - n1} without")
    for p in (out_ds, out_grid, out_edges):
        print(f"wrote {p}")
    return 0


def cmd_test_univariate(cfg: RunConfig) -> int:
    _, rows = _load_dataset(cfg)
    m = cfg.stats.get("bonferroni_m")
    results = stats.run_univariate(rows, m=m)
    out = cfg.out_dir / "univariate.csv"
    stats.write_univariate_csv(results, out)
    _write_manifest(cfg, "test-univariate", [out])
    n_sig = sum(r.p_bonferroni < 0.05 for r in results)
    print(f"tested {len(results)} features; {n_sig} significant at 0.05 after Bonferroni")
    print(f"wrote {out}")
    return 0


def cmd_learn_tree(cfg: RunConfig) -> int:
    _, rows = _load_dataset(cfg)
    params = hypotheses.CartParams(
        max_depth=cfg.tree["max_depth"], min_leaf=cfg.tree["min_leaf"], seed=cfg.seed)
    tree = hypotheses.train_cart(rows, params)
    out_json = cfg.out_dir / "tree.json"
    out_dot = cfg.out_dir / "tree.dot"
    hypotheses.save_tree(tree, out_json)
    out_dot.write_text(hypotheses.tree_to_dot(tree), encoding="utf-8")
    _write_manifest(cfg, "learn-tree", [out_json, out_dot])
    paths = hypotheses.extract_paths(tree, cfg.tree["min_support"], cfg.tree["min_purity"])
    print(f"tree trained on {len(rows)} rows; {len(paths)} candidate hypothesis paths")
    for p in (out_json, out_dot):
        print(f"wrote {p}")
    return 0


def _golden_check() -> tuple[list, int]:
    """Evaluate the built-in hypotheses on datasets reconstructed from their
    frozen contingency tables; count mismatches."""
    report_rows = []
    n_bad = 0
    for name, bh in hypotheses.builtin_hypotheses().items():
        table, res = hypotheses.evaluate_hypothesis(bh.predicate, hypotheses.golden_dataset(bh))
        ok = (table == bh.table
              and abs(res.odds_ratio - bh.odds_ratio) <= 0.01
              and abs(res.ci_low - bh.ci_low) / bh.ci_low <= 0.015
              and abs(res.ci_high - bh.ci_high) / bh.ci_high <= 0.015
              and abs(np.log(res.p / bh.p)) <= np.log(2.0))
        n_bad += not ok
        status = "ok" if ok else "MISMATCH"
        print(f"{name} ({bh.country}): OR {res.odds_ratio:.2f} vs {bh.odds_ratio:.2f}, "
              f"p {res.p:.3g} vs {bh.p:.3g} -> {status}")
        report_rows.extend(hypotheses.hypothesis_report_rows(
            [(name, bh.predicate, table, res)], bh.country))
    return report_rows, n_bad


def cmd_eval_hypotheses(cfg: RunConfig, which: str, golden: bool,
                        only: str | None) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    if golden:
        report_rows, n_bad = _golden_check()
        out = cfg.out_dir / "hypotheses_golden.csv"
        hypotheses.write_hypothesis_csv(report_rows, out)
        _write_manifest(cfg, "eval-hypotheses", [out])
        print(f"wrote {out}")
        if n_bad:
            print(f"{n_bad} golden hypothesis mismatch(es)", file=sys.stderr)
            return 5
        return 0

    _, rows = _load_dataset(cfg)
    if which == "builtin":
        named = [(name, bh.predicate) for name, bh in hypotheses.builtin_hypotheses().items()
                 if only is None or name == only]
    else:
        tree_path = cfg.out_dir / "tree.json"
        if not tree_path.exists():
            raise InvalidInputError(f"{tree_path} not found; run learn-tree first")
        tree = hypotheses.load_tree(tree_path)
        preds = hypotheses.extract_paths(tree, cfg.tree["min_support"], cfg.tree["min_purity"])
        named = [(f"Path{i + 1}", p) for i, p in enumerate(preds)]
    report_rows = []
    doc = []
    for name, pred in named:
        try:
            table, res = hypotheses.evaluate_hypothesis(pred, rows)
        except (DegeneratePartitionError, UndefinedTestError) as exc:
            print(f"{name}: skipped ({exc})")
            continue
        report_rows.extend(hypotheses.hypothesis_report_rows(
            [(name, pred, table, res)], cfg.country))
        doc.append({
            "name": name,
            "conditions": [{"feature": c.feature, "op": c.op, "threshold": c.threshold}
                           for c in pred.conditions],
            "table": table.cells(),
            "odds_ratio": res.odds_ratio,
            "ci": [res.ci_low, res.ci_high],
            "p": res.p,
        })
        print(f"{name}: [{pred.describe()}] OR={res.odds_ratio:.3g} p={res.p:.3g}")
    out_csv = cfg.out_dir / "hypotheses.csv"
    out_json = cfg.out_dir / "hypotheses.json"
    hypotheses.write_hypothesis_csv(report_rows, out_csv)
    out_json.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _write_manifest(cfg, "eval-hypotheses", [out_csv, out_json])
    for p in (out_csv, out_json):
        print(f"wrote {p}")
    return 0


def cmd_train_suite(cfg: RunConfig) -> int:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    best_lines = []
    for km in cfg.granularities:
        _, rows, _ = _build(cfg, km)
        specs = ml.default_suite(cfg.seed)
        if cfg.ml.get("class_weight"):
            specs = [ml.ClassifierSpec(s.kind, {"class_weight": "balanced"}, s.seed)
                     if "class_weight" in ml._DEFAULT_HYPERPARAMS[s.kind] else s
                     for s in specs]
        report = ml.run_suite(rows, specs, cfg.ml["test_fraction"], cfg.seed)
        out = cfg.out_dir / f"suite_{km:g}km.csv"
        ml.write_suite_csv(report, out)
        outputs.append(out)
        best = ml.best_row(report)
        best_lines.append((km, best))
        print(f"{km:g} km: best {best.classifier} F1={best.f1:.2f} "
              f"AUC={'NA' if best.auc is None else f'{best.auc:.2f}'}")
        print(f"wrote {out}")
    out_best = cfg.out_dir / "best_summary.csv"
    with out_best.open("w", newline="", encoding="utf-8") as fh:
        import csv as _csv

        w = _csv.writer(fh, lineterminator="\n")
        w.writerow(["Country", "Granularity km", "Best Classifier", "Precision",
                    "Recall", "F1-Score", "AUC"])
        for km, b in best_lines:
            w.writerow([cfg.country, f"{km:g}", b.classifier, repr(b.precision),
                        repr(b.recall), repr(b.f1),
                        "NA" if b.auc is None else repr(b.auc)])
    outputs.append(out_best)
    _write_manifest(cfg, "train-suite", outputs)
    print(f"wrote {out_best}")
    return 0


def cmd_riskmap(cfg: RunConfig) -> int:
    g, rows = _load_dataset(cfg)
    if g is None:
        raise InvalidInputError("grid.json not found; run build-dataset first")
    spec = ml.ClassifierSpec(kind=cfg.riskmap["model"], seed=cfg.seed)
    model = ml.train(spec, rows)
    scores = ml.predict_proba(model, rows)
    surface = riskmap.surface_from_rows(g, [r.cell for r in rows], scores,
                                        model_id=spec.kind)
    out_geo = cfg.out_dir / "risk.geojson"
    out_pgm = cfg.out_dir / "risk.pgm"
    out_csv = cfg.out_dir / "risk.csv"
    out_model = cfg.out_dir / "model.json"
    riskmap.render_geojson(surface, out_geo)
    riskmap.render_pgm(surface, out_pgm)
    riskmap.render_csv(surface, out_csv)
    ml.save_model(model, spec, out_model)
    _write_manifest(cfg, "riskmap", [out_geo, out_pgm, out_csv, out_model])
    print(f"risk surface from {spec.kind}: mean {scores.mean():.3f}, max {scores.max():.3f}")
    for p in (out_geo, out_pgm, out_csv, out_model):
        print(f"wrote {p}")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pcrisk",
                                 description="Grid-based pastoral-conflict risk pipeline")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run config")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--cell-km", type=float, default=None,
                       choices=(50.0, 75.0, 100.0),
                       help="override cell edge length (other values via config)")
        p.add_argument("--out-dir", default="out", help="artifact directory")

    common(sub.add_parser("build-dataset", help="grid + features + labels to CSV"))
    common(sub.add_parser("test-univariate", help="class-difference tests per feature"))
    common(sub.add_parser("learn-tree", help="train the CART and export it"))
    p_eval = sub.add_parser("eval-hypotheses", help="score hypothesis predicates")
    common(p_eval)
    p_eval.add_argument("--which", choices=("builtin", "tree"), default="tree")
    p_eval.add_argument("--golden", action="store_true",
                        help="check built-ins against their frozen statistics")
    p_eval.add_argument("--hypothesis", default=None,
                        help="evaluate a single built-in hypothesis by name")
    common(sub.add_parser("train-suite", help="run the 8-classifier benchmark"))
    common(sub.add_parser("riskmap", help="render per-cell risk surfaces"))
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "eval-hypotheses":
            only = args.hypothesis
            if only is not None and only not in hypotheses.builtin_hypotheses():
                _parser().error(f"unknown hypothesis name {only!r}")
            return cmd_eval_hypotheses(cfg, args.which, args.golden, only)
        handler = {
            "build-dataset": cmd_build_dataset,
            "test-univariate": cmd_test_univariate,
            "learn-tree": cmd_learn_tree,
            "train-suite": cmd_train_suite,
            "riskmap": cmd_riskmap,
        }[args.command]
        return handler(cfg)
    except _USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except PCRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
