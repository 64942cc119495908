"""Command line interface: split, augment, train, evaluate, predict, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 the solver stopped
before converging (outputs are still written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import expand_manifest, parse_ops
from .baselines import BaselineConfig, sigmoid, train_baseline
from .config import CLASSIFIERS, ENHANCE_ORDERS, PipelineConfig
from .dataset import LABEL_SIGN, DatasetManifest, ManifestEntry, stratified_split
from .errors import (AllImagesRejected, BadParameter, DataError, EmptyDataset, FishScanError,
                     IoFailure)
from .features import FEATURE_NAMES, run_pipeline
from .metrics import (METRIC_NAMES, averaged_auc, binary_one_vs_rest, confusion,
                      format_confusion, metric_report, roc_curve)
from .raster import RgbImage, load_image, save_image, save_label_map
from .svm import KERNELS, model_from_json, train_svm

log = logging.getLogger("fishscan")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------- file helpers


def _write_text(path: Path, text: str) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc
    return path


def _read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise IoFailure(f"{path}: {exc.strerror or exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _num(v: float) -> str:
    """Shortest text that round-trips the float exactly."""
    return repr(float(v))


def _rerooted(manifest: DatasetManifest, out_dir: Path) -> DatasetManifest:
    """The same entries with paths relative to ``out_dir``."""
    entries = []
    for e in manifest.entries:
        rel = os.path.relpath(manifest.resolve(e).resolve(), out_dir.resolve())
        entries.append(ManifestEntry(Path(rel).as_posix(), e.label, e.split))
    return DatasetManifest(entries, root=out_dir)


# ---------------------------------------------------------------- extraction


def _extract_one(job):
    path, config_dict, stage_dir = job
    config = PipelineConfig.from_dict(config_dict)
    try:
        stages = run_pipeline(load_image(path), config)
        if stage_dir is not None:
            _dump_stages(stages, Path(stage_dir), Path(path).stem)
        return True, stages.features.as_array().tolist()
    except DataError as exc:
        return False, f"{type(exc).__name__}: {exc}"


def _dump_stages(stages, stage_dir: Path, stem: str) -> None:
    stage_dir.mkdir(parents=True, exist_ok=True)
    save_image(stages.resized, stage_dir / f"{stem}_resized.png")
    save_image(stages.enhanced, stage_dir / f"{stem}_enhanced.png")
    save_label_map(stages.segmentation.label_map, stage_dir / f"{stem}_labels.png")
    bits = stages.segmentation.mask.bits.astype(np.float64)
    save_image(RgbImage(np.repeat(bits[:, :, None], 3, axis=2)), stage_dir / f"{stem}_mask.png")


@dataclass
class Extraction:
    entries: list
    features: np.ndarray
    rejects: list

    @property
    def labels(self) -> np.ndarray:
        return np.array([LABEL_SIGN[e.label] for e in self.entries], dtype=np.int64)


def extract_split(manifest: DatasetManifest, split: str, config: PipelineConfig,
                  workers: int = 1, stage_dir=None) -> Extraction:
    """Features for every entry of ``split``, in manifest order.

    Images whose pipeline fails with a data error are skipped and recorded
    as ``(path, reason)`` rejects.
    """
    entries = manifest.split(split)
    if not entries:
        raise EmptyDataset(f"manifest has no {split} entries")
    cfg = config.to_dict()
    stage = None if stage_dir is None else str(stage_dir)
    jobs = [(str(manifest.resolve(e)), cfg, stage) for e in entries]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_extract_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_extract_one(j) for j in jobs]

    kept, rows, rejects = [], [], []
    for entry, (ok, payload) in zip(entries, results):
        if ok:
            kept.append(entry)
            rows.append(payload)
        else:
            log.warning("rejected %s: %s", entry.path, payload)
            rejects.append((entry.path, payload))
    if not kept:
        raise AllImagesRejected(f"all {len(entries)} {split} images were rejected")
    return Extraction(kept, np.array(rows, dtype=np.float64), rejects)


def features_csv(extraction: Extraction) -> str:
    rows = [[_num(v) for v in x] + [e.label]
            for e, x in zip(extraction.entries, extraction.features)]
    return _csv_text(list(FEATURE_NAMES) + ["label"], rows)


def rejects_text(rejects) -> str:
    return "".join(f"{path}\t{reason}\n" for path, reason in rejects)


# ---------------------------------------------------------------- models


def fit_classifier(kind: str, X, y, config: PipelineConfig):
    if kind == "svm":
        return train_svm(X, y, c_param=config.svm_c, kernel=config.kernel_spec(),
                         tol=config.svm_tol, max_passes=config.svm_max_passes, seed=config.seed)
    bcfg = BaselineConfig(max_depth=config.tree_max_depth, learning_rate=config.logreg_learning_rate,
                          epochs=config.logreg_epochs, var_floor=config.nb_var_floor)
    return train_baseline(kind, X, y, bcfg)


def model_document(model, config: PipelineConfig) -> str:
    doc = model.to_dict()
    doc["pipeline"] = config.to_dict()
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_model(path):
    """(model, pipeline config) from a model document."""
    text = _read_text(path)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not a model document ({exc})") from exc
    model = model_from_json(text)
    config = PipelineConfig.from_dict(doc["pipeline"]) if "pipeline" in doc else PipelineConfig()
    return model, config


def probability_scores(model, X) -> np.ndarray:
    """Positive-class scores in [0, 1]; SVM decision values pass through a sigmoid."""
    raw = model.scores(X)
    return sigmoid(raw) if model.kind == "svm" else raw


@dataclass
class Evaluation:
    cm: object
    report: object
    roc: object
    micro_auc: float
    macro_auc: float
    predicted: np.ndarray
    scores: np.ndarray


def evaluate_model(model, X, y) -> Evaluation:
    predicted = model.predict_labels(X)
    scores = model.scores(X)
    cm = confusion(y.tolist(), predicted.tolist(), positive=1)
    roc = roc_curve(scores, y.tolist(), positive=1)
    micro, macro = averaged_auc(binary_one_vs_rest(probability_scores(model, X), y.tolist(), 1))
    return Evaluation(cm, metric_report(cm), roc, micro, macro, predicted, scores)


def metrics_csv(report) -> str:
    rows = [[name, f"{getattr(report, name):.6f}", "1" if name in report.undefined else "0"]
            for name in METRIC_NAMES]
    return _csv_text(["metric", "value_percent", "undefined"], rows)


def roc_csv(roc) -> str:
    return _csv_text(["fpr", "tpr"], [[_num(f), _num(t)] for f, t in roc.points])


def auc_csv(ev: Evaluation) -> str:
    return _csv_text(["auc", "micro_auc", "macro_auc"],
                     [[f"{ev.roc.auc:.6f}", f"{ev.micro_auc:.6f}", f"{ev.macro_auc:.6f}"]])


def write_evaluation(ev: Evaluation, entries, out_dir: Path, prefix: str = "") -> None:
    _write_text(out_dir / f"{prefix}metrics.csv", metrics_csv(ev.report))
    _write_text(out_dir / f"{prefix}confusion.txt", format_confusion(ev.cm))
    _write_text(out_dir / f"{prefix}roc.csv", roc_csv(ev.roc))
    _write_text(out_dir / f"{prefix}auc.csv", auc_csv(ev))
    names = {1: "infected", -1: "fresh"}
    rows = [[e.path, e.label, names[int(p)], _num(s)]
            for e, p, s in zip(entries, ev.predicted, ev.scores)]
    _write_text(out_dir / f"{prefix}predictions.csv",
                _csv_text(["path", "label", "predicted", "score"], rows))


# ---------------------------------------------------------------- commands


def cmd_split(image_dir, out_dir, ratio=0.868, seed=42, test_counts=None) -> DatasetManifest:
    out_dir = Path(out_dir)
    manifest = _rerooted(stratified_split(image_dir, ratio, seed, test_counts), out_dir)
    _write_text(out_dir / "manifest.csv", manifest.to_csv())
    return manifest


def cmd_augment(manifest_path, out_dir, ops_text, seed=42, variants=None,
                augment_test=False) -> DatasetManifest:
    out_dir = Path(out_dir)
    manifest = DatasetManifest.read(manifest_path)
    expanded = expand_manifest(manifest, parse_ops(ops_text), out_dir, seed=seed,
                               variants=variants, augment_test=augment_test)
    _write_text(out_dir / "manifest.csv", expanded.to_csv())
    return expanded


def cmd_train(manifest_path, out_dir, config: PipelineConfig | None = None, workers=1,
              debug_stages=False):
    """Extract training features, fit the configured classifier, write
    model.json, config.json, features.csv and rejects.log. Returns the model."""
    config = config or PipelineConfig()
    out_dir = Path(out_dir)
    manifest = DatasetManifest.read(manifest_path)
    stage_dir = out_dir / "stages" if debug_stages else None
    ex = extract_split(manifest, "train", config, workers, stage_dir)
    model = fit_classifier(config.classifier, ex.features, ex.labels, config)
    _write_text(out_dir / "model.json", model_document(model, config))
    _write_text(out_dir / "config.json", config.to_json() + "\n")
    _write_text(out_dir / "features.csv", features_csv(ex))
    _write_text(out_dir / "rejects.log", rejects_text(ex.rejects))
    return model


def cmd_evaluate(manifest_path, model_path, out_dir, workers=1, split="test") -> Evaluation:
    model, config = load_model(model_path)
    out_dir = Path(out_dir)
    manifest = DatasetManifest.read(manifest_path)
    ex = extract_split(manifest, split, config, workers)
    ev = evaluate_model(model, ex.features, ex.labels)
    write_evaluation(ev, ex.entries, out_dir)
    _write_text(out_dir / "eval_rejects.log", rejects_text(ex.rejects))
    return ev


def cmd_predict(image_path, model_path, preview=None):
    """(label name, score). ``preview`` receives the k-means label map."""
    model, config = load_model(model_path)
    stages = run_pipeline(load_image(image_path), config)
    x = stages.features.as_array()[None, :]
    score = float(model.scores(x)[0])
    label = model.label_map[str(int(model.predict_labels(x)[0]))]
    if preview is not None:
        save_label_map(stages.segmentation.label_map, preview)
    return label, score


def cmd_report(manifest_path, out_dir, config: PipelineConfig | None = None,
               classifiers=CLASSIFIERS, workers=1) -> dict:
    """Train and test every listed classifier on the same features; write
    per-classifier CSV reports, a comparison table and figures."""
    from . import plotting

    config = config or PipelineConfig()
    out_dir = Path(out_dir)
    manifest = DatasetManifest.read(manifest_path)
    train = extract_split(manifest, "train", config, workers)
    test = extract_split(manifest, "test", config, workers)
    _write_text(out_dir / "features_train.csv", features_csv(train))
    _write_text(out_dir / "features_test.csv", features_csv(test))
    _write_text(out_dir / "rejects.log", rejects_text(train.rejects + test.rejects))

    results = {}
    for kind in classifiers:
        model = fit_classifier(kind, train.features, train.labels, config)
        ev = evaluate_model(model, test.features, test.labels)
        results[kind] = (model, ev)
        write_evaluation(ev, test.entries, out_dir, prefix=f"{kind}_")
        plotting.plot_confusion(ev.cm, out_dir / f"{kind}_confusion.png", title=kind)

    rows = [[kind] + [f"{getattr(ev.report, m):.6f}" for m in METRIC_NAMES]
            + [f"{ev.roc.auc:.6f}", f"{ev.micro_auc:.6f}", f"{ev.macro_auc:.6f}"]
            for kind, (_, ev) in results.items()]
    _write_text(out_dir / "comparison.csv",
                _csv_text(["classifier", *METRIC_NAMES, "auc", "micro_auc", "macro_auc"], rows))
    plotting.plot_roc({k: ev.roc for k, (_, ev) in results.items()}, out_dir / "roc.png")
    plotting.plot_comparison({k: ev.report.as_dict() for k, (_, ev) in results.items()},
                             out_dir / "comparison.png")
    return results


# ---------------------------------------------------------------- argument parsing


def _tiles(text: str):
    try:
        tx, ty = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH tile grid such as 8x8, got {text!r}")
    return tx, ty


def _test_counts(text: str) -> dict:
    out = {}
    for part in text.split(","):
        name, _, value = part.partition("=")
        try:
            out[name.strip()] = int(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected label=count pairs, got {text!r}")
    return out


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", help="JSON config file; flags given here override it")
    g.add_argument("--width", type=int, dest="target_width")
    g.add_argument("--height", type=int, dest="target_height")
    g.add_argument("--enhance-order", choices=ENHANCE_ORDERS, dest="enhance_order")
    g.add_argument("--clahe-clip", type=float, dest="clahe_clip")
    g.add_argument("--clahe-alpha", type=float, dest="clahe_alpha")
    g.add_argument("--clahe-tiles", type=_tiles, dest="clahe_tiles", metavar="WxH")
    g.add_argument("--clahe-bins", type=int, dest="clahe_bins")
    g.add_argument("--segment-k", type=int, dest="segment_k")
    g.add_argument("--segment-max-iter", type=int, dest="segment_max_iter")
    g.add_argument("--segment-tol", type=float, dest="segment_tol")
    g.add_argument("--glcm-levels", type=int, dest="glcm_levels")
    g.add_argument("--glcm-distance", type=int, dest="glcm_distance")
    g.add_argument("--classifier", choices=CLASSIFIERS)
    g.add_argument("--kernel", choices=KERNELS)
    g.add_argument("-C", "--svm-c", type=float, dest="svm_c")
    g.add_argument("--svm-tol", type=float, dest="svm_tol")
    g.add_argument("--svm-max-passes", type=int, dest="svm_max_passes")
    g.add_argument("--tree-max-depth", type=int, dest="tree_max_depth")
    g.add_argument("--seed", type=int)


CONFIG_FLAGS = ("target_width", "target_height", "enhance_order", "clahe_clip", "clahe_alpha",
                "clahe_bins", "segment_k", "segment_max_iter", "segment_tol", "glcm_levels",
                "glcm_distance", "classifier", "kernel", "svm_c", "svm_tol", "svm_max_passes",
                "tree_max_depth", "seed")


def config_from_args(args) -> PipelineConfig:
    config = PipelineConfig.from_json(_read_text(args.config)) if args.config else PipelineConfig()
    changes = {k: getattr(args, k) for k in CONFIG_FLAGS if getattr(args, k) is not None}
    if args.clahe_tiles is not None:
        changes["clahe_tiles_x"], changes["clahe_tiles_y"] = args.clahe_tiles
    return config.replace(**changes) if changes else config


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fishscan", description="Fresh/infected fish image classifier.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("split", help="stratified train/test manifest from fresh/ and infected/ folders")
    p.add_argument("image_dir")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--ratio", type=float, default=0.868)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--test-counts", type=_test_counts, metavar="fresh=N,infected=M",
                   help="fixed test-set size per label instead of the ratio")

    p = sub.add_parser("augment", help="expand the training split with geometric copies")
    p.add_argument("manifest")
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--augment", required=True, metavar="OPS",
                   help='e.g. "fliph,flipv,rot:90,trans:5:0,zoom:1.2"')
    p.add_argument("--variants", type=int, help="ops drawn per image (default: all)")
    p.add_argument("--augment-test", action="store_true", help="also expand the test split")
    p.add_argument("--seed", type=int, default=42)

    for name, text in (("train", "fit a classifier on the training split"),
                       ("report", "compare all classifiers and render figures")):
        p = sub.add_parser(name, help=text)
        p.add_argument("manifest")
        p.add_argument("-o", "--out-dir", required=True)
        p.add_argument("--workers", type=int, default=1)
        _add_config_flags(p)
        if name == "train":
            p.add_argument("--debug-stages", action="store_true",
                           help="dump resized, enhanced and segmented images per input")

    p = sub.add_parser("evaluate", help="score a model on the test split")
    p.add_argument("manifest")
    p.add_argument("--model", required=True)
    p.add_argument("-o", "--out-dir", required=True)
    p.add_argument("--split", choices=("train", "test"), default="test")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("predict", help="classify one image")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.add_argument("--preview", help="write the k-means label map to this PNG")

    p = sub.add_parser("synth", help="write a synthetic fresh/infected image set")
    p.add_argument("out_dir")
    p.add_argument("--count", type=int, default=300)
    p.add_argument("--infected-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=7)
    return parser


def _run(args) -> int:
    cmd = args.command
    if cmd == "split":
        m = cmd_split(args.image_dir, args.out_dir, args.ratio, args.seed, args.test_counts)
        for (label, split), n in sorted(m.counts().items()):
            print(f"{label}\t{split}\t{n}")
    elif cmd == "augment":
        m = cmd_augment(args.manifest, args.out_dir, args.augment, args.seed, args.variants,
                        args.augment_test)
        print(f"{len(m.entries)} entries")
    elif cmd == "train":
        model = cmd_train(args.manifest, args.out_dir, config_from_args(args), args.workers,
                          args.debug_stages)
        if not getattr(model, "converged", True):
            print("warning: SMO did not converge", file=sys.stderr)
            return EXIT_CONVERGENCE
    elif cmd == "evaluate":
        ev = cmd_evaluate(args.manifest, args.model, args.out_dir, args.workers, args.split)
        print(f"accuracy\t{ev.report.accuracy:.2f}")
        print(f"auc\t{ev.roc.auc:.4f}")
    elif cmd == "predict":
        label, score = cmd_predict(args.image, args.model, args.preview)
        print(f"{label}\t{score:.6f}")
    elif cmd == "report":
        results = cmd_report(args.manifest, args.out_dir, config_from_args(args),
                             workers=args.workers)
        for kind, (_, ev) in results.items():
            print(f"{kind}\t{ev.report.accuracy:.2f}")
        if not getattr(results.get("svm", (None,))[0], "converged", True):
            return EXIT_CONVERGENCE
    elif cmd == "synth":
        from .synth import write_dataset
        counts = write_dataset(args.out_dir, args.count, args.infected_fraction, args.seed)
        for label, n in counts.items():
            print(f"{label}\t{n}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except BadParameter as exc:
        print(f"fishscan: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FishScanError as exc:
        print(f"fishscan: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
