"""Experiment orchestration: splits, training runs and comparison tables."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classify import fit_mdc, predict_mdc
from .errors import BlankImageError, DataError
from .features import EXTRACTORS, FeatureVector, extract
from .imaging import UPPERCASE, GlyphGenConfig, LabeledDataset, generate_glyphs, ingest_dataset
from .mlp import TrainConfig, init_mlp, one_hot, predict_mlp, train_bp, train_lm
from .preprocess import Preprocessed, preprocess

log = logging.getLogger(__name__)

CLASSIFIERS = ("mdc", "mlp_bp", "mlp_lm")

# Row order and labels of the extractor comparison table.
EXTRACTOR_ROWS = (("gradient", "Gradient"), ("hybrid", "Zone-based hybrid"),
                  ("geometric", "Geometric"), ("proposed", "Proposed algorithm"))
NETWORK_ROWS = (("mlp_bp", "MLP BP"), ("mlp_lm", "MLP LM"), ("cnn", "CNN"))
NOT_IMPLEMENTED = "not implemented"

# Published accuracies (percent); used only as optional annotation columns.
PAPER_REFERENCE = {
    "table_1": {"gradient": 80.77, "hybrid": 84.61, "geometric": 80.77, "proposed": 88.46},
    "table_2": {"geometric": {"A": 90, "L": 80, "Z": 100}, "hybrid": {"A": 80, "L": 100, "Z": 90},
                "gradient": {"A": 100, "L": 70, "Z": 90}, "proposed": {"A": 100, "L": 70, "Z": 100}},
    "networks": {"geometric": {"mlp_bp": 86.5385, "mlp_lm": 88.4615, "cnn": 88.4615},
                 "gradient": {"mlp_bp": 84.6154, "mlp_lm": 90.3846, "cnn": 92.3077}},
}


@dataclass(frozen=True)
class ExperimentConfig:
    """One evaluation run.

    ``seed`` drives everything random: it replaces the seeds inside
    ``synthetic`` and ``mlp`` when the run starts. ``dataset_dir`` takes
    precedence over ``synthetic``.
    """

    dataset_dir: str | None = None
    synthetic: GlyphGenConfig = field(default_factory=GlyphGenConfig)
    alphabet: tuple[str, ...] = UPPERCASE
    train_per_class: int = 3
    test_per_class: int = 1
    extractors: tuple[str, ...] = EXTRACTORS
    classifiers: tuple[str, ...] = ("mdc",)
    mlp: TrainConfig = field(default_factory=TrainConfig)
    seed: int = 0
    polarity: str = "dark"
    shuffle_seed: int | None = None
    output_dir: str | None = None

    def __post_init__(self):
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("train and test counts per class must be >= 1")
        if not self.extractors or not self.classifiers:
            raise ValueError("at least one extractor and one classifier are required")
        bad = [e for e in self.extractors if e not in EXTRACTORS]
        bad += [c for c in self.classifiers if c not in CLASSIFIERS]
        if bad:
            raise ValueError(f"unknown extractor/classifier name(s): {', '.join(bad)}")
        if self.polarity not in ("dark", "light"):
            raise ValueError("polarity must be 'dark' or 'light'")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alphabet"] = list(self.alphabet)
        d["extractors"] = list(self.extractors)
        d["classifiers"] = list(self.classifiers)
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        kw = dict(obj)
        if "synthetic" in kw and kw["synthetic"] is not None:
            kw["synthetic"] = GlyphGenConfig(**kw["synthetic"])
        if "mlp" in kw and kw["mlp"] is not None:
            kw["mlp"] = TrainConfig(**kw["mlp"])
        for key in ("alphabet", "extractors", "classifiers"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ResultEntry:
    extractor: str
    classifier: str
    accuracy: float
    per_character: dict[str, float]
    confusion: list[list[int]]
    details: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    alphabet: list[str]
    train_per_class: int
    test_per_class: int
    n_train: int
    n_test: int
    results: list[ResultEntry]
    skipped: list[str]
    config: dict
    version: str = __version__
    runtime_seconds: float | None = None

    def entry(self, extractor: str, classifier: str) -> ResultEntry:
        for e in self.results:
            if e.extractor == extractor and e.classifier == classifier:
                return e
        raise KeyError((extractor, classifier))

    def to_dict(self, include_runtime: bool = True) -> dict:
        d = asdict(self)
        if not include_runtime:
            d.pop("runtime_seconds")
        return d

    def to_json(self, include_runtime: bool = False) -> str:
        return json.dumps(self.to_dict(include_runtime), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        kw = dict(obj)
        kw["results"] = [ResultEntry(**r) for r in obj["results"]]
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.from_dict(json.loads(text))


@dataclass
class Table:
    table_id: str
    title: str
    columns: list[str]
    rows: list[tuple[str, list]]

    def cells(self):
        for row, values in self.rows:
            for col, val in zip(self.columns, values):
                yield self.table_id, row, col, val

    def format(self) -> str:
        widths = [max(len(str(c)), 8) for c in self.columns]
        first = max([len(r) for r, _ in self.rows] + [4])
        lines = [self.title, " " * first + "  " + "  ".join(
            str(c).rjust(w) for c, w in zip(self.columns, widths))]
        for row, values in self.rows:
            cells = [(f"{v:.2f}" if isinstance(v, float) else str(v)).rjust(w)
                     for v, w in zip(values, widths)]
            lines.append(row.ljust(first) + "  " + "  ".join(cells))
        return "\n".join(lines)


def tables_to_csv(tables) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table_id", "row", "column", "value"])
    for t in tables:
        for cell in t.cells():
            w.writerow([repr(v) if isinstance(v, float) else v for v in cell])
    return buf.getvalue()


def load_dataset(cfg: ExperimentConfig) -> LabeledDataset:
    if cfg.dataset_dir:
        return ingest_dataset(cfg.dataset_dir, cfg.alphabet)
    return generate_glyphs(replace(cfg.synthetic, seed=cfg.seed), cfg.alphabet)


def preprocess_dataset(ds: LabeledDataset, polarity: str = "dark"):
    """Preprocess every sample; blank images are reported and left out.

    Returns ``(prepared, skipped)`` where ``prepared`` maps sample index to
    its :class:`~hcrkit.preprocess.Preprocessed` result.
    """
    prepared: dict[int, Preprocessed] = {}
    skipped = []
    for i, (img, _) in enumerate(ds.samples):
        try:
            prepared[i] = preprocess(img, polarity)
        except BlankImageError:
            log.warning("%s: blank image, excluded", ds.names[i])
            skipped.append(ds.names[i])
    if skipped:
        log.warning("%d blank image(s) excluded", len(skipped))
    return prepared, skipped


def split_indices(ds: LabeledDataset, usable, train_per_class: int, test_per_class: int,
                  shuffle_seed: int | None = None):
    """First ``train_per_class`` usable samples of each class train, the next ones test."""
    rng = np.random.default_rng(shuffle_seed) if shuffle_seed is not None else None
    train, test = [], []
    need = train_per_class + test_per_class
    for label, name in enumerate(ds.alphabet):
        idx = [i for i in ds.class_indices(label) if i in usable]
        if rng is not None:
            idx = [idx[j] for j in rng.permutation(len(idx))]
        if len(idx) < need:
            raise DataError(f"insufficient samples for class {name!r}: "
                            f"need {need}, have {len(idx)}")
        train += idx[:train_per_class]
        test += idx[train_per_class:need]
    return sorted(train), sorted(test)


class FeatureCache:
    """Feature vectors computed once per (sample, extractor)."""

    def __init__(self, prepared: dict[int, Preprocessed]):
        self.prepared = prepared
        self._store: dict[tuple[int, str], FeatureVector] = {}

    def get(self, idx: int, extractor: str) -> FeatureVector:
        key = (idx, extractor)
        if key not in self._store:
            self._store[key] = extract(self.prepared[idx], extractor)
        return self._store[key]

    def matrix(self, indices, extractor: str) -> np.ndarray:
        return np.vstack([self.get(i, extractor).values for i in indices])


def confusion_matrix(true, pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (np.asarray(true, dtype=int), np.asarray(pred, dtype=int)), 1)
    return cm


def _summarise(extractor, classifier, cm: np.ndarray, alphabet, details=None) -> ResultEntry:
    rows = cm.sum(axis=1)
    per_char = {alphabet[k]: float(cm[k, k] / rows[k]) for k in range(len(alphabet)) if rows[k]}
    return ResultEntry(extractor, classifier, float(np.trace(cm) / cm.sum()), per_char,
                       cm.tolist(), details or {})


def _run_classifier(name, Xtr, ytr, Xte, n_classes, mlp_cfg: TrainConfig, extractor):
    if name == "mdc":
        model = fit_mdc(list(zip(Xtr, ytr)), [str(k) for k in range(n_classes)], extractor)
        return [predict_mdc(model, x) for x in Xte], {}
    net = init_mlp((Xtr.shape[1], mlp_cfg.hidden, n_classes), seed=mlp_cfg.seed)
    trainer = train_bp if name == "mlp_bp" else train_lm
    net, trace = trainer(net, Xtr, one_hot(ytr, n_classes), mlp_cfg)
    details = {"final_mse": float(trace.mse[-1]), "iterations": trace.records[-1].iteration,
               "stop_reason": trace.stop_reason}
    return [predict_mlp(net, x) for x in Xte], details


def run_experiment(cfg: ExperimentConfig) -> EvalReport:
    """Load data, split, preprocess, extract, classify and score."""
    t0 = time.perf_counter()
    ds = load_dataset(cfg)
    prepared, skipped = preprocess_dataset(ds, cfg.polarity)
    train, test = split_indices(ds, prepared.keys(), cfg.train_per_class, cfg.test_per_class,
                                cfg.shuffle_seed)
    cache = FeatureCache(prepared)
    labels = ds.labels
    n_classes = len(ds.alphabet)
    mlp_cfg = replace(cfg.mlp, seed=cfg.seed)

    results = []
    for extractor in cfg.extractors:
        Xtr, Xte = cache.matrix(train, extractor), cache.matrix(test, extractor)
        for clf in cfg.classifiers:
            pred, details = _run_classifier(clf, Xtr, labels[train], Xte, n_classes,
                                            mlp_cfg, extractor)
            cm = confusion_matrix(labels[test], pred, n_classes)
            results.append(_summarise(extractor, clf, cm, ds.alphabet, details))

    echo = cfg.to_dict()
    echo.pop("output_dir")
    return EvalReport(list(ds.alphabet), cfg.train_per_class, cfg.test_per_class,
                      len(train), len(test), results, skipped, echo,
                      runtime_seconds=time.perf_counter() - t0)


def evaluation_table(report: EvalReport) -> Table:
    """Every (extractor, classifier) accuracy in percent."""
    rows = [(f"{e.extractor}/{e.classifier}", [100.0 * e.accuracy]) for e in report.results]
    return Table("evaluation", "Accuracy per extractor and classifier", ["accuracy_pct"], rows)


def extractor_table(report: EvalReport, paper_reference: bool = False) -> Table:
    columns = ["classifier", "accuracy_pct"] + (["paper_reference_pct"] if paper_reference else [])
    rows = []
    for key, label in EXTRACTOR_ROWS:
        try:
            acc = 100.0 * report.entry(key, "mdc").accuracy
        except KeyError:
            continue
        values = ["MDC", acc]
        if paper_reference:
            values.append(PAPER_REFERENCE["table_1"][key])
        rows.append((label, values))
    return Table("table_1", "Performance of feature extraction algorithms (MDC)", columns, rows)


def compare_extractors(cfg: ExperimentConfig, paper_reference: bool = False):
    """MDC over all four extractors; returns ``(report, table)``.

    Rows follow the order gradient, zone-based hybrid, geometric, proposed.
    """
    cfg = replace(cfg, extractors=EXTRACTORS, classifiers=("mdc",))
    report = run_experiment(cfg)
    return report, extractor_table(report, paper_reference)


def per_character_report(report: EvalReport, chars=("A", "L", "Z"), classifier: str = "mdc",
                         table_id: str = "table_2") -> Table:
    """Per-character accuracy (percent) of each extractor, rows in table order."""
    chars = list(chars)
    unknown = [c for c in chars if c not in report.alphabet]
    if unknown:
        raise ValueError(f"character(s) not in the alphabet: {', '.join(unknown)}")
    rows = []
    for key, label in EXTRACTOR_ROWS:
        try:
            entry = report.entry(key, classifier)
        except KeyError:
            continue
        rows.append((label, [100.0 * entry.per_character[c] for c in chars]))
    return Table(table_id, f"Per-character accuracy ({classifier.upper()})", chars, rows)


def network_table(report: EvalReport, extractor: str, paper_reference: bool = False) -> Table:
    n_train, n_test = report.n_train, report.n_test
    columns = ["n_train", "n_test", "accuracy_pct"] + (["paper_reference_pct"] if paper_reference else [])
    rows = []
    for key, label in NETWORK_ROWS:
        if key == "cnn":
            values = [n_train, n_test, NOT_IMPLEMENTED]
        else:
            values = [n_train, n_test, 100.0 * report.entry(extractor, key).accuracy]
        if paper_reference:
            values.append(PAPER_REFERENCE["networks"].get(extractor, {}).get(key, ""))
        rows.append((label, values))
    return Table(f"networks_{extractor}", f"Neural networks on {extractor} features", columns, rows)


def compare_networks(cfg: ExperimentConfig, paper_reference: bool = False):
    """MLP BP vs MLP LM per configured extractor, sharing one feature cache.

    Returns ``(report, tables)`` with one table per extractor; the CNN row is
    always marked as not implemented.
    """
    cfg = replace(cfg, classifiers=("mlp_bp", "mlp_lm"))
    report = run_experiment(cfg)
    return report, [network_table(report, e, paper_reference) for e in cfg.extractors]


def write_outputs(out_dir, report: EvalReport, tables) -> Path:
    """Write ``report.json``, ``tables.csv`` and ``timing.json``.

    Wall-clock time goes to ``timing.json`` so that ``report.json`` is
    byte-identical across repeated runs of the same configuration.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "tables.csv").write_text(tables_to_csv(tables))
    (out / "timing.json").write_text(json.dumps({"runtime_seconds": report.runtime_seconds}) + "\n")
    return out
