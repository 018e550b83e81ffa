"""Splits, classification metrics and the trial-matrix experiment runner."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from liquidstate.encoder import EncodingConfig, binarize_raw, encode_batch
from liquidstate.frames import ADC_MAX, N_CLASSES, POSTURE_NAMES, PressureFrame, label_ids, stack_values, subject_ids
from liquidstate.readout import TrainConfig, train_readout
from liquidstate.reservoir import (
    NeuronParams,
    ReservoirTopology,
    TopologyConfig,
    build_topology,
    calibrate_gamma_scale,
    liquid_states,
)

log = logging.getLogger(__name__)

PIPELINES = ("lr_raw", "lr_encoded", "snn_raw", "snn_encoded")
REPORT_FORMAT = "liquidstate-report"

CONVENTIONS = (
    "Scores are macro averages: unweighted means over the classes present in the "
    "test truths or predictions. Precision of a never-predicted class counts as 0.",
    "Non-encoded SNN+LR feeds each raw frame as one spike in bin 0 for every "
    "non-zero cell (binarized fallback), not as a latency code.",
)


@dataclass(frozen=True)
class Split:
    kind: str  # "random_shuffle" | "by_subject"
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int | None = None
    train_subjects: tuple[int, ...] | None = None
    test_subjects: tuple[int, ...] | None = None

    def describe(self) -> dict:
        doc = {"kind": self.kind, "n_train": int(len(self.train_indices)), "n_test": int(len(self.test_indices))}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.train_subjects is not None:
            doc["train_subjects"] = list(self.train_subjects)
            doc["test_subjects"] = list(self.test_subjects)
        return doc


def split_random(frames: Sequence[PressureFrame], test_fraction: float = 0.2, seed: int = 42) -> Split:
    n = len(frames)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(math.floor(test_fraction * n + 0.5))
    if not 0 < n_test < n:
        raise ValueError(f"test_fraction {test_fraction} leaves an empty side for {n} frames")
    order = np.random.default_rng(seed).permutation(n)
    return Split("random_shuffle", np.sort(order[n_test:]), np.sort(order[:n_test]), seed=seed)


def split_by_subject(frames: Sequence[PressureFrame], train_subjects=tuple(range(1, 16)),
                     test_subjects=None) -> Split:
    subjects = subject_ids(frames)
    present = set(subjects.tolist())
    train = sorted({int(s) for s in train_subjects})
    missing = [s for s in train if s not in present]
    if missing:
        raise ValueError(f"training subjects {missing} not in dataset")
    if test_subjects is None:
        test = sorted(present - set(train))
    else:
        test = sorted({int(s) for s in test_subjects})
        overlap = set(train) & set(test)
        if overlap:
            raise ValueError(f"subjects {sorted(overlap)} on both sides of the split")
        missing = [s for s in test if s not in present]
        if missing:
            raise ValueError(f"test subjects {missing} not in dataset")
    if not test:
        raise ValueError("subject split leaves no test subjects")
    train_idx = np.flatnonzero(np.isin(subjects, train))
    test_idx = np.flatnonzero(np.isin(subjects, test))
    return Split("by_subject", train_idx, test_idx, train_subjects=tuple(train), test_subjects=tuple(test))


@dataclass(frozen=True)
class Metrics:
    confusion: np.ndarray  # [truth, prediction] counts
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    classes: tuple[int, ...]  # classes entering the macro averages
    macro_precision: float
    macro_recall: float
    macro_f1: float

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.confusion.sum())

    def to_dict(self) -> dict:
        return {
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "accuracy": self.accuracy,
            "classes": list(self.classes),
            "per_class": {
                POSTURE_NAMES[c] if len(self.precision) == N_CLASSES else str(c): {
                    "precision": float(self.precision[c]),
                    "recall": float(self.recall[c]),
                    "f1": float(self.f1[c]),
                    "support": int(self.confusion[c].sum()),
                }
                for c in self.classes
            },
            "confusion": self.confusion.tolist(),
        }


def compute_metrics(predictions, truths, n_classes: int = N_CLASSES) -> Metrics:
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(truths, dtype=np.int64)
    if pred.shape != true.shape or pred.ndim != 1:
        raise ValueError(f"{pred.size} predictions vs {true.size} truths")
    if len(pred) == 0:
        raise ValueError("need at least one sample")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (true, pred), 1)
    tp = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0)
    actual = confusion.sum(axis=1)
    precision = np.divide(tp, predicted, out=np.zeros(n_classes), where=predicted > 0)
    recall = np.divide(tp, actual, out=np.zeros(n_classes), where=actual > 0)
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros(n_classes), where=denom > 0)
    classes = tuple(int(c) for c in np.union1d(pred, true))
    idx = list(classes)
    return Metrics(
        confusion, precision, recall, f1, classes,
        float(precision[idx].mean()), float(recall[idx].mean()), float(f1[idx].mean()),
    )


# ---------------------------------------------------------------- pipelines

@dataclass(frozen=True)
class Trial:
    pipeline: str
    n: int = 1
    name: str | None = None

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {self.pipeline!r}; choose from {PIPELINES}")
        if self.n < 1:
            raise ValueError("coding number n must be >= 1")
        if self.name is None:
            object.__setattr__(self, "name", self.default_name())

    @property
    def spiking(self) -> bool:
        return self.pipeline.startswith("snn")

    @property
    def encoded(self) -> bool:
        return self.pipeline.endswith("encoded")

    @property
    def encoding_label(self) -> str:
        return f"cosine-rank (n={self.n})" if self.encoded else "-"

    @property
    def model_label(self) -> str:
        return "SNN+LR" if self.spiking else "LR"

    @property
    def feature_kind(self) -> str:
        if self.spiking:
            return "liquid_state"
        return "encoded_flat" if self.encoded else "raw_frame"

    @property
    def n_inputs(self) -> int:
        return 190 * (self.n if self.encoded else 1)

    def default_name(self) -> str:
        base = {"lr_raw": "LR-raw", "lr_encoded": "LR-encoded", "snn_raw": "SNN+LR-raw",
                "snn_encoded": "SNN+LR-encoded"}[self.pipeline]
        return f"{base}(n={self.n})" if self.encoded else base


def input_spikes(trial: Trial, values: np.ndarray, A: int = 30) -> np.ndarray:
    """(B, R, A) spike input for spiking trials; values are raw (B, 19, 10) counts."""
    if trial.encoded:
        return encode_batch(values / ADC_MAX * np.pi, EncodingConfig(A=A, n=trial.n))
    return binarize_raw(values, A)


def featurize(trial: Trial, values: np.ndarray, topology: ReservoirTopology | None = None,
              params: NeuronParams = NeuronParams(), A: int = 30, threads: int = 1) -> np.ndarray:
    """Readout features for a (B, 19, 10) batch of raw frames."""
    values = np.asarray(values)
    if trial.spiking:
        if topology is None:
            raise ValueError(f"trial {trial.name} needs a reservoir topology")
        return liquid_states(topology, params, input_spikes(trial, values, A), threads=threads).astype(np.float64)
    if trial.encoded:
        return input_spikes(trial, values, A).reshape(len(values), -1).astype(np.float64)
    return values.reshape(len(values), -1).astype(np.float64)


def calibration_batch(values: np.ndarray, n: int, frames: int = 128, A: int = 30) -> np.ndarray:
    """Evenly spaced subset of ``values`` encoded with coding number ``n``."""
    pick = np.linspace(0, len(values) - 1, num=min(frames, len(values))).round().astype(int)
    return encode_batch(values[np.unique(pick)] / ADC_MAX * np.pi, EncodingConfig(A=A, n=n))


def prepare_topology(cfg: TopologyConfig, params: NeuronParams, calib_values: np.ndarray,
                     target_hz: float = 12.0, frames: int = 128, A: int = 30) -> ReservoirTopology:
    """Build a reservoir and, unless ``cfg.gamma_scale`` is fixed, calibrate its weight scale.

    The calibration batch always uses the cosine-rank code for the reservoir's
    input width, so raw and encoded trials of the same width share one reservoir.
    """
    topology = build_topology(cfg)
    if cfg.gamma_scale is None:
        n = max(1, cfg.n_inputs // 190)
        topology = calibrate_gamma_scale(topology, params, calibration_batch(calib_values, n, frames, A),
                                         target_hz=target_hz)
    return topology


# ---------------------------------------------------------------- plans

@dataclass
class Plan:
    trials: list[Trial]
    split: dict = field(default_factory=lambda: {"kind": "random_shuffle", "test_fraction": 0.2, "seed": 42})
    dataset: str | dict | None = None
    seed: int = 42
    topology: dict = field(default_factory=dict)
    neuron: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=lambda: {"target_hz": 12.0, "frames": 128})
    amplitude: int = 30

    KEYS = ("trials", "split", "dataset", "seed", "topology", "neuron", "train", "calibration", "amplitude")

    @classmethod
    def from_dict(cls, doc: dict) -> "Plan":
        unknown = set(doc) - set(cls.KEYS) - {"name", "description"}
        if unknown:
            raise ValueError(f"unknown plan keys {sorted(unknown)}")
        trials = []
        for t in doc.get("trials", []):
            extra = set(t) - {"pipeline", "n", "name"}
            if extra:
                raise ValueError(f"unknown trial keys {sorted(extra)}")
            trials.append(Trial(**t))
        kwargs = {k: doc[k] for k in cls.KEYS if k in doc and k != "trials"}
        if "calibration" in kwargs:
            kwargs["calibration"] = {"target_hz": 12.0, "frames": 128, **kwargs["calibration"]}
        return cls(trials=trials, **kwargs)

    @classmethod
    def load(cls, path) -> "Plan":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "trials": [asdict(t) for t in self.trials],
            "split": self.split,
            "dataset": self.dataset,
            "seed": self.seed,
            "topology": self.topology,
            "neuron": self.neuron,
            "train": self.train,
            "calibration": self.calibration,
            "amplitude": self.amplitude,
        }

    def make_split(self, frames) -> Split:
        opts = dict(self.split)
        kind = opts.pop("kind", "random_shuffle")
        if kind == "random_shuffle":
            return split_random(frames, opts.pop("test_fraction", 0.2), opts.pop("seed", self.seed))
        if kind == "by_subject":
            return split_by_subject(frames, opts.pop("train_subjects", range(1, 16)), opts.pop("test_subjects", None))
        raise ValueError(f"unknown split kind {kind!r}")

    def topology_config(self, n_inputs: int) -> TopologyConfig:
        over = dict(self.topology)
        over.setdefault("seed", self.seed)
        return TopologyConfig(**{**over, "n_inputs": n_inputs})

    def train_config(self) -> TrainConfig:
        return TrainConfig(**{"seed": self.seed, **self.train})


def dataset_digest(frames: Sequence[PressureFrame]) -> str:
    h = hashlib.sha256()
    h.update(stack_values(frames).astype("<i2").tobytes())
    h.update(label_ids(frames).astype("<i2").tobytes())
    h.update(subject_ids(frames).astype("<i2").tobytes())
    return h.hexdigest()


@dataclass
class Report:
    doc: dict  # deterministic content
    timings: list[dict]  # wall-clock measurements, kept apart from ``doc``
    models: dict = field(default_factory=dict)  # trial name -> (ReadoutModel, topology or None)

    def to_json(self) -> str:
        return json.dumps(self.doc, indent=2, sort_keys=True) + "\n"

    def to_markdown(self) -> str:
        return render_markdown(self.doc)


def run_experiment(frames: Sequence[PressureFrame], plan: Plan, threads: int = 1) -> Report:
    doc = {
        "format": REPORT_FORMAT,
        "version": 1,
        "conventions": list(CONVENTIONS),
        "plan": plan.to_dict(),
        "trials": [],
    }
    if not plan.trials:
        return Report(doc, [])
    values = stack_values(frames)
    labels = label_ids(frames)
    split = plan.make_split(frames)
    doc["dataset"] = {
        "n_frames": len(frames),
        "subjects": sorted(set(subject_ids(frames).tolist())),
        "sha256": dataset_digest(frames),
    }
    doc["split"] = split.describe()
    params = NeuronParams(**plan.neuron)
    train_cfg = plan.train_config()
    tr, te = split.train_indices, split.test_indices

    topologies: dict[int, ReservoirTopology] = {}
    timings, models = [], {}
    for number, trial in enumerate(plan.trials, start=1):
        log.info("trial %d: %s", number, trial.name)
        t_start = time.perf_counter()
        topology = None
        if trial.spiking:
            if trial.n_inputs not in topologies:
                cfg = plan.topology_config(trial.n_inputs)
                topologies[trial.n_inputs] = prepare_topology(
                    cfg, params, values[tr], plan.calibration["target_hz"],
                    plan.calibration["frames"], plan.amplitude)
            topology = topologies[trial.n_inputs]
        X_train = featurize(trial, values[tr], topology, params, plan.amplitude, threads)
        meta = {"trial": asdict(trial), "amplitude": plan.amplitude, "neuron": asdict(params)}
        model = train_readout(X_train, labels[tr], train_cfg, trial.feature_kind, meta=meta)
        t_infer = time.perf_counter()
        X_test = featurize(trial, values[te], topology, params, plan.amplitude, threads)
        pred = model.predict_ids(X_test)
        t_end = time.perf_counter()
        metrics = compute_metrics(pred, labels[te])
        entry = {
            "trial": number,
            "name": trial.name,
            "pipeline": trial.pipeline,
            "n": trial.n,
            "encoding": trial.encoding_label,
            "model": trial.model_label,
            "feature_kind": trial.feature_kind,
            "n_features": int(X_train.shape[1]),
            "train_seed": train_cfg.seed,
            "epochs": len(model.loss_history),
            "final_train_loss": model.loss_history[-1],
            "metrics": metrics.to_dict(),
        }
        if topology is not None:
            entry["reservoir"] = {
                "seed": topology.config.seed,
                "gamma_scale": topology.gamma_scale,
                "n_inputs": topology.n_inputs,
                "n_synapses": int(len(topology.src)),
                "n_input_synapses": int(len(topology.in_row)),
                "train_mean_rate_hz": float(X_train.mean() / (plan.amplitude / 1000.0)),
            }
        doc["trials"].append(entry)
        timings.append({
            "trial": number,
            "name": trial.name,
            "wall_clock_s": t_end - t_start,
            "latency_ms_per_frame": 1000.0 * (t_end - t_infer) / max(len(te), 1),
        })
        models[trial.name] = (model, topology)
    return Report(doc, timings, models)


def render_markdown(doc: dict) -> str:
    lines = ["# Posture recognition trial report", ""]
    lines += [f"- {c}" for c in doc.get("conventions", [])]
    if "split" in doc:
        s = doc["split"]
        extra = f", seed {s['seed']}" if "seed" in s else f", train subjects {s['train_subjects']}, test subjects {s['test_subjects']}"
        lines += [f"- Split: {s['kind']} ({s['n_train']} train / {s['n_test']} test{extra})"]
        lines += [f"- Dataset: {doc['dataset']['n_frames']} frames, sha256 {doc['dataset']['sha256'][:16]}"]
    lines += ["", "| Trial | Encoding | Model | Precision | Recall | F1 score |", "|---|---|---|---|---|---|"]
    for t in doc.get("trials", []):
        m = t["metrics"]
        lines.append(
            f"| {t['trial']} | {t['encoding']} | {t['model']} | {m['macro_precision']:.4f} "
            f"| {m['macro_recall']:.4f} | {m['macro_f1']:.4f} |"
        )
    return "\n".join(lines) + "\n"
