"""Command-line entry point.

    liquidstate gen --subjects 19 --per-posture 21 --out data/
    liquidstate encode --frames data/frames.csv --index 0 --out enc.pgm
    liquidstate build-reservoir --frames data/frames.csv --n 1 --out topo.json
    liquidstate train --frames data/frames.csv --pipeline snn_encoded --n 1 --topology topo.json --out model.json
    liquidstate eval --plan scripts/plans/table2.json --out reports/table2
    liquidstate classify --model model.json --topology topo.json --frames data/frames.csv --index 3
    liquidstate render --frames data/frames.csv --index 0 --kind raster --topology topo.json --out raster.pgm

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from liquidstate import render, synthgen
from liquidstate.config import RunConfig
from liquidstate.encoder import EncodingConfig, encode
from liquidstate.evaluation import PIPELINES, Plan, Trial, featurize, input_spikes, prepare_topology, run_experiment
from liquidstate.frames import FrameFormatError, label_ids, load_frames, normalize_to_phase, save_frames, stack_values
from liquidstate.readout import ReadoutModel, predict, train_readout
from liquidstate.reservoir import ReservoirTopology, simulate

log = logging.getLogger("liquidstate")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
SUBCOMMANDS = ("gen", "encode", "build-reservoir", "train", "eval", "classify", "render")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _config(args) -> RunConfig:
    return RunConfig.load(args.config) if args.config else RunConfig()


def _select(frames, index):
    if not frames:
        raise ValueError("frame file is empty")
    if not 0 <= index < len(frames):
        raise ValueError(f"frame index {index} outside [0, {len(frames)})")
    return frames[index]


def _topology_for(cfg: RunConfig, args, n_inputs: int, calib_values) -> ReservoirTopology:
    if getattr(args, "topology", None):
        topology = ReservoirTopology.load(args.topology)
        if topology.n_inputs != n_inputs:
            raise ValueError(f"topology {args.topology} expects {topology.n_inputs} inputs, pipeline needs {n_inputs}")
        return topology
    topo_cfg = cfg.override("topology", n_inputs=n_inputs, seed=args.seed).topology
    return prepare_topology(topo_cfg, cfg.neuron, calib_values, cfg.calibration.target_hz,
                            cfg.calibration.frames, cfg.encoding.A)


def cmd_gen(args) -> int:
    cfg = _config(args).override("generator", subjects=args.subjects, per_posture=args.per_posture,
                                 noise_sd=args.noise, kyphosis_subject=args.kyphosis_subject)
    g = cfg.generator
    frames, manifest = synthgen.generate_dataset(g.subjects, g.per_posture, args.seed, g.noise_sd, g.kyphosis_subject)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_frames(frames, out / "frames.csv")
    manifest.files = ["frames.csv"]
    manifest.save(out / "manifest.json")
    print(f"wrote {len(frames)} frames to {out / 'frames.csv'}")
    return EXIT_OK


def cmd_encode(args) -> int:
    cfg = _config(args).override("encoding", n=args.n, A=args.A)
    frame = _select(load_frames(args.frames), args.index)
    spikes = encode(normalize_to_phase(frame, cfg.encoding.normalization), cfg.encoding.encoding())
    render.write_pgm(args.out, render.binary_image(spikes.bits))
    print(f"encoded frame {args.index} ({frame.label.name}) -> {spikes.shape[0]}x{spikes.shape[1]}, "
          f"{int(spikes.bits.sum())} spikes -> {args.out}")
    return EXIT_OK


def cmd_build_reservoir(args) -> int:
    cfg = _config(args).override("encoding", n=args.n).override("topology", input_keep_prob=args.keep_prob)
    n_inputs = 190 * cfg.encoding.n
    if args.frames:
        calib = stack_values(load_frames(args.frames))
    else:
        calib = stack_values(synthgen.generate_dataset(seed=args.seed, frames_per_posture_per_subject=1)[0])
    args.topology = None
    topology = _topology_for(cfg, args, n_inputs, calib)
    topology.save(args.out)
    print(f"reservoir: {topology.n_neurons} neurons, {len(topology.src)} synapses, "
          f"{len(topology.in_row)} input synapses, gamma scale {topology.gamma_scale:.6g} -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args).override("train", seed=args.seed)
    trial = Trial(args.pipeline, args.n)
    frames = load_frames(args.frames)
    if not frames:
        raise ValueError("frame file is empty")
    values = stack_values(frames)
    topology = _topology_for(cfg, args, trial.n_inputs, values) if trial.spiking else None
    X = featurize(trial, values, topology, cfg.neuron, cfg.encoding.A, args.threads)
    meta = {"trial": asdict(trial), "amplitude": cfg.encoding.A, "neuron": asdict(cfg.neuron)}
    if topology is not None:
        if not args.topology:
            topo_path = Path(args.out).with_suffix(".topology.json")
            topology.save(topo_path)
            args.topology = str(topo_path)
            print(f"reservoir saved to {topo_path}")
        meta["topology_sha256"] = _file_digest(args.topology)
    model = train_readout(X, label_ids(frames), cfg.train, trial.feature_kind, meta=meta)
    model.save(args.out)
    acc = float(np.mean(model.predict_ids(X) == label_ids(frames)))
    print(f"trained {trial.name} on {len(frames)} frames, training accuracy {acc:.4f} -> {args.out}")
    return EXIT_OK


def _load_plan_dataset(plan: Plan, plan_path: Path, seed: int):
    ds = plan.dataset
    if ds is None or isinstance(ds, dict):
        gen = dict(ds.get("generate", {})) if isinstance(ds, dict) else {}
        unknown = set(gen) - {"subjects", "per_posture", "seed", "noise_sd", "kyphosis_subject"}
        if unknown:
            raise ValueError(f"unknown dataset.generate keys {sorted(unknown)}")
        frames, _ = synthgen.generate_dataset(gen.get("subjects", 19), gen.get("per_posture", 21),
                                              gen.get("seed", seed), gen.get("noise_sd", 20.0),
                                              gen.get("kyphosis_subject"))
        return frames
    path = Path(ds)
    if not path.is_absolute():
        path = plan_path.parent / path
    return load_frames(path)


def cmd_eval(args) -> int:
    plan_path = Path(args.plan)
    plan = Plan.load(plan_path)
    frames = _load_plan_dataset(plan, plan_path, plan.seed)
    report = run_experiment(frames, plan, threads=args.threads)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    (out / "report.md").write_text(report.to_markdown())
    (out / "timings.json").write_text(json.dumps(report.timings, indent=2) + "\n")
    print(report.to_markdown())
    for t in report.timings:
        print(f"trial {t['trial']} {t['name']}: {t['wall_clock_s']:.1f} s wall clock, "
              f"{t['latency_ms_per_frame']:.3f} ms/frame inference")
    return EXIT_OK


def cmd_classify(args) -> int:
    model = ReadoutModel.load(args.model)
    meta = model.meta or {}
    if "trial" not in meta:
        raise ValueError(f"{args.model} does not describe its feature pipeline")
    trial = Trial(**meta["trial"])
    amplitude = meta.get("amplitude", 30)
    cfg = _config(args)
    topology = None
    if trial.spiking:
        if not args.topology:
            raise ValueError(f"model {args.model} needs --topology")
        topology = ReservoirTopology.load(args.topology)
        expected = meta.get("topology_sha256")
        if expected and expected != _file_digest(args.topology):
            raise ValueError(f"{args.topology} is not the reservoir {args.model} was trained with")
    frames = load_frames(args.frames)
    picked = frames if args.all else [_select(frames, args.index)]
    params = cfg.neuron
    latencies = []
    for frame in picked:
        t0 = time.perf_counter()
        x = featurize(trial, frame.values[None], topology, params, amplitude)[0]
        label, proba = predict(model, x)
        latencies.append(time.perf_counter() - t0)
        probs = " ".join(f"{p:.4f}" for p in proba)
        print(f"{label.name}\t[{probs}]")
    if args.all:
        print(f"mean latency {1000 * np.mean(latencies):.2f} ms/frame over {len(picked)} frames", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    frame = _select(load_frames(args.frames), args.index)
    if args.kind == "heatmap":
        image = render.heatmap(frame.values, cell=args.cell)
    elif args.kind == "encoded":
        image = render.binary_image(encode(normalize_to_phase(frame), EncodingConfig(n=args.n)).bits)
    else:
        if not args.topology:
            raise ValueError("raster rendering needs --topology")
        topology = ReservoirTopology.load(args.topology)
        trial = Trial("snn_encoded", topology.n_inputs // 190)
        bits = input_spikes(trial, frame.values[None])[0]
        state = simulate(topology, _config(args).neuron, bits, record=True)
        image = render.binary_image(state.raster)
    render.write_pgm(args.out, image)
    print(f"{args.kind} of frame {args.index} ({frame.label.name}) -> {args.out} ({image.shape[0]}x{image.shape[1]})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--config", help="JSON run configuration; flags override it")
    common.add_argument("--threads", type=int, default=1)

    parser = _Parser(prog="liquidstate", description="Sitting-posture recognition with a liquid state machine.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic frame dataset")
    p.add_argument("--subjects", type=int)
    p.add_argument("--per-posture", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--kyphosis-subject", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("encode", parents=[common], help="encode one frame and write it as PGM")
    p.add_argument("--frames", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--n", type=int)
    p.add_argument("--A", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("build-reservoir", parents=[common], help="build and calibrate a reservoir")
    p.add_argument("--frames", help="frames used for weight-scale calibration (default: synthetic)")
    p.add_argument("--n", type=int, default=1, help="coding number; input width is 190*n")
    p.add_argument("--keep-prob", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_reservoir)

    p = sub.add_parser("train", parents=[common], help="train a readout on a frame file")
    p.add_argument("--frames", required=True)
    p.add_argument("--pipeline", choices=PIPELINES, default="snn_encoded")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--topology")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="run an experiment plan")
    p.add_argument("--plan", required=True)
    p.add_argument("--out", default="report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("classify", parents=[common], help="classify frames with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--topology")
    p.add_argument("--frames", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--all", action="store_true", help="classify every frame and report mean latency")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("render", parents=[common], help="write a heatmap, encoded matrix or spike raster")
    p.add_argument("--frames", required=True)
    p.add_argument("--index", type=int, default=0)
    p.add_argument("--kind", choices=("heatmap", "encoded", "raster"), default="heatmap")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--cell", type=int, default=8)
    p.add_argument("--topology")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("LIQUIDSTATE_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (FrameFormatError, ValueError, KeyError, FileNotFoundError, json.JSONDecodeError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
