"""Write example images: one heatmap per posture, encoded spike matrices and a reservoir raster."""

import argparse
from pathlib import Path

from liquidstate import render
from liquidstate.encoder import EncodingConfig, encode
from liquidstate.evaluation import Trial, input_spikes, prepare_topology
from liquidstate.frames import POSTURES, normalize_to_phase, stack_values
from liquidstate.reservoir import NeuronParams, TopologyConfig, simulate
from liquidstate.synthgen import generate_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="figures")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    out = Path(args.out)

    frames, _ = generate_dataset(frames_per_posture_per_subject=1, seed=args.seed)
    first = {f.label.id: f for f in frames if f.subject_id == 1}
    for label in POSTURES:
        slug = label.name.replace(" ", "_")
        render.write_pgm(out / f"heatmap_{label.id:02d}_{slug}.pgm", render.heatmap(first[label.id].values))

    upright = first[0]
    for n in (1, 2):
        bits = encode(normalize_to_phase(upright), EncodingConfig(n=n)).bits
        render.write_pgm(out / f"encoded_n{n}.pgm", render.binary_image(bits, cell=2))

    params = NeuronParams()
    topology = prepare_topology(TopologyConfig(seed=args.seed), params, stack_values(frames))
    bits = input_spikes(Trial("snn_encoded", 1), upright.values[None])[0]
    state = simulate(topology, params, bits, record=True)
    render.write_pgm(out / "raster.pgm", render.binary_image(state.raster))
    print(f"wrote {len(POSTURES) + 3} images to {out}; raster mean rate "
          f"{state.counts.mean() / 0.03:.1f} Hz")


if __name__ == "__main__":
    main()
