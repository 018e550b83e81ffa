"""Sitting-posture recognition with a liquid state machine of LIF neurons."""

from liquidstate.frames import POSTURES, PhaseFrame, PostureLabel, PressureFrame
from liquidstate.encoder import EncodedSpikes, EncodingConfig, encode
from liquidstate.reservoir import (
    LiquidState,
    NeuronParams,
    ReservoirTopology,
    TopologyConfig,
    build_topology,
    simulate,
)
from liquidstate.readout import ReadoutModel, TrainConfig, predict, train_readout

__all__ = [
    "POSTURES",
    "PhaseFrame",
    "PostureLabel",
    "PressureFrame",
    "EncodedSpikes",
    "EncodingConfig",
    "encode",
    "LiquidState",
    "NeuronParams",
    "ReservoirTopology",
    "TopologyConfig",
    "build_topology",
    "simulate",
    "ReadoutModel",
    "TrainConfig",
    "predict",
    "train_readout",
]

__version__ = "0.1.0"
