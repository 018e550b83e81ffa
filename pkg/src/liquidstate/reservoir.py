"""Liquid state machine: distance-dependent wiring and clock-driven LIF simulation.

Neurons sit on an integer 3-D lattice. An ordered pair (a, b) is connected with
probability ``C[type(a) type(b)] * exp(-D(a, b)**2 / lambda**2)``. A random 30 %
pool of reservoir neurons receives input synapses, of which only a small
fraction survive. Synaptic weights are gamma distributed and act as
instantaneous membrane jumps one step after the presynaptic spike.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import sparse

log = logging.getLogger(__name__)

PAIR_CLASSES = ("EE", "EI", "IE", "II")
TOPOLOGY_FORMAT = "liquidstate-topology"
TOPOLOGY_VERSION = 1


@dataclass(frozen=True)
class NeuronParams:
    v_thresh: float = 15.0  # mV
    v_rest: float = 13.5  # mV
    v_reset: float | None = None  # mV, defaults to v_rest
    tau_m: float = 30.0  # ms
    R: float = 1.0
    refractory_E: int = 3  # ms
    refractory_I: int = 2  # ms

    def __post_init__(self):
        if self.v_reset is None:
            object.__setattr__(self, "v_reset", self.v_rest)
        if not self.v_rest < self.v_thresh:
            raise ValueError("v_rest must be below v_thresh")
        if self.v_reset > self.v_thresh:
            raise ValueError("v_reset must not exceed v_thresh")
        if self.tau_m <= 0 or self.R <= 0:
            raise ValueError("tau_m and R must be positive")
        if self.refractory_E <= 0 or self.refractory_I <= 0:
            raise ValueError("refractory periods must be positive")

    @property
    def i_bias(self) -> float:
        """Constant bias current that makes v_rest the no-input equilibrium."""
        return self.v_rest / self.R

    @property
    def v_eq(self) -> float:
        return self.R * self.i_bias


def _default_C():
    return {"EE": 0.3, "EI": 0.2, "IE": 0.4, "II": 0.1}


def _default_shapes():
    return {"EE": 30.0, "EI": 60.0, "IE": 19.0, "II": 19.0, "inE": 18.0, "inI": 9.0}


@dataclass(frozen=True)
class TopologyConfig:
    n_excitatory: int = 1600
    n_inhibitory: int = 400
    grid_dims: tuple[int, int, int] = (20, 10, 10)
    lam: float = 1.6667
    C: dict = field(default_factory=_default_C)
    input_pool_fraction: float = 0.30
    input_keep_prob: float = 0.10  # 0.01 under the literal 99 % dropout reading
    gamma_shape: dict = field(default_factory=_default_shapes)
    gamma_scale: float | None = None  # None: calibrate from activity
    n_inputs: int = 190
    seed: int = 42

    def __post_init__(self):
        object.__setattr__(self, "grid_dims", tuple(int(d) for d in self.grid_dims))
        object.__setattr__(self, "C", dict(self.C))
        object.__setattr__(self, "gamma_shape", dict(self.gamma_shape))
        if self.n_excitatory < 1 or self.n_inhibitory < 1:
            raise ValueError("need at least one excitatory and one inhibitory neuron")
        if len(self.grid_dims) != 3 or math.prod(self.grid_dims) != self.n_neurons:
            raise ValueError(
                f"grid {self.grid_dims} holds {math.prod(self.grid_dims)} sites, "
                f"expected {self.n_neurons}"
            )
        if set(self.C) != set(PAIR_CLASSES):
            raise ValueError(f"C must define exactly {PAIR_CLASSES}")
        if set(self.gamma_shape) != set(PAIR_CLASSES) | {"inE", "inI"}:
            raise ValueError("gamma_shape must define EE, EI, IE, II, inE, inI")
        for name, p in [*self.C.items(), ("input_pool_fraction", self.input_pool_fraction),
                        ("input_keep_prob", self.input_keep_prob)]:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability {name}={p} outside [0, 1]")
        if any(a <= 0 for a in self.gamma_shape.values()):
            raise ValueError("gamma shapes must be positive")
        if self.gamma_scale is not None and self.gamma_scale <= 0:
            raise ValueError("gamma_scale must be positive")
        if self.lam <= 0 or self.n_inputs < 1:
            raise ValueError("lam and n_inputs must be positive")

    @property
    def n_neurons(self) -> int:
        return self.n_excitatory + self.n_inhibitory


def connection_probability(pos_a, pos_b, pair_type: str, cfg: TopologyConfig = TopologyConfig()) -> float:
    if pair_type not in PAIR_CLASSES:
        raise ValueError(f"unknown pair type {pair_type!r}")
    d2 = float(np.sum((np.asarray(pos_a, float) - np.asarray(pos_b, float)) ** 2))
    return cfg.C[pair_type] * math.exp(-d2 / cfg.lam**2)


@dataclass(frozen=True, eq=False)
class ReservoirTopology:
    """Immutable reservoir wiring. Neurons ``0..n_excitatory-1`` are excitatory."""

    config: TopologyConfig
    positions: np.ndarray  # (N, 3) int
    inhibitory: np.ndarray  # (N,) bool
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray  # mV, signed
    in_row: np.ndarray
    in_dst: np.ndarray
    in_weight: np.ndarray  # mV, >= 0
    gamma_scale: float

    def __post_init__(self):
        for name in ("positions", "inhibitory", "src", "dst", "weight", "in_row", "in_dst", "in_weight"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_matrices", None)

    @property
    def n_neurons(self) -> int:
        return len(self.inhibitory)

    @property
    def n_inputs(self) -> int:
        return self.config.n_inputs

    @property
    def types(self) -> np.ndarray:
        return np.where(self.inhibitory, "I", "E")

    def rescaled(self, gamma_scale: float) -> "ReservoirTopology":
        """Same wiring with every weight multiplied by ``gamma_scale / self.gamma_scale``."""
        factor = gamma_scale / self.gamma_scale
        return replace(
            self,
            weight=self.weight * factor,
            in_weight=self.in_weight * factor,
            gamma_scale=float(gamma_scale),
            config=replace(self.config, gamma_scale=float(gamma_scale)),
        )

    def matrices(self) -> tuple[sparse.csr_matrix, sparse.csr_matrix]:
        """(recurrent N x N, input N x R) CSR matrices indexed [post, pre]."""
        if self._matrices is None:
            n = self.n_neurons
            rec = sparse.csr_matrix((self.weight, (self.dst, self.src)), shape=(n, n))
            inp = sparse.csr_matrix((self.in_weight, (self.in_dst, self.in_row)), shape=(n, self.n_inputs))
            object.__setattr__(self, "_matrices", (rec, inp))
        return self._matrices

    def fanout_per_input(self) -> np.ndarray:
        return np.bincount(self.in_row, minlength=self.n_inputs)

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["grid_dims"] = list(cfg["grid_dims"])
        return {
            "format": TOPOLOGY_FORMAT,
            "version": TOPOLOGY_VERSION,
            "config": cfg,
            "gamma_scale": self.gamma_scale,
            "positions": self.positions.tolist(),
            "types": "".join(self.types.tolist()),
            "synapses": {
                "src": self.src.tolist(),
                "dst": self.dst.tolist(),
                "weight": self.weight.tolist(),
            },
            "input_synapses": {
                "row": self.in_row.tolist(),
                "dst": self.in_dst.tolist(),
                "weight": self.in_weight.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ReservoirTopology":
        if doc.get("format") != TOPOLOGY_FORMAT or doc.get("version") != TOPOLOGY_VERSION:
            raise ValueError("not a version-1 liquidstate topology document")
        cfg = dict(doc["config"])
        cfg["grid_dims"] = tuple(cfg["grid_dims"])
        syn, ins = doc["synapses"], doc["input_synapses"]
        return cls(
            config=TopologyConfig(**cfg),
            positions=np.array(doc["positions"], dtype=np.int64).reshape(-1, 3),
            inhibitory=np.array([t == "I" for t in doc["types"]], dtype=bool),
            src=np.array(syn["src"], dtype=np.int64),
            dst=np.array(syn["dst"], dtype=np.int64),
            weight=np.array(syn["weight"], dtype=np.float64),
            in_row=np.array(ins["row"], dtype=np.int64),
            in_dst=np.array(ins["dst"], dtype=np.int64),
            in_weight=np.array(ins["weight"], dtype=np.float64),
            gamma_scale=float(doc["gamma_scale"]),
        )

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")) + "\n")

    @classmethod
    def load(cls, path) -> "ReservoirTopology":
        return cls.from_dict(json.loads(Path(path).read_text()))


def grid_positions(dims) -> np.ndarray:
    return np.indices(dims).reshape(3, -1).T.astype(np.int64)


def build_topology(cfg: TopologyConfig = TopologyConfig()) -> ReservoirTopology:
    """Draw a reservoir from ``cfg``; deterministic given ``cfg.seed``.

    Weights are drawn at ``cfg.gamma_scale`` (1.0 when it is None, pending
    calibration with :func:`calibrate_gamma_scale`).
    """
    rng = np.random.default_rng(cfg.seed)
    n, n_exc = cfg.n_neurons, cfg.n_excitatory
    positions = rng.permutation(grid_positions(cfg.grid_dims))
    inhibitory = np.arange(n) >= n_exc

    d2 = np.zeros((n, n))
    for k in range(3):
        diff = positions[:, k, None] - positions[None, :, k]
        d2 += diff * diff
    c = np.array([[cfg.C["EE"], cfg.C["EI"]], [cfg.C["IE"], cfg.C["II"]]])
    t = inhibitory.astype(int)
    prob = c[t[:, None], t[None, :]] * np.exp(-d2 / cfg.lam**2)
    np.fill_diagonal(prob, 0.0)
    src, dst = np.nonzero(rng.random((n, n)) < prob)
    del d2, prob

    shapes = np.array([[cfg.gamma_shape["EE"], cfg.gamma_shape["EI"]],
                       [cfg.gamma_shape["IE"], cfg.gamma_shape["II"]]])
    scale = 1.0 if cfg.gamma_scale is None else cfg.gamma_scale
    weight = rng.gamma(shapes[t[src], t[dst]], scale)
    weight[inhibitory[src]] *= -1.0

    pool_size = int(math.floor(cfg.input_pool_fraction * n))
    pool = np.sort(rng.choice(n, size=pool_size, replace=False))
    keep = rng.random((cfg.n_inputs, pool_size)) < cfg.input_keep_prob
    in_row, pool_idx = np.nonzero(keep)
    in_dst = pool[pool_idx]
    in_shape = np.where(inhibitory[in_dst], cfg.gamma_shape["inI"], cfg.gamma_shape["inE"])
    in_weight = rng.gamma(in_shape, scale) if len(in_dst) else np.zeros(0)

    return ReservoirTopology(
        config=cfg,
        positions=positions,
        inhibitory=inhibitory,
        src=src,
        dst=dst,
        weight=weight,
        in_row=in_row,
        in_dst=in_dst,
        in_weight=in_weight,
        gamma_scale=float(scale),
    )


@dataclass(frozen=True, eq=False)
class LiquidState:
    counts: np.ndarray  # spikes per reservoir neuron over the window
    raster: np.ndarray | None = None  # (N, T) bool, optional

    def __eq__(self, other):
        if not isinstance(other, LiquidState):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)

    __hash__ = None


def lif_step(v: float, refractory: int, I_syn: float, params: NeuronParams = NeuronParams(),
             dt: float = 1.0, inhibitory: bool = False) -> tuple[float, bool, int]:
    """Advance one LIF neuron by ``dt`` ms; returns (v', fired, refractory')."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if refractory > 0:
        return params.v_reset, False, refractory - 1
    v = params.v_eq + (v - params.v_eq) * math.exp(-dt / params.tau_m) + I_syn
    if v >= params.v_thresh:
        period = params.refractory_I if inhibitory else params.refractory_E
        return params.v_reset, True, period
    return v, False, 0


def simulate_batch(topology: ReservoirTopology, params: NeuronParams, bits: np.ndarray,
                   window: int | None = None, dt: float = 1.0,
                   record: bool = False) -> tuple[np.ndarray, np.ndarray | None]:
    """Run many independent samples through the same reservoir at once.

    ``bits`` is (B, R, T_in) with R the topology's input width. Returns per-neuron
    spike counts of shape (B, N) and, with ``record``, a (B, N, window) raster.
    Input column t and reservoir spikes of step t reach their targets at t + 1.
    """
    bits = np.asarray(bits)
    if bits.ndim != 3:
        raise ValueError("expected a (B, R, T) spike array")
    B, R, t_in = bits.shape
    if R != topology.n_inputs:
        raise ValueError(f"spike matrix has {R} rows, topology expects {topology.n_inputs}")
    window = t_in if window is None else int(window)
    rec, inp = topology.matrices()
    n = topology.n_neurons

    decay = math.exp(-dt / params.tau_m)
    v_eq = params.v_eq
    period = np.where(topology.inhibitory, params.refractory_I, params.refractory_E)[:, None]

    v = np.full((n, B), params.v_rest)
    refr = np.zeros((n, B), dtype=np.int64)
    fired = np.zeros((n, B), dtype=bool)
    counts = np.zeros((n, B), dtype=np.int64)
    raster = np.zeros((B, n, window), dtype=bool) if record else None

    for t in range(window):
        drive = np.zeros((n, B))
        if fired.any():
            drive += rec @ fired.astype(np.float64)
        if 1 <= t <= t_in:
            column = bits[:, :, t - 1]
            if column.any():
                drive += inp @ column.T.astype(np.float64)
        blocked = refr > 0
        v = v_eq + (v - v_eq) * decay + drive
        v[blocked] = params.v_reset
        refr[blocked] -= 1
        fired = (v >= params.v_thresh) & ~blocked
        v[fired] = params.v_reset
        refr = np.where(fired, period, refr)
        counts += fired
        if record:
            raster[:, :, t] = fired.T
    return counts.T, raster


def simulate(topology: ReservoirTopology, params: NeuronParams, spikes, window: int | None = None,
             record: bool = False) -> LiquidState:
    bits = spikes.bits if hasattr(spikes, "bits") else np.asarray(spikes)
    if bits.ndim != 2:
        raise ValueError("simulate expects one (R, T) spike matrix")
    counts, raster = simulate_batch(topology, params, bits[None], window=window, record=record)
    return LiquidState(counts[0], None if raster is None else raster[0])


def liquid_states(topology: ReservoirTopology, params: NeuronParams, bits: np.ndarray,
                  batch_size: int = 256, threads: int = 1) -> np.ndarray:
    """Spike-count features (B, N) for a stack of spike matrices, processed in chunks."""
    chunks = [bits[i : i + batch_size] for i in range(0, len(bits), batch_size)]
    if not chunks:
        return np.zeros((0, topology.n_neurons), dtype=np.int64)
    run = lambda chunk: simulate_batch(topology, params, chunk)[0]  # noqa: E731
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    return np.concatenate(parts)


def mean_rate_hz(counts: np.ndarray, window_ms: float) -> float:
    return float(np.mean(counts)) / (window_ms / 1000.0)


def calibrate_gamma_scale(topology: ReservoirTopology, params: NeuronParams, bits: np.ndarray,
                          target_hz: float = 12.0, band: tuple[float, float] = (5.0, 50.0),
                          lo: float = 1e-3, hi: float = 10.0, iters: int = 40) -> ReservoirTopology:
    """Bisect (in log space) for the weight scale giving ``target_hz`` mean firing.

    Returns the rescaled topology. Raises if the closest achievable rate falls
    outside ``band``.
    """
    window = bits.shape[-1]

    def rate(scale):
        counts, _ = simulate_batch(topology.rescaled(scale), params, bits)
        return mean_rate_hz(counts, window)

    best = None
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        r = rate(mid)
        if best is None or abs(math.log((r + 1e-9) / target_hz)) < abs(math.log((best[1] + 1e-9) / target_hz)):
            best = (mid, r)
        if r < target_hz:
            lo = mid
        else:
            hi = mid
        if hi / lo < 1.0 + 1e-4:
            break
    scale, r = best
    if not band[0] <= r <= band[1]:
        raise RuntimeError(f"calibration reached {r:.2f} Hz at scale {scale:.4g}, outside {band}")
    log.info("gamma scale calibrated to %.6g (mean rate %.2f Hz)", scale, r)
    return topology.rescaled(scale)
