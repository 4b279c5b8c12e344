"""Markov chains targeting the lattice measure, plus error estimation.

Two schemes share one driver interface:

  metropolis   exact sampler: fixed-order sweeps of symmetric proposals
               Q' = exp(eps xi) Q accepted with min(1, exp(dS)); unbiased.
  langevin     geodesic Euler discretization of the gradient Langevin SDE;
               exact on the group manifold but carries O(h) time-step bias,
               so it is validated against metropolis.

Chains start from a product-Haar (hot) configuration.  Error bars come from
batch means over the recorded (thinned) series; independent chains derive
their generators from the master seed with counter-based Philox keys
``(seed << 64) | chain_index`` and are aggregated by pooling batch means, so
the result does not depend on chain scheduling order.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalFaultError
from .groups import GroupSpec
from .lattice import Lattice
from .loops import Loop
from .observables import Configuration

__all__ = [
    "ChainConfig",
    "MCEstimate",
    "batch_means",
    "pooled_estimate",
    "default_proposal_scale",
    "chain_rng",
    "metropolis_step",
    "langevin_step",
    "run_chain",
    "save_checkpoint",
    "load_checkpoint",
]


@dataclass
class ChainConfig:
    """Sampler schedule: scheme, step sizes, lengths, seed, chain count."""

    scheme: str = "metropolis"
    step_size: float = 0.01          # langevin h
    proposal_scale: float = 0.0      # metropolis eps; 0 means the default rule
    burn_in: int = 1000              # sweeps (metropolis) or steps (langevin)
    n_samples: int = 10000           # recorded samples per chain
    thinning: int = 2                # sweeps/steps between records
    seed: int = 0
    n_chains: int = 1

    def __post_init__(self):
        if self.scheme not in ("metropolis", "langevin"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.step_size <= 0 or self.n_samples < 1 or self.thinning < 1:
            raise ValueError("step_size must be > 0 and n_samples, thinning >= 1")
        if self.proposal_scale < 0 or self.burn_in < 0 or self.n_chains < 1:
            raise ValueError("negative proposal_scale/burn_in or n_chains < 1")
        if self.seed < 0 or self.seed >= 2 ** 63:
            raise ValueError("seed must fit in a non-negative 64-bit integer")


@dataclass
class MCEstimate:
    """Estimated expectation with batch-means error bar."""

    mean: complex
    std_error: float
    n_effective: int
    batch_count: int


def default_proposal_scale(group: GroupSpec, beta: float) -> float:
    """eps = 0.5 / sqrt(N (1 + |beta|)): keeps acceptance around 50-80%."""
    return 0.5 / np.sqrt(group.n * (1.0 + abs(beta)))


def chain_rng(seed: int, chain_index: int = 0) -> np.random.Generator:
    """Philox generator with counter-based key split (seed, chain_index)."""
    return np.random.Generator(np.random.Philox(key=(seed << 64) | chain_index))


def _real_batch_stats(x: np.ndarray, batch_count: int):
    n = x.size
    b = n // batch_count
    means = x[: b * batch_count].reshape(batch_count, b).mean(axis=1)
    var_x = x.var(ddof=1) if n > 1 else 0.0
    var_m = means.var(ddof=1)
    se = float(np.sqrt(var_m / batch_count))
    if var_x <= 0.0:
        return float(x.mean()), 0.0, n, means
    tau = max(1.0, b * var_m / var_x)
    return float(x.mean()), se, int(n / tau), means


def batch_means(series: np.ndarray, batch_count: int | None = None) -> MCEstimate:
    """Batch-means mean/error for an autocorrelated (possibly complex) series.

    The default batch count is max(20, sqrt(n)); n_effective is n over the
    integrated autocorrelation time implied by the batch variance.
    """
    x = np.asarray(series)
    n = x.size
    if batch_count is None:
        batch_count = int(min(max(20, np.sqrt(n)), n // 2)) if n >= 4 else n // 2
    if batch_count < 2:
        raise ValueError(f"need at least 2 batches, got {batch_count} (n={n})")
    if np.iscomplexobj(x):
        mr, ser, neffr, _ = _real_batch_stats(x.real, batch_count)
        mi, sei, neffi, _ = _real_batch_stats(x.imag, batch_count)
        return MCEstimate(complex(mr, mi), float(np.hypot(ser, sei)),
                          min(neffr, neffi), batch_count)
    m, se, neff, _ = _real_batch_stats(x.astype(np.float64), batch_count)
    return MCEstimate(m, se, neff, batch_count)


def pooled_estimate(per_chain: list[np.ndarray]) -> MCEstimate:
    """Combine equal-length series from independent chains.

    Batch means are computed within each chain and pooled, so chain joins do
    not contaminate the variance estimate.
    """
    if len(per_chain) == 1:
        return batch_means(per_chain[0])
    parts = [batch_means(c) for c in per_chain]
    n_batches = sum(p.batch_count for p in parts)
    mean = np.mean([np.mean(c) for c in per_chain])
    if np.iscomplexobj(per_chain[0]):
        pooled_r, pooled_i = [], []
        for c in per_chain:
            bc = batch_means(c).batch_count
            b = c.size // bc
            pooled_r.append(c.real[: b * bc].reshape(bc, b).mean(axis=1))
            pooled_i.append(c.imag[: b * bc].reshape(bc, b).mean(axis=1))
        ser = float(np.concatenate(pooled_r).std(ddof=1) / np.sqrt(n_batches))
        sei = float(np.concatenate(pooled_i).std(ddof=1) / np.sqrt(n_batches))
        se = float(np.hypot(ser, sei))
    else:
        pooled = []
        for c in per_chain:
            bc = batch_means(c).batch_count
            b = c.size // bc
            pooled.append(np.asarray(c, np.float64)[: b * bc].reshape(bc, b).mean(axis=1))
        se = float(np.concatenate(pooled).std(ddof=1) / np.sqrt(n_batches))
    return MCEstimate(complex(mean) if np.iscomplexobj(per_chain[0]) else float(mean),
                      se, sum(p.n_effective for p in parts), n_batches)


def metropolis_step(config: Configuration, eps: float, beta: float,
                    rng: np.random.Generator) -> int:
    """One in-place sweep; returns the number of accepted proposals."""
    lat, g = config.lattice, config.group
    return int(kernels.metropolis_sweep(
        config.q, eps, g.n * beta, g.kind_code,
        lat.plaq_pos, lat.edge_plaq_offsets, lat.edge_plaq_ids, rng))


def langevin_step(config: Configuration, h: float, beta: float,
                  rng: np.random.Generator) -> float:
    """One in-place geodesic Euler step; returns the worst pre-projection defect."""
    lat, g = config.lattice, config.group
    worst = float(kernels.langevin_step(
        config.q, h, g.n * beta, g.kind_code,
        lat.plaq_through_offsets, lat.plaq_through_paths, rng))
    if worst > 1e-3:
        raise NumericalFaultError(f"langevin step defect {worst:.3e}; reduce h")
    return worst


@dataclass
class ChainResult:
    """Per-chain loop-trace series plus run diagnostics."""

    traces: np.ndarray          # (n_samples, n_loops) complex128
    acceptance: float           # metropolis only (1.0 for langevin)
    max_defect: float
    seed: int
    chain_index: int


def _flatten_loops(loop_list: list[Loop]):
    offs = np.zeros(len(loop_list) + 1, dtype=np.int64)
    flat = []
    for i, l in enumerate(loop_list):
        offs[i + 1] = offs[i] + len(l.edges)
        flat.extend(l.edges)
    return np.array(flat, dtype=np.int32), offs


def run_single_chain(cfg: ChainConfig, lat: Lattice, group: GroupSpec, beta: float,
                     loop_list: list[Loop], chain_index: int = 0,
                     start: Configuration | None = None,
                     rng: np.random.Generator | None = None) -> ChainResult:
    """Burn in, then record loop traces every `thinning` sweeps/steps."""
    if rng is None:
        rng = chain_rng(cfg.seed, chain_index)
    config = Configuration.haar(lat, group, rng) if start is None else start
    eps = cfg.proposal_scale or default_proposal_scale(group, beta)
    flat, offs = _flatten_loops(loop_list)
    traces = np.empty((cfg.n_samples, len(loop_list)), dtype=np.complex128)

    accepted = 0
    max_defect = 0.0
    n_updates = 0
    for _ in range(cfg.burn_in):
        if cfg.scheme == "metropolis":
            accepted += metropolis_step(config, eps, beta, rng)
            n_updates += lat.n_edges
        else:
            max_defect = max(max_defect, langevin_step(config, cfg.step_size, beta, rng))
    for t in range(cfg.n_samples):
        for _ in range(cfg.thinning):
            if cfg.scheme == "metropolis":
                accepted += metropolis_step(config, eps, beta, rng)
                n_updates += lat.n_edges
            else:
                max_defect = max(max_defect,
                                 langevin_step(config, cfg.step_size, beta, rng))
        kernels.measure_traces(config.q, flat, offs, traces[t])
    config.check_manifold(tol=1e-6)
    acc_rate = accepted / n_updates if n_updates else 1.0
    return ChainResult(traces, acc_rate, max_defect, cfg.seed, chain_index)


def run_chain(cfg: ChainConfig, lat: Lattice, group: GroupSpec, beta: float,
              loop_list: list[Loop]) -> list[ChainResult]:
    """Run cfg.n_chains independent chains (deterministic given cfg.seed)."""
    return [run_single_chain(cfg, lat, group, beta, loop_list, chain_index=c)
            for c in range(cfg.n_chains)]


def estimate_observables(results: list[ChainResult], reducers: dict) -> dict:
    """Apply named reducers (trace-array -> real/complex series) and pool chains."""
    out = {}
    for name, fn in reducers.items():
        out[name] = pooled_estimate([fn(r.traces) for r in results])
    return out


# -- checkpoints --------------------------------------------------------------

def save_checkpoint(path: str, config: Configuration, rng: np.random.Generator,
                    meta: dict | None = None):
    """Snapshot: lattice, group, edge matrices (row-major re/im), rng state."""
    state = {
        "lattice": config.lattice.describe(),
        "group": {"kind": config.group.kind, "n": config.group.n},
        "q_re": config.q.real.ravel().tolist(),
        "q_im": config.q.imag.ravel().tolist(),
        "rng_state": _jsonable(rng.bit_generator.state),
        "meta": meta or {},
    }
    with open(path, "w") as f:
        json.dump(state, f)


def load_checkpoint(path: str):
    """Restore (Configuration, Generator, meta) from a snapshot file."""
    from .lattice import build_lattice

    with open(path) as f:
        state = json.load(f)
    lat = build_lattice(**{k: state["lattice"][k] for k in ("d", "corner_lo", "corner_hi")})
    group = GroupSpec(state["group"]["kind"], state["group"]["n"])
    shape = (lat.n_edges, group.n, group.n)
    q = (np.array(state["q_re"]).reshape(shape)
         + 1j * np.array(state["q_im"]).reshape(shape))
    config = Configuration(lat, group, q)
    bitgen = np.random.Philox()
    bitgen.state = _dejsonable(state["rng_state"])
    return config, np.random.Generator(bitgen), state.get("meta", {})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return {"__ndarray__": obj.tolist(), "dtype": str(obj.dtype)}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dejsonable(obj):
    if isinstance(obj, dict):
        if "__ndarray__" in obj:
            return np.array(obj["__ndarray__"], dtype=obj["dtype"])
        return {k: _dejsonable(v) for k, v in obj.items()}
    return obj
