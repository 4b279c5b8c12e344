"""Command line interface: configuration, orchestration, result emission.

Subcommands:

  verify     master loop equation residual tests over (beta, sequence) cells,
             repeated over independent seeds with majority-pass per cell
  sample     MCEstimate table for named observables
  enumerate  operation-set counts and listings with multiplicities
  oracle     exact U(1) loop expectations by quadrature
  check-sde  noise covariance, magic formulas, basis identity, stationarity

Configuration is a key=value document ('#' comments allowed); every key has
a matching command line flag that overrides the file.  Unknown keys are
rejected.  Output is one self-describing JSON record per line, each embedding
the fully resolved configuration and seed, plus an optional CSV summary.
Exit codes: 0 pass, 1 statistical failure, 2 configuration error,
3 numerical fault.  The environment variable YMLOOPS_THREADS sets the worker
pool size for verify cells (default 1; results are independent of it).
"""

import argparse
import csv as csv_module
import dataclasses
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .backend import backend_name
from .errors import ConfigError, NumericalFaultError
from .groups import GroupSpec
from .lattice import build_lattice
from .loops import (LoopSequence, build_operation_sets, parse_loop_text,
                    parse_sequence_text, sequence_to_text)
from .samplers import ChainConfig, chain_rng, pooled_estimate, run_chain
from .u1 import exact_phi_u1, gauge_fix
from .verifier import (basis_identity_defect, basket_reducers,
                       magic_formula_check, noise_covariance_check,
                       stationarity_check, verify_with_seeds)

EXIT_PASS, EXIT_STATISTICAL, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

COMMANDS = ("verify", "sample", "enumerate", "oracle", "check-sde")


@dataclass
class RunConfig:
    """Fully resolved run description; echoed into every output record."""

    command: str
    group: str = "SU"
    n: int = 2
    beta: tuple = (0.5,)
    d: int = 2
    corner_lo: tuple = (-1, -1)
    corner_hi: tuple = (2, 2)
    loops: str = "(0,0) +x +y -x -y"
    scheme: str = "metropolis"
    step_size: float = 0.01
    proposal_scale: float = 0.0
    burn_in: int = 1000
    n_samples: int = 10000
    thinning: int = 2
    n_chains: int = 1
    seed: int = 0
    n_seeds: int = 3
    observables: str = "plaquette,rect21,action_density"
    n_points: int = 32
    output: str = ""
    csv: str = ""

    def group_spec(self) -> GroupSpec:
        try:
            return GroupSpec(self.group, self.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def lattice(self):
        try:
            return build_lattice(self.d, self.corner_lo, self.corner_hi)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def chain_config(self, seed=None) -> ChainConfig:
        try:
            return ChainConfig(
                scheme=self.scheme, step_size=self.step_size,
                proposal_scale=self.proposal_scale, burn_in=self.burn_in,
                n_samples=self.n_samples, thinning=self.thinning,
                seed=self.seed if seed is None else seed, n_chains=self.n_chains)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def sequences(self, lat):
        return [parse_sequence_text(part, lat)
                for part in self.loops.split("|") if part.strip()]

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        for key in ("beta", "corner_lo", "corner_hi"):
            out[key] = ",".join(str(v) for v in out[key])
        return out


_TUPLE_FLOAT = ("beta",)
_TUPLE_INT = ("corner_lo", "corner_hi")


def _coerce(key: str, text: str):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if key not in fields or key == "command":
        raise ConfigError(f"unknown configuration key {key!r}")
    text = text.strip()
    try:
        if key in _TUPLE_FLOAT:
            return tuple(float(v) for v in text.split(",") if v != "")
        if key in _TUPLE_INT:
            return tuple(int(v) for v in text.split(",") if v != "")
        default = fields[key].default
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc
    return text


def parse_config(text: str, command: str, overrides: dict | None = None) -> RunConfig:
    """Parse a key=value document, apply flag overrides, validate everything."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        values[key] = _coerce(key, val)
    for key, val in (overrides or {}).items():
        values[key] = _coerce(key, val)
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    cfg = RunConfig(command=command, **values)
    _validate(cfg)
    return cfg


def config_to_text(cfg: RunConfig) -> str:
    """Canonical key=value document; parsing it reproduces the config."""
    lines = []
    for key, val in cfg.to_dict().items():
        if key == "command":
            continue
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"


def _validate(cfg: RunConfig):
    group = cfg.group_spec()
    lat = cfg.lattice()
    cfg.chain_config()
    if not cfg.beta:
        raise ConfigError("need at least one beta value")
    if cfg.n_seeds < 1:
        raise ConfigError("n_seeds must be >= 1")
    if cfg.n_points < 8:
        raise ConfigError("n_points must be >= 8")
    if cfg.command in ("verify", "enumerate", "oracle"):
        seqs = cfg.sequences(lat)
        if not seqs:
            raise ConfigError("no loop sequences given")
        if cfg.command == "verify":
            for s in seqs:
                if not lat.padded_vertices(s.vertices(lat)):
                    raise ConfigError(
                        f"sequence {sequence_to_text(s, lat)!r} is not padded in the box")
    if cfg.command == "oracle" and (group.kind != "U" or group.n != 1):
        raise ConfigError("oracle supports U(1) only")


class Emitter:
    """JSON-lines writer (stdout and/or file) with an optional CSV summary."""

    def __init__(self, cfg: RunConfig):
        self.cfg_dict = cfg.to_dict()
        self.cfg_dict["version"] = __version__
        self.cfg_dict["backend"] = backend_name()
        self.file = open(cfg.output, "w") if cfg.output else None
        self.to_stdout = True
        self.csv_rows = []
        self.csv_path = cfg.csv

    def emit(self, record_type: str, payload: dict):
        record = {"record": record_type, "config": self.cfg_dict, **payload}
        line = json.dumps(record, sort_keys=True, default=_json_default)
        if self.to_stdout:
            print(line)
        if self.file:
            self.file.write(line + "\n")
        flat = {"record": record_type}
        flat.update({k: v for k, v in payload.items()
                     if isinstance(v, (int, float, str, bool))})
        self.csv_rows.append(flat)

    def close(self):
        if self.file:
            self.file.close()
        if self.csv_path and self.csv_rows:
            keys = sorted({k for row in self.csv_rows for k in row})
            with open(self.csv_path, "w", newline="") as f:
                writer = csv_module.DictWriter(f, fieldnames=keys)
                writer.writeheader()
                writer.writerows(self.csv_rows)


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _estimate_payload(est) -> dict:
    return {"mean_re": float(np.real(est.mean)), "mean_im": float(np.imag(est.mean)),
            "std_error": est.std_error, "n_effective": est.n_effective,
            "batch_count": est.batch_count}


# -- commands -----------------------------------------------------------------

def cmd_verify(cfg: RunConfig, emitter: Emitter) -> int:
    group, lat = cfg.group_spec(), cfg.lattice()
    seqs = cfg.sequences(lat)
    seeds = [cfg.seed + k for k in range(cfg.n_seeds)]
    cells = [(ci, beta, s) for ci, (beta, s)
             in enumerate((b, s) for b in cfg.beta for s in seqs)]

    def run_cell(cell):
        ci, beta, s = cell
        reports, passed = verify_with_seeds(
            group, beta, s, lat, cfg.chain_config(), seeds)
        return ci, beta, s, reports, passed

    n_workers = max(1, int(os.environ.get("YMLOOPS_THREADS", "1")))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(c) for c in cells]

    all_passed = True
    for ci, beta, s, reports, passed in sorted(results, key=lambda r: r[0]):
        for rep in reports:
            emitter.emit("master_equation", rep.to_record())
        emitter.emit("cell_summary", {
            "cell": ci, "beta": beta, "s": sequence_to_text(s, lat),
            "seeds": seeds, "n_pass": sum(r.passed for r in reports),
            "n_seeds": len(reports),
            "n_effective_total": sum(r.n_effective for r in reports),
            "passed": passed,
        })
        all_passed = all_passed and passed
    return EXIT_PASS if all_passed else EXIT_STATISTICAL


def cmd_sample(cfg: RunConfig, emitter: Emitter) -> int:
    group, lat = cfg.group_spec(), cfg.lattice()
    names = [o.strip() for o in cfg.observables.split(",") if o.strip()]
    builtin = [o for o in names if not o.startswith("loop:")]
    custom = [o for o in names if o.startswith("loop:")]
    for beta in cfg.beta:
        loops, reducers = basket_reducers(lat, group, beta, tuple(builtin))
        offset = len(loops)
        custom_loops = []
        for obs in custom:
            seq = parse_sequence_text(obs[len("loop:"):], lat)
            idxs = []
            for l in seq.loops:
                idxs.append(offset + len(custom_loops))
                custom_loops.append(l)
            reducers[obs] = (lambda ix, m: lambda tr: np.prod(
                tr[:, ix], axis=1) / group.n ** m)(tuple(idxs), seq.m)
        results = run_chain(cfg.chain_config(), lat, group, beta, loops + custom_loops)
        for name, fn in reducers.items():
            est = pooled_estimate([fn(r.traces) for r in results])
            payload = {"beta": beta, "observable": name, "seed": cfg.seed,
                       "acceptance": float(np.mean([r.acceptance for r in results]))}
            payload.update(_estimate_payload(est))
            emitter.emit("estimate", payload)
    return EXIT_PASS


def cmd_enumerate(cfg: RunConfig, emitter: Emitter) -> int:
    lat = cfg.lattice()
    for s in cfg.sequences(lat):
        sets = build_operation_sets(s, lat)
        counts = {k: len(v) for k, v in sets.items()}
        listing = {}
        for name, seqs in sets.items():
            grouped = {}
            for sp in seqs:
                key = "; ".join(
                    " | ".join(str(c) for c in edges) for edges in sp.key()) or "<empty>"
                text = sequence_to_text(sp, lat) or "<empty>"
                grouped.setdefault(key, [text, 0])
                grouped[key][1] += 1
            listing[name] = [{"s": text, "multiplicity": mult}
                             for text, mult in grouped.values()]
        emitter.emit("operation_sets", {
            "s": sequence_to_text(s, lat), "length": s.length,
            "counts": counts, "listing": listing,
        })
    return EXIT_PASS


def cmd_oracle(cfg: RunConfig, emitter: Emitter) -> int:
    lat = cfg.lattice()
    spec = gauge_fix(lat, n_points=cfg.n_points)
    for s in cfg.sequences(lat):
        for beta in cfg.beta:
            phi = exact_phi_u1(lat, beta, s, spec)
            emitter.emit("oracle", {
                "s": sequence_to_text(s, lat), "beta": beta,
                "phi_re": phi.real, "phi_im": phi.imag,
                "n_points": cfg.n_points,
                "n_free_edges": lat.n_edges - len(spec.gauge_tree),
            })
    return EXIT_PASS


def cmd_check_sde(cfg: RunConfig, emitter: Emitter) -> int:
    group, lat = cfg.group_spec(), cfg.lattice()
    rng = chain_rng(cfg.seed)
    ok = True

    defect = basis_identity_defect(group)
    emitter.emit("basis_identity", {"defect": defect, "passed": defect < 1e-10})
    ok = ok and defect < 1e-10

    cov = noise_covariance_check(group, max(cfg.n_samples, 10000), rng)
    emitter.emit("noise_covariance", {
        "n_draws": cov.n_draws, "max_z": cov.max_z, "passed": cov.passed})
    ok = ok and cov.passed

    n = group.n
    for rep in range(3):
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        nn = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        mf = magic_formula_check(group, m, nn, cfg.step_size,
                                 max(cfg.n_samples, 10000), rng)
        emitter.emit("magic_formula", {
            "trial": rep, "n_draws": mf.n_draws,
            "max_z_quadratic": mf.max_z_quadratic, "max_z_trace": mf.max_z_trace,
            "passed": mf.passed})
        ok = ok and mf.passed

    beta = cfg.beta[0]
    cfg_l = dataclasses.replace(
        cfg.chain_config(), scheme="langevin",
        burn_in=max(cfg.burn_in, int(round(10 / cfg.step_size))),
        thinning=max(1, int(round(0.5 / cfg.step_size))))
    try:
        reports = stationarity_check(group, beta, lat, cfg.chain_config(), cfg_l)
    except ConfigError as exc:
        raise ConfigError(f"stationarity check: {exc}") from exc
    for obs, rep in reports.items():
        emitter.emit("stationarity", {
            "observable": obs, "beta": beta,
            "metropolis": _estimate_payload(rep.metropolis),
            "langevin_h": _estimate_payload(rep.langevin_h),
            "langevin_h2": _estimate_payload(rep.langevin_h2),
            "h": rep.h, "z_extrapolated": rep.z_extrapolated,
            "bias_shrinks": rep.bias_shrinks, "passed": rep.passed})
        ok = ok and rep.passed
    return EXIT_PASS if ok else EXIT_STATISTICAL


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ymloops",
        description="lattice Yang-Mills sampling and master-loop-equation checks")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key=value configuration file")
    for f in dataclasses.fields(RunConfig):
        if f.name != "command":
            parser.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name)
    args = parser.parse_args(argv)

    try:
        text = ""
        if args.config:
            with open(args.config) as fh:
                text = fh.read()
        overrides = {f.name: getattr(args, f.name)
                     for f in dataclasses.fields(RunConfig)
                     if f.name != "command" and getattr(args, f.name) is not None}
        cfg = parse_config(text, args.command, overrides)
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    emitter = Emitter(cfg)
    try:
        handler = {
            "verify": cmd_verify,
            "sample": cmd_sample,
            "enumerate": cmd_enumerate,
            "oracle": cmd_oracle,
            "check-sde": cmd_check_sde,
        }[cfg.command]
        return handler(cfg, emitter)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFaultError as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        emitter.close()


if __name__ == "__main__":
    sys.exit(main())
