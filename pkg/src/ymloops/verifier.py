"""Statistical verification of the master loop equations and noise identities.

For a padded loop sequence s the three equations tested here are, with
phi(s) = E[W_s / N^m] and the operation multisets of :mod:`ymloops.loops`:

  SO(N):  (N-1)|s| phi(s) = Nbeta [D- - D+] + N [S- - S+] + [T- - T+]
                            + (1/N) [M- - M+]
  U(N):   N|s| phi(s)     = (Nbeta/2) [D- - D+] + N [S- - S+]
                            + (1/N) [MU- - MU+]
  SU(N):  (N|s| - l(s)/N) phi(s) = (Nbeta/2) [D- - D+] + N [S- - S+]
                            + (Nbeta/2) [E- - E+] + (1/N) [MU- - MU+]

where [X] abbreviates the sum of phi(s') over the multiset X(s).  Every
phi is estimated on one shared sample stream and the identity is tested as a
single per-sample residual series, so term correlations tighten the error
bar.  The residual's real part carries the test (both sides have real
expectation by conjugation symmetry of the measure); the imaginary part is
reported as a diagnostic.

Also here: empirical checks of the algebra-increment covariance, of the
quadratic/trace noise identities ("magic formulas")

  E[dB M dB]         = (lambda Tr(M) I + nu M + mu M^t) dt
  E[Tr(dB M)Tr(dB N)] = (lambda Tr(MN) + nu Tr(M)Tr(N) + mu Tr(M N^t)) dt

and Metropolis-vs-Langevin stationarity comparisons with Richardson
extrapolation in the Langevin step size.
"""

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .groups import GroupSpec, algebra_basis, group_constants, sample_algebra_gaussian
from .lattice import Lattice
from .loops import Loop, LoopSequence, build_operation_sets, lengths_and_windings, sequence_to_text
from .samplers import ChainConfig, MCEstimate, pooled_estimate, run_chain

__all__ = [
    "term_coefficients",
    "lhs_prefactor",
    "phi_hat",
    "TermReport",
    "MasterEquationReport",
    "verify_master_equation",
    "verify_with_seeds",
    "MagicFormulaReport",
    "magic_formula_check",
    "noise_covariance_check",
    "basis_identity_defect",
    "sampler_agreement",
    "stationarity_check",
]

SIGMA_THRESHOLD = 3.0


def term_coefficients(group: GroupSpec, beta: float) -> dict:
    """RHS coefficient of each operation multiset, keyed by set name."""
    n = group.n
    if group.kind == "SO":
        return {"D-": n * beta, "D+": -n * beta, "S-": float(n), "S+": -float(n),
                "T-": 1.0, "T+": -1.0, "M-": 1.0 / n, "M+": -1.0 / n}
    coeffs = {"D-": n * beta / 2, "D+": -n * beta / 2, "S-": float(n), "S+": -float(n),
              "MU-": 1.0 / n, "MU+": -1.0 / n}
    if group.kind == "SU":
        coeffs.update({"E-": n * beta / 2, "E+": -n * beta / 2})
    return coeffs


def lhs_prefactor(group: GroupSpec, s: LoopSequence) -> float:
    """(N-1)|s| for SO, N|s| for U, N|s| - l(s)/N for SU."""
    n = group.n
    length, _, ell = lengths_and_windings(s)
    if group.kind == "SO":
        return float((n - 1) * length)
    if group.kind == "U":
        return float(n * length)
    return n * length - ell / n


def phi_hat(per_chain_ws: list, m_prime: int, n_dim: int) -> MCEstimate:
    """Estimate phi(s') = E[W_{s'}/N^{m'}] from per-chain W series."""
    if not per_chain_ws or per_chain_ws[0].size == 0:
        raise ValueError("empty sample set")
    scale = float(n_dim) ** m_prime
    return pooled_estimate([np.asarray(w) / scale for w in per_chain_ws])


@dataclass
class TermReport:
    coefficient: float
    set_size: int
    estimate: MCEstimate  # of sum over the multiset of phi(s')


@dataclass
class MasterEquationReport:
    group: str
    n: int
    beta: float
    s_text: str
    lhs_prefactor: float
    phi_s: MCEstimate
    lhs: MCEstimate
    rhs_terms: dict
    residual: float
    residual_sigma: float
    residual_imag: float
    residual_imag_sigma: float
    n_effective: int
    seed: int
    n_samples: int
    acceptance: float

    @property
    def passed(self) -> bool:
        return abs(self.residual) <= SIGMA_THRESHOLD * self.residual_sigma

    def to_record(self) -> dict:
        terms = {
            name: {
                "coefficient": t.coefficient,
                "set_size": t.set_size,
                "mean_re": float(np.real(t.estimate.mean)),
                "mean_im": float(np.imag(t.estimate.mean)),
                "std_error": t.estimate.std_error,
            }
            for name, t in self.rhs_terms.items()
        }
        return {
            "group": self.group, "n": self.n, "beta": self.beta, "s": self.s_text,
            "lhs_prefactor": self.lhs_prefactor,
            "phi_mean_re": float(np.real(self.phi_s.mean)),
            "phi_mean_im": float(np.imag(self.phi_s.mean)),
            "phi_std_error": self.phi_s.std_error,
            "lhs_mean": float(np.real(self.lhs.mean)),
            "lhs_se": self.lhs.std_error,
            "terms": terms,
            "residual": self.residual,
            "residual_sigma": self.residual_sigma,
            "residual_imag": self.residual_imag,
            "residual_imag_sigma": self.residual_imag_sigma,
            "n_effective": self.n_effective,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "acceptance": self.acceptance,
            "passed": self.passed,
        }


def _compile_sequences(s: LoopSequence, sets: dict, coeffs: dict):
    """Dedupe loops and sequences into an evaluation program.

    Returns (loops, target, programs) where target = (loop idxs, m) for s and
    programs[name] = list of (count, loop idxs, m) per distinct outcome class.
    """
    loop_index = {}

    def reg(loop: Loop) -> int:
        return loop_index.setdefault(loop.edges, len(loop_index))

    def seq_entry(seq: LoopSequence):
        return tuple(sorted(reg(l) for l in seq.loops)), seq.m

    target = seq_entry(s)
    programs = {}
    for name in coeffs:
        grouped = {}
        for seq in sets[name]:
            entry = seq_entry(seq)
            grouped[entry] = grouped.get(entry, 0) + 1
        programs[name] = [(count, idxs, m) for (idxs, m), count in grouped.items()]
    loops = [Loop(edges) for edges, _ in sorted(loop_index.items(), key=lambda kv: kv[1])]
    return loops, target, programs


def _sequence_series(traces: np.ndarray, idxs, m: int, n_dim: int) -> np.ndarray:
    w = np.ones(traces.shape[0], dtype=np.complex128)
    for k in idxs:
        w = w * traces[:, k]
    return w / float(n_dim) ** m


def verify_master_equation(group: GroupSpec, beta: float, s: LoopSequence,
                           lat: Lattice, cfg: ChainConfig) -> MasterEquationReport:
    """Estimate every term of the group's master equation on shared samples.

    Refuses to run when the padding hypothesis fails (the identity needs every
    plaquette within distance one of the loops to be present).
    """
    sets = build_operation_sets(s, lat)  # raises ConfigError when not padded
    coeffs = term_coefficients(group, beta)
    pref = lhs_prefactor(group, s)
    loops, target, programs = _compile_sequences(s, sets, coeffs)

    results = run_chain(cfg, lat, group, beta, loops)
    n_dim = group.n

    per_chain_resid = []
    per_chain_ws = []
    term_sum_per_chain = {name: [] for name in coeffs}
    for r in results:
        ws = _sequence_series(r.traces, target[0], target[1], n_dim)
        resid = pref * ws
        for name, entries in programs.items():
            total = np.zeros(r.traces.shape[0], dtype=np.complex128)
            for count, idxs, m in entries:
                total += count * _sequence_series(r.traces, idxs, m, n_dim)
            term_sum_per_chain[name].append(total)
            resid = resid - coeffs[name] * total
        per_chain_ws.append(ws)
        per_chain_resid.append(resid)

    phi_s = pooled_estimate(per_chain_ws)
    lhs = pooled_estimate([pref * w for w in per_chain_ws])
    terms = {}
    for name in coeffs:
        est = pooled_estimate(term_sum_per_chain[name]) if sets[name] else \
            MCEstimate(0.0 + 0.0j, 0.0, cfg.n_samples * cfg.n_chains, 0)
        terms[name] = TermReport(coeffs[name], len(sets[name]), est)

    res_re = pooled_estimate([r.real.copy() for r in per_chain_resid])
    res_im = pooled_estimate([r.imag.copy() for r in per_chain_resid])
    acceptance = float(np.mean([r.acceptance for r in results]))
    return MasterEquationReport(
        group=group.kind, n=group.n, beta=beta, s_text=sequence_to_text(s, lat),
        lhs_prefactor=pref, phi_s=phi_s, lhs=lhs, rhs_terms=terms,
        residual=float(np.real(res_re.mean)), residual_sigma=res_re.std_error,
        residual_imag=float(np.real(res_im.mean)), residual_imag_sigma=res_im.std_error,
        n_effective=res_re.n_effective, seed=cfg.seed,
        n_samples=cfg.n_samples * cfg.n_chains, acceptance=acceptance)


def verify_with_seeds(group: GroupSpec, beta: float, s: LoopSequence, lat: Lattice,
                      cfg: ChainConfig, seeds) -> tuple:
    """Run one report per seed; the cell passes when a majority pass at 3 sigma."""
    reports = [verify_master_equation(group, beta, s, lat,
                                      dataclasses.replace(cfg, seed=seed))
               for seed in seeds]
    n_pass = sum(r.passed for r in reports)
    return reports, n_pass > len(reports) / 2


# -- noise identities ---------------------------------------------------------

def _z_scores(samples: np.ndarray, theory: np.ndarray):
    """Entrywise |mean - theory| / se, real and imaginary parts separately."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    se_re = samples.real.std(axis=0, ddof=1) / np.sqrt(n)
    se_im = samples.imag.std(axis=0, ddof=1) / np.sqrt(n)
    dev_re = np.abs(mean.real - theory.real)
    dev_im = np.abs(mean.imag - theory.imag)
    z_re = np.where(se_re > 0, dev_re / np.maximum(se_re, 1e-300), np.where(dev_re > 1e-12, np.inf, 0.0))
    z_im = np.where(se_im > 0, dev_im / np.maximum(se_im, 1e-300), np.where(dev_im > 1e-12, np.inf, 0.0))
    return float(max(z_re.max(), z_im.max()))


@dataclass
class MagicFormulaReport:
    group: str
    n: int
    n_draws: int
    max_z_quadratic: float
    max_z_trace: float

    @property
    def passed(self) -> bool:
        return max(self.max_z_quadratic, self.max_z_trace) <= SIGMA_THRESHOLD


def magic_formula_check(group: GroupSpec, m_mat: np.ndarray, n_mat: np.ndarray,
                        h: float, n_draws: int, rng: np.random.Generator
                        ) -> MagicFormulaReport:
    """Empirical dB M dB / h and Tr(dB M)Tr(dB N)/h against the magic formulas."""
    if n_draws < 2:
        raise ValueError("need at least 2 draws")
    n = group.n
    _, lam, nu, mu = group_constants(group)
    theory_q = lam * np.trace(m_mat) * np.eye(n) + nu * m_mat + mu * m_mat.T
    theory_t = np.array([[lam * np.trace(m_mat @ n_mat)
                          + nu * np.trace(m_mat) * np.trace(n_mat)
                          + mu * np.trace(m_mat @ n_mat.T)]])
    quad = np.empty((n_draws, n, n), dtype=np.complex128)
    tra = np.empty((n_draws, 1, 1), dtype=np.complex128)
    done = 0
    while done < n_draws:
        c = min(1 << 14, n_draws - done)
        db = np.sqrt(h) * sample_algebra_gaussian(group, rng, size=c)
        quad[done:done + c] = np.einsum("cij,jk,ckl->cil", db, m_mat, db) / h
        t1 = np.einsum("cij,ji->c", db, m_mat)
        t2 = np.einsum("cij,ji->c", db, n_mat)
        tra[done:done + c, 0, 0] = t1 * t2 / h
        done += c
    return MagicFormulaReport(group.kind, n, n_draws,
                              _z_scores(quad, theory_q.astype(np.complex128)),
                              _z_scores(tra, theory_t.astype(np.complex128)))


@dataclass
class CovarianceReport:
    group: str
    n: int
    n_draws: int
    max_z: float

    @property
    def passed(self) -> bool:
        return self.max_z <= SIGMA_THRESHOLD


def covariance_theory(group: GroupSpec) -> np.ndarray:
    """E[X^ij X^kl] tensor implied by (lambda, nu, mu), shape (n, n, n, n)."""
    n = group.n
    _, lam, nu, mu = group_constants(group)
    d = np.eye(n)
    return (lam * np.einsum("il,jk->ijkl", d, d)
            + nu * np.einsum("ij,kl->ijkl", d, d)
            + mu * np.einsum("ik,jl->ijkl", d, d))


def noise_covariance_check(group: GroupSpec, n_draws: int,
                           rng: np.random.Generator) -> CovarianceReport:
    """Empirical entrywise covariance of algebra increments at 3 sigma."""
    n = group.n
    theory = covariance_theory(group).reshape(n * n, n * n).astype(np.complex128)
    sum_p = np.zeros((n * n, n * n), dtype=np.complex128)
    sum_re2 = np.zeros((n * n, n * n))
    sum_im2 = np.zeros((n * n, n * n))
    done = 0
    while done < n_draws:
        c = min(1 << 14, n_draws - done)
        x = sample_algebra_gaussian(group, rng, size=c).reshape(c, n * n)
        prods = np.einsum("ci,cj->cij", x, x)
        sum_p += prods.sum(axis=0)
        sum_re2 += (prods.real ** 2).sum(axis=0)
        sum_im2 += (prods.imag ** 2).sum(axis=0)
        done += c
    mean = sum_p / n_draws
    var_re = np.maximum(sum_re2 / n_draws - mean.real ** 2, 0.0)
    var_im = np.maximum(sum_im2 / n_draws - mean.imag ** 2, 0.0)
    se_re = np.sqrt(var_re / n_draws)
    se_im = np.sqrt(var_im / n_draws)
    z_re = np.where(se_re > 0, np.abs(mean.real - theory.real) / np.maximum(se_re, 1e-300),
                    np.where(np.abs(mean.real - theory.real) > 1e-12, np.inf, 0.0))
    z_im = np.where(se_im > 0, np.abs(mean.imag - theory.imag) / np.maximum(se_im, 1e-300),
                    np.where(np.abs(mean.imag - theory.imag) > 1e-12, np.inf, 0.0))
    return CovarianceReport(group.kind, n, n_draws, float(max(z_re.max(), z_im.max())))


def basis_identity_defect(group: GroupSpec) -> float:
    """max | sum_a v_a^2 - c_g I | over entries, for the constructed basis."""
    c_g = group_constants(group)[0]
    basis = algebra_basis(group)
    acc = np.einsum("aij,ajk->ik", basis, basis)
    return float(np.max(np.abs(acc - c_g * np.eye(group.n))))


# -- sampler cross-validation -------------------------------------------------

def plaquette_loops(lat: Lattice) -> list:
    return [Loop(tuple(int(c) for c in p)) for p in lat.plaq_pos]


def rectangle_loops(lat: Lattice) -> list:
    """All 2x1 / 1x2 rectangle loops that fit in the box."""
    out = []
    for vid in range(lat.n_vertices):
        for long_axis in range(lat.d):
            for short_axis in range(lat.d):
                if long_axis == short_axis:
                    continue
                try:
                    codes = []
                    v = vid
                    for axis, sign in ((long_axis, 1), (long_axis, 1), (short_axis, 1),
                                       (long_axis, -1), (long_axis, -1), (short_axis, -1)):
                        c = lat.directed_edge(v, axis, sign)
                        codes.append(c)
                        v = lat.edge_endpoints(c)[1]
                except ValueError:
                    continue
                out.append(Loop(tuple(codes)))
    return out


@dataclass
class AgreementReport:
    observable: str
    metropolis: MCEstimate
    langevin_h: MCEstimate
    langevin_h2: MCEstimate
    h: float
    z_extrapolated: float
    bias_shrinks: bool

    @property
    def passed(self) -> bool:
        return self.z_extrapolated <= SIGMA_THRESHOLD and self.bias_shrinks


def basket_reducers(lat: Lattice, group: GroupSpec, beta: float,
                    observables=("plaquette", "rect21", "action_density")):
    """(loop list, {name: traces -> real series}) for the standard basket."""
    ploops = plaquette_loops(lat)
    rloops = rectangle_loops(lat)
    n, np_, nr = group.n, len(ploops), len(rloops)

    def make(obs):
        if obs == "plaquette":
            return lambda tr: tr[:, :np_].real.mean(axis=1) / n
        if obs == "rect21":
            if nr == 0:
                raise ConfigError("box too small for 2x1 rectangles")
            return lambda tr: tr[:, np_:np_ + nr].real.mean(axis=1) / n
        if obs == "action_density":
            return lambda tr: n * beta * tr[:, :np_].real.mean(axis=1)
        raise ConfigError(f"unknown observable {obs!r}")

    return ploops + rloops, {obs: make(obs) for obs in observables}


def sampler_agreement(group: GroupSpec, beta: float, lat: Lattice,
                      cfg_metropolis: ChainConfig, cfg_langevin: ChainConfig,
                      observables=("plaquette",)) -> dict:
    """Metropolis vs Langevin at h and h/2 with Richardson extrapolation.

    An observable passes when the h->0 extrapolated Langevin mean agrees with
    Metropolis at 3 combined sigma and the measured bias does not grow when h
    is halved (within a 3 sigma noise guard).  All observables are measured
    on the same three chain runs.  Returns {observable: AgreementReport}.
    """
    loops, reducers = basket_reducers(lat, group, beta, observables)
    h = cfg_langevin.step_size
    cfg_h2 = dataclasses.replace(cfg_langevin, step_size=h / 2,
                                 seed=cfg_langevin.seed + 1,
                                 burn_in=cfg_langevin.burn_in * 2,
                                 thinning=cfg_langevin.thinning * 2)
    runs = {
        "m": run_chain(cfg_metropolis, lat, group, beta, loops),
        "h": run_chain(cfg_langevin, lat, group, beta, loops),
        "h2": run_chain(cfg_h2, lat, group, beta, loops),
    }
    out = {}
    for obs, reducer in reducers.items():
        est_m, est_h, est_h2 = (
            pooled_estimate([reducer(r.traces) for r in runs[k]])
            for k in ("m", "h", "h2"))
        extrap = 2 * np.real(est_h2.mean) - np.real(est_h.mean)
        se_ext = float(np.sqrt(4 * est_h2.std_error ** 2 + est_h.std_error ** 2))
        z = abs(extrap - np.real(est_m.mean)) / np.sqrt(se_ext ** 2 + est_m.std_error ** 2)
        bias_h = abs(np.real(est_h.mean) - np.real(est_m.mean))
        bias_h2 = abs(np.real(est_h2.mean) - np.real(est_m.mean))
        guard = SIGMA_THRESHOLD * float(np.sqrt(est_h.std_error ** 2 + est_h2.std_error ** 2
                                                + 2 * est_m.std_error ** 2))
        out[obs] = AgreementReport(obs, est_m, est_h, est_h2, h, float(z),
                                   bool(bias_h2 <= bias_h + guard))
    return out


def stationarity_check(group: GroupSpec, beta: float, lat: Lattice,
                       cfg_metropolis: ChainConfig, cfg_langevin: ChainConfig) -> dict:
    """Long-run Metropolis vs Langevin agreement on the standard basket."""
    reports = sampler_agreement(group, beta, lat, cfg_metropolis, cfg_langevin,
                                ("plaquette", "rect21", "action_density"))
    for obs, rep in reports.items():
        if rep.metropolis.n_effective < 100:
            raise ConfigError(
                f"insufficient effective samples for {obs}: {rep.metropolis.n_effective}")
    return reports
