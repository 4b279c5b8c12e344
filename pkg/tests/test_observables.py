"""Configurations, action, gradient (with finite-difference oracle), Wilson loops."""

import numpy as np
import pytest

from ymloops.groups import (GroupSpec, group_exp, haar_sample, inner_product,
                            project_to_algebra, sample_algebra_gaussian)
from ymloops.lattice import build_lattice, plaquettes_through
from ymloops.loops import Loop, LoopSequence, parse_loop_text
from ymloops.observables import (Configuration, action, drift_algebra,
                                 gauge_transform, grad_action,
                                 plaquette_matrix, wilson_loop,
                                 wilson_sequence)
from ymloops.samplers import chain_rng
from ymloops import kernels

LAT = build_lattice(2, (0, 0), (2, 2))
GROUPS = [GroupSpec("SO", 3), GroupSpec("U", 1), GroupSpec("U", 2),
          GroupSpec("SU", 2), GroupSpec("SU", 3)]


def haar_config(g, seed=0):
    return Configuration.haar(LAT, g, chain_rng(seed))


def fd_directional(config, eid, x, beta, t=1e-6):
    """Central finite difference of the action along exp(t X) at one edge."""
    up, dn = config.copy(), config.copy()
    up.q[eid] = group_exp(t * x) @ up.q[eid]
    dn.q[eid] = group_exp(-t * x) @ dn.q[eid]
    return (action(up, beta) - action(dn, beta)) / (2 * t)


class TestConfiguration:
    def test_identity_and_edge_matrices(self):
        g = GroupSpec("SU", 2)
        config = Configuration.identity(LAT, g)
        assert np.allclose(config.edge_matrix(1), np.eye(2))
        assert np.allclose(config.edge_matrix(-1), np.eye(2))

    def test_negative_edge_is_conjugate_transpose(self):
        config = haar_config(GroupSpec("U", 3))
        m = config.edge_matrix(4)
        assert np.allclose(config.edge_matrix(-4), m.conj().T)

    def test_shape_checked(self):
        with pytest.raises(ValueError):
            Configuration(LAT, GroupSpec("U", 2), np.zeros((3, 2, 2), complex))

    def test_manifold_check(self):
        config = haar_config(GroupSpec("SU", 2))
        assert config.check_manifold() < 1e-12


class TestAction:
    def test_identity_value(self):
        # N beta Tr(I) per canonical plaquette: 0.5 * 3 * 3 * 4
        g = GroupSpec("SU", 3)
        config = Configuration.identity(LAT, g)
        assert action(config, 0.5) == pytest.approx(18.0)

    def test_beta_zero(self):
        config = haar_config(GroupSpec("U", 2))
        assert action(config, 0.0) == 0.0

    def test_u1_single_plaquette_angles(self):
        lat = build_lattice(2, (0, 0), (1, 1))
        g = GroupSpec("U", 1)
        rng = chain_rng(3)
        thetas = rng.uniform(0, 2 * np.pi, size=4)
        q = np.exp(1j * thetas).reshape(4, 1, 1)
        config = Configuration(lat, g, q)
        # canonical path starts along y: theta_p = th(y@00) + th(x@01) - th(y@10) - th(x@00)
        path = lat.plaq_pos[0]
        signed = sum(np.sign(c) * thetas[abs(int(c)) - 1] for c in path)
        assert action(config, 0.8) == pytest.approx(0.8 * np.cos(signed))

    def test_trace_cyclic_and_reversal(self):
        g = GroupSpec("U", 3)
        config = haar_config(g)
        path = tuple(int(c) for c in LAT.plaq_pos[2])
        tr = np.trace(plaquette_matrix(config, path))
        for k in range(1, 4):
            rotated = path[k:] + path[:k]
            assert np.trace(plaquette_matrix(config, rotated)) == pytest.approx(tr)
        reversed_path = tuple(-c for c in reversed(path))
        assert np.trace(plaquette_matrix(config, reversed_path)) == pytest.approx(
            np.conj(tr))


class TestGradient:
    @pytest.mark.parametrize("g", GROUPS, ids=str)
    def test_beta_zero_and_identity_config(self, g):
        config = haar_config(g)
        assert np.abs(grad_action(config, 1, 0.0)).max() == 0.0
        ident = Configuration.identity(LAT, g)
        assert np.abs(grad_action(ident, 1, 0.7)).max() < 1e-14

    @pytest.mark.parametrize("g", GROUPS, ids=str)
    def test_finite_difference_oracle(self, g):
        beta = 0.7
        config = haar_config(g, seed=11)
        rng = chain_rng(12)
        for eid in (0, LAT.n_edges - 1):
            half_grad = grad_action(config, eid + 1, beta)
            drift = half_grad @ config.edge_matrix(eid + 1).conj().T
            for _ in range(4):
                x = sample_algebra_gaussian(g, rng)
                fd = fd_directional(config, eid, x, beta)
                analytic = 2 * inner_product(drift, x)
                assert fd == pytest.approx(analytic, rel=1e-6, abs=1e-9)

    @pytest.mark.parametrize("g", GROUPS, ids=str)
    def test_projection_form_equivalence(self, g):
        # -(N beta/4)(Qp - Qp*)Qe [with SU trace term] equals
        # (N beta/2) proj(Qp*) (Qe*)^-1 summed over plaquettes through e
        beta = 0.9
        config = haar_config(g, seed=21)
        for code in (1, 5, -3):
            acc = np.zeros((g.n, g.n), complex)
            for p in plaquettes_through(LAT, code):
                qp = kernels.path_product(config.q, np.asarray(p, np.int32))
                acc += project_to_algebra(qp.conj().T, g)
            alt = 0.5 * g.n * beta * acc @ config.edge_matrix(code)
            assert np.abs(alt - grad_action(config, code, beta)).max() < 1e-10

    @pytest.mark.parametrize("g", GROUPS, ids=str)
    def test_conjugation_identity(self, g):
        # the gradient at a reversed edge is the conjugate transpose
        config = haar_config(g, seed=31)
        for eid in range(0, LAT.n_edges, 3):
            lhs = grad_action(config, -(eid + 1), 0.6).conj().T
            rhs = grad_action(config, eid + 1, 0.6)
            assert np.abs(lhs - rhs).max() < 1e-10

    @pytest.mark.parametrize("g", GROUPS, ids=str)
    def test_drift_lies_in_algebra(self, g):
        config = haar_config(g, seed=41)
        for eid in (0, 7):
            a = drift_algebra(config, eid, 0.5)
            assert np.abs(a - project_to_algebra(a, g)).max() < 1e-12
            half_grad = grad_action(config, eid + 1, 0.5)
            assert np.abs(a - half_grad @ config.edge_matrix(eid + 1).conj().T).max() < 1e-12


class TestWilson:
    def test_identity_config(self):
        g = GroupSpec("SU", 3)
        config = Configuration.identity(LAT, g)
        l = Loop(tuple(int(c) for c in LAT.plaq_pos[0]))
        assert wilson_loop(config, l) == pytest.approx(3.0)
        s = LoopSequence((l, l))
        assert wilson_sequence(config, s) == pytest.approx(9.0)

    def test_bounded_by_n(self):
        g = GroupSpec("U", 2)
        config = haar_config(g)
        rect = parse_loop_text("(0,0) +x +x +y -x -x -y", LAT)
        assert abs(wilson_loop(config, rect)) <= 2 + 1e-12

    def test_cyclic_invariance(self):
        g = GroupSpec("SU", 2)
        config = haar_config(g)
        path = tuple(int(c) for c in LAT.plaq_pos[1])
        vals = {complex(np.trace(plaquette_matrix(config, path[k:] + path[:k])))
                for k in range(4)}
        assert max(abs(v - wilson_loop(config, Loop(path))) for v in vals) < 1e-12

    def test_empty_sequence_is_one(self):
        g = GroupSpec("U", 2)
        config = haar_config(g)
        assert wilson_sequence(config, LoopSequence(())) == 1.0

    def test_sequence_product(self):
        g = GroupSpec("U", 2)
        config = haar_config(g)
        l1 = Loop(tuple(int(c) for c in LAT.plaq_pos[0]))
        l2 = Loop(tuple(int(c) for c in LAT.plaq_pos[3]))
        assert wilson_sequence(config, LoopSequence((l1, l2))) == pytest.approx(
            wilson_loop(config, l1) * wilson_loop(config, l2))


class TestGaugeInvariance:
    @pytest.mark.parametrize("g", [GroupSpec("SO", 3), GroupSpec("U", 2),
                                   GroupSpec("SU", 2)], ids=str)
    def test_action_and_loops_invariant(self, g):
        rng = chain_rng(77)
        config = haar_config(g, seed=78)
        site = np.stack([haar_sample(g, rng) for _ in range(LAT.n_vertices)])
        transformed = gauge_transform(config, site)
        assert action(transformed, 0.8) == pytest.approx(action(config, 0.8), abs=1e-10)
        for path in LAT.plaq_pos[:2]:
            l = Loop(tuple(int(c) for c in path))
            assert wilson_loop(transformed, l) == pytest.approx(
                wilson_loop(config, l), abs=1e-10)
        rect = parse_loop_text("(0,0) +x +x +y -x -x -y", LAT)
        assert wilson_loop(transformed, rect) == pytest.approx(
            wilson_loop(config, rect), abs=1e-10)
