"""Loop algebra: erasure, canonical forms, windings, the five operations."""

import numpy as np
import pytest

from ymloops.errors import ConfigError
from ymloops.lattice import build_lattice, plaquettes_through
from ymloops.loops import (Loop, LoopSequence, backtrack_erase,
                           build_operation_sets, deform_loop, expansion_sets,
                           lengths_and_windings, loop_to_text, merge_loops,
                           parse_loop_text, parse_sequence_text,
                           sequence_to_text, split_loop, twist_loop)

# padded boxes for the standard test sequences
LAT = build_lattice(2, (-1, -1), (2, 2))      # plaquette at origin padded
LAT_W = build_lattice(2, (-1, -1), (3, 2))    # 2x1 rectangle / adjacent pair padded


def plaquette(lat=LAT):
    return parse_loop_text("(0,0) +x +y -x -y", lat)


def random_closed_cycle(lat, rng, n_steps=12):
    """Random closed walk: out-and-back segments guarantee closure."""
    vid = lat.vertex_id((0, 0))
    codes = []
    for _ in range(n_steps // 2):
        for sign in (+1, -1):
            axis = int(rng.integers(lat.d))
            try:
                c = lat.directed_edge(vid, axis, +1 if sign > 0 else -1)
            except ValueError:
                c = lat.directed_edge(vid, axis, -1 if sign > 0 else +1)
            codes.append(c)
            vid = lat.edge_endpoints(c)[1]
    # walk back to start along the reversed prefix
    back = [-c for c in reversed(codes)]
    return codes + back


class TestBacktrackErase:
    def test_single_erasure(self):
        # a e e^-1 b with matching endpoints collapses to [ab]
        l = plaquette()
        e = LAT.directed_edge(LAT.edge_endpoints(l.edges[1])[0], 0, +1)
        cycle = (l.edges[0], e, -e) + l.edges[1:]
        assert backtrack_erase(cycle, LAT) == l

    def test_null(self):
        assert backtrack_erase((5, -5)) is None
        assert backtrack_erase((1, 2, -2, -1)) is None

    def test_fixed_point(self):
        l = plaquette()
        assert backtrack_erase(l.edges, LAT) == l

    def test_not_closed_rejected(self):
        with pytest.raises(ValueError):
            backtrack_erase((1, 2), LAT)

    def test_random_cycles_idempotent_and_clean(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            cycle = random_closed_cycle(LAT, rng)
            out = backtrack_erase(cycle, LAT)
            if out is None:
                continue
            assert len(out.edges) <= len(cycle)
            n = len(out.edges)
            for i in range(n):
                assert out.edges[(i + 1) % n] != -out.edges[i]
            assert backtrack_erase(out.edges, LAT) == out


class TestCanonicalForm:
    def test_rotation_invariance(self):
        l = plaquette()
        for k in range(4):
            rotated = l.edges[k:] + l.edges[:k]
            assert Loop(rotated) == l

    def test_reversal_distinct_but_involutive(self):
        l = plaquette()
        assert l.reversed().reversed() == l
        assert l.reversed() != l

    def test_backtrack_rejected(self):
        with pytest.raises(ValueError):
            Loop((1, -1, 2))
        with pytest.raises(ValueError):
            Loop(())


class TestLengthsWindings:
    def test_single_plaquette(self):
        s = LoopSequence((plaquette(),))
        length, table, ell = lengths_and_windings(s)
        assert (length, ell) == (4, 4)
        assert sorted(sum(t) for t in table.values()) == [-1, -1, 1, 1]

    def test_doubled_plaquette(self):
        l = plaquette()
        s = LoopSequence((Loop(l.edges + l.edges),))
        length, _, ell = lengths_and_windings(s)
        assert (length, ell) == (8, 16)

    def test_loop_and_reversal_cancel(self):
        l = plaquette()
        s = LoopSequence((l, l.reversed()))
        length, table, ell = lengths_and_windings(s)
        assert (length, ell) == (8, 0)
        assert all(sum(t) == 0 for t in table.values())

    def test_invariant_under_loop_permutation(self):
        l1, l2 = plaquette(LAT_W), parse_loop_text("(1,0) +x +y -x -y", LAT_W)
        a = lengths_and_windings(LoopSequence((l1, l2)))
        b = lengths_and_windings(LoopSequence((l2, l1)))
        assert (a[0], a[2]) == (b[0], b[2])


class TestSplit:
    def test_doubled_plaquette_positive_split(self):
        l = plaquette()
        dbl = Loop(l.edges + l.edges)
        e0 = dbl.edges[0]
        x, y = [i for i, c in enumerate(dbl.edges) if c == e0]
        a, b = split_loop(dbl, x, y)
        assert a == l and b == l  # two cyclically equivalent plaquette loops

    def test_ordered_pair_gives_same_classes(self):
        l = plaquette()
        dbl = Loop(l.edges + l.edges)
        x, y = [i for i, c in enumerate(dbl.edges) if c == dbl.edges[0]]
        assert set(split_loop(dbl, x, y)) == set(split_loop(dbl, y, x))

    def test_negative_split_formal_commutator(self):
        # l = e f e^-1 f^-1 at the (e, e^-1) slots -> ([f^-1], [f])
        l = Loop((1, 2, -1, -2))
        x = l.edges.index(1)
        y = l.edges.index(-1)
        a, b = split_loop(l, x, y)
        assert {a.edges, b.edges} == {(2,), (-2,)}

    def test_negative_split_single_edge_components(self):
        # a e b e^-1 c with single-edge b and c: components are [c], [b]
        l = Loop((1, 2, -1, 3))
        x, y = l.edges.index(1), l.edges.index(-1)
        a, b = split_loop(l, x, y)
        assert {a.edges, b.edges} == {(2,), (3,)}

    def test_bad_locations(self):
        l = plaquette()
        with pytest.raises(ValueError):
            split_loop(l, 0, 1)
        with pytest.raises(ValueError):
            split_loop(l, 0, 0)


class TestTwist:
    def test_same_edge_twist_of_doubled_plaquette_is_null(self):
        # [a b^-1 c] with a empty, c = b: the reversed mid-section cancels
        l = plaquette()
        dbl = Loop(l.edges + l.edges)
        x, y = [i for i, c in enumerate(dbl.edges) if c == dbl.edges[0]]
        assert twist_loop(dbl, x, y) is None

    def test_positive_twist_reverses_mid_section(self):
        # e at x, e^-1 at y: twist keeps both and reverses the path between
        l = Loop((1, 2, -1, 3))
        x, y = l.edges.index(1), l.edges.index(-1)
        assert twist_loop(l, x, y) == Loop((1, -2, -1, 3))

    def test_twist_ordered_pairs_are_reversals(self):
        l = Loop((1, 2, -1, 3))
        t_xy = twist_loop(l, 0, 2)
        t_yx = twist_loop(l, 2, 0)
        assert t_yx == t_xy.reversed()


class TestMergeDeform:
    def test_adjacent_plaquettes_negative_merger_is_rectangle(self):
        p1 = plaquette(LAT_W)
        p2 = parse_loop_text("(1,0) +x +y -x -y", LAT_W)
        shared = [(x, y) for x, e in enumerate(p1.edges)
                  for y, f in enumerate(p2.edges) if f == -e]
        assert len(shared) == 1
        x, y = shared[0]
        rect = parse_loop_text("(0,0) +x +x +y -x -x -y", LAT_W)
        assert merge_loops(p1, p2, x, y, positive=False) == rect

    def test_merge_with_reversal_cancels(self):
        p = plaquette()
        pr = p.reversed()
        x = 0
        e = p.edges[0]
        y = pr.edges.index(-e)
        assert merge_loops(p, pr, x, y, positive=False) is None

    def test_deform_by_own_plaquette_is_null(self):
        p = plaquette()
        path = [q for q in plaquettes_through(LAT, p.edges[0]) if Loop(q) == p][0]
        assert deform_loop(p, 0, path, positive=False) is None

    def test_deform_adds_four_edges_without_erasure(self):
        p = plaquette()
        others = [q for q in plaquettes_through(LAT, p.edges[0]) if Loop(q) != p]
        out = deform_loop(p, 0, others[0], positive=True)
        assert len(out.edges) == len(p.edges) + 4

    def test_deform_accepts_reversed_plaquette(self):
        p = plaquette()
        path = plaquettes_through(LAT, -p.edges[0])[0]
        out_pos = deform_loop(p, 0, path, positive=True)
        assert out_pos is None or isinstance(out_pos, Loop)


class TestOperationSets:
    def test_plaquette_counts(self):
        s = LoopSequence((plaquette(),))
        counts = {k: len(v) for k, v in build_operation_sets(s, LAT).items()}
        assert counts == {"S+": 0, "S-": 0, "T+": 0, "T-": 0, "M+": 0, "M-": 0,
                          "MU+": 0, "MU-": 0, "D+": 8, "D-": 8, "E+": 8, "E-": 8}

    def test_rectangle_counts(self):
        s = parse_sequence_text("(0,0) +x +x +y -x -x -y", LAT_W)
        counts = {k: len(v) for k, v in build_operation_sets(s, LAT_W).items()}
        assert counts == {"S+": 0, "S-": 0, "T+": 0, "T-": 0, "M+": 0, "M-": 0,
                          "MU+": 0, "MU-": 0, "D+": 12, "D-": 12, "E+": 12, "E-": 12}

    def test_adjacent_pair_counts(self):
        s = parse_sequence_text("(0,0) +x +y -x -y; (1,0) +x +y -x -y", LAT_W)
        counts = {k: len(v) for k, v in build_operation_sets(s, LAT_W).items()}
        assert counts == {"S+": 0, "S-": 0, "T+": 0, "T-": 0, "M+": 2, "M-": 2,
                          "MU+": 0, "MU-": 2, "D+": 16, "D-": 16, "E+": 16, "E-": 16}

    def test_doubled_plaquette_counts(self):
        l = plaquette()
        s = LoopSequence((Loop(l.edges + l.edges),))
        counts = {k: len(v) for k, v in build_operation_sets(s, LAT).items()}
        # 4 repeated edges x 2 ordered location pairs
        assert counts["S+"] == 8 and counts["S-"] == 0
        assert counts["T-"] == 8 and counts["T+"] == 0
        assert counts["D+"] == counts["D-"] == 16
        assert counts["E+"] == counts["E-"] == 16

    def test_same_plaquette_pair_mergers(self):
        l = plaquette()
        sets = build_operation_sets(LoopSequence((l, l)), LAT)
        # ordered loop pairs x 4 shared edges: same-edge mergers only
        assert len(sets["MU+"]) == 8 and len(sets["MU-"]) == 0
        assert len(sets["M+"]) == 8 and len(sets["M-"]) == 8
        # same-edge positive mergers land in the restricted set
        assert all(any(sp.key() == mu.key() for mu in sets["MU+"]) for sp in sets["M+"])

    def test_counts_even_for_single_loop(self):
        rng = np.random.default_rng(3)
        lat = build_lattice(2, (-2, -2), (3, 3))
        for _ in range(10):
            loop = backtrack_erase(random_closed_cycle(lat, rng, 10))
            if loop is None or not lat.padded_vertices(
                    LoopSequence((loop,)).vertices(lat)):
                continue
            sets = build_operation_sets(LoopSequence((loop,)), lat)
            for k in ("S+", "S-", "T+", "T-"):
                assert len(sets[k]) % 2 == 0

    def test_deformation_count_formula(self):
        # |D+-| = 2(d-1)|s| on a padded box
        for text, lat in [("(0,0) +x +y -x -y", LAT),
                          ("(0,0) +x +x +y -x -x -y", LAT_W)]:
            s = parse_sequence_text(text, lat)
            sets = build_operation_sets(s, lat)
            assert len(sets["D+"]) == len(sets["D-"]) == 2 * (lat.d - 1) * s.length
            assert len(sets["E+"]) == len(sets["E-"]) == 2 * (lat.d - 1) * s.length

    def test_generated_sequences_are_valid(self):
        s = parse_sequence_text("(0,0) +x +y -x -y; (1,0) +x +y -x -y", LAT_W)
        sets = build_operation_sets(s, LAT_W)
        for seqs in sets.values():
            for sp in seqs:
                for l in sp.loops:
                    n = len(l.edges)
                    assert all(l.edges[(i + 1) % n] != -l.edges[i] for i in range(n))
                    assert LAT_W.is_closed_path(l.edges)

    def test_padding_enforced(self):
        lat = build_lattice(2, (0, 0), (1, 1))
        s = LoopSequence((plaquette(lat),))
        with pytest.raises(ConfigError):
            build_operation_sets(s, lat)
        with pytest.raises(ConfigError):
            expansion_sets(s.loops[0], lat)

    def test_expansion_counts_d3(self):
        lat = build_lattice(3, (-1, -1, -1), (2, 2, 1))
        l = parse_loop_text("(0,0,0) +x +y -x -y", lat)
        pos, neg = expansion_sets(l, lat)
        assert len(pos) == len(neg) == 16  # 4 locations x 2(d-1)


class TestTextSyntax:
    def test_roundtrip(self):
        for text in ["(0,0) +x +y -x -y", "(0,0) +x +x +y -x -x -y"]:
            l = parse_loop_text(text, LAT_W)
            assert parse_loop_text(loop_to_text(l, LAT_W), LAT_W) == l

    def test_sequence_roundtrip(self):
        s = parse_sequence_text("(0,0) +x +y -x -y; (1,0) +x +y -x -y", LAT_W)
        assert parse_sequence_text(sequence_to_text(s, LAT_W), LAT_W) == s

    def test_not_closed(self):
        with pytest.raises(ConfigError, match="close"):
            parse_loop_text("(0,0) +x +y", LAT)

    def test_null_rejected(self):
        with pytest.raises(ConfigError, match="null"):
            parse_loop_text("(0,0) +x -x", LAT)

    def test_leaves_box(self):
        with pytest.raises(ConfigError, match="leaves"):
            parse_loop_text("(2,2) +x +y -x -y", LAT)

    def test_bad_tokens(self):
        with pytest.raises(ConfigError):
            parse_loop_text("(0,0) +q +y -q -y", LAT)
        with pytest.raises(ConfigError):
            parse_loop_text("0,0 +x +y -x -y", LAT)
        with pytest.raises(ConfigError):
            parse_loop_text("(0,0,0) +x +y -x -y", LAT)
