"""Box lattice geometry: enumeration counts, incidence, canonicalization."""

import numpy as np
import pytest

from ymloops.lattice import (build_lattice, canonical_plaquette,
                             plaquettes_through, reverse_edge)


class TestBuild:
    def test_hand_counts(self):
        lat = build_lattice(2, (0, 0), (2, 2))  # 3x3 vertices
        assert (lat.n_vertices, lat.n_edges, lat.n_plaq_pos) == (9, 12, 4)
        lat = build_lattice(2, (0, 0), (1, 1))  # 2x2 vertices
        assert (lat.n_edges, lat.n_plaq_pos) == (4, 1)
        lat = build_lattice(3, (0, 0, 0), (1, 1, 1))  # 2x2x2 vertices
        assert (lat.n_edges, lat.n_plaq_pos) == (12, 6)

    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError):
            build_lattice(2, (0, 0), (0, 2))
        with pytest.raises(ValueError):
            build_lattice(1, (0,), (2,))
        with pytest.raises(ValueError):
            build_lattice(2, (0, 0), (2,))

    def test_vertex_order_lexicographic(self):
        lat = build_lattice(2, (-1, 0), (0, 1))
        coords = [lat.vertex(v) for v in range(lat.n_vertices)]
        assert coords == sorted(coords)

    def test_positive_edge_orientation(self):
        # positive means start precedes end lexicographically
        lat = build_lattice(3, (0, 0, 0), (2, 2, 2))
        for eid in range(lat.n_edges):
            u, v = lat.edge_endpoints(eid + 1)
            assert lat.vertex(u) < lat.vertex(v)

    def test_determinism(self):
        a = build_lattice(2, (0, 0), (3, 3))
        b = build_lattice(2, (0, 0), (3, 3))
        assert np.array_equal(a.edges, b.edges)
        assert np.array_equal(a.plaq_pos, b.plaq_pos)
        assert np.array_equal(a.plaq_through_paths, b.plaq_through_paths)


class TestPlaquettes:
    def test_canonical_rooting_convention(self):
        # first edge starts at the square's smallest vertex, ends at the second
        lat = build_lattice(3, (0, 0, 0), (2, 2, 2))
        for path in lat.plaq_pos:
            verts = sorted(lat.vertex(lat.edge_endpoints(int(c))[0]) for c in path)
            start, end = (lat.vertex(v) for v in lat.edge_endpoints(int(path[0])))
            assert start == verts[0] and end == verts[1]

    def test_through_counts(self):
        lat = build_lattice(2, (0, 0), (2, 2))
        interior = lat.directed_edge(lat.vertex_id((1, 1)), 0, +1)
        assert len(plaquettes_through(lat, interior)) == 2  # 2(d-1)
        boundary = lat.directed_edge(lat.vertex_id((0, 0)), 0, +1)
        assert len(plaquettes_through(lat, boundary)) == 1
        lat3 = build_lattice(3, (0, 0, 0), (3, 3, 3))
        e3 = lat3.directed_edge(lat3.vertex_id((1, 1, 1)), 0, +1)
        assert len(plaquettes_through(lat3, e3)) == 4

    def test_through_paths_start_with_edge(self):
        lat = build_lattice(2, (0, 0), (2, 2))
        for eid in range(lat.n_edges):
            for code in (eid + 1, -(eid + 1)):
                for p in plaquettes_through(lat, code):
                    assert p[0] == code
                    assert lat.is_closed_path(p)

    @pytest.mark.parametrize("d,hi", [(2, (1, 1)), (2, (3, 3)), (3, (1, 1, 1)),
                                      (3, (3, 3, 3))])
    def test_incidence_sum_identity(self, d, hi):
        # every square admits 8 rooted directed traversals
        lat = build_lattice(d, (0,) * d, hi)
        total = sum(len(plaquettes_through(lat, c))
                    for eid in range(lat.n_edges) for c in (eid + 1, -(eid + 1)))
        assert total == 8 * lat.n_plaq_pos

    def test_edge_plaq_table_matches(self):
        lat = build_lattice(2, (0, 0), (2, 2))
        for eid in range(lat.n_edges):
            ids = lat.edge_plaq_ids[lat.edge_plaq_offsets[eid]:lat.edge_plaq_offsets[eid + 1]]
            for pidx in ids:
                assert any(abs(int(c)) - 1 == eid for c in lat.plaq_pos[pidx])


class TestCanonicalization:
    def test_reverse_involutive(self):
        assert reverse_edge(reverse_edge(7)) == 7
        assert reverse_edge(3) == -3

    def test_rooted_plaquettes_map_to_unique_canonical(self):
        lat = build_lattice(2, (0, 0), (2, 2))
        for eid in range(lat.n_edges):
            for code in (eid + 1, -(eid + 1)):
                for p in plaquettes_through(lat, code):
                    canon = canonical_plaquette(lat, p)
                    assert list(canon) in lat.plaq_pos.tolist()
                    # idempotent
                    assert canonical_plaquette(lat, canon) == canon

    def test_bad_paths_rejected(self):
        lat = build_lattice(2, (0, 0), (2, 2))
        with pytest.raises(ValueError):
            canonical_plaquette(lat, (1, 2, 3))
        with pytest.raises(ValueError):
            plaquettes_through(lat, 99)


class TestPadding:
    def test_padded_vertices(self):
        lat = build_lattice(2, (-1, -1), (2, 2))
        inner = [lat.vertex_id(v) for v in [(0, 0), (1, 0), (1, 1), (0, 1)]]
        assert lat.padded_vertices(inner)
        assert not lat.padded_vertices([lat.vertex_id((-1, -1))])

    def test_describe_roundtrip(self):
        lat = build_lattice(2, (-1, -1), (2, 2))
        d = lat.describe()
        lat2 = build_lattice(d["d"], d["corner_lo"], d["corner_hi"])
        assert np.array_equal(lat.plaq_pos, lat2.plaq_pos)
