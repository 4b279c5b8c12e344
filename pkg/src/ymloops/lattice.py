"""Finite-box lattice geometry in Z^d: vertices, directed edges, plaquettes.

Vertices are integer points of the box [lo_1, hi_1] x ... x [lo_d, hi_d]
(inclusive corners, free boundary, no periodic wrap), ordered
lexicographically.  An edge is positively oriented when its starting point
precedes its end point lexicographically; every positive edge is therefore a
pair (vertex, axis) with the head one step up that axis.

Directed edges are passed around as signed 1-based integer codes:
``eid + 1`` for the positive edge with index ``eid`` and ``-(eid + 1)`` for
its reversal, so ``reverse_edge`` is negation.  This keeps loop algebra and
the jitted kernels on plain int32 arrays.

A plaquette is a closed non-backtracking 4-path tracing a unit square,
stored as 4 signed edge codes.  The canonical set ``plaq_pos`` contains one
representative per square, rooted so the path starts at the square's
lexicographically smallest vertex and ends at the second smallest (for the
axis pair i < j at base vertex u that means going up axis j first).
``plaquettes_through(lat, e)`` lists the rooted plaquettes whose first edge
is the directed edge e; an interior edge has 2(d-1) of them.
"""

import numpy as np

__all__ = [
    "Lattice",
    "build_lattice",
    "reverse_edge",
    "plaquettes_through",
    "canonical_plaquette",
]


def reverse_edge(code: int) -> int:
    """Reverse a directed edge (involutive)."""
    return -code


class Lattice:
    """Immutable box lattice with edge/plaquette index tables."""

    def __init__(self, d, lo, hi):
        if d < 2:
            raise ValueError("lattice dimension must be >= 2")
        lo = tuple(int(c) for c in lo)
        hi = tuple(int(c) for c in hi)
        if len(lo) != d or len(hi) != d:
            raise ValueError("corner length does not match dimension")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"degenerate box: need lo < hi componentwise, got {lo}..{hi}")
        self.d = d
        self.lo = lo
        self.hi = hi
        self.shape = tuple(h - l + 1 for l, h in zip(lo, hi))
        self.n_vertices = int(np.prod(self.shape))

        # vertex id = lexicographic rank = C-order ravel of (coord - lo)
        self.vertex_coords = np.stack(
            [g.ravel() for g in np.indices(self.shape)], axis=1
        ).astype(np.int64) + np.array(lo, dtype=np.int64)
        self._strides = np.array(
            [int(np.prod(self.shape[k + 1:])) for k in range(d)], dtype=np.int64
        )

        # positive edges in lex order of (start vertex, axis)
        edges = []
        for vid in range(self.n_vertices):
            coord = self.vertex_coords[vid]
            for axis in range(d):
                if coord[axis] + 1 <= hi[axis]:
                    edges.append((vid, axis))
        self.edges = np.array(edges, dtype=np.int64)
        self.n_edges = len(edges)
        self._edge_index = {(int(v), int(a)): i for i, (v, a) in enumerate(edges)}

        self.plaq_pos, self._plaq_base = self._build_positive_plaquettes()
        self.n_plaq_pos = len(self.plaq_pos)
        self._plaq_index = {base: i for i, base in enumerate(self._plaq_base)}
        self._build_incidence()

    # -- vertex helpers -------------------------------------------------

    def contains(self, coord) -> bool:
        return all(l <= c <= h for c, l, h in zip(coord, self.lo, self.hi))

    def vertex_id(self, coord) -> int:
        if not self.contains(coord):
            raise ValueError(f"vertex {tuple(coord)} outside box {self.lo}..{self.hi}")
        rel = np.asarray(coord, dtype=np.int64) - np.array(self.lo, dtype=np.int64)
        return int(rel @ self._strides)

    def vertex(self, vid: int) -> tuple:
        return tuple(int(c) for c in self.vertex_coords[vid])

    # -- directed edge helpers ------------------------------------------

    def directed_edge(self, start_vid: int, axis: int, sign: int) -> int:
        """Directed edge from a vertex one step along +/- axis, as signed code."""
        if sign > 0:
            eid = self._edge_index.get((start_vid, axis))
            if eid is None:
                raise ValueError("edge leaves the box")
            return eid + 1
        coord = self.vertex_coords[start_vid].copy()
        coord[axis] -= 1
        eid = self._edge_index.get((self.vertex_id(coord), axis))
        if eid is None:
            raise ValueError("edge leaves the box")
        return -(eid + 1)

    def edge_endpoints(self, code: int):
        """(start vid, end vid) of a directed edge code."""
        eid = abs(code) - 1
        u, axis = self.edges[eid]
        coord = self.vertex_coords[u].copy()
        coord[axis] += 1
        v = self.vertex_id(coord)
        return (int(u), v) if code > 0 else (v, int(u))

    def edge_axis(self, code: int) -> int:
        return int(self.edges[abs(code) - 1, 1])

    def is_closed_path(self, codes) -> bool:
        if len(codes) == 0:
            return True
        ends = [self.edge_endpoints(c) for c in codes]
        ok = all(ends[i][1] == ends[i + 1][0] for i in range(len(ends) - 1))
        return ok and ends[-1][1] == ends[0][0]

    # -- plaquettes ------------------------------------------------------

    def _build_positive_plaquettes(self):
        plaqs, bases = [], []
        for vid in range(self.n_vertices):
            coord = self.vertex_coords[vid]
            for i in range(self.d):
                if coord[i] + 1 > self.hi[i]:
                    continue
                for j in range(i + 1, self.d):
                    if coord[j] + 1 > self.hi[j]:
                        continue
                    # square at base u spanned by axes i < j; the rooted path
                    # u -> u+e_j -> u+e_j+e_i -> u+e_i -> u starts at the two
                    # lexicographically smallest vertices of the square
                    u = vid
                    uj = self.vertex_id(coord + self._unit(j))
                    ui = self.vertex_id(coord + self._unit(i))
                    path = (
                        self.directed_edge(u, j, +1),
                        self.directed_edge(uj, i, +1),
                        -self.directed_edge(ui, j, +1),
                        -self.directed_edge(u, i, +1),
                    )
                    plaqs.append(path)
                    bases.append((u, i, j))
        arr = np.array(plaqs, dtype=np.int32) if plaqs else np.zeros((0, 4), np.int32)
        return arr, bases

    def _unit(self, axis):
        e = np.zeros(self.d, dtype=np.int64)
        e[axis] = 1
        return e

    def _build_incidence(self):
        # rooted plaquettes starting at each directed edge, CSR over rows
        # row = 2*eid (positive) / 2*eid + 1 (negative)
        rows = [[] for _ in range(2 * self.n_edges)]
        for eid in range(self.n_edges):
            for code in (eid + 1, -(eid + 1)):
                a, b = self.edge_endpoints(code)
                i = self.edge_axis(code)
                out = []
                for j in range(self.d):
                    if j == i:
                        continue
                    for sigma in (+1, -1):
                        ca = self.vertex_coords[a] + sigma * self._unit(j)
                        cb = self.vertex_coords[b] + sigma * self._unit(j)
                        if not (self.contains(ca) and self.contains(cb)):
                            continue
                        out.append((
                            code,
                            self.directed_edge(b, j, sigma),
                            self.directed_edge(self.vertex_id(cb), i, -1 if code > 0 else +1),
                            self.directed_edge(self.vertex_id(ca), j, -sigma),
                        ))
                rows[self._row(code)] = out
        offsets = np.zeros(2 * self.n_edges + 1, dtype=np.int64)
        data = []
        for r, out in enumerate(rows):
            offsets[r + 1] = offsets[r] + len(out)
            data.extend(out)
        self.plaq_through_offsets = offsets
        self.plaq_through_paths = (
            np.array(data, dtype=np.int32) if data else np.zeros((0, 4), np.int32)
        )

        # canonical plaquettes containing each positive edge (for local action)
        per_edge = [[] for _ in range(self.n_edges)]
        for pidx, path in enumerate(self.plaq_pos):
            for code in path:
                per_edge[abs(int(code)) - 1].append(pidx)
        off = np.zeros(self.n_edges + 1, dtype=np.int64)
        ids = []
        for e, lst in enumerate(per_edge):
            off[e + 1] = off[e] + len(lst)
            ids.extend(lst)
        self.edge_plaq_offsets = off
        self.edge_plaq_ids = np.array(ids, dtype=np.int64)

    @staticmethod
    def _row(code: int) -> int:
        return 2 * (abs(code) - 1) + (0 if code > 0 else 1)

    def padded_vertices(self, vids) -> bool:
        """True when every neighbor of every given vertex lies in the box."""
        for vid in set(int(v) for v in vids):
            coord = self.vertex_coords[vid]
            for axis in range(self.d):
                for sigma in (+1, -1):
                    if not self.contains(coord + sigma * self._unit(axis)):
                        return False
        return True

    def describe(self) -> dict:
        return {"d": self.d, "corner_lo": list(self.lo), "corner_hi": list(self.hi)}

    def __repr__(self):
        return f"Lattice(d={self.d}, lo={self.lo}, hi={self.hi})"


def build_lattice(d: int, corner_lo, corner_hi) -> Lattice:
    """Enumerate a box lattice deterministically (lexicographic everywhere)."""
    return Lattice(d, corner_lo, corner_hi)


def plaquettes_through(lat: Lattice, code: int):
    """Rooted plaquettes p (as 4 signed codes) whose first edge is `code`."""
    eid = abs(code) - 1
    if eid >= lat.n_edges:
        raise ValueError(f"edge code {code} not in lattice")
    row = Lattice._row(code)
    a, b = lat.plaq_through_offsets[row], lat.plaq_through_offsets[row + 1]
    return [tuple(int(c) for c in p) for p in lat.plaq_through_paths[a:b]]


def canonical_plaquette(lat: Lattice, path) -> tuple:
    """Representative in the canonical positive set for the square under `path`.

    Any rooted orientation of a square maps to the same canonical member.
    """
    if len(path) != 4 or not lat.is_closed_path(path):
        raise ValueError("not a plaquette path")
    verts = [lat.edge_endpoints(c)[0] for c in path]
    axes = sorted({lat.edge_axis(c) for c in path})
    if len(axes) != 2:
        raise ValueError("not a plaquette path")
    base = min(verts, key=lambda v: lat.vertex(v))
    idx = lat._plaq_index.get((base, axes[0], axes[1]))
    if idx is None:
        raise ValueError("plaquette not in lattice")
    return tuple(int(c) for c in lat.plaq_pos[idx])
