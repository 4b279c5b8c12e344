"""Loops, loop sequences, and the loop operations driving the master equations.

A loop is a cyclic equivalence class of closed non-backtracking edge paths;
we store one canonical representative: the lexicographically minimal rotation
of the signed-edge-code sequence.  A loop sequence is an ordered tuple of
loops (its minimal representation: backtrack-erased, null loops dropped).

Loop locations are indices into the canonical representative.  The five
operations, acting at locations x (and y):

  splitting   same edge e at x and y:   aebec  -> [aec], [be]     (positive)
              e at x and e^-1 at y:     aebe'c -> [ac], [b]       (negative)
  twisting    same edge (negative):     aebec  -> [a b^-1 c]
              e / e^-1 (positive):      aebe'c -> [a e b^-1 e^-1 c]
  merger      l=aeb, l'=ced  (same e):  + [aedceb]   - [a c^-1 d^-1 b]
              l=aeb, l'=ce^-1 d:        + [a e c^-1 d^-1 e b]   - [adcb]
  deformation merger of l with a plaquette through e or e^-1 at x
  expansion   append the plaquette through e^-1 (positive) or e (negative)

Operation sets are multisets: ordered location pairs (x, y) and (y, x) are
counted separately, as are ordered loop pairs (i, j) and (j, i) for mergers.
A positive merger lands in the restricted set MU+ exactly when the two loops
share the edge itself; a negative merger lands in MU- exactly when one loop
carries e and the other e^-1.
"""

from dataclasses import dataclass

from .errors import ConfigError
from .lattice import Lattice, plaquettes_through

__all__ = [
    "Loop",
    "LoopSequence",
    "backtrack_erase",
    "lengths_and_windings",
    "split_loop",
    "twist_loop",
    "merge_loops",
    "deform_loop",
    "expansion_sets",
    "build_operation_sets",
    "operation_counts",
    "parse_loop_text",
    "parse_sequence_text",
    "loop_to_text",
    "sequence_to_text",
]


def _erase(codes):
    """Cyclically remove adjacent (e, e^-1) pairs; None when nothing is left."""
    seq = list(codes)
    while True:
        out = []
        for c in seq:
            if out and out[-1] == -c:
                out.pop()
            else:
                out.append(c)
        while len(out) >= 2 and out[0] == -out[-1]:
            out = out[1:-1]
        if len(out) == len(seq):
            return tuple(out) if out else None
        seq = out


def _min_rotation(codes):
    n = len(codes)
    doubled = codes + codes
    return min(tuple(doubled[i:i + n]) for i in range(n))


def _rev(codes):
    return tuple(-c for c in reversed(codes))


@dataclass(frozen=True)
class Loop:
    """Canonical representative of a non-backtracking cycle class."""

    edges: tuple

    def __post_init__(self):
        if not self.edges:
            raise ValueError("loop cannot be empty; use None for null cycles")
        n = len(self.edges)
        for i in range(n):
            if self.edges[(i + 1) % n] == -self.edges[i]:
                raise ValueError("loop representative has a backtrack")
        object.__setattr__(self, "edges", _min_rotation(tuple(int(c) for c in self.edges)))

    def __len__(self):
        return len(self.edges)

    def reversed(self):
        return Loop(_rev(self.edges))


def backtrack_erase(codes, lat: Lattice | None = None):
    """The unique loop [l] under successive backtrack erasures, or None.

    With a lattice the input is checked to be a closed path first.
    """
    codes = tuple(int(c) for c in codes)
    if lat is not None and not lat.is_closed_path(codes):
        raise ValueError("input cycle is not closed")
    erased = _erase(codes)
    return None if erased is None else Loop(erased)


@dataclass(frozen=True)
class LoopSequence:
    """Minimal representation: ordered non-null loops."""

    loops: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "loops", tuple(l for l in self.loops if l is not None)
        )

    @property
    def m(self) -> int:
        return len(self.loops)

    @property
    def length(self) -> int:
        return sum(len(l) for l in self.loops)

    def key(self):
        """Order-insensitive canonical identity, for grouping multiplicities."""
        return tuple(sorted(l.edges for l in self.loops))

    def vertices(self, lat: Lattice):
        out = set()
        for l in self.loops:
            for c in l.edges:
                out.update(lat.edge_endpoints(c))
        return out


def lengths_and_windings(s: LoopSequence):
    """(|s|, per-loop winding table {eid: [t_1(e), ..., t_m(e)]}, ell(s)).

    t_i(e) counts occurrences of the positive edge e in loop i minus
    occurrences of its reversal; ell(s) = sum_e (sum_i t_i(e))^2.
    """
    table = {}
    for i, l in enumerate(s.loops):
        for c in l.edges:
            eid = abs(c) - 1
            table.setdefault(eid, [0] * s.m)[i] += 1 if c > 0 else -1
    ell = sum(sum(t) ** 2 for t in table.values())
    return s.length, table, ell


def _locate(l: Loop, x: int):
    if not 0 <= x < len(l):
        raise ValueError(f"location {x} out of range for loop of length {len(l)}")
    return l.edges[x]


def _rotate(codes, x):
    return codes[x:] + codes[:x]


def split_loop(l: Loop, x: int, y: int):
    """Positive or negative splitting at ordered locations (x, y).

    Returns the pair of (possibly None) component loops.
    """
    e, f = _locate(l, x), _locate(l, y)
    if x == y or abs(e) != abs(f):
        raise ValueError("locations do not carry matching edges")
    r = _rotate(l.edges, x)
    yy = (y - x) % len(l)
    b, c = r[1:yy], r[yy + 1:]
    if f == e:
        return backtrack_erase((e,) + c), backtrack_erase(b + (e,))
    return backtrack_erase(c), backtrack_erase(b)


def twist_loop(l: Loop, x: int, y: int):
    """Negative (same edge) or positive (e / e^-1) twisting at (x, y)."""
    e, f = _locate(l, x), _locate(l, y)
    if x == y or abs(e) != abs(f):
        raise ValueError("locations do not carry matching edges")
    r = _rotate(l.edges, x)
    yy = (y - x) % len(l)
    b, c = r[1:yy], r[yy + 1:]
    if f == e:
        return backtrack_erase(_rev(b) + c)
    return backtrack_erase((e,) + _rev(b) + (-e,) + c)


def merge_loops(l: Loop, lp: Loop, x: int, y: int, positive: bool):
    """Merger of two loops at locations x in l and y in l'."""
    e, f = _locate(l, x), _locate(lp, y)
    if abs(e) != abs(f):
        raise ValueError("locations do not carry matching edges")
    b = _rotate(l.edges, x)[1:]
    d = _rotate(lp.edges, y)[1:]
    if f == e:
        merged = (e,) + d + (e,) + b if positive else _rev(d) + b
    else:
        merged = (e,) + _rev(d) + (e,) + b if positive else d + b
    return backtrack_erase(merged)


def deform_loop(l: Loop, x: int, plaq_path, positive: bool):
    """Merge l with a plaquette passing through the edge at x (or its reversal)."""
    e = _locate(l, x)
    hits = [i for i, c in enumerate(plaq_path) if abs(c) == abs(e)]
    if len(hits) != 1:
        raise ValueError("plaquette does not pass through the edge exactly once")
    p_loop = Loop(tuple(int(c) for c in plaq_path))
    # the rooted path may have been rotated into canonical form; relocate
    y = [i for i, c in enumerate(p_loop.edges) if abs(c) == abs(e)][0]
    return merge_loops(l, p_loop, x, y, positive)


def _check_padding(s: LoopSequence, lat: Lattice):
    if not lat.padded_vertices(s.vertices(lat)):
        raise ConfigError(
            "loop sequence is not padded: some vertex within distance 1 leaves the box"
        )


def expansion_sets(l: Loop, lat: Lattice):
    """Positive / negative expansion partners: lists of (location, plaquette loop)."""
    _check_padding(LoopSequence((l,)), lat)
    pos, neg = [], []
    for x, e in enumerate(l.edges):
        for p in plaquettes_through(lat, -e):
            pos.append((x, Loop(p)))
        for p in plaquettes_through(lat, e):
            neg.append((x, Loop(p)))
    return pos, neg


def _replace(loops, i, new_loops):
    return LoopSequence(loops[:i] + tuple(new_loops) + loops[i + 1:])


def _merge_replace(loops, i, j, merged):
    k = min(i, j)
    rest = tuple(l for idx, l in enumerate(loops) if idx not in (i, j))
    return LoopSequence(rest[:k] + (merged,) + rest[k:])


def build_operation_sets(s: LoopSequence, lat: Lattice) -> dict:
    """All operation multisets for a padded loop sequence.

    Returns {"S+", "S-", "T+", "T-", "M+", "M-", "MU+", "MU-", "D+", "D-",
    "E+", "E-"} -> list of LoopSequence, with the multiset counting
    conventions from the module docstring.  MU+/- are sublists of M+/-.
    """
    _check_padding(s, lat)
    sets = {k: [] for k in
            ("S+", "S-", "T+", "T-", "M+", "M-", "MU+", "MU-", "D+", "D-", "E+", "E-")}
    loops = s.loops

    for i, l in enumerate(loops):
        n = len(l)
        for x in range(n):
            e = l.edges[x]
            # splittings and twistings over ordered location pairs
            for y in range(n):
                if y == x or abs(l.edges[y]) != abs(e):
                    continue
                pieces = split_loop(l, x, y)
                twisted = twist_loop(l, x, y)
                if l.edges[y] == e:
                    sets["S+"].append(_replace(loops, i, pieces))
                    sets["T-"].append(_replace(loops, i, (twisted,)))
                else:
                    sets["S-"].append(_replace(loops, i, pieces))
                    sets["T+"].append(_replace(loops, i, (twisted,)))
            # deformations by the plaquettes rooted at e
            for p in plaquettes_through(lat, e):
                sets["D+"].append(_replace(loops, i, (deform_loop(l, x, p, True),)))
                sets["D-"].append(_replace(loops, i, (deform_loop(l, x, p, False),)))
            # expansions keep l and append the plaquette loop
            for p in plaquettes_through(lat, -e):
                sets["E+"].append(LoopSequence(loops + (Loop(p),)))
            for p in plaquettes_through(lat, e):
                sets["E-"].append(LoopSequence(loops + (Loop(p),)))

    # mergers over ordered loop pairs
    for i, l in enumerate(loops):
        for j, lp in enumerate(loops):
            if i == j:
                continue
            for x in range(len(l)):
                e = l.edges[x]
                for y in range(len(lp)):
                    f = lp.edges[y]
                    if abs(f) != abs(e):
                        continue
                    plus = _merge_replace(loops, i, j, merge_loops(l, lp, x, y, True))
                    minus = _merge_replace(loops, i, j, merge_loops(l, lp, x, y, False))
                    sets["M+"].append(plus)
                    sets["M-"].append(minus)
                    if f == e:
                        sets["MU+"].append(plus)
                    else:
                        sets["MU-"].append(minus)
    return sets


def operation_counts(sets: dict) -> dict:
    return {k: len(v) for k, v in sets.items()}


# -- text syntax -------------------------------------------------------------

_AXIS_NAMES = "xyzw"


def _axis_name(axis: int, d: int) -> str:
    return _AXIS_NAMES[axis] if d <= 4 else str(axis)


def _parse_axis(token: str, d: int) -> int:
    if token in _AXIS_NAMES[:min(d, 4)]:
        return _AXIS_NAMES.index(token)
    if token.isdigit() and int(token) < d:
        return int(token)
    raise ConfigError(f"unknown axis {token!r} for d={d}")


def parse_loop_text(text: str, lat: Lattice) -> Loop:
    """Parse "(c1,...,cd) +x +y -x -y" into a Loop on the lattice.

    Validates that every step stays in the box, that the walk closes, and
    that backtrack erasure leaves a non-null loop.
    """
    text = text.strip()
    if not text.startswith("("):
        raise ConfigError(f"loop must start with a base vertex, got {text!r}")
    close = text.index(")")
    try:
        base = tuple(int(t) for t in text[1:close].replace(" ", "").split(","))
    except ValueError as exc:
        raise ConfigError(f"bad base vertex in {text!r}") from exc
    if len(base) != lat.d:
        raise ConfigError(f"base vertex {base} has wrong dimension (d={lat.d})")
    if not lat.contains(base):
        raise ConfigError(f"base vertex {base} outside the lattice box")
    steps = text[close + 1:].replace(",", " ").split()
    if not steps:
        raise ConfigError(f"loop {text!r} has no steps")
    codes = []
    vid = lat.vertex_id(base)
    for step in steps:
        if len(step) < 2 or step[0] not in "+-":
            raise ConfigError(f"bad step {step!r}: expected like +x or -y")
        axis = _parse_axis(step[1:], lat.d)
        sign = 1 if step[0] == "+" else -1
        try:
            code = lat.directed_edge(vid, axis, sign)
        except ValueError as exc:
            raise ConfigError(f"step {step!r} leaves the lattice box") from exc
        codes.append(code)
        vid = lat.edge_endpoints(code)[1]
    if vid != lat.vertex_id(base):
        raise ConfigError(f"loop {text!r} does not close (ends at {lat.vertex(vid)})")
    loop = backtrack_erase(codes, lat)
    if loop is None:
        raise ConfigError(f"loop {text!r} erases to a null cycle")
    return loop


def parse_sequence_text(text: str, lat: Lattice) -> LoopSequence:
    """Parse a ';'-separated list of loops."""
    parts = [p for p in (q.strip() for q in text.split(";")) if p]
    if not parts:
        raise ConfigError("empty loop sequence")
    return LoopSequence(tuple(parse_loop_text(p, lat) for p in parts))


def loop_to_text(l: Loop, lat: Lattice) -> str:
    base = lat.vertex(lat.edge_endpoints(l.edges[0])[0])
    steps = []
    for c in l.edges:
        axis = lat.edge_axis(c)
        steps.append(("+" if c > 0 else "-") + _axis_name(axis, lat.d))
    return "(" + ",".join(str(c) for c in base) + ") " + " ".join(steps)


def sequence_to_text(s: LoopSequence, lat: Lattice) -> str:
    return "; ".join(loop_to_text(l, lat) for l in s.loops)
