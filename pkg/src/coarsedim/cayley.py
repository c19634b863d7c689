"""Word-metric windows over three finitely generated group presets.

Supported groups: free abelian Z^n, free F_k, and the lamplighter wreath
product (Z mod m) wr Z.  Elements live in canonical normal form, the metric
is the left-invariant word metric for the standard symmetric generator
sets, and a window is an exact ball of radius R with a word-length margin.
Distances between window elements are computed on normal forms (closed
form for the abelian and free cases, a 2R length table for lamplighters),
never by searching inside the truncated ball, so they are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .coloring import Coloring
from .core import as_scale, components
from .errors import InputError, RefusalError
from .smallness import small_verdict

DEFAULT_BALL_CAP = 500_000


@dataclass(frozen=True)
class GroupSpec:
    """kind: free_abelian(rank) | free(rank) | lamplighter(rank = |Z_m|)."""

    kind: str
    rank: int

    def __post_init__(self):
        if self.kind not in ("free_abelian", "free", "lamplighter"):
            raise InputError(f"unknown group kind {self.kind!r}")
        if self.rank < 1 or (self.kind == "lamplighter" and self.rank < 2):
            raise InputError(f"bad rank {self.rank} for {self.kind}")

    # -- normal forms --------------------------------------------------------

    def identity(self):
        if self.kind == "free_abelian":
            return (0,) * self.rank
        if self.kind == "free":
            return ()
        return ((), 0)

    def generators(self):
        """Symmetric generating set, identity excluded, deterministic order."""
        gens = []
        if self.kind == "free_abelian":
            for i in range(self.rank):
                e = [0] * self.rank
                e[i] = 1
                gens.append(tuple(e))
                e2 = [0] * self.rank
                e2[i] = -1
                gens.append(tuple(e2))
        elif self.kind == "free":
            for i in range(1, self.rank + 1):
                gens.append((i,))
                gens.append((-i,))
        else:
            gens.append(((), 1))
            gens.append(((), -1))
            gens.append((((0, 1),), 0))
            inv_val = (-1) % self.rank
            if inv_val != 1:
                gens.append((((0, inv_val),), 0))
        seen = []
        for g in gens:
            if g not in seen:
                seen.append(g)
        return seen

    def multiply(self, x, y):
        if self.kind == "free_abelian":
            return tuple(a + b for a, b in zip(x, y))
        if self.kind == "free":
            word = list(x)
            for s in y:
                if word and word[-1] == -s:
                    word.pop()
                else:
                    word.append(s)
            return tuple(word)
        (ax, nx), (by, ny) = x, y
        lamps = {}
        for pos, val in ax:
            lamps[pos - ny] = val
        for pos, val in by:
            v = (lamps.get(pos, 0) + val) % self.rank
            if v:
                lamps[pos] = v
            elif pos in lamps:
                del lamps[pos]
        return tuple(sorted(lamps.items())), nx + ny

    def inverse(self, x):
        if self.kind == "free_abelian":
            return tuple(-a for a in x)
        if self.kind == "free":
            return tuple(-s for s in reversed(x))
        lamps, n = x
        out = tuple(sorted((pos + n, (-val) % self.rank) for pos, val in lamps))
        return out, -n

    def word_length(self, x):
        """Closed-form word length, or None when only BFS can tell."""
        if self.kind == "free_abelian":
            return sum(abs(a) for a in x)
        if self.kind == "free":
            return len(x)
        return None


class GroupWindow:
    """All elements of word length <= radius; core has length <= radius - margin."""

    def __init__(self, group: GroupSpec, radius: int, margin=0, cap: int = DEFAULT_BALL_CAP):
        if radius < 0:
            raise InputError("radius must be nonnegative")
        self.group = group
        self.radius = int(radius)
        self.margin = as_scale(margin)
        if self.margin > self.radius:
            raise InputError(f"margin {self.margin} exceeds radius {radius}")
        self.cap = cap
        self.lengths = _bfs_lengths(group, self.radius, cap)
        self.elements = tuple(sorted(self.lengths, key=lambda e: (self.lengths[e], e)))
        core_len = self.radius - self.margin
        self.core = tuple(e for e in self.elements if self.lengths[e] <= core_len)
        self._long_lengths = None
        self._moves = {}

    # -- protocol shared with lattice windows --------------------------------

    @property
    def points(self):
        return self.elements

    def has_point(self, p) -> bool:
        return p in self.lengths

    def in_core(self, p) -> bool:
        return p in self.lengths and self.lengths[p] <= self.radius - self.margin

    def steps(self, r) -> int:
        return int(as_scale(r))

    def scale_of(self, k: int) -> Fraction:
        return Fraction(k)

    def dist(self, x, y) -> Fraction:
        g = self.group.multiply(self.group.inverse(x), y)
        n = self.group.word_length(g)
        if n is None:
            n = self._table_length(g)
        return Fraction(n)

    def _table_length(self, g) -> int:
        if self._long_lengths is None:
            self._long_lengths = _bfs_lengths(self.group, 2 * self.radius, self.cap * 8)
        try:
            return self._long_lengths[g]
        except KeyError:
            raise RefusalError("distance exceeds the 2R window resolution") from None

    def moves(self, k: int):
        """Ball of radius k around the identity, identity excluded."""
        if k not in self._moves:
            if k <= self.radius:
                src = self.lengths
            else:
                if self._long_lengths is None:
                    self._long_lengths = _bfs_lengths(self.group, 2 * self.radius, self.cap * 8)
                src = self._long_lengths
                if k > 2 * self.radius:
                    raise RefusalError("moves beyond 2R are out of window")
            self._moves[k] = tuple(
                sorted(g for g, n in src.items() if 0 < n <= k)
            )
        return self._moves[k]

    def apply(self, p, move):
        out = self.group.multiply(p, move)
        return out if out in self.lengths else None

    def ball(self, x, r) -> list:
        if x not in self.lengths:
            raise InputError(f"element {x} lies outside the window")
        k = self.steps(r)
        out = [x]
        for g in self.moves(k):
            y = self.apply(x, g)
            if y is not None:
                out.append(y)
        return sorted(set(out))

    def set_distance(self, targets, cap=None) -> dict:
        targets = [t for t in targets]
        for t in targets:
            if t not in self.lengths:
                raise InputError(f"target {t} lies outside the window")
        out = {}
        if not targets:
            return out
        for y in self.elements:
            best = None
            for t in targets:
                d = int(self.dist(y, t))
                if best is None or d < best:
                    best = d
                    if best == 0:
                        break
            if cap is None or best <= cap:
                out[y] = best
        return out

    def diameter_of(self, pts) -> Fraction:
        pts = list(pts)
        if not pts:
            raise InputError("diameter of empty set")
        if len(pts) == len(self.elements):
            return Fraction(2 * self.radius)
        best = 0
        for i, x in enumerate(pts):
            for y in pts[i + 1:]:
                best = max(best, int(self.dist(x, y)))
        return Fraction(best)

    def __repr__(self):
        return (
            f"GroupWindow({self.group.kind}({self.group.rank}), R={self.radius}, "
            f"margin={self.margin}, |elements|={len(self.elements)})"
        )


def _bfs_lengths(group: GroupSpec, depth: int, cap: int) -> dict:
    gens = group.generators()
    lengths = {group.identity(): 0}
    frontier = [group.identity()]
    for step in range(1, depth + 1):
        nxt = []
        for x in frontier:
            for g in gens:
                y = group.multiply(x, g)
                if y not in lengths:
                    lengths[y] = step
                    nxt.append(y)
                    if len(lengths) > cap:
                        raise RefusalError(
                            f"ball of radius {depth} exceeds cap {cap} "
                            f"(reached {len(lengths)} at step {step})"
                        )
        frontier = nxt
    return lengths


def cayley_ball(g: GroupSpec, radius: int, margin=0, cap: int = DEFAULT_BALL_CAP) -> GroupWindow:
    """Exact BFS ball of word-length radius R as a window."""
    return GroupWindow(g, radius, margin=margin, cap=cap)


def subgroup_trace(w: GroupWindow, sub_generators) -> tuple:
    """Window elements reachable from the identity inside the window by the
    subgroup generators (symmetrized)."""
    gens = []
    for s in sub_generators:
        s = _normalize(w.group, s)
        if s not in gens:
            gens.append(s)
        si = w.group.inverse(s)
        if si not in gens:
            gens.append(si)
    ident = w.group.identity()
    if not w.has_point(ident):
        raise InputError("window does not contain the identity")
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for x in frontier:
            for s in gens:
                y = w.group.multiply(x, s)
                if y not in seen and w.has_point(y):
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return tuple(sorted(seen))


def _normalize(group: GroupSpec, element):
    """Round-trip an element through multiplication to validate its form."""
    out = group.multiply(group.identity(), element)
    return out


def transfer_coloring(chi_h: Coloring, w: GroupWindow, f_pts, x0, r=None) -> Coloring:
    """Pull a subgroup coloring onto a connected set: chi(x) = chi_h(x0^-1 x).

    Left invariance carries monochrome chains across, so a certified bound
    transfers verbatim.
    """
    if r is None:
        if chi_h.certified is None:
            raise InputError("transfer needs a scale: certify chi_h or pass r")
        r = chi_h.certified[0]
    r = as_scale(r)
    f_pts = sorted(set(tuple(p) if isinstance(p, tuple) else p for p in f_pts))
    if x0 not in f_pts:
        raise InputError("base point must belong to the transferred set")
    for p in f_pts:
        if not w.has_point(p):
            raise InputError(f"set element {p} lies outside the window")
    if len(components(w, f_pts, r)) != 1:
        raise InputError(f"the set is not connected at scale {r}")
    x0_inv = w.group.inverse(x0)
    colors = {}
    for x in f_pts:
        h = w.group.multiply(x0_inv, x)
        if h not in chi_h.colors:
            raise InputError(f"translated element {h} escapes the subgroup coloring")
        colors[x] = chi_h.colors[h]
    return Coloring(window=w, colors=colors, n=chi_h.n, certified=chi_h.certified)


def group_smallness_demo(
    g: GroupSpec,
    sub_generators,
    radius: int,
    deltas,
    phi_max,
    margin,
    asdim_probes=None,
    cap: int = DEFAULT_BALL_CAP,
) -> dict:
    """Smallness verdict for a subgroup trace, plus an asdim-at-scale
    comparison of trace versus full window where the oracle is tractable."""
    from .coloring import asdim_oracle
    from .errors import SearchBudgetExceeded

    w = cayley_ball(g, radius, margin=margin, cap=cap)
    trace = subgroup_trace(w, sub_generators)
    verdict = small_verdict(w, trace, deltas, phi_max)
    comparison = []
    for r, n, d in asdim_probes or []:
        row = {"r": as_scale(r), "n": n, "d": as_scale(d)}
        for name, subset in (("trace", trace), ("window", None)):
            try:
                ok, _ = asdim_oracle(w, r, n, d, subset=subset)
                row[name] = ok
            except SearchBudgetExceeded as exc:
                row[name] = f"refused: {exc}"
        comparison.append(row)
    return {
        "group": g,
        "radius": radius,
        "margin": as_scale(margin),
        "window_size": len(w.elements),
        "trace_size": len(trace),
        "verdict": verdict,
        "asdim_comparison": comparison,
    }
