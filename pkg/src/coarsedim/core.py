"""Finite lattice windows over exact rational arithmetic.

A Window is a box of lattice points at resolution 1/q under the sup-norm
metric.  Scales (entourage radii) are nonnegative Fractions; composing
entourages is adding radii.  Every universally quantified check runs over
the window core, the set of points at least `margin` away from the box
boundary, where truncated balls cannot distort the answer.

Points are stored as tuples of integer numerators; the actual coordinate is
numerator / q.  All predicates are exact: no floats anywhere.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InputError

Point = tuple  # tuple[int, ...], numerators at resolution 1/q
Scale = Fraction


def as_scale(value) -> Fraction:
    """Coerce to a nonnegative Fraction."""
    r = Fraction(value)
    if r < 0:
        raise InputError(f"scale must be nonnegative, got {r}")
    return r


def compose_scales(r, s) -> Fraction:
    return as_scale(r) + as_scale(s)


def power_scale(r, k: int) -> Fraction:
    if k < 0:
        raise InputError("scale power must be nonnegative")
    return as_scale(r) * k


class Window:
    """A finite box of lattice points at resolution 1/q, sup-norm metric."""

    def __init__(self, dim: int, box, q: int = 1, margin=0):
        if dim < 1:
            raise InputError("dim must be >= 1")
        if q < 1:
            raise InputError("q must be a positive integer")
        if len(box) != dim:
            raise InputError("box must give one (lo, hi) interval per axis")
        self.dim = int(dim)
        self.q = int(q)
        self.box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in box)
        self.margin = as_scale(margin)
        for lo, hi in self.box:
            if lo > hi:
                raise InputError(f"empty box interval [{lo}, {hi}]")
        # numerator ranges for points and core, inclusive
        self._ranges = tuple(
            (ceil_num(lo, self.q), floor_num(hi, self.q)) for lo, hi in self.box
        )
        self._core_ranges = tuple(
            (ceil_num(lo + self.margin, self.q), floor_num(hi - self.margin, self.q))
            for lo, hi in self.box
        )
        for a, b in self._ranges:
            if a > b:
                raise InputError("box contains no lattice points on some axis")
        self._points = None
        self._core = None
        self._moves = {}

    # -- containment -------------------------------------------------------

    def has_point(self, p) -> bool:
        return len(p) == self.dim and all(
            a <= c <= b for c, (a, b) in zip(p, self._ranges)
        )

    def in_core(self, p) -> bool:
        return len(p) == self.dim and all(
            a <= c <= b for c, (a, b) in zip(p, self._core_ranges)
        )

    @property
    def points(self):
        if self._points is None:
            self._points = tuple(
                itertools.product(*[range(a, b + 1) for a, b in self._ranges])
            )
        return self._points

    @property
    def core(self):
        if self._core is None:
            if any(a > b for a, b in self._core_ranges):
                self._core = ()
            else:
                self._core = tuple(
                    itertools.product(*[range(a, b + 1) for a, b in self._core_ranges])
                )
        return self._core

    def size(self) -> int:
        n = 1
        for a, b in self._ranges:
            n *= b - a + 1
        return n

    # -- metric ------------------------------------------------------------

    def dist(self, x, y) -> Fraction:
        return Fraction(max(abs(a - b) for a, b in zip(x, y)), self.q)

    def steps(self, r) -> int:
        """Largest numerator sup-distance allowed within scale r."""
        return int(as_scale(r) * self.q)

    def scale_of(self, k: int) -> Fraction:
        return Fraction(k, self.q)

    def diameter_of(self, pts) -> Fraction:
        """Sup-norm diameter = max per-axis numerator span, over q."""
        pts = list(pts)
        if not pts:
            raise InputError("diameter of empty set")
        span = 0
        for i in range(self.dim):
            coords = [p[i] for p in pts]
            span = max(span, max(coords) - min(coords))
        return Fraction(span, self.q)

    def moves(self, k: int):
        """All nonzero numerator offsets of sup-norm <= k, sorted."""
        if k not in self._moves:
            offs = [
                off
                for off in itertools.product(range(-k, k + 1), repeat=self.dim)
                if any(off)
            ]
            self._moves[k] = tuple(sorted(offs))
        return self._moves[k]

    def apply(self, p, move):
        out = tuple(a + b for a, b in zip(p, move))
        return out if self.has_point(out) else None

    def ball(self, x, r) -> list:
        """Window points within scale r of x, sorted."""
        if not self.has_point(x):
            raise InputError(f"point {x} lies outside the window")
        k = self.steps(r)
        out = []
        for off in itertools.product(range(-k, k + 1), repeat=self.dim):
            p = tuple(a + b for a, b in zip(x, off))
            if self.has_point(p):
                out.append(p)
        out.sort()
        return out

    def set_distance(self, targets, cap: Optional[int] = None) -> dict:
        """Numerator sup-distance from every window point to `targets`.

        Multi-source BFS on the unit king graph; on a full box this equals
        the true sup-norm distance.  Points farther than `cap` hops are
        omitted.  Empty target set gives an empty dict.
        """
        dist = {}
        frontier = deque()
        for t in targets:
            t = tuple(t)
            if not self.has_point(t):
                raise InputError(f"target {t} lies outside the window")
            if t not in dist:
                dist[t] = 0
                frontier.append(t)
        unit = self.moves(1)
        while frontier:
            p = frontier.popleft()
            d = dist[p]
            if cap is not None and d >= cap:
                continue
            for off in unit:
                c = tuple(a + b for a, b in zip(p, off))
                if c not in dist and self.has_point(c):
                    dist[c] = d + 1
                    frontier.append(c)
        return dist

    def __repr__(self):
        b = ", ".join(f"[{lo},{hi}]" for lo, hi in self.box)
        return f"Window(dim={self.dim}, q={self.q}, box={b}, margin={self.margin})"


def ceil_num(value: Fraction, q: int) -> int:
    v = Fraction(value) * q
    return -((-v.numerator) // v.denominator)


def floor_num(value: Fraction, q: int) -> int:
    v = Fraction(value) * q
    return v.numerator // v.denominator


# -- basic operations -------------------------------------------------------


def ball(w, x, r) -> list:
    """Points of w within scale r of x."""
    return w.ball(tuple(x), as_scale(r))


def diameter(w, pts) -> Fraction:
    """Max pairwise sup-distance; a singleton has diameter 0."""
    return w.diameter_of(pts)


def is_chain(w, seq: Sequence, r) -> bool:
    """True iff consecutive gaps are all <= r."""
    seq = [tuple(p) for p in seq]
    if not seq:
        raise InputError("a chain needs at least one point")
    for p in seq:
        if not w.has_point(p):
            raise InputError(f"chain point {p} lies outside the window")
    r = as_scale(r)
    return all(w.dist(a, b) <= r for a, b in zip(seq, seq[1:]))


def components(w, pts, r) -> list:
    """Partition pts into r-connected components.

    Components are returned as frozensets sorted by their minimal point, so
    the output order is deterministic.  Distinct components are more than r
    apart by maximality.
    """
    pts = sorted(set(tuple(p) for p in pts))
    for p in pts:
        if not w.has_point(p):
            raise InputError(f"point {p} lies outside the window")
    member = set(pts)
    k = w.steps(as_scale(r))
    moves = w.moves(k) if k > 0 else ()
    seen = set()
    out = []
    for seed in pts:
        if seed in seen:
            continue
        comp = {seed}
        queue = deque([seed])
        seen.add(seed)
        while queue:
            p = queue.popleft()
            for off in moves:
                c = w.apply(p, off)
                if c is not None and c in member and c not in seen:
                    seen.add(c)
                    comp.add(c)
                    queue.append(c)
        out.append(frozenset(comp))
    out.sort(key=min)
    return out


# -- covers ------------------------------------------------------------------


@dataclass(frozen=True)
class Cover:
    """An ordered family of labelled point sets, optionally colored.

    `families` assigns parts to color families {0,..,n}; part order matters
    because cover_to_coloring disjointifies first-listed-part-wins.
    """

    parts: tuple
    families: Optional[Mapping] = None

    def __post_init__(self):
        parts = tuple((str(label), frozenset(tuple(p) for p in pts)) for label, pts in self.parts)
        object.__setattr__(self, "parts", parts)
        labels = [label for label, _ in parts]
        if len(set(labels)) != len(labels):
            raise InputError("cover labels must be unique")
        if self.families is not None:
            fam = {str(k): int(v) for k, v in dict(self.families).items()}
            unknown = set(fam) - set(labels)
            if unknown:
                raise InputError(f"family index names unknown labels: {sorted(unknown)}")
            if any(v < 0 for v in fam.values()):
                raise InputError("family indices must be nonnegative")
            object.__setattr__(self, "families", fam)

    def labels(self):
        return [label for label, _ in self.parts]

    def part(self, label):
        for lab, pts in self.parts:
            if lab == label:
                return pts
        raise KeyError(label)

    def union(self) -> frozenset:
        out = set()
        for _, pts in self.parts:
            out |= pts
        return frozenset(out)

    def family_of(self, label) -> int:
        if self.families is None:
            raise InputError("cover carries no family index")
        return self.families[label]


def covers_core(w, c: Cover):
    """Return a core point missed by the cover, or None if fully covered."""
    u = c.union()
    for p in w.core:
        if p not in u:
            return p
    return None


def mesh(w, c: Cover) -> Fraction:
    """Max part diameter."""
    best = Fraction(0)
    for label, pts in c.parts:
        if not pts:
            raise InputError(f"cover part {label!r} is empty")
        best = max(best, w.diameter_of(pts))
    return best


def cover_multiplicity_at(w, c: Cover, r):
    """Max over core x of the number of parts meeting ball(x, r), plus witness.

    The witness is the lexicographically smallest maximizing core point.
    """
    missed = covers_core(w, c)
    if missed is not None:
        raise InputError(f"cover misses core point {missed}")
    r = as_scale(r)
    owner = {}
    for idx, (_, pts) in enumerate(c.parts):
        for p in pts:
            owner.setdefault(p, []).append(idx)
    k = w.steps(r)
    best, witness = 0, None
    for x in w.core:
        met = set()
        for off in itertools.product(range(-k, k + 1), repeat=w.dim):
            p = tuple(a + b for a, b in zip(x, off))
            ids = owner.get(p)
            if ids:
                met.update(ids)
        if len(met) > best:
            best, witness = len(met), x
    return best, witness


# -- coarse maps --------------------------------------------------------------


@dataclass(frozen=True)
class CoarseMapCheck:
    """A finite map with a displacement slack and a scale modulus to verify."""

    source: Window
    target: object
    f: Mapping
    slack: Fraction
    modulus: tuple

    def __post_init__(self):
        object.__setattr__(self, "f", {tuple(k): tuple(v) for k, v in dict(self.f).items()})
        object.__setattr__(self, "slack", as_scale(self.slack))
        object.__setattr__(
            self, "modulus", tuple((as_scale(s), as_scale(t)) for s, t in self.modulus)
        )
        for x in self.source.core:
            if x not in self.f:
                raise InputError(f"map undefined on core point {x}")
        for x, y in self.f.items():
            if not self.source.has_point(x):
                raise InputError(f"map domain point {x} outside source window")
            if not self.target.has_point(y):
                raise InputError(f"image point {y} outside target window")


@dataclass
class MapReport:
    ok: bool
    checked: int = 0
    violations: list = field(default_factory=list)

    def merge(self, other: "MapReport") -> "MapReport":
        return MapReport(
            ok=self.ok and other.ok,
            checked=self.checked + other.checked,
            violations=self.violations + other.violations,
        )


def check_coarse_map(chk: CoarseMapCheck) -> MapReport:
    """Exhaustively verify every modulus pair on the source core."""
    rep = MapReport(ok=True)
    core = chk.source.core
    for s, t in chk.modulus:
        for x in core:
            for x2 in chk.source.ball(x, s):
                if x2 < x or not chk.source.in_core(x2):
                    continue
                rep.checked += 1
                d = chk.target.dist(chk.f[x], chk.f[x2])
                if d > t:
                    rep.ok = False
                    rep.violations.append(
                        {"kind": "modulus", "s": s, "t": t, "x": x, "x2": x2, "image_dist": d}
                    )
    return rep


def check_coarse_equivalence(fwd: CoarseMapCheck, bwd: CoarseMapCheck) -> MapReport:
    """Verify both moduli plus both composite displacement bounds."""
    rep = check_coarse_map(fwd).merge(check_coarse_map(bwd))
    for x in fwd.source.core:
        y = fwd.f[x]
        back = bwd.f.get(y)
        if back is None:
            rep.ok = False
            rep.violations.append({"kind": "composite-undefined", "x": x, "image": y})
            continue
        rep.checked += 1
        d = fwd.source.dist(x, back)
        if d > fwd.slack:
            rep.ok = False
            rep.violations.append({"kind": "displacement", "x": x, "roundtrip": back, "dist": d})
    for y in bwd.source.core:
        x = bwd.f[y]
        fwdim = fwd.f.get(x)
        if fwdim is None:
            rep.ok = False
            rep.violations.append({"kind": "composite-undefined", "x": y, "image": x})
            continue
        rep.checked += 1
        d = bwd.source.dist(y, fwdim)
        if d > bwd.slack:
            rep.ok = False
            rep.violations.append({"kind": "displacement", "x": y, "roundtrip": fwdim, "dist": d})
    return rep
