"""Kuhn triangulations, barycentric stars and the small-set cover builder.

Everything here runs on exact rationals.  The unit cube carries the n!
simplices spanned by increasing chains of the binary cube; translating them
by the integer lattice tiles space, and rescaling by a grid factor gives
the family the cover construction works in.  Membership predicates never
touch floats; probe-based checks (the pinch reports) evaluate exact
feasibility conditions on rational sample points.

Key geometric facts used below, each re-verified by the test suite:

* a point of the standard simplex lying within eps of every barycentric
  star is within n*eps of the barycenter (pinch at the center);
* a piecewise-affine homeomorphism moving the barycenter to an interior
  point b' transports that pinch to B(b', n*C*eps), where C bounds
  Lip(f)*Lip(f^{-1});
* the piecewise-linear basis function of the triangulation ("hat") is
  positive exactly on the open vertex star, is concave before clipping,
  and changes by at most twice the sup-distance, which turns the star
  containment condition into finitely many vertex evaluations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

from .core import Cover, as_scale
from .errors import InputError, RefusalError
from .smallness import AvoidanceTable

MAX_KUHN_DIM = 4

Vec = tuple  # tuple[Fraction, ...]


def _vec(x) -> Vec:
    return tuple(Fraction(c) for c in x)


# -- exact linear algebra -----------------------------------------------------


def mat_inv(m):
    n = len(m)
    a = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            raise InputError("singular matrix: degenerate geometry")
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        a[col] = [v / pv for v in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def mat_mul(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def mat_vec(m, v):
    return tuple(sum(x * y for x, y in zip(row, v)) for row in m)


def opnorm_inf(m) -> Fraction:
    """Operator norm for sup-norms: max absolute row sum."""
    return max(sum(abs(v) for v in row) for row in m)


# -- simplices ----------------------------------------------------------------


@dataclass(frozen=True)
class StdSimplex:
    """The standard n-simplex in R^{n+1}: unit vectors and their hull."""

    n: int

    @property
    def vertices(self):
        return tuple(
            tuple(Fraction(int(i == j)) for j in range(self.n + 1))
            for i in range(self.n + 1)
        )

    @property
    def barycenter(self) -> Vec:
        return tuple(Fraction(1, self.n + 1) for _ in range(self.n + 1))

    def contains(self, x) -> bool:
        x = _vec(x)
        return (
            len(x) == self.n + 1
            and all(c >= 0 for c in x)
            and sum(x) == 1
        )


class Simplex:
    """An n-simplex in R^n with affinely independent rational vertices."""

    def __init__(self, vertices):
        verts = tuple(_vec(v) for v in vertices)
        n = len(verts) - 1
        if n < 1 or any(len(v) != n for v in verts):
            raise InputError("need n+1 vertices of dimension n")
        self.n = n
        self.vertices = verts
        self._bary_matrix = None
        edges = [[verts[i + 1][k] - verts[0][k] for i in range(n)] for k in range(n)]
        det = _det(edges)
        if det == 0:
            raise InputError("vertices are affinely dependent")
        self._edge_det = det

    @property
    def barycenter(self) -> Vec:
        n1 = self.n + 1
        return tuple(sum(v[k] for v in self.vertices) / n1 for k in range(self.n))

    def volume(self) -> Fraction:
        f = Fraction(1)
        for k in range(2, self.n + 1):
            f *= k
        return abs(self._edge_det) / f

    def barycentric(self, y) -> Vec:
        """Exact barycentric coordinates of y (sum 1, sign-free)."""
        if self._bary_matrix is None:
            m = [[v[k] for v in self.vertices] for k in range(self.n)]
            m.append([Fraction(1)] * (self.n + 1))
            self._bary_matrix = mat_inv(m)
        y = _vec(y)
        return mat_vec(self._bary_matrix, tuple(y) + (Fraction(1),))

    def contains(self, y) -> bool:
        return all(c >= 0 for c in self.barycentric(y))

    def strictly_contains(self, y) -> bool:
        return all(c > 0 for c in self.barycentric(y))

    def half_copy_contains(self, y) -> bool:
        """Membership in the homothetic copy (barycenter + simplex)/2."""
        alpha = Fraction(1, 2 * (self.n + 1))
        return all(c >= alpha for c in self.barycentric(y))

    def __repr__(self):
        return f"Simplex({self.vertices})"


def _det(m):
    n = len(m)
    a = [list(row) for row in m]
    det = Fraction(1)
    for col in range(n):
        piv = None
        for r in range(col, n):
            if a[r][col] != 0:
                piv = r
                break
        if piv is None:
            return Fraction(0)
        if piv != col:
            a[col], a[piv] = a[piv], a[col]
            det = -det
        det *= a[col][col]
        inv = 1 / a[col][col]
        for r in range(col + 1, n):
            if a[r][col] != 0:
                f = a[r][col] * inv
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return det


# -- Kuhn triangulation -------------------------------------------------------


def kuhn_chains(n: int):
    """Vertex chains 0 = v_0 < ... < v_n = 1 of the binary n-cube, one per
    permutation, in lexicographic permutation order."""
    chains = []
    for perm in itertools.permutations(range(n)):
        cur = [0] * n
        chain = [tuple(cur)]
        for axis in perm:
            cur[axis] = 1
            chain.append(tuple(cur))
        chains.append((perm, tuple(chain)))
    return chains


def kuhn_simplices(n: int) -> list:
    """The n! unit-cube simplices of the Kuhn triangulation."""
    if not 1 <= n <= MAX_KUHN_DIM:
        raise RefusalError(f"kuhn_simplices supports 1 <= n <= {MAX_KUHN_DIM}")
    return [Simplex(chain) for _, chain in kuhn_chains(n)]


@dataclass(frozen=True)
class KuhnComplex:
    """The Kuhn triangulation scaled so each cell has side `grid`."""

    n: int
    grid: Fraction = Fraction(1)

    def __post_init__(self):
        if not 1 <= self.n <= MAX_KUHN_DIM:
            raise RefusalError(f"KuhnComplex supports 1 <= n <= {MAX_KUHN_DIM}")
        g = Fraction(self.grid)
        if g <= 0:
            raise InputError("grid must be positive")
        object.__setattr__(self, "grid", g)

    def locate_key(self, x):
        """Deterministic (cell, perm) containing x: residues sorted in
        decreasing order, ties broken by ascending axis index."""
        x = _vec(x)
        cell, resid = [], []
        for c in x:
            s = c / self.grid
            fl = s.numerator // s.denominator
            cell.append(fl)
            resid.append(s - fl)
        perm = tuple(sorted(range(self.n), key=lambda i: (-resid[i], i)))
        return tuple(cell), perm

    def simplex_for(self, cell, perm) -> Simplex:
        cur = list(cell)
        verts = [tuple(self.grid * c for c in cur)]
        for axis in perm:
            cur[axis] += 1
            verts.append(tuple(self.grid * c for c in cur))
        return Simplex(verts)

    def locate(self, x) -> Simplex:
        cell, perm = self.locate_key(x)
        return self.simplex_for(cell, perm)

    def keys_containing(self, x):
        """All (cell, perm) keys whose simplex contains x (several on faces)."""
        x = _vec(x)
        base, resid = [], []
        for c in x:
            s = c / self.grid
            fl = s.numerator // s.denominator
            base.append(fl)
            resid.append(s - fl)
        choices = []
        for i in range(self.n):
            opts = [(base[i], resid[i])]
            if resid[i] == 0:
                opts.append((base[i] - 1, Fraction(1)))
            choices.append(opts)
        keys = []
        for combo in itertools.product(*choices):
            cell = tuple(c for c, _ in combo)
            res = [t for _, t in combo]
            for perm in itertools.permutations(range(self.n)):
                ordered = [res[i] for i in perm]
                if all(a >= b for a, b in zip(ordered, ordered[1:])):
                    keys.append((cell, perm))
        return sorted(set(keys))

    def vertex_hat(self, v, x) -> Fraction:
        """PL basis function of lattice vertex v at x; positive exactly on
        the open star of v."""
        u = [(Fraction(c) - Fraction(vc)) / self.grid for c, vc in zip(x, v)]
        val = 1 - max(Fraction(0), max(u)) + min(Fraction(0), min(u))
        return max(Fraction(0), val)

    def in_open_star(self, v, x) -> bool:
        return self.vertex_hat(v, x) > 0


def locate_simplex(k: KuhnComplex, x) -> Simplex:
    """Deterministic simplex of the scaled complex containing x."""
    return k.locate(x)


# -- standard barycentric stars ------------------------------------------------


def std_star_membership(n: int, i: int, x) -> bool:
    """Whether x(i) attains the maximal coordinate of x in the standard
    simplex."""
    if not 0 <= i <= n:
        raise InputError(f"vertex index {i} outside 0..{n}")
    x = _vec(x)
    if not StdSimplex(n).contains(x):
        raise InputError(f"{x} is not in the standard {n}-simplex")
    return x[i] == max(x)


def std_star_within(n: int, i: int, x, eps) -> bool:
    """Exact test: does the sup-ball of radius eps around x meet the i-th
    barycentric star of the standard simplex?

    Feasibility of y in the simplex with y_i maximal and |y_k - x_k| <= eps:
    monotone in the value t = y_i, so it reduces to evaluating the interval
    endpoints.
    """
    x = _vec(x)
    eps = as_scale(eps)
    lo = [max(Fraction(0), c - eps) for c in x]
    hi = [c + eps for c in x]
    t_low = max(lo[i], max(lo))
    t_high = hi[i]
    t_sum = 1 - (sum(lo) - lo[i])
    t_star = min(t_high, t_sum)
    if t_low > t_star:
        return False
    reach = t_star + sum(min(hi[j], t_star) for j in range(n + 1) if j != i)
    return reach >= 1


@dataclass(frozen=True)
class ProbeSpec:
    """Deterministic sampling plan: a grid of the given step, or `samples`
    seeded random rational points."""

    step: Optional[Fraction] = None
    samples: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if (self.step is None) == (self.samples is None):
            raise InputError("exactly one of step/samples must be given")
        if self.step is not None:
            object.__setattr__(self, "step", Fraction(self.step))
            if not 0 < self.step <= 1:
                raise InputError("step must be in (0, 1]")


def _std_simplex_grid(n: int, step: Fraction):
    den = step.denominator
    if step.numerator != 1:
        raise InputError("grid step must be 1/k")
    for combo in _compositions(den, n + 1):
        yield tuple(Fraction(c, den) for c in combo)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _compositions(total - head, parts - 1):
            yield (head,) + rest


def _std_simplex_samples(n: int, count: int, seed: int):
    import random

    rng = random.Random(seed)
    out = 0
    while out < count:
        weights = [rng.randint(0, 10 ** 6) for _ in range(n + 1)]
        s = sum(weights)
        if s == 0:
            continue
        yield tuple(Fraction(wi, s) for wi in weights)
        out += 1


@dataclass
class PinchReport:
    checked: int = 0
    qualifying: int = 0
    violators: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violators


def star_pinch_check(n: int, eps, probe: ProbeSpec) -> PinchReport:
    """Probe the standard simplex: any point within eps of every barycentric
    star must lie within n*eps of the barycenter.  Exact, closed balls."""
    eps = as_scale(eps)
    if eps == 0:
        raise InputError("eps must be positive")
    b = StdSimplex(n).barycenter
    rep = PinchReport()
    pts = (
        _std_simplex_grid(n, probe.step)
        if probe.step is not None
        else _std_simplex_samples(n, probe.samples, probe.seed)
    )
    bound = n * eps
    for x in pts:
        rep.checked += 1
        if all(std_star_within(n, i, x, eps) for i in range(n + 1)):
            rep.qualifying += 1
            if max(abs(a - c) for a, c in zip(x, b)) > bound:
                rep.violators.append(x)
    return rep


# -- cone-affine maps ----------------------------------------------------------


class ConeAffineMap:
    """Homeomorphism of the standard simplex onto a simplex, affine on each
    cone over a facet with apex the barycenter, sending the barycenter to a
    chosen interior point.

    The i-th piece covers the cone where coordinate i is minimal and maps it
    onto the cone of the image simplex with apex `interior_point` over the
    facet opposite the i-th image vertex.
    """

    def __init__(self, simplex: Simplex, interior_point, vertex_order=None):
        self.simplex = simplex
        self.n = simplex.n
        self.bprime = _vec(interior_point)
        if vertex_order is None:
            vertex_order = tuple(range(self.n + 1))
        self.vertex_order = tuple(vertex_order)
        if sorted(self.vertex_order) != list(range(self.n + 1)):
            raise InputError("vertex_order must be a permutation")
        if not simplex.strictly_contains(self.bprime):
            raise InputError(f"{self.bprime} is not interior to the simplex")
        n = self.n
        std = StdSimplex(n)
        bdelta = std.barycenter
        self._fwd = []
        self._inv = []
        for i in range(n + 1):
            dom = [bdelta] + [std.vertices[j] for j in range(n + 1) if j != i]
            img = [self.bprime] + [self.image_vertex(j) for j in range(n + 1) if j != i]
            q = [[dom[c][r] for c in range(n + 1)] for r in range(n + 1)]
            q_inv = mat_inv(q)
            r_m = [[img[c][r] for c in range(n + 1)] for r in range(n)]
            self._fwd.append(mat_mul(r_m, q_inv))
            aug = [[img[c][r] for c in range(n + 1)] for r in range(n)]
            aug.append([Fraction(1)] * (n + 1))
            aug_inv = mat_inv(aug)
            lin = mat_mul(q, [[aug_inv[r][c] for c in range(n)] for r in range(n + 1)])
            off = mat_vec(q, tuple(aug_inv[r][n] for r in range(n + 1)))
            self._inv.append((aug_inv, lin, off))

    def image_vertex(self, i: int) -> Vec:
        """Image of the i-th standard vertex."""
        return self.simplex.vertices[self.vertex_order[i]]

    def index_for_vertex(self, v) -> int:
        v = _vec(v)
        for i in range(self.n + 1):
            if self.image_vertex(i) == v:
                return i
        raise InputError(f"{v} is not a vertex of the simplex")

    def eval(self, x) -> Vec:
        x = _vec(x)
        if not StdSimplex(self.n).contains(x):
            raise InputError(f"{x} is not in the standard simplex")
        i = min(range(self.n + 1), key=lambda j: (x[j], j))
        return mat_vec(self._fwd[i], x)

    def invert(self, y) -> Vec:
        y = _vec(y)
        if not self.simplex.contains(y):
            raise InputError(f"{y} is not in the simplex")
        yr = tuple(y) + (Fraction(1),)
        n = self.n
        std = StdSimplex(n)
        for idx, (aug_inv, _, _) in enumerate(self._inv):
            beta = mat_vec(aug_inv, yr)
            if all(c >= 0 for c in beta):
                dom = [std.barycenter] + [
                    std.vertices[j] for j in range(n + 1) if j != idx
                ]
                return tuple(
                    sum(beta[c] * dom[c][r] for c in range(n + 1)) for r in range(n + 1)
                )
        raise InputError(f"no cone of the map contains {y}")

    def piece_matrices(self):
        """(forward linear part, inverse linear part) per cone piece."""
        return [(f, inv[1]) for f, inv in zip(self._fwd, self._inv)]


def b_affine_eval(m: ConeAffineMap, x) -> Vec:
    return m.eval(x)


def b_affine_invert(m: ConeAffineMap, y) -> Vec:
    return m.invert(y)


def bary_star_membership(m: ConeAffineMap, v, y) -> bool:
    """Whether y lies in the perturbed barycentric star of vertex v."""
    y = _vec(y)
    if not m.simplex.contains(y):
        return False
    x = m.invert(y)
    i = m.index_for_vertex(v)
    return x[i] == max(x)


@dataclass(frozen=True)
class LipschitzBound:
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))
        if self.value < 1:
            raise InputError("a bi-Lipschitz product bound is at least 1")


def lip_product(m: ConeAffineMap) -> LipschitzBound:
    """Upper bound for Lip(f) * Lip(f^-1) under sup-norms: max row-sum norm
    over forward pieces times the same over inverse pieces."""
    fwd = Fraction(0)
    inv = Fraction(0)
    for f, g in m.piece_matrices():
        fwd = max(fwd, opnorm_inf(f))
        inv = max(inv, opnorm_inf(g))
    return LipschitzBound(fwd * inv)


def _half_copy_grid(simplex: Simplex, density: int):
    """Ambient lattice points of spacing 1/density inside the half copy."""
    n = simplex.n
    alpha = Fraction(1, 2 * (n + 1))
    b = simplex.barycenter
    half_verts = [
        tuple((Fraction(1, 2)) * bc + Fraction(1, 2) * vc for bc, vc in zip(b, v))
        for v in simplex.vertices
    ]
    lo = [min(v[k] for v in half_verts) for k in range(n)]
    hi = [max(v[k] for v in half_verts) for k in range(n)]
    ranges = []
    for k in range(n):
        a = -((-lo[k].numerator * density) // lo[k].denominator)  # ceil(lo*density)
        z = (hi[k].numerator * density) // hi[k].denominator
        ranges.append(range(a, z + 1))
    out = []
    for combo in itertools.product(*ranges):
        p = tuple(Fraction(c, density) for c in combo)
        if all(c >= alpha for c in simplex.barycentric(p)):
            out.append(p)
    return out


@lru_cache(maxsize=None)
def lip_sweep(n: int, density: int = 16):
    """Deterministic estimate of the uniform bi-Lipschitz product bound:
    sweep the interior point over a 1/density ambient grid in every base
    simplex's half copy (plus the exact barycenter) and take the max
    lip_product.  Returns (C, details)."""
    if not 1 <= n <= MAX_KUHN_DIM:
        raise RefusalError(f"lip_sweep supports 1 <= n <= {MAX_KUHN_DIM}")
    best = Fraction(0)
    at = None
    count = 0
    for idx, simplex in enumerate(kuhn_simplices(n)):
        candidates = [simplex.barycenter] + _half_copy_grid(simplex, density)
        for bp in candidates:
            count += 1
            val = lip_product(ConeAffineMap(simplex, bp)).value
            if val > best:
                best = val
                at = (idx, bp)
    details = {"density": density, "points": count, "argmax": at}
    return best, details


# -- perturbed star pinch (dim <= 2) --------------------------------------------


def _clip_polygon(poly, a, b):
    """Clip CCW convex polygon by halfplane a.x <= b (exact)."""
    if not poly:
        return []
    out = []
    vals = [b - sum(ai * ci for ai, ci in zip(a, p)) for p in poly]
    m = len(poly)
    for i in range(m):
        p, vp = poly[i], vals[i]
        q, vq = poly[(i + 1) % m], vals[(i + 1) % m]
        if vp >= 0:
            out.append(p)
        if (vp > 0 > vq) or (vp < 0 < vq):
            t = vp / (vp - vq)
            out.append(tuple(pc + t * (qc - pc) for pc, qc in zip(p, q)))
    dedup = []
    for p in out:
        if not dedup or p != dedup[-1]:
            dedup.append(p)
    if len(dedup) > 1 and dedup[0] == dedup[-1]:
        dedup.pop()
    return dedup


def _std_star_piece_regions(n: int, i: int):
    """For each cone index j != i, the chart polytope of points of the
    standard simplex with coordinate i maximal and j minimal.

    Chart: drop coordinate 0, i.e. work in (x_1,..,x_n); n <= 2 only.
    """
    if n == 1:
        # the region is an interval in x_1
        segs = []
        for j in range(2):
            if j == i:
                continue
            # x_i >= x_j and x_j <= x_i within the segment x_1 in [0,1]
            if i == 0:
                seg = (Fraction(0), Fraction(1, 2))
            else:
                seg = (Fraction(1, 2), Fraction(1))
            segs.append((j, seg))
        return segs
    if n != 2:
        raise RefusalError("perturbed star pinch supports dimensions 1 and 2")

    def lift(p):
        x1, x2 = p
        return (1 - x1 - x2, x1, x2)

    base = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)), (Fraction(0), Fraction(1))]
    regions = []
    for j in range(3):
        if j == i:
            continue
        poly = list(base)
        for k in range(3):
            if k != i:
                # x_i >= x_k  <=>  x_k - x_i <= 0
                a, b = _chart_functional_diff(k, i)
                poly = _clip_polygon(poly, a, b)
            if k != j:
                # x_j <= x_k  <=>  x_j - x_k <= 0
                a, b = _chart_functional_diff(j, k)
                poly = _clip_polygon(poly, a, b)
        if len(poly) >= 3:
            regions.append((j, [lift(p) for p in poly]))
    return regions


def _chart_functional_diff(p_idx, q_idx):
    """Coefficients (a, b) with x_{p} - x_{q} <= 0 written as a.(x1,x2) <= b
    in the chart x_0 = 1 - x_1 - x_2 (n = 2)."""

    def coeffs(idx):
        if idx == 0:
            return (Fraction(-1), Fraction(-1)), Fraction(1)
        if idx == 1:
            return (Fraction(1), Fraction(0)), Fraction(0)
        return (Fraction(0), Fraction(1)), Fraction(0)

    (ap, cp), (aq, cq) = coeffs(p_idx), coeffs(q_idx)
    a = tuple(x - y for x, y in zip(ap, aq))
    return a, -(cp - cq)


def perturbed_stars(m: ConeAffineMap):
    """The perturbed barycentric stars of a planar (or 1-d) simplex as exact
    convex pieces: vertex -> list of polygons (dim 2) or intervals (dim 1)."""
    n = m.n
    out = {}
    for i in range(n + 1):
        v = m.image_vertex(i)
        pieces = []
        if n == 1:
            for j, (lo, hi) in _std_star_piece_regions(1, i):
                ea = m.eval((1 - lo, lo))
                eb = m.eval((1 - hi, hi))
                pieces.append((min(ea[0], eb[0]), max(ea[0], eb[0])))
        else:
            for j, poly in _std_star_piece_regions(2, i):
                img = [m.eval(p) for p in poly]
                if _signed_area(img) < 0:
                    img.reverse()
                pieces.append(img)
        out[v] = pieces
    return out


def _signed_area(poly):
    s = Fraction(0)
    for i in range(len(poly)):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % len(poly)]
        s += x1 * y2 - x2 * y1
    return s / 2


def _piece_meets_box(piece, center, eps, n):
    if n == 1:
        lo, hi = piece
        return max(lo, center[0] - eps) <= min(hi, center[0] + eps)
    poly = piece
    for k in range(2):
        a = tuple(Fraction(int(t == k)) for t in range(2))
        poly = _clip_polygon(poly, a, center[k] + eps)
        na = tuple(-c for c in a)
        poly = _clip_polygon(poly, na, -(center[k] - eps))
        if not poly:
            return False
    return bool(poly)


def perturbed_star_pinch_check(
    simplex: Simplex, bprime, eps, bound: LipschitzBound, probe: ProbeSpec
) -> PinchReport:
    """Probe the simplex: a point within eps of every perturbed star must lie
    within L*eps of the interior point b'.  Exact; supports dim 1 and 2."""
    eps = as_scale(eps)
    if eps == 0:
        raise InputError("eps must be positive")
    bprime = _vec(bprime)
    if not simplex.half_copy_contains(bprime):
        raise InputError("b' must lie in the half copy of the simplex")
    m = ConeAffineMap(simplex, bprime)
    stars = perturbed_stars(m)
    n = simplex.n
    limit = bound.value * eps
    rep = PinchReport()
    for x in _simplex_probe_points(simplex, probe):
        rep.checked += 1
        near_all = all(
            any(_piece_meets_box(piece, x, eps, n) for piece in pieces)
            for pieces in stars.values()
        )
        if near_all:
            rep.qualifying += 1
            if max(abs(a - b) for a, b in zip(x, bprime)) > limit:
                rep.violators.append(x)
    return rep


def _simplex_probe_points(simplex: Simplex, probe: ProbeSpec):
    n = simplex.n
    if probe.step is not None:
        den = probe.step.denominator
        lo = [min(v[k] for v in simplex.vertices) for k in range(n)]
        hi = [max(v[k] for v in simplex.vertices) for k in range(n)]
        ranges = []
        for k in range(n):
            a = -((-lo[k].numerator * den) // lo[k].denominator)
            z = (hi[k].numerator * den) // hi[k].denominator
            ranges.append(range(a, z + 1))
        for combo in itertools.product(*ranges):
            p = tuple(Fraction(c, den) for c in combo)
            if simplex.contains(p):
                yield p
    else:
        import random

        rng = random.Random(probe.seed)
        done = 0
        while done < probe.samples:
            weights = [rng.randint(0, 10 ** 6) for _ in range(n + 1)]
            s = sum(weights)
            if s == 0:
                continue
            lam = [Fraction(wi, s) for wi in weights]
            yield tuple(
                sum(l * v[k] for l, v in zip(lam, simplex.vertices)) for k in range(n)
            )
            done += 1


# -- scale selection constants ---------------------------------------------------


@lru_cache(maxsize=None)
def _unit_scale_constants(n: int):
    """Exact per-dimension constants for picking the cover grid.

    ball_room: largest rho with B(b_sigma, rho) inside every base simplex's
    half copy (unit scale).  star_room: minimal unclipped hat value over the
    shrunk simplices that contain every perturbed star; the hat changes by
    at most 2x the sup-distance, so a neighborhood of radius room/2 of any
    perturbed star stays inside the open vertex star.
    """
    alpha = Fraction(1, 2 * (n + 1))
    ball_room = None
    star_room = None
    for simplex in kuhn_simplices(n):
        m = [[v[k] for v in simplex.vertices] for k in range(n)]
        m.append([Fraction(1)] * (n + 1))
        inv = mat_inv(m)
        for j in range(n + 1):
            grad_l1 = sum(abs(inv[j][k]) for k in range(n))
            room = (Fraction(1, n + 1) - alpha) / grad_l1
            ball_room = room if ball_room is None else min(ball_room, room)
        for j, v in enumerate(simplex.vertices):
            shrunk = [v] + [
                tuple(vc + (1 - alpha) * (wc - vc) for vc, wc in zip(v, w))
                for t, w in enumerate(simplex.vertices)
                if t != j
            ]
            for p in shrunk:
                u = [Fraction(c) - Fraction(vc) for c, vc in zip(p, v)]
                val = 1 - max(Fraction(0), max(u)) + min(Fraction(0), min(u))
                star_room = val if star_room is None else min(star_room, val)
    return ball_room, star_room


# -- the cover construction -------------------------------------------------------


@dataclass
class CoverBuildResult:
    cover: object
    eps: Fraction          # the chosen scale; simplices have side 1/eps
    grid: Fraction         # 1/eps
    lip_bound: Fraction    # L = n * C
    sweep_constant: Fraction
    report: dict


def build_cover(
    w,
    a,
    delta,
    phi: AvoidanceTable,
    sweep_density: int = 16,
    max_grid_exponent: int = 60,
) -> CoverBuildResult:
    """Build the barycentric-star cover adapted to the avoidance table.

    Chooses the largest admissible cell scale of the form q * 2^k, finds a
    perturbed barycenter avoiding `a` for every simplex meeting the window,
    and assembles the window trace of the perturbed vertex stars.  The
    report confirms the mesh bound and the measured ball multiplicities.
    """
    n = w.dim
    delta = as_scale(delta)
    if w.margin < delta:
        raise InputError(f"window margin {w.margin} below delta {delta}")
    pts_a = sorted(set(tuple(p) for p in a))
    for p in pts_a:
        if not w.has_point(p):
            raise InputError(f"set point {p} lies outside the window")
    c_const, sweep_info = lip_sweep(n, sweep_density)
    lip_bound = n * c_const
    key = lip_bound * delta
    phi_val = phi.lookup(key)
    if phi_val is None:
        raise RefusalError(
            f"avoidance table has no entry at scale L*delta = {key}"
        )
    ball_room, star_room = _unit_scale_constants(n)
    # (1): eps * phi <= ball_room ; (2): hat slack 2*(2 delta eps) < star_room
    k = 0
    eps = None
    while k <= max_grid_exponent:
        cand = Fraction(1, w.q * (1 << k))
        if cand * phi_val <= ball_room and 4 * cand * delta < star_room:
            eps = cand
            break
        k += 1
    if eps is None:
        raise RefusalError(
            f"no admissible scale of the form 1/(q*2^k) for k <= {max_grid_exponent}; "
            f"needs eps <= {ball_room / phi_val} and eps < {star_room / (4 * delta)}"
        )
    grid = 1 / eps
    complex_ = KuhnComplex(n, grid=grid)
    # simplices meeting the window and their member points
    members = {}
    for p in w.points:
        coords = tuple(Fraction(c, w.q) for c in p)
        for keyd in complex_.keys_containing(coords):
            members.setdefault(keyd, []).append(p)
    a_set = set(pts_a)
    maps = {}
    reach = phi_val - key
    for keyd in sorted(members):
        simplex = complex_.simplex_for(*keyd)
        b_sigma = simplex.barycenter
        bp = _search_displaced_center(w, a_set, b_sigma, key, reach)
        if bp is None:
            raise RefusalError(
                f"no displaced barycenter for simplex {keyd}: avoidance entry "
                f"{phi_val} at {key} is too small for this set"
            )
        if not simplex.half_copy_contains(bp):
            raise RefusalError(
                f"displaced barycenter {bp} escaped the half copy of {keyd}"
            )
        maps[keyd] = ConeAffineMap(simplex, bp)
    # assemble window traces of the perturbed stars
    parts_by_vertex = {}
    for keyd, wpts in sorted(members.items()):
        m = maps[keyd]
        for p in wpts:
            coords = tuple(Fraction(c, w.q) for c in p)
            x = m.invert(coords)
            top = max(x)
            for i in range(n + 1):
                if x[i] == top:
                    parts_by_vertex.setdefault(m.image_vertex(i), set()).add(p)
    vertices = sorted(parts_by_vertex)
    parts = tuple(
        (_vertex_label(v), frozenset(parts_by_vertex[v])) for v in vertices
    )
    cover = Cover(parts=parts)
    # verification report
    star_ok = all(
        complex_.in_open_star(v, tuple(Fraction(c, w.q) for c in p))
        for v in vertices
        for p in parts_by_vertex[v]
    )
    mesh_val = max(w.diameter_of(ps) for _, ps in parts) if parts else Fraction(0)
    mult_a = _multiplicity_over(w, parts_by_vertex, vertices, pts_a, delta)
    mult_core = _multiplicity_over(w, parts_by_vertex, vertices, list(w.core), delta)
    report = {
        "eps": eps,
        "grid": grid,
        "cells_exponent": k,
        "C": c_const,
        "L": lip_bound,
        "phi_scale": key,
        "phi_value": phi_val,
        "sweep": sweep_info,
        "simplices": len(members),
        "parts": len(parts),
        "mesh": mesh_val,
        "mesh_bound": 2 * grid,
        "mesh_ok": mesh_val <= 2 * grid,
        "stars_inside_open_stars": star_ok,
        "max_mult_on_set": mult_a,
        "max_mult_on_core": mult_core,
        "set_mult_ok": mult_a[0] <= n,
        "core_mult_ok": mult_core[0] <= n + 1,
    }
    return CoverBuildResult(
        cover=cover,
        eps=eps,
        grid=grid,
        lip_bound=lip_bound,
        sweep_constant=c_const,
        report=report,
    )


def _vertex_label(v) -> str:
    return "st_" + "_".join(str(c) for c in v)


def _search_displaced_center(w, a_set, b_sigma, avoid_radius, reach):
    """First lattice point near b_sigma whose avoid_radius-ball misses the
    set; candidates ordered by (distance to b_sigma, lexicographic)."""
    q = w.q
    center_num = [c * q for c in b_sigma]
    lo = [-((-(c - reach * q).numerator) // (c - reach * q).denominator) for c in center_num]
    hi = [(c + reach * q).numerator // (c + reach * q).denominator for c in center_num]
    cands = []
    for combo in itertools.product(*[range(a, b + 1) for a, b in zip(lo, hi)]):
        d = max(abs(Fraction(ci, 1) - cn) for ci, cn in zip(combo, center_num))
        if d <= reach * q:
            cands.append((d, combo))
    cands.sort()
    kq = avoid_radius * q
    for _, combo in cands:
        good = True
        for ap in a_set:
            if max(abs(ci - ai) for ci, ai in zip(combo, ap)) <= kq:
                good = False
                break
        if good:
            return tuple(Fraction(ci, q) for ci in combo)
    return None


def _multiplicity_over(w, parts_by_vertex, vertices, centers, delta):
    """Max number of parts met by ball(x, delta) over the given centers."""
    index = {v: i for i, v in enumerate(vertices)}
    owner = {}
    for v in vertices:
        for p in parts_by_vertex[v]:
            owner.setdefault(p, set()).add(index[v])
    best, witness = 0, None
    kd = w.steps(delta)
    for x in centers:
        met = set()
        for off in itertools.product(range(-kd, kd + 1), repeat=w.dim):
            p = tuple(c + o for c, o in zip(x, off))
            ids = owner.get(p)
            if ids:
                met |= ids
        if len(met) > best:
            best, witness = len(met), x
    return best, witness
