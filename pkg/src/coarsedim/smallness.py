"""Large/small-set machinery on windows.

Smallness is operationalized by the avoidance modulus: a table delta ->
radius such that near every core point there is a delta-ball avoiding the
tested set within that radius.  Non-smallness is certified the opposite
way, by exhibiting a scale at which the complement of the set's
neighborhood stops being large.  Both checks are exhaustive scans over the
window core.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import as_scale
from .errors import InputError


@dataclass
class AvoidanceTable:
    """Monotone table delta -> least avoidance radius (the --phi file)."""

    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.entries).items():
            clean[as_scale(k)] = as_scale(v)
        self.entries = {}
        for k in sorted(clean):
            self.insert(k, clean[k])

    def insert(self, delta, radius):
        delta, radius = as_scale(delta), as_scale(radius)
        if radius < delta:
            raise InputError(f"avoidance radius {radius} below its scale {delta}")
        for k, v in self.entries.items():
            if (k <= delta and v > radius) or (k >= delta and v < radius):
                raise InputError(
                    f"entry {delta}->{radius} breaks monotonicity against {k}->{v}"
                )
        self.entries[delta] = radius

    def lookup(self, delta) -> Optional[Fraction]:
        return self.entries.get(as_scale(delta))

    def sorted_items(self):
        return sorted(self.entries.items())


def is_large(w, a, r):
    """Whether the r-neighborhood of `a` covers the core; witness if not.

    Requires r <= margin so that ball truncation cannot fake coverage.
    """
    r = as_scale(r)
    if r > w.margin:
        raise InputError(f"scale {r} exceeds window margin {w.margin}")
    pts = _validated(w, a)
    if not pts:
        missed = w.core[0] if w.core else None
        return (missed is None), missed
    k = w.steps(r)
    dist = w.set_distance(pts, cap=k + 1)
    for x in w.core:
        if dist.get(x, k + 1) > k:
            return False, x
    return True, None


def avoidance_witness(w, a, delta, phi_max):
    """Least radius phi <= phi_max with a delta-ball avoiding `a` within
    phi - delta of every core point; None when no such radius exists.

    Exhaustive: the answer is delta + max over core x of the distance to
    the nearest point whose delta-ball misses `a`.
    """
    delta = as_scale(delta)
    phi_max = as_scale(phi_max)
    if delta + phi_max > w.margin:
        raise InputError(
            f"budget delta + phi_max = {delta + phi_max} exceeds margin {w.margin}"
        )
    if phi_max < delta:
        return None
    pts = _validated(w, a)
    kd = w.steps(delta)
    dist_a = w.set_distance(pts) if pts else {}
    safe = [y for y in w.points if dist_a.get(y, kd + 1) > kd]
    if not safe:
        return None
    reach = w.steps(phi_max - delta)
    dist_safe = w.set_distance(safe, cap=reach + 1)
    worst = 0
    for x in w.core:
        dx = dist_safe.get(x, reach + 1)
        if dx > reach:
            return None
        worst = max(worst, dx)
    return delta + w.scale_of(worst)


@dataclass(frozen=True)
class NonSmallCertificate:
    """Scale at which the complement of ball(a, scale) fails to be large."""

    scale: Fraction
    witness: tuple
    radius: Fraction  # largest tested radius whose witness ball avoids the complement


def nonsmall_certificate(w, a, scales):
    """Search the given scales for a non-smallness certificate.

    At a successful scale e, the set core - ball(a, e) is not large at any
    tested radius up to margin - e: the witness core point keeps a ball of
    the reported radius inside ball(a, e).
    """
    pts = _validated(w, a)
    if not w.core:
        raise InputError("window core is empty")
    for e in sorted(as_scale(s) for s in scales):
        if e > w.margin:
            raise InputError(f"certificate scale {e} exceeds margin {w.margin}")
        ke = w.steps(e)
        dist_a = w.set_distance(pts) if pts else {}
        complement_core = [x for x in w.core if dist_a.get(x, ke + 1) > ke]
        budget = w.steps(w.margin - e)
        if not complement_core:
            return NonSmallCertificate(
                scale=e, witness=w.core[0], radius=w.margin - e
            )
        dist_y = w.set_distance(complement_core, cap=budget + 1)
        worst, witness = -1, None
        for x in w.core:
            dx = dist_y.get(x, budget + 1)
            if dx > worst:
                worst, witness = dx, x
        if worst > budget:
            return NonSmallCertificate(
                scale=e, witness=witness, radius=w.margin - e
            )
    return None


@dataclass(frozen=True)
class SmallnessVerdict:
    kind: str  # "small-at-tested-scales" | "not-small" | "inconclusive"
    deltas: tuple
    phi_max: Fraction
    table: Optional[AvoidanceTable] = None
    certificate: Optional[NonSmallCertificate] = None


def small_verdict(w, a, deltas, phi_max) -> SmallnessVerdict:
    """Run the avoidance search at every delta, falling back to the
    non-smallness certificate when some delta fails."""
    phi_max = as_scale(phi_max)
    deltas = tuple(sorted(as_scale(d) for d in deltas))
    if not deltas:
        raise InputError("at least one scale is required")
    table = AvoidanceTable()
    all_found = True
    for delta in deltas:
        phi = avoidance_witness(w, a, delta, phi_max)
        if phi is None:
            all_found = False
            break
        table.insert(delta, phi)
    if all_found:
        return SmallnessVerdict(
            kind="small-at-tested-scales", deltas=deltas, phi_max=phi_max, table=table
        )
    cert = nonsmall_certificate(w, a, deltas)
    if cert is not None:
        return SmallnessVerdict(
            kind="not-small", deltas=deltas, phi_max=phi_max, certificate=cert
        )
    return SmallnessVerdict(kind="inconclusive", deltas=deltas, phi_max=phi_max)


def _validated(w, a):
    pts = sorted(set(tuple(p) for p in a))
    for p in pts:
        if not w.has_point(p):
            raise InputError(f"set point {p} lies outside the window")
    return pts
