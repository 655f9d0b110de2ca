"""Circular multiply-connected domains with wired/free boundary decomposition.

Component index 0 is the outer circle; holes are indexed 1..g in the order
given. Hole order fixes the index of harmonic measures and of winding
coordinates, so it is part of the data contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

WIRED = "wired"
FREE = "free"


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float

    def point(self, angle):
        return self.center + self.radius * np.exp(1j * angle)

    def angle_of(self, z):
        return float(np.angle(z - self.center)) % TWO_PI


@dataclass(frozen=True)
class CircularDomain:
    outer: Circle
    holes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "holes", tuple(self.holes))

    @property
    def genus(self):
        return len(self.holes)

    def circles(self):
        return (self.outer,) + self.holes


@dataclass(frozen=True)
class HalfPlaneDomain:
    """Upper half-plane model domain (no holes, boundary = real axis).

    Boundary arcs are intervals (start, end) on the real axis; an interval
    with start > end is not allowed, and the two unbounded rays are treated
    as part of whichever arc covers them.
    """

    @property
    def genus(self):
        return 0


@dataclass(frozen=True)
class BoundaryArc:
    component: int
    start_angle: float
    end_angle: float
    condition: str  # WIRED or FREE

    def __post_init__(self):
        if self.condition not in (WIRED, FREE):
            raise ValueError("condition must be 'wired' or 'free'")

    def span(self):
        return (self.end_angle - self.start_angle) % TWO_PI

    def contains_angle(self, theta, tol=0.0):
        if self.span() == 0.0:  # full circle stored as start == end
            return True
        rel = (theta - self.start_angle) % TWO_PI
        return -tol <= rel <= self.span() + tol

    def midpoint_angle(self):
        return self.start_angle + 0.5 * self.span() if self.span() else self.start_angle + np.pi


def _full_circle(component, condition):
    return BoundaryArc(component, 0.0, 0.0, condition)


@dataclass(frozen=True)
class BoundaryData:
    """Arcs plus derived jump points, N-flags, and the marked (pinned) arc.

    jump_points[j] = (b_start, b_end) bounds free arc j counterclockwise;
    component_flags[i] = 1 iff component i is entirely free.
    """

    arcs: tuple
    marked_arc: int = 0
    jump_points: tuple = field(init=False)
    free_arc_indices: tuple = field(init=False)
    component_flags: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        comps = sorted({a.component for a in self.arcs})
        flags = []
        for c in comps:
            on_c = [a for a in self.arcs if a.component == c]
            flags.append(1 if all(a.condition == FREE for a in on_c) else 0)
        jump, free_idx = [], []
        for i, a in enumerate(self.arcs):
            if a.condition == FREE and a.span() > 0.0:
                free_idx.append(i)
                jump.append((a.start_angle, a.end_angle))
        object.__setattr__(self, "jump_points", tuple(jump))
        object.__setattr__(self, "free_arc_indices", tuple(free_idx))
        object.__setattr__(self, "component_flags", tuple(flags))

    @property
    def n_free_jump_arcs(self):
        return len(self.free_arc_indices)

    def arcs_on(self, component):
        return [a for a in self.arcs if a.component == component]

    def arc_at(self, domain, z, tol=1e-9):
        """Return (index, arc) of the boundary arc containing boundary point z."""
        for ci, circ in enumerate(domain.circles()):
            if abs(abs(z - circ.center) - circ.radius) <= tol * max(1.0, circ.radius):
                theta = circ.angle_of(z)
                for i, a in enumerate(self.arcs):
                    if a.component == ci and a.contains_angle(theta, tol=tol):
                        return i, a
        return None, None


def all_wired(domain):
    arcs = [_full_circle(c, WIRED) for c in range(1 + getattr(domain, "genus", 0))]
    return BoundaryData(arcs=arcs, marked_arc=0)


@dataclass(frozen=True)
class Insertion:
    location: complex
    op: object


def contains(domain, z, tol=0.0):
    """Strict interior membership."""
    if isinstance(domain, HalfPlaneDomain):
        return z.imag > tol
    if abs(z - domain.outer.center) >= domain.outer.radius - tol:
        return False
    for h in domain.holes:
        if abs(z - h.center) <= h.radius + tol:
            return False
    return True


def boundary_distance(domain, z):
    if isinstance(domain, HalfPlaneDomain):
        return z.imag
    d = domain.outer.radius - abs(z - domain.outer.center)
    for h in domain.holes:
        d = min(d, abs(z - h.center) - h.radius)
    return d


def _partition_diagnostics(arcs, component):
    out = []
    on_c = [a for a in arcs if a.component == component]
    if not on_c:
        out.append("component %d has no boundary arcs" % component)
        return out
    if len(on_c) == 1:
        if on_c[0].span() != 0.0:
            out.append("arcs do not partition component %d" % component)
        return out
    if len(on_c) % 2 == 1:
        out.append("odd jump count on component %d" % component)
    order = sorted(on_c, key=lambda a: a.start_angle % TWO_PI)
    total = sum(a.span() for a in order)
    if not np.isclose(total, TWO_PI, rtol=0, atol=1e-9):
        out.append("arcs do not partition component %d" % component)
    for a, b in zip(order, order[1:] + order[:1]):
        if abs(((a.end_angle - b.start_angle) % TWO_PI + np.pi) % TWO_PI - np.pi) > 1e-9:
            out.append("arcs do not partition component %d" % component)
            break
    for a, b in zip(order, order[1:] + order[:1]):
        if a.condition == b.condition:
            out.append("adjacent arcs do not alternate on component %d" % component)
            break
    return out


def validate(domain, bc, insertions=(), min_sep=1e-6):
    """Check every scene invariant; returns a list of diagnostics (no raising)."""
    diags = []
    if isinstance(domain, HalfPlaneDomain):
        for ins in insertions:
            if not contains(domain, complex(ins.location)):
                diags.append("insertion outside domain")
        return diags
    if domain.outer.radius <= 0:
        diags.append("nonpositive radius on outer circle")
    for i, h in enumerate(domain.holes):
        if h.radius <= 0:
            diags.append("nonpositive radius on hole %d" % (i + 1))
        if abs(h.center - domain.outer.center) + h.radius >= domain.outer.radius - min_sep:
            diags.append("hole not strictly inside")
    for i in range(len(domain.holes)):
        for j in range(i + 1, len(domain.holes)):
            a, b = domain.holes[i], domain.holes[j]
            if abs(a.center - b.center) <= a.radius + b.radius + min_sep:
                diags.append("hole closures not disjoint")
    n_comp = 1 + len(domain.holes)
    for a in bc.arcs:
        if not (0 <= a.component < n_comp):
            diags.append("arc references missing component %d" % a.component)
    for c in range(n_comp):
        diags.extend(_partition_diagnostics(bc.arcs, c))
    if not (0 <= bc.marked_arc < len(bc.arcs)):
        diags.append("marked arc index out of range")
    else:
        any_wired = any(a.condition == WIRED for a in bc.arcs)
        if any_wired and bc.arcs[bc.marked_arc].condition != WIRED:
            diags.append("marked arc not wired")
    locs = []
    for ins in insertions:
        z = complex(ins.location)
        opname = type(ins.op).__name__
        if opname in ("BoundarySign", "BoundarySigma"):
            idx, arc = bc.arc_at(domain, z, tol=1e-7)
            if arc is None:
                diags.append("boundary spin not on the boundary")
            elif arc.condition != WIRED:
                diags.append("boundary spin not on a wired arc")
            else:
                circ = domain.circles()[arc.component]
                theta = circ.angle_of(z)
                if arc.span() > 0.0:
                    d1 = abs(((theta - arc.start_angle) % TWO_PI + np.pi) % TWO_PI - np.pi)
                    d2 = abs(((theta - arc.end_angle) % TWO_PI + np.pi) % TWO_PI - np.pi)
                    if min(d1, d2) * circ.radius < min_sep:
                        diags.append("boundary spin too close to a jump point")
        else:
            if not contains(domain, z, tol=min_sep):
                diags.append("insertion outside domain")
            locs.append(z)
    for i in range(len(locs)):
        for j in range(i + 1, len(locs)):
            if abs(locs[i] - locs[j]) < min_sep:
                diags.append("insertions too close together")
    return diags
