"""Quadratic and bilinear forms of the lattice weights, assembled from
Dirichlet pairings of harmonic measures via boundary flux integrals.

The pairing <grad f, grad g> of two harmonic functions, where g has
piecewise-constant boundary values, reduces to the flux of f through the
arcs where g = 1. The flux slot always carries the function that is
smooth on the integration arcs, so no endpoint singularity is ever
integrated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotNegativeDefinite, QuadratureNotConverged
from .geometry import TWO_PI

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class HarmonicUnit:
    """Harmonic function with boundary values 1 on `support`, 0 elsewhere.

    flux(z) is the Wirtinger d/dz; support is a tuple of
    (component, start_angle, end_angle), start == end meaning the full
    circle.
    """

    flux: object
    support: tuple


@dataclass(frozen=True)
class PeriodData:
    Q: np.ndarray
    B: np.ndarray
    Qhat_off: np.ndarray
    tau: np.ndarray
    basis_components: tuple
    free_components: tuple


def _panel_sum(flux, circle, edges):
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = mid + half * _GL_X
        z = circle.center + circle.radius * np.exp(1j * t)
        zdot = 1j * circle.radius * np.exp(1j * t)
        vals = np.array([flux(p) for p in z])
        total += half * np.dot(_GL_W, 2.0 * np.imag(vals * zdot))
    return total


def _arc_edges(a0, span, n, full):
    if full:
        return a0 + span * np.linspace(0.0, 1.0, n + 1)
    # cosine grading: clusters panels toward both arc endpoints, where the
    # integrand of a neighbouring arc measure varies fastest
    v = np.linspace(0.0, 1.0, n + 1)
    return a0 + span * 0.5 * (1.0 - np.cos(np.pi * v))


def dirichlet_pairing(f, g, domain, tol=1e-10, max_panels=4096):
    """<grad f, grad g> over the domain as a boundary flux integral.

    Integrates the normal flux of f over the arcs where g has boundary
    value 1. f must be smooth on the closure of those arcs.
    """
    circles = list(domain.circles())
    total, converged = 0.0, True
    for comp, a0, a1 in g.support:
        circ = circles[comp]
        span = (a1 - a0) % TWO_PI
        full = span == 0.0
        if full:
            span = TWO_PI
        sign = 1.0 if comp == 0 else -1.0
        n = 8
        prev = sign * _panel_sum(f.flux, circ, _arc_edges(a0, span, n, full))
        ok = False
        while n <= max_panels:
            n *= 2
            cur = sign * _panel_sum(f.flux, circ, _arc_edges(a0, span, n, full))
            if abs(cur - prev) < tol:
                ok = True
                break
            prev = cur
        if not ok:
            raise QuadratureNotConverged(
                "flux integral on component %d stalled above %.1e" % (comp, tol))
        total += cur
    return float(total)


def _component_unit(solver, i):
    return HarmonicUnit(flux=lambda z: solver.harmonic_measure_derivs(i, z),
                        support=((i, 0.0, 0.0),))


def _arc_unit(solver, j):
    bc = solver.bc
    arc = bc.arcs[bc.free_arc_indices[j]]
    return HarmonicUnit(flux=lambda z: solver.harmonic_measure_arc_derivs(j, z),
                        support=((arc.component, arc.start_angle, arc.end_angle),))


def assemble(solver, tol=1e-10):
    """Build the lattice-weight forms for the solver's boundary data.

    Q acts on the integer vector indexed by basis components (all
    components except the marked one), B couples it to the free-arc sign
    vector, Qhat_off is the off-diagonal sign-sign form. tau = 4Q.
    """
    bc = solver.bc
    domain = solver.domain
    n_comp = 1 + domain.genus
    marked_component = bc.arcs[bc.marked_arc].component
    basis = tuple(c for c in range(n_comp) if c != marked_component)

    free = []
    for j, idx in enumerate(bc.free_arc_indices):
        arc = bc.arcs[idx]
        if arc.span() > 0.0:  # full-circle free arcs carry no sign variable
            free.append(j)
    free = tuple(free)

    g, k = len(basis), len(free)
    h_units = [_component_unit(solver, c) for c in basis]
    a_units = [_arc_unit(solver, j) for j in free]

    P = np.zeros((g, g))
    for i in range(g):
        for j in range(i, g):
            P[i, j] = dirichlet_pairing(h_units[i], h_units[j], domain, tol)
            P[j, i] = P[i, j]
    Q = -(np.pi / 8.0) * P

    B = np.zeros((g, k))
    for i in range(g):
        for j in range(k):
            B[i, j] = -(np.pi / 4.0) * dirichlet_pairing(
                h_units[i], a_units[j], domain, tol)

    Qhat = np.zeros((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            # smooth flux slot: arc i's measure is regular on arc j
            Qhat[i, j] = -(np.pi / 8.0) * dirichlet_pairing(
                a_units[i], a_units[j], domain, tol)
    Qhat = 0.5 * (Qhat + Qhat.T)

    if g and np.max(np.linalg.eigvalsh(Q)) >= -1e-14:
        raise NotNegativeDefinite("component pairing form is not negative definite")

    return PeriodData(Q=Q, B=B, Qhat_off=Qhat, tau=4.0 * Q.astype(complex),
                      basis_components=basis, free_components=free)
