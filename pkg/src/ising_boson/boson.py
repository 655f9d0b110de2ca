"""Correlation engine for the compactified free field.

Correlations of normal-ordered exponentials are a Gaussian part times a
winding-sector expectation. Trig insertions expand into exponential branches
by linearity. Derivative insertions (d, dbar, :|grad|^2:) are evaluated in
closed form: each derivative leg either pairs with another leg through a
second derivative of the Green's function or stands alone as a "tail"
(first derivatives against all exponential charges plus the per-config
gradient of the winding field). The sum over partial matchings is generated
recursively, so arbitrary mixes of insertions are supported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoints, OutsideDomain, StepUnderflow
from .geometry import WIRED, Insertion, all_wired, contains
from .harmonic import make_solver
from .instanton import InstantonEnsemble


# --- field operators ---------------------------------------------------

@dataclass(frozen=True)
class NormalExp:
    gamma: complex


@dataclass(frozen=True)
class Cos:
    gamma: complex


@dataclass(frozen=True)
class Sin:
    gamma: complex


@dataclass(frozen=True)
class DPhi:
    pass


@dataclass(frozen=True)
class DBarPhi:
    pass


@dataclass(frozen=True)
class GradSquared:
    pass


@dataclass(frozen=True)
class BoundarySign:
    pass


def _branches(op):
    """Exponential branches (coefficient, charge) of a vertex-type operator."""
    if isinstance(op, NormalExp):
        return [(1.0 + 0j, complex(op.gamma))]
    g = complex(op.gamma)
    if isinstance(op, Cos):
        return [(0.5 + 0j, 1j * g), (0.5 + 0j, -1j * g)]
    if isinstance(op, Sin):
        return [(-0.5j, 1j * g), (0.5j, -1j * g)]
    raise TypeError("not a vertex operator: %r" % (op,))


class Scene:
    """Domain, boundary data, harmonic solver, winding ensemble."""

    def __init__(self, domain, bc=None, tol=1e-9, tail_target=1e-14,
                 pin_shift=0):
        self.domain = domain
        self.bc = bc if bc is not None else all_wired(domain)
        self.solver = make_solver(domain, bc=self.bc, tol=tol)
        self.ensemble = InstantonEnsemble(self.solver, tail_target=tail_target,
                                          pin_shift=pin_shift)
        self.tol = tol

    def err_est(self):
        return getattr(self.solver, "tol", 1e-13) + self.ensemble.tail_target


@dataclass
class CorrelationResult:
    value: complex
    provenance: dict


def _snap(raw):
    if abs(raw.imag) < 1e-10 * max(abs(raw.real), 1e-300):
        return complex(raw.real, 0.0)
    return raw


def _check_distinct(points):
    pts = list(points)
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if abs(pts[i] - pts[j]) < 1e-12:
                raise CoincidentPoints("insertions at %s collide" % (pts[i],))


def exp_correlation(scene, gammas, zs, sign_components=()):
    """Correlation of normal-ordered exponentials exp(gamma_i Phi(z_i))."""
    gammas = [complex(g) for g in gammas]
    zs = [complex(z) for z in zs]
    _check_distinct(zs)
    s = scene.solver
    q = 0j
    for i in range(len(zs)):
        q += 0.5 * gammas[i] ** 2 * s.green_regular(zs[i])
        for j in range(i + 1, len(zs)):
            q += gammas[i] * gammas[j] * s.green(zs[i], zs[j])
    inst = scene.ensemble.expectation(gammas, zs,
                                      sign_components=sign_components)
    return complex(np.exp(q) * inst)


def exp_correlation_dz(scene, gammas, zs, j, kind="d"):
    """Wirtinger derivative of exp_correlation in the j-th insertion point."""
    gammas = [complex(g) for g in gammas]
    zs = [complex(z) for z in zs]
    s = scene.solver
    q = 0j
    for a in range(len(zs)):
        q += 0.5 * gammas[a] ** 2 * s.green_regular(zs[a])
        for b in range(a + 1, len(zs)):
            q += gammas[a] * gammas[b] * s.green(zs[a], zs[b])
    dlog = 0.5 * gammas[j] ** 2 * s.green_regular_derivs(zs[j])["dz"]
    for i in range(len(zs)):
        if i != j:
            dlog += gammas[j] * gammas[i] * s.green_derivs(zs[j], zs[i])["dz"]
    if kind == "dbar":
        dlog = 0.5 * gammas[j] ** 2 * np.conj(
            s.green_regular_derivs(zs[j])["dz"])
        for i in range(len(zs)):
            if i != j:
                dlog += gammas[j] * gammas[i] * np.conj(
                    s.green_derivs(zs[j], zs[i])["dz"])
    ens = scene.ensemble
    plain = ens.expectation(gammas, zs)
    mom = ens.expectation(gammas, zs, moments=((zs[j], kind),))
    return complex(np.exp(q) * (dlog * plain + gammas[j] * mom))


def _pair_kernel(solver, leg_i, leg_j):
    (zi, ki), (zj, kj) = leg_i, leg_j
    d = solver.green_derivs(zi, zj)
    if (ki, kj) == ("d", "d"):
        return d["dzdw"]
    if (ki, kj) == ("d", "dbar"):
        return d["dzdwbar"]
    if (ki, kj) == ("dbar", "d"):
        return np.conj(d["dzdwbar"])
    return np.conj(d["dzdw"])


def _tail_base(solver, leg, gammas, zs):
    z, kind = leg
    t = 0j
    for g, w in zip(gammas, zs):
        dz = solver.green_derivs(z, w)["dz"]
        t += g * (np.conj(dz) if kind == "dbar" else dz)
    return t


def _matching_sum(tails, pair):
    """Sum over partial pairings: unmatched legs contribute their tails."""
    memo = {}

    def M(ids):
        if not ids:
            return 1.0
        if ids in memo:
            return memo[ids]
        l = min(ids)
        rest = ids - {l}
        acc = tails[l] * M(rest)
        for m in rest:
            acc = acc + pair[(l, m) if l < m else (m, l)] * M(rest - {m})
        memo[ids] = acc
        return acc

    return M(frozenset(range(len(tails))))


def _split(scene, insertions):
    exp_pts, exp_ops = [], []
    legs, own_pairs, sign_comps = [], set(), []
    bulk = []
    pref = 1.0 + 0j
    for ins in insertions:
        if isinstance(ins, Insertion):
            z, op = complex(ins.location), ins.op
        else:
            z, op = complex(ins[0]), ins[1]
        if isinstance(op, (NormalExp, Cos, Sin)):
            exp_pts.append(z)
            exp_ops.append(op)
            bulk.append(z)
        elif isinstance(op, DPhi):
            legs.append((z, "d"))
            bulk.append(z)
        elif isinstance(op, DBarPhi):
            legs.append((z, "dbar"))
            bulk.append(z)
        elif isinstance(op, GradSquared):
            i = len(legs)
            legs.append((z, "d"))
            legs.append((z, "dbar"))
            own_pairs.add((i, i + 1))
            pref *= 4.0
            bulk.append(z)
        elif isinstance(op, BoundarySign):
            idx, arc = scene.bc.arc_at(scene.domain, z, tol=1e-7)
            if arc is None:
                raise ValueError("boundary sign not on the boundary: %s" % z)
            if arc.condition != WIRED:
                raise ValueError("boundary sign on a free arc")
            sign_comps.append(arc.component)
        else:
            raise TypeError("unknown field operator: %r" % (op,))
    _check_distinct(bulk)
    for z in bulk:
        if not contains(scene.domain, z):
            raise OutsideDomain("insertion outside domain: %s" % z)
    return exp_pts, exp_ops, legs, own_pairs, sign_comps, pref


def correlate(scene, insertions):
    """Closed-form correlation of an arbitrary mix of field operators."""
    exp_pts, exp_ops, legs, own_pairs, sign_comps, pref = _split(
        scene, insertions)
    solver = scene.solver
    ens = scene.ensemble

    pair = {}
    for i in range(len(legs)):
        for j in range(i + 1, len(legs)):
            if (i, j) in own_pairs:
                z = legs[i][0]
                pair[(i, j)] = 0.5 * solver.green_regular_derivs(z)["dzdzbar"]
            else:
                pair[(i, j)] = _pair_kernel(solver, legs[i], legs[j])

    branch_lists = [_branches(op) for op in exp_ops]
    total = 0j
    n_branches = 0
    for combo in itertools.product(*branch_lists):
        n_branches += 1
        coef = 1.0 + 0j
        gam = []
        for c, g in combo:
            coef *= c
            gam.append(g)
        q = 0j
        for i in range(len(exp_pts)):
            q += 0.5 * gam[i] ** 2 * solver.green_regular(exp_pts[i])
            for j in range(i + 1, len(exp_pts)):
                q += gam[i] * gam[j] * solver.green(exp_pts[i], exp_pts[j])
        tab = ens.table(gam, exp_pts)
        w = tab.weights
        if sign_comps:
            w = w * tab.sign_vector(sign_comps)
        if legs:
            tails = [_tail_base(solver, leg, gam, exp_pts)
                     + tab.grad_xi(leg[0], leg[1]) for leg in legs]
            m = _matching_sum(tails, pair)
        else:
            m = 1.0
        total += coef * np.exp(q) * np.sum(w * m) / ens.Z

    raw = pref * total
    prov = {"backend": solver.name, "raw": raw, "n_branches": n_branches,
            "err_est": scene.err_est()}
    if ens._cache:
        prov["s_radius"] = max(ens._cache)
    return CorrelationResult(value=_snap(raw), provenance=prov)


def vertex_correlation_dz(scene, ops, zs, j, kind="d"):
    """Wirtinger derivative in zs[j] of a correlation of vertex-type
    operators (NormalExp/Cos/Sin only), expanded branch by branch."""
    zs = [complex(z) for z in zs]
    total = 0j
    for combo in itertools.product(*[_branches(op) for op in ops]):
        coef = 1.0 + 0j
        gam = []
        for c, g in combo:
            coef *= c
            gam.append(g)
        total += coef * exp_correlation_dz(scene, gam, zs, j, kind=kind)
    return complex(total)


# --- finite-difference oracle (tests only) ------------------------------

def _wirt_stencil(z, h, kind):
    s = -1j if kind == "d" else 1j
    return [(z + h, 0.25 / h), (z - h, -0.25 / h),
            (z + 1j * h, s * 0.25 / h), (z - 1j * h, -s * 0.25 / h)]


def _fd_eval(scene, gam0, zs0, dops, sign_comps, h):
    stencils = []
    for z, op in dops:
        if isinstance(op, (DPhi, DBarPhi)):
            kind = "d" if isinstance(op, DPhi) else "dbar"
            eps = [(h, 0.5 / h), (-h, -0.5 / h)]
            pts = _wirt_stencil(z, h, kind)
            stencils.append([(ce * cp, e, p) for e, ce in eps
                             for p, cp in pts])
        else:
            eps = [(h, 1.0 / h ** 2), (0.0, -2.0 / h ** 2), (-h, 1.0 / h ** 2)]
            lap = [(z + h, 1.0 / h ** 2), (z - h, 1.0 / h ** 2),
                   (z + 1j * h, 1.0 / h ** 2), (z - 1j * h, 1.0 / h ** 2),
                   (z, -4.0 / h ** 2)]
            stencils.append([(0.5 * ce * cp, e, p) for e, ce in eps
                             for p, cp in lap])
    total = 0j
    for picks in itertools.product(*stencils):
        coef = 1.0 + 0j
        gam = list(gam0)
        zs = list(zs0)
        for c, e, p in picks:
            coef *= c
            gam.append(e)
            zs.append(p)
        total += coef * exp_correlation(scene, gam, zs,
                                        sign_components=sign_comps)
    return total


def correlate_fd_oracle(scene, insertions, h=0.02, levels=3):
    """Derivative insertions by Richardson-extrapolated central differences
    applied to exp_correlation. Slow; for cross-checks."""
    if h / 2 ** (levels - 1) < 1e-9:
        raise StepUnderflow("step %g below safe floor" % h)
    exp_pts, exp_ops, _, _, sign_comps, pref = _split(scene, insertions)
    dops = []
    for ins in insertions:
        z, op = ((complex(ins.location), ins.op) if isinstance(ins, Insertion)
                 else (complex(ins[0]), ins[1]))
        if isinstance(op, (DPhi, DBarPhi, GradSquared)):
            dops.append((z, op))
        if isinstance(op, GradSquared):
            pref /= 4.0  # the stencil already carries the full normalization

    branch_lists = [_branches(op) for op in exp_ops]
    total = 0j
    for combo in itertools.product(*branch_lists):
        coef = 1.0 + 0j
        gam = []
        for c, g in combo:
            coef *= c
            gam.append(g)
        if not dops:
            total += coef * exp_correlation(scene, gam, exp_pts,
                                            sign_components=sign_comps)
            continue
        rows = [_fd_eval(scene, gam, exp_pts, dops, sign_comps,
                         h / 2 ** j) for j in range(levels)]
        fac = 4.0
        while len(rows) > 1:
            rows = [(fac * rows[i + 1] - rows[i]) / (fac - 1.0)
                    for i in range(len(rows) - 1)]
            fac *= 4.0
        total += coef * rows[0]
    return complex(pref * total)
