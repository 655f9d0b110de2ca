"""Dirichlet Green's function, its regular part, harmonic measures of
boundary components and of free arcs, with analytic first/second complex
derivatives.

Backends: closed forms for the upper half-plane model, a disk, and a
concentric annulus; least-squares boundary collocation for general
multiply connected circular domains. All evaluations are pure; solver
objects are immutable after construction.

Derivative conventions (Wirtinger): for the regular part g(z) = H(z,z),
"dz" is the total derivative d/dz of g along the diagonal, and "dzdzbar"
is the total d2/dz dzbar, which is real.
"""

from __future__ import annotations

import numpy as np

from .errors import CoincidentPoints, OutsideDomain, SolverNotConverged
from .geometry import (
    TWO_PI,
    Circle,
    CircularDomain,
    HalfPlaneDomain,
    boundary_distance,
    contains,
)


def _check_inside(domain, z, slop=1e-7):
    if boundary_distance(domain, z) < -slop:
        raise OutsideDomain("point %s outside domain" % z)


def _check_pair(domain, z, w, tol=1e-9):
    _check_inside(domain, z)
    _check_inside(domain, w)
    if abs(z - w) < tol * max(1.0, abs(z), abs(w)):
        raise CoincidentPoints("green evaluation at coincident points")


# ---------------------------------------------------------------------------
# exact arc indicator: harmonic off the arc, 1 on the arc, 0 on the
# complementary arc of the same circle (branch cut rotated onto the arc)


class ArcIndicator:
    def __init__(self, circle, start_angle, end_angle, hole):
        span = (end_angle - start_angle) % TWO_PI
        self.b1 = circle.point(start_angle)
        self.b2 = circle.point(end_angle)
        m = circle.point(start_angle + 0.5 * span)
        phi = np.angle((m - self.b2) / (m - self.b1))
        self.rot = np.exp(-1j * (phi + np.pi))
        # probe slightly inside the domain to orient the sign
        pull = 1.001 if hole else 0.999
        probe = circle.center + pull * (m - circle.center)
        self.sign = 1.0
        self.sign = 1.0 if self.value(probe) > 0 else -1.0

    def value(self, z):
        return self.sign * np.angle((z - self.b2) / (z - self.b1) * self.rot) / np.pi

    def deriv(self, z):
        return self.sign / (2j * np.pi) * (1.0 / (z - self.b2) - 1.0 / (z - self.b1))


# ---------------------------------------------------------------------------
# boundary collocation core: harmonic fits on circular domains


class _Images:
    """First-level reflected charges for Green data log|. - w|.

    With A_k = r_k^2 - (z-c_k)conj(w-c_k), the bracket log|A_k| - log r_0
    (outer) or log|A_k| - log|z-c_k| (hole k) equals log|z-w| exactly on
    circle k, so the remainder handed to the least-squares fit only has
    second-generation reflection singularities and the basis converges fast.
    """

    def __init__(self, domain):
        cs = list(domain.circles())
        self.centers = np.array([c.center for c in cs])
        self.r2 = np.array([c.radius ** 2 for c in cs])
        self.logR0 = np.log(cs[0].radius)
        self.hole_centers = self.centers[1:]

    def _A(self, z, w):
        z = np.asarray(z)
        return self.r2 - (z[..., None] - self.centers) * np.conj(w - self.centers)

    def value(self, z, w):
        v = np.sum(np.log(np.abs(self._A(z, w))), axis=-1) - self.logR0
        if len(self.hole_centers):
            v = v - np.sum(np.log(np.abs(np.asarray(z)[..., None] - self.hole_centers)),
                           axis=-1)
        return v

    def dz(self, z, w):
        t = np.sum(-0.5 * np.conj(w - self.centers) / self._A(z, w), axis=-1)
        if len(self.hole_centers):
            t = t - np.sum(0.5 / (np.asarray(z)[..., None] - self.hole_centers), axis=-1)
        return t

    def dw(self, z, w):
        zc = np.asarray(z)[..., None] - self.centers
        return np.sum(-0.5 * np.conj(zc) / np.conj(self._A(z, w)), axis=-1)

    def dzdwbar(self, z, w):
        return np.sum(-0.5 * self.r2 / self._A(z, w) ** 2, axis=-1)


class _Fit:
    """Harmonic function from fitted coefficients c over the basis."""

    def __init__(self, core, coeffs):
        self.core = core
        self.c = coeffs

    def value(self, z):
        return float(np.real(np.dot(self.c, self.core.basis_column(z))))

    def deriv(self, z):
        return complex(np.dot(self.c, self.core.basis_dz_column(z)))


class CollocationCore:
    """Least-squares harmonic Dirichlet solver with an adaptive degree."""

    def __init__(self, domain, tol=1e-9, p_start=10, p_cap=64):
        self.domain = domain
        self.tol = tol
        self.img = _Images(domain)
        p = p_start
        while True:
            self.P = p
            self._assemble(p)
            if self._probe_residual() < tol:
                break
            if p >= p_cap:
                raise SolverNotConverged(
                    "collocation residual above %.1e at degree cap %d" % (tol, p_cap))
            p = min(2 * p, p_cap)

    # basis layout: [1] + outer: Re/Im ((z-c0)/R0)^p, p=1..P
    #             + per hole: log|z-cm| + Re/Im (Rm/(z-cm))^p
    def basis_column(self, z):
        P = self.P
        dom = self.domain
        cols = [1.0]
        u = (z - dom.outer.center) / dom.outer.radius
        pw = np.power(u, np.arange(1, P + 1))
        for p in range(P):
            cols.append(pw[p].real)
            cols.append(pw[p].imag)
        for h in dom.holes:
            v = h.radius / (z - h.center)
            cols.append(np.log(abs(z - h.center)))
            pw = np.power(v, np.arange(1, P + 1))
            for p in range(P):
                cols.append(pw[p].real)
                cols.append(pw[p].imag)
        return np.array(cols)

    def basis_dz_column(self, z):
        """Wirtinger d/dz of each (real) basis function, as complex numbers."""
        P = self.P
        dom = self.domain
        cols = [0j]
        r0 = dom.outer.radius
        u = (z - dom.outer.center) / r0
        for p in range(1, P + 1):
            f = p * u ** (p - 1) / r0  # d/dz of u^p
            cols.append(0.5 * f)        # Re part
            cols.append(-0.5j * f)      # Im part
        for h in dom.holes:
            cols.append(0.5 / (z - h.center))
            for p in range(1, P + 1):
                f = -p * h.radius ** p / (z - h.center) ** (p + 1)
                cols.append(0.5 * f)
                cols.append(-0.5j * f)
        return np.array(cols)

    def _nodes(self, per_circle, offset):
        pts, comp = [], []
        for ci, circ in enumerate(self.domain.circles()):
            th = (np.arange(per_circle) + offset) * TWO_PI / per_circle
            pts.extend(circ.center + circ.radius * np.exp(1j * th))
            comp.extend([ci] * per_circle)
        return np.array(pts), np.array(comp)

    def _assemble(self, P):
        n_basis = 1 + 2 * P + len(self.domain.holes) * (1 + 2 * P)
        per = max(4 * (2 * P + 1), 32)
        self.nodes, self.node_comp = self._nodes(per, 0.5)
        A = np.array([self.basis_column(z) for z in self.nodes])
        scale = np.max(np.abs(A), axis=0)
        scale[scale == 0] = 1.0
        self._scale = scale
        self._pinv = np.linalg.pinv(A / scale, rcond=1e-13)
        self.n_basis = n_basis

    def fit(self, data_at_nodes):
        c = (self._pinv @ data_at_nodes) / self._scale
        return _Fit(self, c)

    def fit_coeffs(self, data_at_nodes):
        return (self._pinv @ data_at_nodes) / self._scale

    def _probe_residual(self):
        # worst-case smooth data: Green data for interior probe charges plus
        # per-circle indicators, assessed on a finer offset node set
        test_pts, test_comp = self._nodes(2 * len(self.nodes) // (1 + len(self.domain.holes)), 0.25)
        res = 0.0
        for w in self._probe_points():
            data = np.log(np.abs(self.nodes - w)) - self.img.value(self.nodes, w)
            fit = self.fit(data)
            vals = np.array([fit.value(z) for z in test_pts]) + self.img.value(test_pts, w)
            res = max(res, np.max(np.abs(vals - np.log(np.abs(test_pts - w)))))
        for ci in range(1 + len(self.domain.holes)):
            data = (self.node_comp == ci).astype(float)
            fit = self.fit(data)
            vals = np.array([fit.value(z) for z in test_pts])
            res = max(res, np.max(np.abs(vals - (test_comp == ci))))
        return res

    def _probe_points(self):
        dom = self.domain
        pts = [dom.outer.center + 0.45 * dom.outer.radius * np.exp(0.7j)]
        for h in dom.holes:
            d = h.center - dom.outer.center
            dir_ = d / abs(d) if abs(d) > 1e-12 else 1.0
            pts.append(h.center + 1.6 * h.radius * dir_ * np.exp(0.3j))
        keep = [p for p in pts if contains(dom, p, tol=1e-3 * dom.outer.radius)]
        return keep or [dom.outer.center + 0.3 * dom.outer.radius]


# ---------------------------------------------------------------------------
# solver backends


class _SolverBase:
    """Shared arc-measure plumbing; concrete backends supply Green data."""

    def __init__(self, domain, bc=None):
        self.domain = domain
        self.bc = bc
        self._arc_cache = {}

    # --- arc measures: exact indicator plus a smooth correction ---------
    def _arc_parts(self, j):
        if j in self._arc_cache:
            return self._arc_cache[j]
        if self.bc is None:
            raise ValueError("solver built without boundary data; no free arcs")
        arc = self.bc.arcs[self.bc.free_arc_indices[j]]
        circ = self.domain.circles()[arc.component]
        s0 = ArcIndicator(circ, arc.start_angle, arc.end_angle, hole=arc.component > 0)
        corr = self._arc_correction(arc.component, s0)
        self._arc_cache[j] = (s0, corr)
        return s0, corr

    def _arc_correction(self, component, s0):
        core = self._correction_core()
        if core is None:
            return None
        data = np.zeros(len(core.nodes))
        other = core.node_comp != component
        data[other] = -np.array([s0.value(z) for z in core.nodes[other]])
        return core.fit(data)

    def _correction_core(self):
        return None  # simply connected: the indicator is already exact

    def harmonic_measure_arc(self, j, z):
        s0, corr = self._arc_parts(j)
        v = s0.value(z)
        if corr is not None:
            v += corr.value(z)
        return float(v)

    def harmonic_measure_arc_derivs(self, j, z):
        s0, corr = self._arc_parts(j)
        d = s0.deriv(z)
        if corr is not None:
            d += corr.deriv(z)
        return complex(d)

    # --- convenience -----------------------------------------------------
    def green_regular(self, z):
        _check_inside(self.domain, z)
        return self._g_diag(z)

    def green(self, z, w):
        _check_pair(self.domain, z, w)
        return self._green(z, w)

    def green_derivs(self, z, w):
        _check_pair(self.domain, z, w)
        return self._green_derivs(z, w)

    def green_regular_derivs(self, z):
        _check_inside(self.domain, z)
        return self._g_diag_derivs(z)


class HalfPlaneSolver(_SolverBase):
    """Upper half-plane model: G = log|z - conj(w)| - log|z - w|."""

    name = "half-plane"

    def __init__(self, bc=None):
        super().__init__(HalfPlaneDomain(), bc)

    def _green(self, z, w):
        return float(np.log(abs(z - np.conj(w))) - np.log(abs(z - w)))

    def _green_derivs(self, z, w):
        dz = 0.5 * (1.0 / (z - np.conj(w)) - 1.0 / (z - w))
        return {"dz": dz,
                "dzdw": -0.5 / (z - w) ** 2,
                "dzdwbar": 0.5 / (z - np.conj(w)) ** 2}

    def _g_diag(self, z):
        return float(np.log(2.0 * z.imag))

    def _g_diag_derivs(self, z):
        return {"dz": 1.0 / (z - np.conj(z)),
                "dzdzbar": -1.0 / (4.0 * z.imag ** 2)}

    def harmonic_measure(self, i, z):
        return 1.0

    def harmonic_measure_derivs(self, i, z):
        return 0j

    @staticmethod
    def interval_measure(a, b, z):
        """Harmonic measure of the real interval (a, b) at z (Im z > 0)."""
        return float((np.angle(z - b) - np.angle(z - a)) / np.pi)

    @staticmethod
    def interval_measure_derivs(a, b, z):
        return (1.0 / (z - b) - 1.0 / (z - a)) / (2j * np.pi)


class DiskSolver(_SolverBase):
    """Any disk, by similarity to the unit disk."""

    name = "disk"

    def __init__(self, circle=None, bc=None):
        circle = circle or Circle(0j, 1.0)
        super().__init__(CircularDomain(outer=circle), bc)
        self.c = circle.center
        self.R = circle.radius

    def _zeta(self, z):
        return (z - self.c) / self.R

    def _green(self, z, w):
        a, b = self._zeta(z), self._zeta(w)
        return float(np.log(abs(1.0 - a * np.conj(b))) - np.log(abs(a - b)))

    def _green_derivs(self, z, w):
        a, b = self._zeta(z), self._zeta(w)
        bb = np.conj(b)
        dz = (-0.5 * bb / (1.0 - a * bb) - 0.5 / (a - b)) / self.R
        return {"dz": dz,
                "dzdw": -0.5 / (z - w) ** 2,
                "dzdwbar": -0.5 / (self.R ** 2 * (1.0 - a * bb) ** 2)}

    def _g_diag(self, z):
        a = self._zeta(z)
        return float(np.log(1.0 - abs(a) ** 2) + np.log(self.R))

    def _g_diag_derivs(self, z):
        a = self._zeta(z)
        s = 1.0 - abs(a) ** 2
        return {"dz": -np.conj(a) / (s * self.R),
                "dzdzbar": -1.0 / (self.R ** 2 * s ** 2)}

    def harmonic_measure(self, i, z):
        return 1.0

    def harmonic_measure_derivs(self, i, z):
        return 0j


class AnnulusSolver(_SolverBase):
    """Concentric annulus rho < |(z-c)/R| < 1 via the q-product
    P(u) = (1-u) prod (1-q^n u)(1-q^n/u), q = rho^2."""

    name = "annulus"

    def __init__(self, center=0j, r_outer=1.0, r_inner=0.5, bc=None):
        dom = CircularDomain(outer=Circle(center, r_outer),
                             holes=(Circle(center, r_inner),))
        super().__init__(dom, bc)
        self.c = center
        self.R = r_outer
        self.rho = r_inner / r_outer
        self.q = self.rho ** 2
        self.logrho = np.log(self.rho)
        self.nq = max(8, int(np.ceil(np.log(1e-18) / np.log(self.q))))
        self._log_eta = float(np.sum(np.log1p(-self.q ** np.arange(1, self.nq + 1))))
        self._core = None

    def _zeta(self, z):
        return (z - self.c) / self.R

    def _P(self, u):
        n = np.arange(1, self.nq + 1)
        qn = self.q ** n
        return (1.0 - u) * np.prod((1.0 - qn * u) * (1.0 - qn / u))

    def _logabsP(self, u):
        n = np.arange(1, self.nq + 1)
        qn = self.q ** n
        return float(np.log(abs(1.0 - u)) + np.sum(np.log(np.abs(1.0 - qn * u))
                                                   + np.log(np.abs(1.0 - qn / u))))

    def _L(self, u):
        # P'/P
        n = np.arange(1, self.nq + 1)
        qn = self.q ** n
        return -1.0 / (1.0 - u) + np.sum(-qn / (1.0 - qn * u)
                                         + (qn / u ** 2) / (1.0 - qn / u))

    def _Lp(self, u):
        # (P'/P)'
        n = np.arange(1, self.nq + 1)
        qn = self.q ** n
        t1 = -1.0 / (1.0 - u) ** 2
        t2 = np.sum(-qn ** 2 / (1.0 - qn * u) ** 2)
        t3 = np.sum(-2.0 * qn / (u ** 3 * (1.0 - qn / u))
                    - qn ** 2 / (u ** 4 * (1.0 - qn / u) ** 2))
        return t1 + t2 + t3

    def _green(self, z, w):
        a, b = self._zeta(z), self._zeta(w)
        return float(self._logabsP(a * np.conj(b)) - self._logabsP(a / b)
                     - np.log(abs(b))
                     + np.log(abs(a)) * np.log(abs(b)) / self.logrho)

    def _green_derivs(self, z, w):
        a, b = self._zeta(z), self._zeta(w)
        bb = np.conj(b)
        da = (0.5 * self._L(a * bb) * bb - 0.5 * self._L(a / b) / b
              + np.log(abs(b)) / (2.0 * a * self.logrho))
        dadb = (a / (2.0 * b ** 3) * self._Lp(a / b)
                + self._L(a / b) / (2.0 * b ** 2)
                + 1.0 / (4.0 * a * b * self.logrho))
        dadbb = (0.5 * self._L(a * bb) + 0.5 * a * bb * self._Lp(a * bb)
                 + 1.0 / (4.0 * a * bb * self.logrho))
        return {"dz": da / self.R,
                "dzdw": dadb / self.R ** 2,
                "dzdwbar": dadbb / self.R ** 2}

    def _g_diag(self, z):
        a = self._zeta(z)
        t = abs(a) ** 2
        return float(self._logabsP(t) - 2.0 * self._log_eta
                     + np.log(abs(a)) ** 2 / self.logrho + np.log(self.R))

    def _g_diag_derivs(self, z):
        a = self._zeta(z)
        t = abs(a) ** 2
        dz = (np.conj(a) * self._L(t) + np.log(abs(a)) / (a * self.logrho)) / self.R
        dzdzbar = (self._L(t) + t * self._Lp(t)
                   + 1.0 / (2.0 * t * self.logrho)) / self.R ** 2
        return {"dz": dz, "dzdzbar": float(np.real(dzdzbar))}

    def harmonic_measure(self, i, z):
        a = self._zeta(z)
        h_in = np.log(abs(a)) / self.logrho
        return float(h_in if i == 1 else 1.0 - h_in)

    def harmonic_measure_derivs(self, i, z):
        d = 1.0 / (2.0 * self._zeta(z) * self.logrho) / self.R
        return complex(d if i == 1 else -d)

    def _correction_core(self):
        if self._core is None:
            self._core = CollocationCore(self.domain, tol=1e-10)
        return self._core


class CollocationSolver(_SolverBase):
    """General circular domains by least-squares boundary collocation."""

    name = "collocation"

    def __init__(self, domain, bc=None, tol=1e-9, p_start=10, p_cap=64):
        super().__init__(domain, bc)
        self.tol = tol
        self.core = CollocationCore(domain, tol=tol, p_start=p_start, p_cap=p_cap)
        self.img = self.core.img
        self._measures = None

    # H(z,w) = fitted remainder + reflected-image part; symmetrized in (z,w)
    # to make the reported Green function exactly symmetric
    def _coeffs(self, w):
        data = np.log(np.abs(self.core.nodes - w)) - self.img.value(self.core.nodes, w)
        return self.core.fit_coeffs(data)

    def _dcoeffs(self, w):
        # coefficient data is real and harmonic in w, so d/dwbar = conj(d/dw)
        d = -0.5 / (self.core.nodes - w) - self.img.dw(self.core.nodes, w)
        return self.core.fit_coeffs(d)

    def _H(self, z, w):
        return float(np.dot(self._coeffs(w), self.core.basis_column(z))
                     + self.img.value(z, w))

    def _green(self, z, w):
        h = 0.5 * (self._H(z, w) + self._H(w, z))
        return float(h - np.log(abs(z - w)))

    def _green_derivs(self, z, w):
        img = self.img
        cw, cz = self._coeffs(w), self._coeffs(z)
        dcw, dcz = self._dcoeffs(w), self._dcoeffs(z)
        colw = self.core.basis_column(w)
        dcolz = self.core.basis_dz_column(z)
        dcolw = self.core.basis_dz_column(w)
        dz = 0.5 * (np.dot(cw, dcolz) + img.dz(z, w)
                    + np.dot(dcz, colw) + img.dw(w, z)) - 0.5 / (z - w)
        dzdw = 0.5 * (np.dot(dcw, dcolz) + np.dot(dcz, dcolw)) - 0.5 / (z - w) ** 2
        dzdwbar = 0.5 * (np.dot(np.conj(dcw), dcolz) + img.dzdwbar(z, w)
                         + np.dot(dcz, np.conj(dcolw)) + np.conj(img.dzdwbar(w, z)))
        return {"dz": complex(dz), "dzdw": complex(dzdw), "dzdwbar": complex(dzdwbar)}

    def _g_diag(self, z):
        return self._H(z, z)

    def _g_diag_derivs(self, z):
        c = self._coeffs(z)
        dc = self._dcoeffs(z)
        col = self.core.basis_column(z)
        dcol = self.core.basis_dz_column(z)
        dz = np.dot(c, dcol) + np.dot(dc, col) + self.img.dz(z, z) + self.img.dw(z, z)
        dzdzbar = (2.0 * np.real(np.dot(np.conj(dc), dcol))
                   + 2.0 * np.real(self.img.dzdwbar(z, z)))
        return {"dz": complex(dz), "dzdzbar": float(dzdzbar)}

    def _measure_fits(self):
        if self._measures is None:
            fits = []
            for ci in range(1 + len(self.domain.holes)):
                data = (self.core.node_comp == ci).astype(float)
                fits.append(self.core.fit(data))
            self._measures = fits
        return self._measures

    def harmonic_measure(self, i, z):
        return self._measure_fits()[i].value(z)

    def harmonic_measure_derivs(self, i, z):
        return self._measure_fits()[i].deriv(z)

    def _correction_core(self):
        return self.core


def make_solver(domain, bc=None, backend="auto", tol=1e-9):
    """Pick a closed-form backend when the geometry allows, else collocation."""
    if isinstance(domain, HalfPlaneDomain):
        return HalfPlaneSolver(bc=bc)
    if backend == "collocation":
        return CollocationSolver(domain, bc=bc, tol=tol)
    if len(domain.holes) == 0:
        return DiskSolver(domain.outer, bc=bc)
    if len(domain.holes) == 1:
        h = domain.holes[0]
        if abs(h.center - domain.outer.center) < 1e-13 * domain.outer.radius:
            return AnnulusSolver(domain.outer.center, domain.outer.radius,
                                 h.radius, bc=bc)
    return CollocationSolver(domain, bc=bc, tol=tol)
