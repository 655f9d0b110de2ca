"""Multidimensional theta functions with half-integer characteristics.

theta(spec) sums exp((m+nu)' tau (m+nu) + (m+nu).(2z + 2 pi i mu)) over the
integer lattice, mu = M/2, nu = N/2. theta_second_ratio evaluates
d_p d_q theta(0;H) / theta(0;H) on the re-indexed lattice s = 2m + N, where
each term carries the quarter quadratic form exp(s' tau s / 4).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    NotNegativeDefinite,
    TruncationRadiusExceeded,
    VanishingThetaConstant,
)

RADIUS_CAP = 64


@dataclass(frozen=True)
class ThetaSpec:
    tau: np.ndarray
    z: np.ndarray = None
    M: np.ndarray = None
    N: np.ndarray = None

    def __post_init__(self):
        tau = np.atleast_2d(np.asarray(self.tau, dtype=complex))
        d = tau.shape[0]
        object.__setattr__(self, "tau", tau)
        z = np.zeros(d, dtype=complex) if self.z is None else \
            np.atleast_1d(np.asarray(self.z, dtype=complex))
        object.__setattr__(self, "z", z)
        for name in ("M", "N"):
            v = getattr(self, name)
            v = np.zeros(d, dtype=int) if v is None else \
                np.atleast_1d(np.asarray(v, dtype=int))
            object.__setattr__(self, name, v)

    @property
    def d(self):
        return self.tau.shape[0]


def _validated(tau):
    tau = np.atleast_2d(np.asarray(tau, dtype=complex))
    if tau.shape[0] != tau.shape[1]:
        raise ValueError("tau must be square")
    if np.max(np.abs(tau - tau.T)) >= 1e-12:
        raise ValueError("tau must be symmetric")
    lam = float(np.max(np.linalg.eigvalsh(0.5 * (tau.real + tau.real.T))))
    if lam >= -1e-14:
        raise NotNegativeDefinite("Re(tau) must be negative definite")
    return tau, lam


def _radius(lam, xnorm, nu_max, tol, extra=2):
    # |term| <= exp(lam t^2 + 2 xnorm t), t = |m+nu|; solve for the t where
    # the bound crosses tol, then pad by `extra` whole shells
    a = -lam
    L = np.log(max(tol, 1e-300)) - 2.0
    t = (xnorm + np.sqrt(xnorm * xnorm - a * L)) / a
    R = int(np.ceil(t + nu_max)) + extra
    if R > RADIUS_CAP:
        raise TruncationRadiusExceeded(
            "theta lattice radius %d exceeds cap %d" % (R, RADIUS_CAP))
    return R


def _shell(d, r):
    if r == 0:
        return np.zeros((1, d), dtype=int)
    pts = [m for m in itertools.product(range(-r, r + 1), repeat=d)
           if max(abs(c) for c in m) == r]
    return np.array(pts, dtype=int)


class _Kahan:
    """Compensated complex accumulator; shells added in a fixed order."""

    def __init__(self):
        self.s = 0j
        self.c = 0j

    def add(self, x):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t


def _lattice_sums(tau, z, M, N, tol, weight_pq=None, extra=2):
    """Sum the theta terms (and optionally s_p s_q weighted terms)."""
    tau, lam = _validated(tau)
    d = tau.shape[0]
    nu = np.asarray(N, dtype=float) / 2.0
    xnorm = float(np.linalg.norm(np.real(np.asarray(z, dtype=complex))))
    R = _radius(lam, xnorm, float(np.max(np.abs(nu))) if d else 0.0, tol, extra)

    main, wsum, abssum = _Kahan(), _Kahan(), _Kahan()
    lin = 2.0 * np.asarray(z, dtype=complex) + 1j * np.pi * np.asarray(M, dtype=float)
    below = 0
    for r in range(R + 1):
        pts = _shell(d, r) + nu
        expo = np.einsum("ij,jk,ik->i", pts, tau, pts) + pts @ lin
        terms = np.exp(expo)
        main.add(complex(np.sum(terms)))
        abssum.add(float(np.sum(np.abs(terms))))
        if weight_pq is not None:
            p, q = weight_pq
            s = 2.0 * pts
            wsum.add(complex(np.sum(s[:, p] * s[:, q] * terms)))
        shell_mass = float(np.sum(np.abs(terms)))
        if shell_mass < tol:
            below += 1
            if below >= 2:
                break
        else:
            below = 0
    return main.s, wsum.s, float(np.real(abssum.s))


def theta(spec, tol=1e-14):
    """Theta value for the spec; deterministic truncated lattice sum."""
    val, _, _ = _lattice_sums(spec.tau, spec.z, spec.M, spec.N, tol)
    return val


def theta_second_ratio(tau, H, p, q, tol=1e-14):
    """Ratio of the (p,q) second z-derivative of theta at 0 to theta at 0.

    Summed over the shifted lattice s = 2m + N: each term is
    s_p s_q exp(s' tau s / 4 + (pi i/2) s.M), normalized by the same sum
    without the s_p s_q factor.
    """
    M, N = H
    den, num, mass = _lattice_sums(tau, np.zeros(np.atleast_2d(tau).shape[0]),
                                   M, N, tol, weight_pq=(p, q), extra=3)
    if abs(den) < 1e-10 * max(mass, 1e-300):
        raise VanishingThetaConstant(
            "theta constant vanishes for this characteristic")
    return num / den
