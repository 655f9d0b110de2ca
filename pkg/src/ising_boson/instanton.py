"""Harmonic-jump component of the compactified field.

Every realization is a lattice-labelled harmonic function
xi = pin + (alpha/2) (sum_i s_i h_i + sum_j shat_j hhat_j), alpha = sqrt(2) pi,
with s_i even (odd on entirely-free components) and shat_j = +-1. Expectations
are Gibbs-weighted lattice sums: exact enumeration of the sign sector,
truncated enumeration of the integer sector with a Gaussian tail bound.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import TruncationExceeded
from .geometry import FREE
from .period import assemble

ALPHA = np.sqrt(2.0) * np.pi

S_CAP = 64
MAX_SIGN_ARCS = 20


@dataclass(frozen=True)
class InstantonConfig:
    s: tuple
    shat: tuple = ()


class ConfigTable:
    """One enumeration of configurations with compatible weight vectors.

    weights[c] = exp(s'Qs + s'B shat + shat'Qhat shat + sum_i gamma_i xi_c(z_i))
    including the config-independent pin factor.
    """

    def __init__(self, ensemble, S, Shat, weights):
        self.ensemble = ensemble
        self.S = S
        self.Shat = Shat
        self.weights = weights

    def sign_vector(self, components):
        """Product over components of the per-config boundary spin sign."""
        ens = self.ensemble
        n = np.full(len(self.S), len(components) * ens.pin_shift, dtype=int)
        for c in components:
            if ens.flag_of.get(c):
                raise ValueError("boundary sign on an entirely free component")
            if c in ens.basis:
                j = ens.basis.index(c)
                n = n + self.S[:, j] // 2
        return np.where(n % 2 == 0, 1.0, -1.0)

    def grad_xi(self, z, kind="d"):
        """Per-config Wirtinger derivative of xi at z; kind 'd' or 'dbar'."""
        ens = self.ensemble
        dh = np.array([ens.solver.harmonic_measure_derivs(c, z) for c in ens.basis])
        dhat = np.array([ens.solver.harmonic_measure_arc_derivs(j, z)
                         for j in range(ens.k)])
        g = 0.5 * ALPHA * (self.S @ dh + self.Shat @ dhat) if ens.g + ens.k else \
            np.zeros(len(self.S), dtype=complex)
        g = g + ens.pin_grad(z)
        return np.conj(g) if kind == "dbar" else g


class InstantonEnsemble:
    def __init__(self, solver, period=None, tail_target=1e-14, pin_shift=0):
        if solver.bc is None:
            raise ValueError("ensemble needs boundary data")
        self.solver = solver
        self.bc = solver.bc
        self.domain = solver.domain
        if len(self.bc.free_arc_indices) > MAX_SIGN_ARCS:
            raise ValueError("too many sign arcs (%d > %d)"
                             % (len(self.bc.free_arc_indices), MAX_SIGN_ARCS))
        self.period = period if period is not None else assemble(solver)
        self.basis = list(self.period.basis_components)
        self.g = len(self.basis)
        self.k = len(self.period.free_components)
        self.tail_target = tail_target
        self.pin_shift = int(pin_shift)

        comps_sorted = sorted({a.component for a in self.bc.arcs})
        self.flag_of = dict(zip(comps_sorted, self.bc.component_flags))
        self.N = np.array([self.flag_of[c] for c in self.basis], dtype=int)

        marked = self.bc.arcs[self.bc.marked_arc]
        self.pin_component = None
        if marked.condition == FREE:
            if marked.span() > 0.0:
                raise ValueError("marked arc is free with endpoints; mark a "
                                 "wired arc or an entirely free component")
            self.pin_component = marked.component

        if self.g:
            lam = float(np.max(np.linalg.eigvalsh(self.period.Q)))
            self._a = -lam
            self._b0 = float(np.max(np.sum(np.abs(self.period.B), axis=1))) \
                if self.k else 0.0
        self._shat = np.array(list(itertools.product((-1, 1), repeat=self.k)),
                              dtype=int) if self.k else np.zeros((1, 0), dtype=int)
        self._cache = {}
        self._Z = None

    # --- pin -------------------------------------------------------------
    def pin_value(self, z):
        v = ALPHA * self.pin_shift
        if self.pin_component is not None:
            v += 0.5 * ALPHA * self.solver.harmonic_measure(self.pin_component, z)
        return v

    def pin_grad(self, z):
        if self.pin_component is None:
            return 0j
        return 0.5 * ALPHA * self.solver.harmonic_measure_derivs(self.pin_component, z)

    # --- configuration lattice -------------------------------------------
    def _s_radius(self, lin_budget):
        if self.g == 0:
            return 0
        L = np.log(self.tail_target) - 4.0
        b = (self._b0 + lin_budget) * np.sqrt(self.g)
        t = (b + np.sqrt(b * b - self._a * L)) / self._a
        S_max = int(np.ceil(t)) + 2
        if S_max > S_CAP:
            raise TruncationExceeded(
                "winding radius %d exceeds cap %d" % (S_max, S_CAP))
        return S_max

    def _enumerate(self, S_max):
        if S_max in self._cache:
            return self._cache[S_max]
        if self.g:
            axes = []
            for Ni in self.N:
                K = int(np.ceil((S_max - Ni) / 2.0)) + 1
                axes.append(Ni + 2 * np.arange(-K, K + 1))
            grids = np.meshgrid(*axes, indexing="ij")
            S = np.stack([gr.ravel() for gr in grids], axis=-1)
        else:
            S = np.zeros((1, 0), dtype=int)
        ns, nh = len(S), len(self._shat)
        S_full = np.repeat(S, nh, axis=0)
        Shat_full = np.tile(self._shat, (ns, 1))
        logw = np.zeros(len(S_full))
        if self.g:
            logw += np.einsum("ij,jk,ik->i", S_full, self.period.Q, S_full)
        if self.k:
            if self.g:
                logw += np.einsum("ij,jk,ik->i", S_full, self.period.B, Shat_full)
            logw += np.einsum("ij,jk,ik->i", Shat_full, self.period.Qhat_off,
                              Shat_full)
        self._cache[S_max] = (S_full, Shat_full, logw)
        return self._cache[S_max]

    @property
    def Z(self):
        if self._Z is None:
            _, _, logw = self._enumerate(self._s_radius(0.0))
            self._Z = float(np.sum(np.exp(logw)))
        return self._Z

    # --- evaluation --------------------------------------------------------
    def xi_eval(self, config, z):
        v = self.pin_value(z)
        for c, s in zip(self.basis, config.s):
            v += 0.5 * ALPHA * s * self.solver.harmonic_measure(c, z)
        for j, sh in enumerate(config.shat):
            v += 0.5 * ALPHA * sh * self.solver.harmonic_measure_arc(j, z)
        return float(v)

    def xi_grad(self, config, z):
        v = self.pin_grad(z)
        for c, s in zip(self.basis, config.s):
            v += 0.5 * ALPHA * s * self.solver.harmonic_measure_derivs(c, z)
        for j, sh in enumerate(config.shat):
            v += 0.5 * ALPHA * sh * self.solver.harmonic_measure_arc_derivs(j, z)
        return complex(v)

    def table(self, gammas, zs):
        """Enumerate configs with weights including the exp(gamma xi) factor."""
        gammas = np.asarray(gammas, dtype=complex)
        zs = np.asarray(zs, dtype=complex)
        v = np.zeros(self.g, dtype=complex)
        for j, c in enumerate(self.basis):
            hj = np.array([self.solver.harmonic_measure(c, z) for z in zs])
            v[j] = 0.5 * ALPHA * np.dot(gammas, hj)
        vhat = np.zeros(self.k, dtype=complex)
        for j in range(self.k):
            hh = np.array([self.solver.harmonic_measure_arc(j, z) for z in zs])
            vhat[j] = 0.5 * ALPHA * np.dot(gammas, hh)
        pin = sum(g * self.pin_value(z) for g, z in zip(gammas, zs))

        budget = float(np.max(np.abs(np.real(v)))) if self.g else 0.0
        S, Shat, logw = self._enumerate(self._s_radius(budget))
        expo = logw.astype(complex) + pin
        if self.g:
            expo = expo + S @ v
        if self.k:
            expo = expo + Shat @ vhat
        return ConfigTable(self, S, Shat, np.exp(expo))

    def expectation(self, gammas, zs, moments=(), sign_components=()):
        """E[ prod e^(gamma_i xi(z_i)) * prod (d or dbar xi at moment points)
        * prod boundary signs ], normalized by Z."""
        tab = self.table(gammas, zs)
        acc = tab.weights
        if sign_components:
            acc = acc * tab.sign_vector(sign_components)
        for z, kind in moments:
            acc = acc * tab.grad_xi(z, kind)
        return complex(np.sum(acc) / self.Z)
