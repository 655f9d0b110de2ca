"""Squared Ising correlations through the bosonic dictionary.

The squared scaling-limit correlation of an admissible string of Ising
fields equals a single correlation of the compactified free field: each
field maps to a boson operator times a constant. Requests whose spin or
disorder parity is odd are zero on the Ising side; the result then carries
a diagnostic noting that the boson value would belong to different
boundary conditions, and the boson side is not evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boson import (
    BoundarySign,
    CorrelationResult,
    Cos,
    DBarPhi,
    DPhi,
    GradSquared,
    Sin,
    correlate,
)
from .errors import NotCircleMap, ParityDegenerate
from .geometry import Insertion


@dataclass(frozen=True)
class Sigma:
    pass


@dataclass(frozen=True)
class Mu:
    pass


@dataclass(frozen=True)
class Epsilon:
    pass


@dataclass(frozen=True)
class Psi:
    pass


@dataclass(frozen=True)
class PsiStar:
    pass


@dataclass(frozen=True)
class BoundarySigma:
    """Spin on a wired boundary arc; maps to the winding sign factor."""


SQRT2 = np.sqrt(2.0)

# holomorphic and antiholomorphic scaling weights of the bulk fields
WEIGHTS = {
    Sigma: (1.0 / 16.0, 1.0 / 16.0),
    Mu: (1.0 / 16.0, 1.0 / 16.0),
    Epsilon: (0.5, 0.5),
    Psi: (0.5, 0.0),
    PsiStar: (0.0, 0.5),
}

PARITY_DIAGNOSTIC = ("parity-violating; RHS corresponds to different "
                     "boundary conditions")


def to_boson(op):
    """Constant and boson operator implementing one Ising field."""
    if isinstance(op, Sigma):
        return 1.0 + 0j, Cos(SQRT2 / 2.0)
    if isinstance(op, Mu):
        return 1.0 + 0j, Sin(SQRT2 / 2.0)
    if isinstance(op, Epsilon):
        return -0.5 + 0j, GradSquared()
    if isinstance(op, Psi):
        return 2j * SQRT2, DPhi()
    if isinstance(op, PsiStar):
        return -2j * SQRT2, DBarPhi()
    if isinstance(op, BoundarySigma):
        return 1.0 + 0j, BoundarySign()
    raise TypeError("not an Ising field: %r" % (op,))


def _pairs(insertions):
    out = []
    for ins in insertions:
        if isinstance(ins, Insertion):
            out.append((complex(ins.location), ins.op))
        else:
            out.append((complex(ins[0]), ins[1]))
    return out


def parity_counts(ops):
    """Spin-type and disorder-type insertion counts; both must be even."""
    n_spin = sum(isinstance(op, (Sigma, BoundarySigma, Psi, PsiStar))
                 for op in ops)
    n_disorder = sum(isinstance(op, (Mu, Psi, PsiStar)) for op in ops)
    return n_spin, n_disorder


def ising_correlation_squared(scene, insertions):
    """Squared correlation of Ising fields as one boson correlation."""
    pairs = _pairs(insertions)
    ns, nm = parity_counts([op for _, op in pairs])
    if ns % 2 or nm % 2:
        return CorrelationResult(0j, {"diagnostic": PARITY_DIAGNOSTIC,
                                      "n_spin": ns, "n_disorder": nm})
    fac = 1.0 + 0j
    mapped = []
    for z, op in pairs:
        c, bop = to_boson(op)
        fac *= c
        mapped.append((z, bop))
    res = correlate(scene, mapped)
    prov = dict(res.provenance)
    prov["dictionary_factor"] = fac
    return CorrelationResult(fac * res.value, prov)


def fermion_pair_ratio(scene, z, w, spectators=()):
    """Squared ratio of a fermion-pair insertion against sigma/mu spectators.

    Equals -8 times the ratio of boson correlations with two holomorphic
    derivative insertions added to the mapped spectator string.
    """
    pairs = _pairs(spectators)
    for _, op in pairs:
        if not isinstance(op, (Sigma, Mu)):
            raise TypeError("spectators must be sigma or mu, got %r" % (op,))
    mapped = [(p, to_boson(op)[1]) for p, op in pairs]
    den = correlate(scene, mapped).value
    if abs(den) < 1e-12:
        raise ParityDegenerate("spectator correlation vanishes; the pair "
                               "ratio is undefined")
    num = correlate(scene, mapped + [(complex(z), DPhi()),
                                     (complex(w), DPhi())]).value
    return complex(-8.0 * num / den)


def product_prescriptions(scene, z, kind, spectators=()):
    """Squared-product shortcuts evaluated as one boson correlation.

    kind "fermion_pair": <psi_z O><psi*_z O>, via 2 :sin(sqrt(2) Phi(z)):,
    defined when the spectator string O has odd spin and disorder parities.
    kind "energy": <eps_z O><O>, via :cos(sqrt(2) Phi(z)):, defined when
    both spectator parities are even. Off-parity requests return 0 with
    the standard diagnostic.
    """
    pairs = _pairs(spectators)
    for _, op in pairs:
        if not isinstance(op, (Sigma, Mu, BoundarySigma)):
            raise TypeError("spectators must be sigma, mu or boundary "
                            "spins, got %r" % (op,))
    ns, nm = parity_counts([op for _, op in pairs])
    mapped = [(p, to_boson(op)[1]) for p, op in pairs]
    if kind == "fermion_pair":
        if ns % 2 == 0 or nm % 2 == 0:
            return CorrelationResult(0j, {"diagnostic": PARITY_DIAGNOSTIC,
                                          "prescription": kind})
        res = correlate(scene, [(complex(z), Sin(SQRT2))] + mapped)
        c = 2.0
    elif kind == "energy":
        if ns % 2 or nm % 2:
            return CorrelationResult(0j, {"diagnostic": PARITY_DIAGNOSTIC,
                                          "prescription": kind})
        res = correlate(scene, [(complex(z), Cos(SQRT2))] + mapped)
        c = 1.0
    else:
        raise ValueError("kind must be 'fermion_pair' or 'energy'")
    prov = dict(res.provenance)
    prov["prescription"] = kind
    return CorrelationResult(c * res.value, prov)


def sigma_correlation(scene, insertions):
    """Positive branch of the square root, all-sigma scenes only."""
    pairs = _pairs(insertions)
    for _, op in pairs:
        if not isinstance(op, Sigma):
            raise ValueError("square root is exposed only for all-sigma "
                             "scenes; fields are defined up to sign")
    sq = ising_correlation_squared(scene, pairs)
    return float(np.sqrt(sq.value.real))


# --- conformal transport -------------------------------------------------

@dataclass(frozen=True)
class Mobius:
    a: complex
    b: complex
    c: complex
    d: complex

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def deriv(self, z):
        det = self.a * self.d - self.b * self.c
        return det / (self.c * z + self.d) ** 2


def as_mobius(map_):
    if isinstance(map_, Mobius):
        if abs(map_.a * map_.d - map_.b * map_.c) < 1e-15:
            raise NotCircleMap("degenerate coefficient matrix")
        return map_
    if isinstance(map_, (int, float)) and not isinstance(map_, bool):
        if map_ <= 0:
            raise NotCircleMap("scaling factor must be positive")
        return Mobius(complex(map_), 0j, 0j, 1.0 + 0j)
    raise NotCircleMap("map must be a Mobius transform or a positive "
                       "scaling factor")


def covariance_factor(map_, insertions, squared=True):
    """Product of derivative weights relating source and image values."""
    m = as_mobius(map_)
    s = 2.0 if squared else 1.0
    fac = 1.0 + 0j
    for z, op in _pairs(insertions):
        if type(op) not in WEIGHTS:
            raise ValueError("no covariance weight for %r" % (op,))
        d, db = WEIGHTS[type(op)]
        w = m.deriv(complex(z))
        fac *= w ** (s * d) * np.conj(w) ** (s * db)
    return complex(fac)


def conformal_transport(value, map_, insertions, squared=True):
    """Push a correlation through a circle-preserving map.

    value is the (squared, by default) correlation of the given insertions
    in the source domain; the return value is the correlation of the same
    fields at the image points in the image domain.
    """
    return complex(value / covariance_factor(map_, insertions, squared))
