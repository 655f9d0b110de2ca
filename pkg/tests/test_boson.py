import numpy as np
import pytest
from functools import lru_cache

import _ope as ope
from ising_boson.boson import (
    BoundarySign,
    CorrelationResult,
    Cos,
    DBarPhi,
    DPhi,
    GradSquared,
    NormalExp,
    Scene,
    Sin,
    correlate,
    correlate_fd_oracle,
    exp_correlation,
    exp_correlation_dz,
)
from ising_boson.errors import CoincidentPoints, OutsideDomain, StepUnderflow
from ising_boson.geometry import (
    FREE,
    WIRED,
    BoundaryArc,
    BoundaryData,
    Circle,
    CircularDomain,
    HalfPlaneDomain,
    Insertion,
)


def rel(a, b):
    return abs(a - b) / abs(b)


@lru_cache(maxsize=None)
def disk_scene():
    return Scene(CircularDomain(outer=Circle(0j, 1.0), holes=()))


@lru_cache(maxsize=None)
def halfplane_scene():
    return Scene(HalfPlaneDomain())


@lru_cache(maxsize=None)
def wired_annulus_scene():
    dom = CircularDomain(outer=Circle(0j, 1.0), holes=(Circle(0j, 0.5),))
    return Scene(dom)


@lru_cache(maxsize=None)
def mixed_scene():
    dom = CircularDomain(outer=Circle(0j, 1.0), holes=(Circle(0j, 0.5),))
    arcs = [BoundaryArc(0, 2.2, 1.0, WIRED), BoundaryArc(0, 1.0, 2.2, FREE),
            BoundaryArc(1, 0.0, 0.0, WIRED)]
    return Scene(dom, bc=BoundaryData(arcs=arcs, marked_arc=0))


def test_exp_disk_matches_closed_form():
    sc = disk_scene()
    z, w = 0.3 + 0.4j, -0.5 - 0.1j
    g1, g2 = 0.8, -0.6

    def greg(u):
        return np.log(1.0 - abs(u) ** 2)

    G = np.log(abs(1.0 - z * np.conj(w))) - np.log(abs(z - w))
    want = np.exp(0.5 * g1 ** 2 * greg(z) + 0.5 * g2 ** 2 * greg(w)
                  + g1 * g2 * G)
    assert np.isclose(exp_correlation(sc, [g1, g2], [z, w]), want, rtol=1e-12)
    assert np.isclose(exp_correlation(sc, [1.3], [0j]), 1.0, rtol=1e-13)


def test_exp_halfplane_frozen_value():
    sc = halfplane_scene()
    g = 1j / np.sqrt(2.0)
    got = exp_correlation(sc, [g, g], [1j, 2j])
    want = 2.0 ** -0.75 / np.sqrt(3.0)  # exp(-log(3)/2 - log(8)/4)
    assert np.isclose(got, want, rtol=1e-12)
    assert abs(got - 0.3432945) < 1e-6


def test_exp_zero_charge_drops_and_permutes():
    sc = mixed_scene()
    z1, z2, z3 = 0.75 * np.exp(0.4j), 0.8 * np.exp(2.8j), 0.65 * np.exp(-1.2j)
    a = exp_correlation(sc, [0.5, 0.0, -0.3], [z1, z2, z3])
    b = exp_correlation(sc, [0.5, -0.3], [z1, z3])
    c = exp_correlation(sc, [-0.3, 0.5], [z3, z1])
    assert np.isclose(a, b, rtol=1e-12)
    assert np.isclose(b, c, rtol=1e-12)


def test_coincident_and_outside_raise():
    sc = disk_scene()
    with pytest.raises(CoincidentPoints):
        exp_correlation(sc, [0.5, 0.5], [0.2 + 0.2j, 0.2 + 0.2j])
    with pytest.raises(OutsideDomain):
        correlate(sc, [(1.2 + 0j, NormalExp(0.5))])
    with pytest.raises(OutsideDomain):
        correlate(mixed_scene(), [(0.3 + 0j, DPhi())])  # inside the hole


def test_lone_derivative_vanishes_on_wired_disk():
    got = correlate(disk_scene(), [(0.3 + 0.2j, DPhi())])
    assert got.value == 0.0


def test_gradsq_halfplane_closed_form():
    sc = halfplane_scene()
    for z in (1j, 0.7 + 2.5j, -2.0 + 0.4j):
        got = correlate(sc, [(z, GradSquared())]).value
        assert np.isclose(got, -0.5 / z.imag ** 2, rtol=1e-12)


def test_derivative_pair_kernels_disk():
    sc = disk_scene()
    z, w = 0.3 + 0.1j, -0.2 + 0.4j
    dd = correlate(sc, [(z, DPhi()), (w, DPhi())]).value
    assert np.isclose(dd, -0.5 / (z - w) ** 2, rtol=1e-12)
    cross = correlate(sc, [(z, DPhi()), (w, DBarPhi())]).value
    assert np.isclose(cross, -0.5 / (1.0 - z * np.conj(w)) ** 2, rtol=1e-12)
    bb = correlate(sc, [(z, DBarPhi()), (w, DBarPhi())]).value
    assert np.isclose(bb, np.conj(dd), rtol=1e-12)


def test_fd_oracle_gradsq_halfplane():
    sc = halfplane_scene()
    ins = [(0.3 + 1.0j, GradSquared()), (-0.8 + 1.5j, NormalExp(0.6))]
    a = correlate(sc, ins).value
    b = correlate_fd_oracle(sc, ins, h=0.08)
    assert rel(b, a) < 1e-6


def test_fd_oracle_mixed_annulus():
    sc = mixed_scene()
    ins = [Insertion(0.75 * np.exp(0.4j), DPhi()),
           Insertion(0.8 * np.exp(2.8j), Cos(0.7)),
           Insertion(0.65 * np.exp(-1.2j), Sin(0.5))]
    a = correlate(sc, ins).value
    b = correlate_fd_oracle(sc, ins)
    assert rel(b, a) < 1e-5


def test_fd_oracle_wired_annulus():
    sc = wired_annulus_scene()
    v = (0.7 * np.exp(2.6j), NormalExp(0.5))
    gsq = [(0.78 * np.exp(1.2j), GradSquared()), v]
    a = correlate(sc, gsq).value
    assert rel(correlate_fd_oracle(sc, gsq, h=0.04), a) < 1e-5
    dbar = [(0.62 * np.exp(-2.0j), DBarPhi()), v]
    a = correlate(sc, dbar).value
    assert rel(correlate_fd_oracle(sc, dbar, h=0.05), a) < 1e-5
    # two derivative ops at once: the product stencil amplifies roundoff
    # as 1/h^6, so the oracle itself is only good to a few 1e-5 here
    both = [dbar[0], gsq[0], v]
    a = correlate(sc, both).value
    assert rel(correlate_fd_oracle(sc, both, h=0.11), a) < 5e-4


def test_fd_oracle_pure_vertex_is_exact():
    sc = mixed_scene()
    ins = [(0.75 * np.exp(0.4j), Cos(0.7)), (0.65 * np.exp(-1.2j), Sin(0.5)),
           (0.8 * np.exp(2.8j), NormalExp(-0.4))]
    a = correlate(sc, ins).value
    b = correlate_fd_oracle(sc, ins)
    assert rel(b, a) < 1e-13


def test_exp_dz_matches_fd():
    sc = mixed_scene()
    zs = [0.75 * np.exp(0.4j), 0.7 * np.exp(2.6j)]
    gs = [0.6, -0.3]
    h = 1e-3

    def F(z1):
        return exp_correlation(sc, gs, [z1, zs[1]])

    for kind, sgn in (("d", -1j), ("dbar", 1j)):
        def D(step):
            dx = (F(zs[0] + step) - F(zs[0] - step)) / (2 * step)
            dy = (F(zs[0] + 1j * step) - F(zs[0] - 1j * step)) / (2 * step)
            return 0.5 * (dx + sgn * dy)

        fd = (4.0 * D(h / 2) - D(h)) / 3.0
        got = exp_correlation_dz(sc, gs, zs, 0, kind=kind)
        assert rel(got, fd) < 1e-8


def test_boundary_sign_matches_branch_expansion():
    sc = mixed_scene()
    w = 0.5 * np.exp(0.3j)
    z = 0.75 * np.exp(-0.7j)
    got = correlate(sc, [(w, BoundarySign()), (z, Cos(0.8))]).value
    manual = 0.5 * (exp_correlation(sc, [0.8j], [z], sign_components=[1])
                    + exp_correlation(sc, [-0.8j], [z], sign_components=[1]))
    assert np.isclose(got, manual, rtol=1e-12)
    lone = correlate(sc, [(w, BoundarySign())]).value
    assert np.isclose(lone,
                      sc.ensemble.expectation([], [], sign_components=[1]),
                      rtol=1e-12)
    # squared sign drops out
    pair = correlate(sc, [(w, BoundarySign()),
                          (0.5 * np.exp(-1.9j), BoundarySign()),
                          (z, Cos(0.8))]).value
    plain = correlate(sc, [(z, Cos(0.8))]).value
    assert np.isclose(pair, plain, rtol=1e-12)


def test_boundary_sign_placement_errors():
    sc = mixed_scene()
    with pytest.raises(ValueError):
        correlate(sc, [(np.exp(1.6j), BoundarySign())])  # free arc
    with pytest.raises(ValueError):
        correlate(sc, [(0.8 + 0j, BoundarySign())])  # not on the boundary


def test_result_snap_and_provenance():
    res = correlate(halfplane_scene(), [(1j, GradSquared())])
    assert isinstance(res, CorrelationResult)
    assert res.value.imag == 0.0
    for key in ("backend", "raw", "n_branches", "err_est"):
        assert key in res.provenance
    assert res.provenance["n_branches"] == 1


def test_fd_oracle_step_underflow():
    with pytest.raises(StepUnderflow):
        correlate_fd_oracle(disk_scene(), [(0.2 + 0.1j, DPhi())], h=2e-9)


def test_fusion_slopes_disk():
    sc = disk_scene()
    z2, v = 0.25 + 0.15j, -0.4 + 0.2j
    assert abs(ope.vertex_fusion_slope(sc, z2, v) - 2.0) < 0.15
    assert abs(ope.pa_exp_slope(sc, z2, v) - 1.0) < 0.15
    s = ope.pa_pabar_slope(sc, z2, v)
    assert 0.75 < s < 1.6


def test_fusion_slopes_mixed_annulus():
    sc = mixed_scene()
    z2, v = 0.72 * np.exp(0.5j), 0.7 * np.exp(-1.8j)
    assert abs(ope.vertex_fusion_slope(sc, z2, v) - 2.0) < 0.15
    assert abs(ope.pa_exp_slope(sc, z2, v) - 1.0) < 0.15


def test_pa_cos_coefficients():
    g = np.sqrt(0.5)
    for sc, z2, v in ((disk_scene(), 0.2 + 0.1j, -0.45 + 0.2j),
                      (mixed_scene(), 0.72 * np.exp(0.5j),
                       0.7 * np.exp(-1.8j))):
        for got, want in ope.pa_cos_coeffs(sc, z2, v, g):
            assert rel(got, want) < 1e-4


def test_sin_cos_coefficients():
    g = np.sqrt(0.5)
    pairs = ope.sin_cos_coeffs(mixed_scene(), 0.72 * np.exp(0.5j),
                               0.7 * np.exp(-1.8j), g)
    for got, want in pairs:
        assert rel(got, want) < 1e-4


def test_cos_cos_and_sin_sin_coefficients():
    g = np.sqrt(0.5)
    sc = disk_scene()
    z2, v = 0.2 + 0.1j, -0.45 + 0.2j
    for parity in (1, -1):
        for got, want in ope.coscos_sinsin_coeffs(sc, z2, v, g,
                                                  parity=parity):
            assert rel(got, want) < 1e-4


def test_gradsq_exp_coefficient_is_gamma_squared():
    sc = disk_scene()
    got, want = ope.gsq_exp_coeff(sc, 0.2 + 0.1j, -0.45 + 0.2j)
    assert rel(got, want) < 1e-4
    # gamma2 = 0.7, so a unit coefficient would be off by a factor ~2
    assert rel(got, want / 0.49) > 0.5


def test_derivative_pair_coefficients():
    z2 = 0.7 * np.exp(0.9j)
    assert abs(ope.dphi_dphi_coeff(wired_annulus_scene(), z2) + 0.5) < 1e-5
    assert abs(ope.gsq_gsq_coeff(disk_scene(), 0.15 - 0.2j) - 4.0) < 1e-4


def test_fused_remainder_derivative_orders():
    # every z1-derivative of the stripped fusion kernel carries a factor of
    # gamma1, and the mixed second derivative carries gamma1^2
    sc = mixed_scene()
    z2 = 0.8 * np.exp(-0.9j)
    z1 = 0.75 * np.exp(2.9j)
    g2 = 0.6
    h = 0.02

    def fhat(g1, z):
        return abs(z - z2) ** (g1 * g2) * exp_correlation(sc, [g1, g2],
                                                          [z, z2])

    def wirt(g1):
        dx = (fhat(g1, z1 + h) - fhat(g1, z1 - h)) / (2 * h)
        dy = (fhat(g1, z1 + 1j * h) - fhat(g1, z1 - 1j * h)) / (2 * h)
        return 0.5 * (dx - 1j * dy) / fhat(g1, z1)

    def lap(g1):
        s = (fhat(g1, z1 + h) + fhat(g1, z1 - h) + fhat(g1, z1 + 1j * h)
             + fhat(g1, z1 - 1j * h) - 4.0 * fhat(g1, z1))
        return s / h ** 2 / fhat(g1, z1)

    gs = np.array([0.025, 0.05, 0.1])
    s1 = np.polyfit(np.log(gs), np.log([abs(wirt(g)) for g in gs]), 1)[0]
    s2 = np.polyfit(np.log(gs), np.log([abs(lap(g)) for g in gs]), 1)[0]
    assert abs(s1 - 1.0) < 0.25
    assert abs(s2 - 2.0) < 0.25
