import numpy as np
import pytest

from ising_boson.errors import (
    NotNegativeDefinite,
    TruncationRadiusExceeded,
    VanishingThetaConstant,
)
from ising_boson.theta import ThetaSpec, theta, theta_second_ratio


def random_tau(d, rng, scale=1.0):
    A = rng.normal(size=(d, d))
    re = -(A @ A.T + d * np.eye(d)) * scale / d
    S = rng.normal(size=(d, d)) * 0.3
    return re + 1j * (S + S.T)


def naive_theta(tau, z, M, N, R=12):
    tau = np.atleast_2d(tau)
    d = tau.shape[0]
    nu = np.asarray(N) / 2.0
    total = 0j
    grids = np.meshgrid(*([np.arange(-R, R + 1)] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1) + nu
    lin = 2.0 * np.asarray(z, dtype=complex) + 1j * np.pi * np.asarray(M, dtype=float)
    expo = np.einsum("ij,jk,ik->i", pts, tau, pts) + pts @ lin
    return np.sum(np.exp(expo))


def test_scalar_gaussian_sum():
    spec = ThetaSpec(tau=np.array([[-np.pi]]))
    val = theta(spec)
    assert np.isclose(val.real, 1.0864348112133080, atol=1e-13)
    assert abs(val.imag) < 1e-15
    # pi^(1/4)/Gamma(3/4), classical closed form of sum exp(-pi m^2)
    from math import gamma, pi
    assert np.isclose(val.real, pi ** 0.25 / gamma(0.75), atol=1e-13)


def test_matches_naive_double_sum():
    rng = np.random.default_rng(2)
    for d in (1, 2, 3):
        tau = random_tau(d, rng)
        z = rng.normal(size=d) * 0.3 + 1j * rng.normal(size=d) * 0.3
        for M, N in ((np.zeros(d, int), np.zeros(d, int)),
                     (rng.integers(0, 2, d), rng.integers(0, 2, d))):
            spec = ThetaSpec(tau=tau, z=z, M=M, N=N)
            assert np.isclose(theta(spec), naive_theta(tau, z, M, N), rtol=1e-12)


def test_quasi_periodicity_pi_i():
    rng = np.random.default_rng(5)
    for d in (1, 2, 4):
        tau = random_tau(d, rng)
        z = rng.normal(size=d) * 0.4 + 1j * rng.normal(size=d) * 0.4
        M = rng.integers(0, 2, d)
        N = rng.integers(0, 2, d)
        base = theta(ThetaSpec(tau=tau, z=z, M=M, N=N))
        for j in range(d):
            zj = z.copy()
            zj[j] += 1j * np.pi
            shifted = theta(ThetaSpec(tau=tau, z=zj, M=M, N=N))
            assert abs(shifted - (-1.0) ** N[j] * base) < 1e-12 * max(1, abs(base))


def test_quasi_periodicity_tau_column():
    rng = np.random.default_rng(7)
    for d in (1, 3):
        tau = random_tau(d, rng)
        z = rng.normal(size=d) * 0.3 + 1j * rng.normal(size=d) * 0.3
        M = rng.integers(0, 2, d)
        N = rng.integers(0, 2, d)
        base = theta(ThetaSpec(tau=tau, z=z, M=M, N=N))
        for k in range(d):
            shifted = theta(ThetaSpec(tau=tau, z=z + tau[:, k], M=M, N=N))
            factor = (-1.0) ** M[k] * np.exp(-2.0 * z[k] - tau[k, k])
            assert abs(shifted - factor * base) < 1e-10 * max(1, abs(base))


def test_even_in_z_for_zero_characteristic():
    rng = np.random.default_rng(11)
    tau = random_tau(2, rng)
    z = rng.normal(size=2) * 0.5 + 1j * rng.normal(size=2) * 0.5
    a = theta(ThetaSpec(tau=tau, z=z))
    b = theta(ThetaSpec(tau=tau, z=-z))
    assert np.isclose(a, b, rtol=1e-13)


def test_parity_under_characteristic():
    # theta(-z; H) = (-1)^(M.N) theta(z; H)
    rng = np.random.default_rng(13)
    tau = random_tau(2, rng)
    z = rng.normal(size=2) * 0.4 + 1j * rng.normal(size=2) * 0.4
    for M, N in (([1, 0], [1, 0]), ([1, 1], [1, 1]), ([1, 0], [0, 1])):
        sgn = (-1.0) ** np.dot(M, N)
        a = theta(ThetaSpec(tau=tau, z=z, M=M, N=N))
        b = theta(ThetaSpec(tau=tau, z=-z, M=M, N=N))
        assert abs(b - sgn * a) < 1e-12 * max(1.0, abs(a))


def test_truncation_insensitive_to_tol():
    rng = np.random.default_rng(17)
    tau = random_tau(3, rng)
    z = rng.normal(size=3) * 0.3
    a = theta(ThetaSpec(tau=tau, z=z), tol=1e-10)
    b = theta(ThetaSpec(tau=tau, z=z), tol=1e-16)
    assert abs(a - b) < 1e-10 * max(1, abs(b))


def test_second_ratio_scalar_odd_lattice():
    tau = np.array([[-np.pi]])
    got = theta_second_ratio(tau, (np.array([0]), np.array([1])), 0, 0)
    s = np.arange(-41, 42, 2)
    w = np.exp(-np.pi * s.astype(float) ** 2 / 4.0)
    want = np.sum(s * s * w) / np.sum(w)
    assert np.isclose(got.real, want, rtol=1e-13)
    assert want > 1.0 and want < 1.02


def test_second_ratio_symmetric_and_fd():
    rng = np.random.default_rng(19)
    tau = random_tau(2, rng)
    M = np.array([0, 1])
    N = np.array([1, 0])
    r01 = theta_second_ratio(tau, (M, N), 0, 1)
    r10 = theta_second_ratio(tau, (M, N), 1, 0)
    assert np.isclose(r01, r10, rtol=1e-13)

    h = 1e-4
    def th(z):
        return theta(ThetaSpec(tau=tau, z=z, M=M, N=N))
    e0, e1 = np.eye(2)
    fd = (th(h * (e0 + e1)) + th(-h * (e0 + e1))
          - th(h * (e0 - e1)) - th(-h * (e0 - e1))) / (4 * h * h)
    assert np.isclose(r01, fd / th(np.zeros(2)), rtol=1e-6)
    r00 = theta_second_ratio(tau, (M, N), 0, 0)
    fd00 = (th(h * e0) - 2 * th(np.zeros(2)) + th(-h * e0)) / (h * h)
    assert np.isclose(r00, fd00 / th(np.zeros(2)), rtol=1e-6)


def test_odd_characteristic_vanishes():
    tau = np.array([[-np.pi]])
    with pytest.raises(VanishingThetaConstant):
        theta_second_ratio(tau, (np.array([1]), np.array([1])), 0, 0)


def test_error_conditions():
    with pytest.raises(NotNegativeDefinite):
        theta(ThetaSpec(tau=np.array([[0.5 + 0j]])))
    with pytest.raises(ValueError):
        theta(ThetaSpec(tau=np.array([[-1.0, 0.3], [0.1, -1.0]])))
    with pytest.raises(TruncationRadiusExceeded):
        theta(ThetaSpec(tau=np.array([[-1e-5 + 0j]])))
