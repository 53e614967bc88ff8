import warnings

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tacnode_rh.airy import ai_and_prime
from tacnode_rh.errors import (BranchCutError, InvalidArgumentError, InvalidParameterError,
                               OnContourError, PrecisionWarning)
from tacnode_rh.tacnode import (TacnodeParams, ab_matrices, assemble_M, consistency_defect,
                                derive_constants, f_factor, jump_matrix, m_from_psi,
                                m_inverse, m_solution, monodromy, psi_from_m, sector_of,
                                swap_symmetry_defect, theta, u_matrix)
from tacnode_rh.verify import m2_leading_coefficient, m2_normalized_defect

from conftest import PARAM_SETS, resolvent_at, system_for

ASYM = PARAM_SETS[2]


# ----------------------------------------------------------------------------
# constants and coefficient matrices

def constants_oracle(r1, r2, s1, s2, tau):
    # written out independently with mpmath, via the tau -/+ lambda = r^2 mu relations
    r1, r2, s1, s2, tau = map(mpmath.mpf, (r1, r2, s1, s2, tau))
    n = r1**2 + r2**2
    mu = 2 * tau / n
    lam = tau - r1**2 * mu
    C = mpmath.cbrt(1 / r1**2 + 1 / r2**2)
    log_gamma = mpmath.mpf(8) / 3 * (r1**2 - r2**2) * tau**3 / n**2 - 4 * (r1 * s1 - r2 * s2) * tau / n
    t = 2 * (s1 * r2 + s2 * r1) / (C * r1 * r2) - 4 * tau**2 / (C * n)
    return [float(v) for v in (C, mpmath.exp(log_gamma), lam, mu, t)]


@pytest.mark.parametrize("p", PARAM_SETS)
def test_constants_double_transcription(p):
    k = derive_constants(p)
    expected = constants_oracle(p.r1, p.r2, p.s1, p.s2, p.tau)
    assert np.allclose([k.C, k.gamma, k.lam, k.mu, k.t], expected, rtol=1e-14, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2), st.floats(-1, 1))
def test_constants_equal_parameters(s, tau):
    k = derive_constants(TacnodeParams(1, 1, s, s, tau))
    assert k.C == pytest.approx(2 ** (1 / 3))
    assert k.gamma == pytest.approx(1.0)
    assert k.lam == 0.0
    assert k.mu == pytest.approx(tau)
    assert k.t == pytest.approx(2 ** (2 / 3) * (2 * s - tau**2), abs=1e-13)


def test_tau_zero_constants():
    k = derive_constants(TacnodeParams(1.7, 0.4, 0.3, -1.1, 0.0))
    assert (k.gamma, k.lam, k.mu) == (1.0, 0.0, 0.0)


def test_u_matrix_structure():
    p = ASYM
    sys_ = system_for(p)
    pq = sys_.pq
    z = np.array([0.0, 1.0 + 2.0j, -3.0])
    U = u_matrix(p, pq, z)
    assert U.shape == (3, 4, 4)
    assert np.allclose(np.trace(U, axis1=1, axis2=2), 0, atol=1e-15)
    assert np.allclose(U[:, 0, 2], 1j * p.r1) and np.allclose(U[:, 1, 3], 1j * p.r2)
    assert np.all(U[:, 0, 3] == 0) and np.all(U[:, 1, 2] == 0)
    diff = U[1] - U[0]
    expected = np.zeros((4, 4), complex)
    expected[2, 0] = 1j * p.r1 * z[1]
    expected[3, 1] = -1j * p.r2 * z[1]
    assert np.allclose(diff, expected, atol=1e-14)


def test_u_matrix_rejects_wrong_t():
    other = resolvent_at(0.0).boundary()
    with pytest.raises(InvalidArgumentError):
        u_matrix(ASYM, other, 0.0)


def test_ab_matrices():
    p = ASYM
    pq = system_for(p).pq
    k = derive_constants(p)
    A0, B0 = ab_matrices(p, pq, 0.0)
    A1, B1 = ab_matrices(p, pq, 1.5 - 0.5j)
    assert np.array_equal(A0, A1)
    assert np.allclose(B1 - B0, np.diag([-p.r1**2, p.r2**2]) * (1.5 - 0.5j))
    dq = pq.p - pq.u * pq.q
    assert B0[0, 1] == pytest.approx(-k.C * p.r1**2 * dq)
    assert B0[1, 0] == pytest.approx(-k.C * p.r2**2 * dq)

    p1 = PARAM_SETS[0]
    pq1 = system_for(p1).pq
    A, _ = ab_matrices(p1, pq1, 0.0)
    c2q = derive_constants(p1).C ** 2 * pq1.q
    assert np.allclose(A, [[0, c2q], [-c2q, 0]])


def test_theta_values():
    p = ASYM
    assert theta(p, 2, 1.0) == pytest.approx(2 / 3 * p.r2 + 2 * p.s2)
    assert theta(p, 1, -1.0) == pytest.approx(2 / 3 * p.r1 + 2 * p.s1)
    expected = 2 / 3 * p.r2 * np.exp(3j * np.pi / 4) + 2 * p.s2 * np.exp(1j * np.pi / 4)
    assert abs(theta(p, 2, 1j) - expected) < 1e-15
    with pytest.raises(BranchCutError):
        theta(p, 2, -2.0)
    with pytest.raises(BranchCutError):
        theta(p, 1, 0.5)
    with pytest.raises(InvalidArgumentError):
        theta(p, 3, 1j)


# ----------------------------------------------------------------------------
# F_j

def test_f_collapses_to_airy():
    p = TacnodeParams(0.6, 1.0, 0.3, 0.0, 0.0)
    z = 0.4 - 0.7j
    val, der = f_factor(0, p, z)
    ai, aip = ai_and_prime(z)
    assert val == ai and der == aip
    q = TacnodeParams(1, 1.7, 0, 0.35, 0.2)
    assert abs(f_factor(0, q, 0.0)[0] - ai_and_prime(2 * 0.35 / 1.7 ** (1 / 3))[0]) < 1e-15


@pytest.mark.parametrize("j", range(6))
def test_f_against_mpmath(j):
    p = ASYM
    r, s = (p.r2, p.s2) if j % 2 == 0 else (p.r1, p.s1)
    mu = derive_constants(p).mu
    rot = mpmath.exp(2j * mpmath.pi * (j % 3) / 3)
    z = mpmath.mpc(0.3, 0.8)

    def F(w):
        return rot * mpmath.airyai(rot * (mpmath.mpf(r) ** (mpmath.mpf(2) / 3) * w
                                          + 2 * s / mpmath.mpf(r) ** (mpmath.mpf(1) / 3))) \
            * mpmath.exp(-r * r * mu * w)

    with mpmath.workdps(30):
        exact, dexact = complex(F(z)), complex(mpmath.diff(F, z))
    val, der = f_factor(j, p, complex(z))
    assert abs(val - exact) < 1e-13 * max(1, abs(exact))
    assert abs(der - dexact) < 1e-13 * max(1, abs(dexact))


@pytest.mark.parametrize("j", range(6))
def test_f_ode(j):
    p = ASYM
    r, s = (p.r2, p.s2) if j % 2 == 0 else (p.r1, p.s1)
    mu = derive_constants(p).mu
    z, h = 0.6 - 0.3j, 1e-3
    d = [f_factor(j, p, z + k * h)[1] for k in (-2, -1, 1, 2)]
    f2 = (d[0] - 8 * d[1] + 8 * d[2] - d[3]) / (12 * h)
    f, f1 = f_factor(j, p, z)
    rhs = -2 * r * r * mu * f1 + (r * r * z + 2 * r * s - r**4 * mu**2) * f
    assert abs(f2 - rhs) < 1e-9 * max(1, abs(rhs))


def test_f_index_checked():
    with pytest.raises(InvalidArgumentError):
        f_factor(6, ASYM, 0.0)


# ----------------------------------------------------------------------------
# the six solutions and M

def test_ode_residual_asymmetric():
    s = system_for(ASYM)
    z, h = 1 + 1j, 1e-4
    for j in range(6):
        vals = np.array([s.m(j, z + d * h) for d in (-2, -1, 1, 2)])
        dm = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
        m = s.m(j, z)
        assert np.linalg.norm(dm - s.U(z) @ m) / np.linalg.norm(m) <= 1e-6


def test_solution_derivatives_exact(system):
    z, h = 0.4 + 0.9j, 1e-4
    sol = system.solution(2, z)
    vals = np.array([system.m(2, z + d * h)[:2] for d in (-2, -1, 1, 2)])
    dm = (vals[0] - 8 * vals[1] + 8 * vals[2] - vals[3]) / (12 * h)
    assert abs(dm[0] - sol.d_m1) < 1e-8 * max(1, abs(sol.d_m1))
    assert abs(dm[1] - sol.d_m2) < 1e-8 * max(1, abs(sol.d_m2))
    assert np.array_equal(sol.vector, system.m(2, z))


def test_m2_asymptotics():
    s = system_for(PARAM_SETS[0])
    z = 25 * np.exp(1j * np.pi / 6)
    d = m2_normalized_defect(s, z)
    c = m2_leading_coefficient(s)
    # 1 + O(z^{-1/2}), and the z^{-1/2} coefficient is c
    assert abs(d) < 2 * abs(c) / 5 + 0.01
    assert abs(d - c / np.sqrt(z)) < 1 / abs(z)


@pytest.mark.parametrize("p", PARAM_SETS)
def test_swap_symmetry(p):
    for z in (0.8 + 0.6j, -1.2 - 0.3j):
        assert swap_symmetry_defect(p, z) < 1e-8


def test_consistency_relations(system):
    for z in (1j, 0.5 * np.exp(0.4j), 2 * np.exp(2.2j), 5 * np.exp(-1.9j)):
        a, b = consistency_defect(system.params, system.res, z)
        ms = system.all_m(z)
        scale = np.linalg.norm(ms[0] + ms[3])
        assert np.linalg.norm(a) <= 1e-8 * scale and np.linalg.norm(b) <= 1e-8 * scale


def test_consistency_defect_under_swap():
    p = ASYM
    a = system_for(p).consistency_defect(0.7 + 0.4j)
    b = system_for(p.swapped()).consistency_defect(-0.7 - 0.4j)
    assert abs(a - b) < 1e-13


def test_jump_matrices():
    assert np.array_equal(jump_matrix(0), [[0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1]])
    for k in range(6):
        assert round(np.linalg.det(jump_matrix(k))) == 1
    assert np.array_equal(monodromy(), np.eye(4, dtype=int))
    assert monodromy().dtype.kind == "i"
    with pytest.raises(InvalidArgumentError):
        jump_matrix(6)


def test_M_in_first_upper_sector():
    s = system_for(ASYM)
    ms = s.all_m(1j)
    M = s.M(1j)
    assert np.allclose(M, np.stack([ms[3], ms[0], ms[1], ms[2]], axis=1), rtol=0, atol=0)
    assert np.array_equal(assemble_M(ASYM, s.res, 1j), M)


def test_det_M(system):
    for z in (0.7j, 1.5 * np.exp(2.9j), 0.3 - 0.2j):
        assert abs(np.linalg.det(system.M(z)) - 1) < 1e-8


def test_jump_across_positive_axis(system):
    J = jump_matrix(0)
    on = system.sector_matrix(0, 1.0) - system.sector_matrix(5, 1.0) @ J
    assert np.abs(on).max() < 1e-8
    # off the ray the mismatch is first order in the offset
    for eps in (1e-4, 1e-6):
        off = system.M(np.exp(1j * eps)) - system.M(np.exp(-1j * eps)) @ J
        assert np.abs(off).max() < 20 * eps


def test_inverse_symmetry():
    p = PARAM_SETS[1]
    s = system_for(p)
    Minv = m_inverse(p, s.res, 0.7j)
    assert np.abs(Minv @ s.M(0.7j) - np.eye(4)).max() < 1e-8
    assert abs(np.linalg.det(Minv) - 1) < 1e-8
    tau0 = system_for(PARAM_SETS[0])
    assert tau0.flipped().params == tau0.params


def test_psi_round_trip_and_gamma():
    p = ASYM
    s = system_for(p)
    z = 0.3 + 1.1j
    m = s.m(0, z)
    psi = psi_from_m(p, m[:2], z)
    assert np.allclose(m_from_psi(p, psi, z), m[:2], rtol=1e-13)
    # psi_1 of m^(0) is -sqrt(2 pi) r2^{1/6} times the integral of
    # F_0(z + C(x - t)) Q_t(x): gamma and e^{lambda z} drop out
    k = derive_constants(p)
    assert k.gamma != 1.0
    off, w, q, _ = s.res.ray(0)
    integral = np.sum(w * f_factor(0, p, z + k.C * off)[0] * q)
    expected = -np.sqrt(2 * np.pi) * p.r2 ** (1 / 6) * integral
    assert abs(psi[0] - expected) < 1e-12 * abs(expected)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-2, 2), st.floats(-2, 2))
def test_psi_round_trip_property(x, y, a, b):
    p = ASYM
    z = complex(x, y)
    m12 = np.array([complex(a, b), complex(b, -a)])
    back = m_from_psi(p, psi_from_m(p, m12, z), z)
    assert np.allclose(back, m12, rtol=1e-13, atol=1e-15)


@settings(max_examples=80, deadline=None)
@given(st.floats(0.01, 50), st.floats(0, 2 * np.pi, exclude_max=True))
def test_sector_of_property(rho, arg):
    z = rho * np.exp(1j * arg)
    k = int(arg // (np.pi / 3))
    edge = min(arg - k * np.pi / 3, (k + 1) * np.pi / 3 - arg)
    if edge < 1e-8:
        return
    assert sector_of(z) == k


def test_on_contour_points():
    for z in (0, 2.0, -1.0, np.exp(1j * np.pi / 3), 3 * np.exp(-2j * np.pi / 3)):
        with pytest.raises(OnContourError):
            sector_of(z)
    with pytest.raises(OnContourError):
        system_for(ASYM).M(2.0)


def test_parameter_validation():
    with pytest.raises(InvalidParameterError):
        TacnodeParams(0.0, 1, 0, 0, 0)
    with pytest.raises(InvalidParameterError):
        TacnodeParams(1, 1, float("nan"), 0, 0)
    with pytest.raises(InvalidArgumentError):
        m_solution(7, ASYM, system_for(ASYM).res, 1j)


def test_underflow_warning():
    s = system_for(PARAM_SETS[0])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        s.m(0, 150.0 + 1.0j)
    assert any(issubclass(w.category, PrecisionWarning) for w in caught)
