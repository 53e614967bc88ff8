import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tacnode_rh.airy import ai_and_prime
from tacnode_rh.airyop import (QuadratureConfig, airy_kernel, boundary_values, build_resolvent,
                               composite_gauss_legendre, p_at, q_at, r_at, r_divided, r_kernel)
from tacnode_rh.errors import IllConditionedError, InvalidArgumentError
from tacnode_rh.painleve import hm_ode_oracle

from conftest import resolvent_at


def test_composite_gauss_legendre_integrates_polynomials():
    x, w = composite_gauss_legendre(-1.0, 2.5, 5, 1.0)
    assert x.size == 20
    assert abs(w.sum() - 3.5) < 1e-14
    assert abs(np.sum(w * x**9) - (2.5**10 - 1) / 10) < 1e-10


def test_airy_kernel_diagonal_limit():
    x = np.array([0.3, -1.2 + 0.5j])
    diag = np.diag(airy_kernel(x, x))
    ai, aip = ai_and_prime(x)
    assert np.allclose(diag, aip**2 - x * ai**2, rtol=1e-13)
    near = airy_kernel(x + 2e-4, x)
    far = airy_kernel(x + 2e-3, x)
    assert np.allclose(np.diag(near), np.diag(far), rtol=1e-2)


def test_airy_kernel_matches_mpmath():
    x, y = 0.4 + 0.3j, -0.8
    with mpmath.workdps(30):
        num = (mpmath.airyai(x) * mpmath.airyai(y, 1) - mpmath.airyai(x, 1) * mpmath.airyai(y))
        exact = complex(num / (x - y))
    assert abs(airy_kernel([x], [y])[0, 0] - exact) < 1e-14


def neumann_bound(t):
    # ||K_t|| on L2(t, oo) is at most the Hilbert-Schmidt norm; Q - Ai = sum of K^n Ai
    with mpmath.workdps(20):
        hs2 = mpmath.quad(lambda x: (x - t) * (mpmath.airyai(x, 1) ** 2 - x * mpmath.airyai(x) ** 2),
                          [t, t + 5, mpmath.inf])
    return float(mpmath.sqrt(hs2))


def test_large_t_is_airy():
    res = resolvent_at(8.0)
    assert neumann_bound(8.0) < 1e-6
    ai, _ = ai_and_prime(res.nodes.astype(complex))
    assert np.max(np.abs(res.q_vec - ai.real)) <= 1e-10
    quad = boundary_values(res)
    a8, ap8 = ai_and_prime(8.0)
    assert abs(quad.q - a8.real) < 1e-10 and abs(quad.p - ap8.real) < 1e-10


def test_q_at_zero_against_shooting():
    res = resolvent_at(0.0)
    assert abs(res.q(0.0) - hm_ode_oracle(0.0).q) < 1e-9
    assert abs(res.q(0.0) - 0.36706) < 1e-5


def test_p_at_t_against_shooting():
    for t in (-3.0, 1.0):
        assert abs(resolvent_at(t).boundary().p - hm_ode_oracle(t).p) < 1e-8


@pytest.mark.parametrize("t", [-4.0, 0.0, 3.0])
def test_node_doubling(t):
    a = build_resolvent(t)
    b = build_resolvent(t, QuadratureConfig().refined())
    assert abs(a.q(t) - b.q(t)) <= 1e-10
    assert a.est_error <= 1e-10


def test_interpolation_reproduces_nodes():
    res = resolvent_at(-2.0)
    idx = [0, 7, 50, 200]
    x = res.nodes[idx]
    assert np.allclose(res.q(x), res.q_vec[idx], rtol=1e-13, atol=1e-300)
    assert np.allclose(res.p(x), res.p_vec[idx], rtol=1e-13, atol=1e-300)
    assert np.allclose(res.r(x), res.r_vec[idx], rtol=1e-12, atol=1e-300)


def test_asymptotics_along_positive_axis():
    res = resolvent_at(0.0)
    ai20, ap20 = ai_and_prime(20.0)
    ai40, ap40 = ai_and_prime(40.0)
    dq20, dq40 = abs(res.q(20.0) / ai20 - 1), abs(res.q(40.0) / ai40 - 1)
    dp20, dp40 = abs(res.p(20.0) / ap20 - 1), abs(res.p(40.0) / ap40 - 1)
    # x^{1/2} (Q/Ai - 1) and x (P/Ai' - 1) stay bounded
    assert dq20 < 20**-0.5 and np.sqrt(40) * dq40 < 1.2 * np.sqrt(20) * dq20
    assert dp20 < 20**-1 and 40 * dp40 < 1.2 * 20 * dp20
    bound = 20**-0.75 * np.exp(-2 / 3 * 20**1.5)
    assert abs(res.r(20.0)) < 10 * bound


def test_off_axis_envelope():
    res = resolvent_at(0.0)
    z = 10 * np.exp(2j * np.pi / 3)
    val = abs(res.q(z))
    assert np.isfinite(val)
    ratio = np.log(val) / (2 / 3 * 10**1.5)
    assert 0.8 < ratio < 1.05


def test_r_at_t_is_u_and_divided_difference():
    res = resolvent_at(-1.5)
    b = res.boundary()
    assert r_at(res, res.t) == pytest.approx(b.u, abs=1e-15)
    z = res.t + 2.0
    assert abs(r_at(res, z) - (q_at(res, z) * b.p - p_at(res, z) * b.q) / 2.0) < 1e-12
    assert abs(r_divided(res, z) - r_at(res, z)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_resolvent_kernel_symmetric(a, b):
    res = resolvent_at(-1.0)
    x, y = complex(a, 0.2), complex(b, -0.5)
    if abs(x - y) < 1e-2:
        return
    assert abs(r_kernel(res, x, y) - r_kernel(res, y, x)) < 1e-12 * max(1, abs(r_kernel(res, x, y)))


def test_v_definition():
    b = resolvent_at(-2.0).boundary()
    assert b.v == 0.5 * (b.u * b.u - b.q * b.q)


def test_config_validation():
    with pytest.raises(InvalidArgumentError):
        QuadratureConfig(panel_nodes=1)
    with pytest.raises(InvalidArgumentError):
        QuadratureConfig(ray_cap=float("inf"))
    with pytest.raises(InvalidArgumentError):
        QuadratureConfig(panel_len=-1.0)
    with pytest.raises(InvalidArgumentError):
        build_resolvent(float("nan"))
    assert QuadratureConfig().refined(3).panel_nodes == 75


def test_deep_negative_t_is_refused():
    with pytest.raises(IllConditionedError):
        build_resolvent(-10.0)
