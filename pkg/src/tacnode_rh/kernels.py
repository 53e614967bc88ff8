"""Correlation kernels built from the tacnode RH solution, and the 2x2
Hastings-McLeod RH solution.

Notation: ``m_hat = m0 + m3`` and ``m_tilde = m1 - m2 (= m5 - m4)``. The
tacnode kernel uses ``m_hat`` at +tau and -tau; the Duits-Geudens critical
kernel uses ``m_tilde(ix; -tau)`` and ``m_hat(iy; tau)`` at
``r1 = r2 = 1, s1 = s2 = s``.
"""

from __future__ import annotations

import functools
import threading
import weakref
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .airyop import AiryResolvent, QuadratureConfig, build_resolvent, composite_gauss_legendre
from .errors import (ConsistencyError, ConvergenceError, InvalidArgumentError,
                     NearDiagonalError, OnContourError, TruncationError)
from .tacnode import TacnodeParams, TacnodeSystem, derive_constants

NEAR_DIAGONAL = 1e-8
REAL_TOL = 1e-6
_S = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
_FORMS = ("direct", "hat_m", "derivative_identity", "s_integral")


@dataclass(frozen=True)
class KernelValue:
    x: float
    y: float
    value: complex
    form: str
    error: float = 0.0

    def __post_init__(self):
        if self.form not in _FORMS:
            raise InvalidArgumentError(f"unknown kernel form {self.form!r}")


@functools.lru_cache(maxsize=256)
def cached_resolvent(t: float, config: QuadratureConfig | None = None) -> AiryResolvent:
    """Resolvent at ``t``; one instance per (t, config), shared between callers."""
    return build_resolvent(float(t), config)


def _systems(p: TacnodeParams, res_plus, res_minus, config):
    """Systems at tau and -tau. t only sees tau^2, but each side is keyed by its own t."""
    plus = TacnodeSystem(p, res_plus or cached_resolvent(_t_of(p), config))
    pm = p.flipped()
    minus = TacnodeSystem(pm, res_minus or cached_resolvent(_t_of(pm), config))
    return plus, minus


def _t_of(p):
    return derive_constants(p).t


def dg_params(s: float, tau: float) -> TacnodeParams:
    """Tacnode parameters of the critical two-matrix-model kernel."""
    return TacnodeParams(1.0, 1.0, float(s), float(s), float(tau))


def _check_offdiag(x, y):
    if not (np.isfinite(x) and np.isfinite(y)):
        raise InvalidArgumentError("x and y must be finite")
    if abs(x - y) < NEAR_DIAGONAL:
        raise NearDiagonalError(
            f"|x - y| = {abs(x - y):.1e} is below {NEAR_DIAGONAL}; use the diagonal function")


def m_hat(system: TacnodeSystem, z):
    return system.m(0, z) + system.m(3, z)


def m_tilde(system: TacnodeSystem, z, pair: str = "12"):
    """``m1 - m2`` (pair "12") or ``m5 - m4`` (pair "54")."""
    if pair == "12":
        return system.m(1, z) - system.m(2, z)
    if pair == "54":
        return system.m(5, z) - system.m(4, z)
    raise InvalidArgumentError("pair must be '12' or '54'")


# ----------------------------------------------------------------------------
# tacnode kernel

def tacnode_kernel(x: float, y: float, p: TacnodeParams, res_plus: AiryResolvent | None = None,
                   res_minus: AiryResolvent | None = None, form: str = "hat_m",
                   config: QuadratureConfig | None = None) -> KernelValue:
    """K^tac(x, y) for x != y.

    ``form="hat_m"`` contracts ``m_hat(y; -tau)^T S m_hat(x; tau)``;
    ``form="direct"`` solves with the continued Omega_1 matrix instead,
    ``(0 0 1 1) M(y)^{-1} M(x) (1 1 0 0)^T``.
    """
    x, y = float(x), float(y)
    _check_offdiag(x, y)
    plus, minus = _systems(p, res_plus, res_minus, config)
    if form == "hat_m":
        num = m_hat(minus, y) @ _S @ m_hat(plus, x)
    elif form == "direct":
        col = plus.sector_matrix(1, x) @ np.array([1, 1, 0, 0])
        num = np.array([0, 0, 1, 1]) @ np.linalg.solve(plus.sector_matrix(1, y), col)
    else:
        raise InvalidArgumentError(f"tacnode_kernel form must be 'hat_m' or 'direct', got {form!r}")
    return KernelValue(x, y, complex(num / (2j * np.pi * (x - y))), form)


def tacnode_kernel_diag(x: float, p: TacnodeParams, res_plus: AiryResolvent | None = None,
                        res_minus: AiryResolvent | None = None,
                        config: QuadratureConfig | None = None) -> KernelValue:
    """K^tac(x, x), the limit y -> x, using m_hat' = U m_hat."""
    x = float(x)
    plus, minus = _systems(p, res_plus, res_minus, config)
    num = m_hat(minus, x) @ _S @ plus.U(x) @ m_hat(plus, x)
    return KernelValue(x, x, complex(num / (2j * np.pi)), "hat_m")


def tacnode_kernel_derivative_sum(x: float, y: float, p: TacnodeParams,
                                  res_plus: AiryResolvent | None = None,
                                  res_minus: AiryResolvent | None = None,
                                  config: QuadratureConfig | None = None) -> KernelValue:
    """(d/dx + d/dy) K^tac(x, y) as a rank two expression in m_hat."""
    x, y = float(x), float(y)
    plus, minus = _systems(p, res_plus, res_minus, config)
    a, b = m_hat(minus, y), m_hat(plus, x)
    val = (p.r1 * a[0] * b[0] - p.r2 * a[1] * b[1]) / (2 * np.pi)
    return KernelValue(x, y, complex(val), "derivative_identity")


# ----------------------------------------------------------------------------
# Duits-Geudens critical kernel

def _dg_systems(s, tau, res_plus, res_minus, config):
    return _systems(dg_params(s, tau), res_plus, res_minus, config)


def _check_real(value, what):
    if abs(value.imag) > REAL_TOL * max(1.0, abs(value.real)):
        raise ConsistencyError(f"{what} has imaginary part {value.imag:.3e}")


def dg_kernel(x: float, y: float, s: float, tau: float, res_plus: AiryResolvent | None = None,
              res_minus: AiryResolvent | None = None, form: str = "hat_m", pair: str = "12",
              config: QuadratureConfig | None = None) -> KernelValue:
    """K^crit(x, y; s, tau) for x != y.

    ``form="hat_m"`` uses ``m_tilde(ix; -tau)^T S m_hat(iy; tau)`` (with
    ``m_tilde`` from ``pair``); ``form="direct"`` uses
    ``(-1 1 0 0) M(ix)^{-1} M(iy) (1 1 0 0)^T`` with the continued Omega_1
    matrix and a linear solve.
    """
    x, y = float(x), float(y)
    _check_offdiag(x, y)
    plus, minus = _dg_systems(s, tau, res_plus, res_minus, config)
    if form == "hat_m":
        num = m_tilde(minus, 1j * x, pair) @ _S @ m_hat(plus, 1j * y)
    elif form == "direct":
        col = plus.sector_matrix(1, 1j * y) @ np.array([1, 1, 0, 0])
        num = np.array([-1, 1, 0, 0]) @ np.linalg.solve(plus.sector_matrix(1, 1j * x), col)
    else:
        raise InvalidArgumentError(f"dg_kernel form must be 'hat_m' or 'direct', got {form!r}")
    value = complex(num / (2j * np.pi * (x - y)))
    _check_real(value, "K^crit")
    return KernelValue(x, y, value, form)


def dg_kernel_diag(x: float, s: float, tau: float, res_plus: AiryResolvent | None = None,
                   res_minus: AiryResolvent | None = None,
                   config: QuadratureConfig | None = None) -> KernelValue:
    """K^crit(x, x; s, tau), the limit y -> x."""
    x = float(x)
    plus, minus = _dg_systems(s, tau, res_plus, res_minus, config)
    z = 1j * x
    num = (minus.U(z) @ m_tilde(minus, z)) @ _S @ m_hat(plus, z)
    value = complex(num / (2 * np.pi))
    _check_real(value, "K^crit")
    return KernelValue(x, x, value, "hat_m")


def dg_kernel_s_derivative(x: float, y: float, s: float, tau: float,
                           res_plus: AiryResolvent | None = None,
                           res_minus: AiryResolvent | None = None, variant: str = "imag",
                           config: QuadratureConfig | None = None) -> KernelValue:
    """d/ds K^crit(x, y; s, tau).

    ``variant="rank2"``: ``-(1/(pi i)) (mt1 mh1 + mt2 mh2)``;
    ``variant="imag"``: ``-(2/pi) Im(mt1 mh1)``, with ``mt = m_tilde(ix; -tau)``
    and ``mh = m_hat(iy; tau)``.
    """
    x, y = float(x), float(y)
    plus, minus = _dg_systems(s, tau, res_plus, res_minus, config)
    mt, mh = m_tilde(minus, 1j * x), m_hat(plus, 1j * y)
    if variant == "rank2":
        value = complex(-(mt[0] * mh[0] + mt[1] * mh[1]) / (1j * np.pi))
    elif variant == "imag":
        value = complex(-2.0 / np.pi * (mt[0] * mh[0]).imag)
    else:
        raise InvalidArgumentError("variant must be 'rank2' or 'imag'")
    return KernelValue(x, y, value, "derivative_identity")


def dg_kernel_via_integral(x: float, y: float, s: float, tau: float, s_max: float = 8.0,
                           tol: float = 1e-7, config: QuadratureConfig | None = None) -> KernelValue:
    """K^crit as the integral of -d/ds K^crit from ``s`` to infinity.

    The integral over ``[s, s_max]`` uses adaptive Gauss-Kronrod quadrature;
    the tail beyond ``s_max`` is bounded by fitting an exponential to the
    integrand over the last two unit panels. A bound above ``tol`` (or a
    non-decaying integrand) raises :class:`TruncationError`.
    """
    x, y, s = float(x), float(y), float(s)
    if s_max < s + 2:
        raise InvalidArgumentError("s_max must be at least s + 2")

    def g(sp):
        return -dg_kernel_s_derivative(x, y, sp, tau, config=config).value.real

    # the tail bound is checked first, so a non-decaying integrand fails fast
    g0, g1, g2 = abs(g(s_max - 2)), abs(g(s_max - 1)), abs(g(s_max))
    if g2 == 0.0:
        tail = 0.0
    elif g1 == 0.0 or g0 == 0.0 or not (g2 < g1 < g0):
        raise TruncationError(
            f"integrand does not decay near s_max={s_max}: |g| = {g0:.2e}, {g1:.2e}, {g2:.2e}")
    else:
        rate = min(np.log(g0 / g1), np.log(g1 / g2))
        tail = g2 / rate
    if tail > tol:
        raise TruncationError(f"tail beyond s_max={s_max} bounded by {tail:.2e} > {tol:.1e}")
    head, qerr = integrate.quad(g, s, s_max, epsabs=tol / 10, epsrel=1e-10, limit=200)
    return KernelValue(x, y, complex(head), "s_integral", error=float(qerr + tail))


# ----------------------------------------------------------------------------
# 2x2 Hastings-McLeod RH problem

_REAL_CAP = 60.0
_real_grids: "weakref.WeakKeyDictionary[AiryResolvent, tuple]" = weakref.WeakKeyDictionary()
_real_lock = threading.Lock()


def _real_grid(res: AiryResolvent):
    with _real_lock:
        grid = _real_grids.get(res)
        if grid is None:
            cfg = res.config
            rho, w = composite_gauss_legendre(0.0, _REAL_CAP, cfg.panel_nodes, cfg.panel_len)
            grid = (rho, w, res.q(res.t + rho), res.r(res.t + rho))
            _real_grids[res] = grid
        return grid


def _fourier_sums(res, z, sign):
    """Integrals of e^{sign 2i rho z} against Q and R, and of 2i sign rho e^{...} against them."""
    rho, w, qx, rx = _real_grid(res)
    e = np.exp(sign * 2j * rho * z) * w
    terms = np.stack([e * qx, e * rx])
    mag = np.abs(terms).max(axis=0)
    panel = res.config.panel_nodes
    if mag[-3 * panel:].max() > 1e-16 * max(mag.max(), 1.0):
        raise ConvergenceError(f"2x2 contour integral at z={z} not converged within {_REAL_CAP}")
    iq, ir = terms.sum(axis=-1)
    diq, dir_ = (terms * (sign * 2j * rho)).sum(axis=-1)
    return iq, ir, diq, dir_


def _columns(z, res):
    t = res.t
    theta = 4.0 / 3.0 * z**3 + t * z
    dtheta = 4.0 * z * z + t
    e1, e2 = np.exp(-1j * theta), np.exp(1j * theta)
    iq, ir, diq, dir_ = _fourier_sums(res, z, -1)
    v1 = np.array([1 + ir, -iq])
    d1 = e1 * (-1j * dtheta * v1 + np.array([dir_, -diq]))
    iq, ir, diq, dir_ = _fourier_sums(res, z, +1)
    v2 = np.array([-iq, 1 + ir])
    d2 = e2 * (1j * dtheta * v2 + np.array([-diq, dir_]))
    return e1 * v1, e2 * v2, d1, d2


def psi_sector(z: complex) -> str:
    """'right', 'left', 'upper' or 'lower' sector of the 2x2 problem; raises on the rays."""
    z = complex(z)
    tol = 1e-10 * max(1.0, abs(z))
    if abs(z) <= tol:
        raise OnContourError("z is at the origin, where the rays meet")
    for k in (1, 5, 7, 11):
        ray = np.exp(1j * k * np.pi / 6)
        w = z * np.conj(ray)
        if w.real > 0 and abs(w.imag) <= tol:
            raise OnContourError(f"z = {z} lies on the ray arg z = {k}pi/6")
    ang = np.angle(z)
    if abs(ang) < np.pi / 6 or abs(ang) > 5 * np.pi / 6:
        return "right" if abs(ang) < np.pi / 6 else "left"
    return "upper" if ang > 0 else "lower"


def _assemble(sector, c1, c2):
    if sector == "upper":
        c1 = c1 + c2
    elif sector == "lower":
        c2 = c1 + c2
    return np.column_stack([c1, c2])


def psi_2x2(z: complex, t: float | None = None, res: AiryResolvent | None = None,
            sector: str | None = None, config: QuadratureConfig | None = None) -> np.ndarray:
    """Psi(z) for the Hastings-McLeod 2x2 RH problem at ``t``.

    ``sector`` forces a sector formula (its analytic continuation), which is
    how the jumps are checked on the rays themselves.
    """
    res = _resolve(t, res, config)
    z = complex(z)
    sector = sector or psi_sector(z)
    c1, c2, _, _ = _columns(z, res)
    return _assemble(sector, c1, c2)


def psi_2x2_derivative(z: complex, t: float | None = None, res: AiryResolvent | None = None,
                       sector: str | None = None,
                       config: QuadratureConfig | None = None) -> np.ndarray:
    """d/dz Psi(z), differentiating under the integrals."""
    res = _resolve(t, res, config)
    z = complex(z)
    sector = sector or psi_sector(z)
    _, _, d1, d2 = _columns(z, res)
    return _assemble(sector, d1, d2)


def lax_matrix(z: complex, q: float, dq: float, t: float) -> np.ndarray:
    """Coefficient of the z-equation of the Lax pair."""
    a = -4j * z * z - 1j * (t + 2 * q * q)
    return np.array([[a, 4 * z * q + 2j * dq], [4 * z * q - 2j * dq, -a]])


def _resolve(t, res, config):
    if res is None:
        if t is None:
            raise InvalidArgumentError("give t or a resolvent")
        return cached_resolvent(float(t), config)
    if t is not None and abs(res.t - t) > 1e-12 * max(1.0, abs(t)):
        raise InvalidArgumentError(f"resolvent built at t={res.t}, asked for t={t}")
    return res
