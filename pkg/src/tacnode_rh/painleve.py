"""Hastings-McLeod solution of Painleve II, q'' = t q + 2 q^3.

Two independent routes are provided: the Fredholm route reads (q, p, u, v)
off an :class:`~tacnode_rh.airyop.AiryResolvent`, and the shooting route
integrates the ODE downward from Airy initial data.
"""

from __future__ import annotations

import functools
import threading

import mpmath
import numpy as np
from scipy.integrate import solve_ivp

from .airy import ai_and_prime
from .airyop import PainleveQuadruple, QuadratureConfig, boundary_values, build_resolvent
from .errors import CrossCheckError, IntegrationError, InvalidArgumentError

__all__ = ["PainleveQuadruple", "hm_ode_oracle", "hm_values", "quadruple_from_q",
           "closed_system_rhs"]

ODE_RTOL = 1e-13
ODE_ATOL = 1e-30
TAYLOR_DPS = 30
CROSS_CHECK_TOL = 1e-7


def quadruple_from_q(t: float, q: float, dq: float) -> PainleveQuadruple:
    """Complete (q, q') to (q, p, u, v) through u = q'^2 - t q^2 - q^4."""
    u = dq * dq - t * q * q - q**4
    return PainleveQuadruple(float(t), float(q), float(dq + u * q), float(u),
                             float(0.5 * (u * u - q * q)))


def _rhs(t, y):
    q, dq = y
    return [dq, t * q + 2.0 * q**3]


_taylor_lock = threading.Lock()


@functools.lru_cache(maxsize=4)
def _taylor_solver(t_start: float):
    # mpmath integrates forward only, so run in s = -t where y(s) = q(-s).
    with mpmath.workdps(TAYLOR_DPS):
        ai = mpmath.airyai(t_start)
        aip = mpmath.airyai(t_start, derivative=1)
        return mpmath.odefun(lambda s, y: [y[1], -s * y[0] + 2 * y[0] ** 3], -t_start, [ai, -aip])


def _shoot_taylor(t, t_start):
    with _taylor_lock, mpmath.workdps(TAYLOR_DPS):
        y, dy = _taylor_solver(float(t_start))(-mpmath.mpf(t))
        q, dq = y, -dy
        u = dq * dq - t * q * q - q**4
        p = dq + u * q
        return PainleveQuadruple(float(t), float(q), float(p), float(u),
                                 float((u * u - q * q) / 2))


def _shoot_dop853(t, t_start):
    ai, aip = ai_and_prime(float(t_start))
    sol = solve_ivp(_rhs, (t_start, t), [ai.real, aip.real], method="DOP853",
                    rtol=ODE_RTOL, atol=ODE_ATOL)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise IntegrationError(f"Painleve II integration failed: {sol.message}")
    return quadruple_from_q(t, sol.y[0, -1], sol.y[1, -1])


def hm_ode_oracle(t: float, t_start: float = 10.0, method: str = "taylor") -> PainleveQuadruple:
    """Shoot the Hastings-McLeod solution from ``t_start`` down to ``t``.

    Initial data are ``q = Ai(t_start)``, ``q' = Ai'(t_start)``; the
    difference to the true solution there is of relative size Ai(t_start)^2.

    Downward integration amplifies relative errors roughly like
    ``exp((2 sqrt 2 / 3) |t|^{3/2})`` once t < 0, so the default method is
    mpmath's arbitrary-precision Taylor integrator at 30 digits.
    ``method="dop853"`` uses scipy's 8th order Runge-Kutta in double
    precision, which is only good to about 1e-7 at t = -6.
    """
    if not np.isfinite(t) or t < -10:
        raise InvalidArgumentError("t must be finite and >= -10")
    if t_start < 8:
        raise InvalidArgumentError("t_start must be >= 8")
    if t > t_start:
        raise InvalidArgumentError("t must not exceed t_start")
    if t == t_start:
        ai, aip = ai_and_prime(float(t_start))
        return quadruple_from_q(t, ai.real, aip.real)
    if method == "taylor":
        try:
            quad = _shoot_taylor(t, t_start)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise IntegrationError(f"Painleve II integration failed at t={t}") from exc
        if not np.all(np.isfinite([quad.q, quad.p, quad.u])):
            raise IntegrationError(f"Painleve II integration blew up before t={t}")
        return quad
    if method == "dop853":
        return _shoot_dop853(t, t_start)
    raise InvalidArgumentError(f"unknown integration method {method!r}")


def hm_values(t: float, source: str = "fredholm", config: QuadratureConfig | None = None,
              tol: float = CROSS_CHECK_TOL) -> PainleveQuadruple:
    """Quadruple at ``t`` from ``'fredholm'``, ``'ode'`` or ``'cross_checked'``."""
    if source == "ode":
        return hm_ode_oracle(t)
    if source not in ("fredholm", "cross_checked"):
        raise InvalidArgumentError(f"unknown source {source!r}")
    fred = boundary_values(build_resolvent(t, config))
    if source == "cross_checked":
        ode = hm_ode_oracle(t)
        diff = max(abs(fred.q - ode.q), abs(fred.p - ode.p), abs(fred.u - ode.u))
        if diff > tol * max(1.0, abs(fred.q), abs(fred.p), abs(fred.u)):
            raise CrossCheckError(f"Fredholm and ODE values differ by {diff:.3e} at t={t}",
                                  fred, ode)
    return fred


def closed_system_rhs(quad: PainleveQuadruple):
    """Right-hand sides of q' = p - uq, p' = tq + up - 2vq, u' = -q^2, v' = -pq."""
    t, q, p, u, v = quad.t, quad.q, quad.p, quad.u, quad.v
    return np.array([p - u * q, t * q + u * p - 2 * v * q, -q * q, -p * q])
