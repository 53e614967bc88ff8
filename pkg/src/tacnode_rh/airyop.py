"""Nystrom discretisation of the Airy integral operator on [t, oo).

The functions Q_t = (I - K_t)^{-1} Ai and P_t = (I - K_t)^{-1} Ai' are solved
for on composite Gauss-Legendre nodes and then continued to arbitrary complex
arguments through the Nystrom interpolant

    Q_t(z) = Ai(z) + sum_j w_j K(z, x_j) Q_t(x_j),

which is an entire function of z because the Airy kernel is entire in both
variables. The resolvent kernel R_t(z, t) is continued the same way from the
solution of (I - K_t) r = K(., t).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .airy import ai_and_prime, airy_taylor
from .errors import ConvergenceError, IllConditionedError, InvalidArgumentError, OverflowGuardError

# below this separation the divided difference is replaced by its Taylor series
NEAR_DIAGONAL = 1e-3
_TAYLOR_ORDER = 12
_LOG10_GUARD = 280.0
_CHUNK = 256


@dataclass(frozen=True)
class QuadratureConfig:
    """Discretisation settings shared by the Nystrom solve and the contour sums.

    ``tail_len`` fixes the right end of the truncated interval at
    ``max(t, 0) + tail_len``; ``ray_cap`` bounds the length of the complex
    integration rays.
    """

    panel_nodes: int = 25
    panel_len: float = 1.0
    tail_len: float = 16.0
    ray_cap: float = 60.0
    tol: float = 1e-10
    max_refinements: int = 2

    def __post_init__(self):
        if self.panel_nodes < 2:
            raise InvalidArgumentError("panel_nodes must be at least 2")
        for name in ("panel_len", "tail_len", "ray_cap", "tol"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise InvalidArgumentError(f"{name} must be positive and finite")

    def refined(self, factor: int = 2) -> "QuadratureConfig":
        return QuadratureConfig(self.panel_nodes * factor, self.panel_len, self.tail_len,
                                self.ray_cap, self.tol, self.max_refinements)


def composite_gauss_legendre(a: float, b: float, panel_nodes: int, panel_len: float):
    """Nodes and weights of composite Gauss-Legendre on [a, b] with equal panels."""
    n_panels = max(1, int(np.ceil((b - a) / panel_len - 1e-12)))
    x0, w0 = np.polynomial.legendre.leggauss(panel_nodes)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x0[None, :]).ravel()
    weights = (half[:, None] * w0[None, :]).ravel()
    return nodes, weights


def airy_kernel(x, y, ai_x=None, aip_x=None, ai_y=None, aip_y=None):
    """Airy kernel ``(Ai(x)Ai'(y) - Ai'(x)Ai(y)) / (x - y)`` on the outer grid x by y.

    ``x`` and ``y`` are 1-d arrays (complex allowed); the result has shape
    ``(len(x), len(y))``. Pairs closer than ``NEAR_DIAGONAL`` use the Taylor
    expansion of the divided difference around ``y``, which also covers the
    diagonal value ``Ai'(x)^2 - x Ai(x)^2``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    if ai_x is None:
        ai_x, aip_x = ai_and_prime(x)
    if ai_y is None:
        ai_y, aip_y = ai_and_prime(y)
    diff = x[:, None] - y[None, :]
    near = np.abs(diff) < NEAR_DIAGONAL
    safe = np.where(near, 1.0, diff)
    kern = (ai_x[:, None] * aip_y[None, :] - aip_x[:, None] * ai_y[None, :]) / safe
    if np.any(near):
        ix, iy = np.nonzero(near)
        kern[ix, iy] = _kernel_taylor(diff[ix, iy], y[iy])
    return kern


def _kernel_taylor(h, y):
    # K(y + h, y) = sum_{n>=1} (a_n Ai'(y) - (n+1) a_{n+1} Ai(y)) h^{n-1},  a_n = Ai^(n)(y)/n!
    a = airy_taylor(y, _TAYLOR_ORDER + 1)
    total = np.zeros_like(h)
    for n in range(_TAYLOR_ORDER, 0, -1):
        total = total * h + (a[n] * a[1] - (n + 1) * a[n + 1] * a[0])
    return total


def _guard(values, what):
    values = np.asarray(values)
    mags = np.abs(values)
    if not np.all(np.isfinite(mags)) or np.any(mags > 10.0**_LOG10_GUARD):
        raise OverflowGuardError(f"{what} exceeds the 1e{_LOG10_GUARD:.0f} magnitude guard")
    return values


def _cond_estimate(lu_piv, anorm):
    lu, _ = lu_piv
    gecon, = linalg.get_lapack_funcs(("gecon",), (lu,))
    rcond, info = gecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0:
        return np.inf
    return 1.0 / rcond


@dataclass(frozen=True)
class PainleveQuadruple:
    """Hastings-McLeod data at ``t``: q, p = q' + u q, u = R_t(t, t), v = (u^2 - q^2)/2."""

    t: float
    q: float
    p: float
    u: float
    v: float

    @property
    def q_prime(self) -> float:
        return self.p - self.u * self.q


@dataclass(frozen=True, eq=False)
class AiryResolvent:
    """Solved Nystrom system for ``I - K_t`` on ``[t, t + domain_len]``.

    Instances are immutable; the only mutable state is a write-once cache of
    Q_t and R_t(., t) sampled along integration rays (see :meth:`ray`).
    """

    t: float
    nodes: np.ndarray
    weights: np.ndarray
    q_vec: np.ndarray
    p_vec: np.ndarray
    r_vec: np.ndarray
    domain_len: float
    est_error: float
    cond: float
    residual: float
    config: QuadratureConfig
    _ai: np.ndarray = field(repr=False)
    _aip: np.ndarray = field(repr=False)
    _rays: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def _interp(self, z, base, vec):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        out = np.empty(flat.shape, dtype=complex)
        for start in range(0, flat.size, _CHUNK):
            zc = flat[start:start + _CHUNK]
            ai_z, aip_z = ai_and_prime(zc)
            kern = airy_kernel(zc, self.nodes, ai_z, aip_z, self._ai, self._aip)
            head = ai_z if base == "ai" else aip_z if base == "aip" else base(zc, ai_z, aip_z)
            out[start:start + _CHUNK] = head + kern @ (self.weights * vec)
        out = out.reshape(z.shape)
        return out[()] if out.ndim == 0 else out

    def q(self, z):
        return _guard(self._interp(z, "ai", self.q_vec), "Q_t")

    def p(self, z):
        return _guard(self._interp(z, "aip", self.p_vec), "P_t")

    def r(self, z):
        t = self.t
        ai_t, aip_t = ai_and_prime(np.array([t], dtype=complex))

        def head(zc, ai_z, aip_z):
            return airy_kernel(zc, np.array([t]), ai_z, aip_z, ai_t, aip_t)[:, 0]

        return _guard(self._interp(z, head, self.r_vec), "R_t")

    def boundary(self) -> PainleveQuadruple:
        q = float(np.real(self.q(self.t)))
        p = float(np.real(self.p(self.t)))
        u = float(np.real(self.r(self.t)))
        return PainleveQuadruple(self.t, q, p, u, 0.5 * (u * u - q * q))

    def ray(self, angle_index: int):
        """Q_t and R_t(., t) on the composite Gauss-Legendre ray from ``t``.

        ``angle_index`` 0, 1, -1 select the directions 0, +2pi/3, -2pi/3.
        Returns ``(offsets, weights, q, r)`` where ``offsets = x - t`` and the
        weights already contain the direction factor ``dx/drho``.
        """
        with self._lock:
            cached = self._rays.get(angle_index)
            if cached is None:
                cached = self._build_ray(angle_index)
                self._rays[angle_index] = cached
            return cached

    def _build_ray(self, angle_index):
        if angle_index not in (0, 1, -1):
            raise InvalidArgumentError("ray index must be 0, 1 or -1")
        cfg = self.config
        cap = cfg.ray_cap if angle_index else min(cfg.ray_cap, 30.0)
        rho, w = composite_gauss_legendre(0.0, cap, cfg.panel_nodes, cfg.panel_len)
        direction = np.exp(2j * np.pi * angle_index / 3)
        offsets = rho * direction
        x = self.t + offsets
        return offsets, w * direction, self.q(x), self.r(x)


def build_resolvent(t: float, config: QuadratureConfig | None = None) -> AiryResolvent:
    """Solve the Nystrom system for Q_t, P_t and R_t(., t).

    The self-convergence estimate is the change in q, p, u (relative to
    ``max(1, |q|, |p|, |u|)``) when the nodes per panel are doubled; when it exceeds ``config.tol`` the
    node count is doubled (at most ``config.max_refinements`` times).
    """
    config = config or QuadratureConfig()
    if not np.isfinite(t):
        raise InvalidArgumentError("t must be finite")
    t = float(t)
    cfg = config
    for _ in range(cfg.max_refinements + 1):
        if _n_nodes(t, cfg) < 16:
            raise InvalidArgumentError("at least 16 quadrature nodes are required")
        res = _solve(t, cfg)
        finer = _solve(t, cfg.refined())
        fine_b, coarse_b = finer.boundary(), res.boundary()
        scale = max(1.0, abs(fine_b.q), abs(fine_b.p), abs(fine_b.u))
        est = max(abs(fine_b.q - coarse_b.q), abs(fine_b.p - coarse_b.p),
                  abs(fine_b.u - coarse_b.u)) / scale
        end = t + res.domain_len
        tail = float(abs(ai_and_prime(end)[0])) ** 2
        est += tail
        # refinement cannot beat the rounding floor set by the conditioning
        if est <= max(cfg.tol, 1e3 * res.cond * np.finfo(float).eps):
            return _with_error(res, est)
        cfg = cfg.refined()
    raise ConvergenceError(f"resolvent at t={t} did not converge: estimated error {est:.3e}")


def _n_nodes(t, cfg):
    end = max(t, 0.0) + cfg.tail_len
    return int(np.ceil((end - t) / cfg.panel_len - 1e-12)) * cfg.panel_nodes


def _with_error(res, est):
    return AiryResolvent(res.t, res.nodes, res.weights, res.q_vec, res.p_vec, res.r_vec,
                         res.domain_len, est, res.cond, res.residual, res.config,
                         res._ai, res._aip)


def _solve(t, cfg):
    end = max(t, 0.0) + cfg.tail_len
    nodes, weights = composite_gauss_legendre(t, end, cfg.panel_nodes, cfg.panel_len)
    ai, aip = ai_and_prime(nodes.astype(complex))
    ai, aip = ai.real.copy(), aip.real.copy()
    kern = airy_kernel(nodes, nodes, ai, aip, ai, aip).real
    system = np.eye(nodes.size) - kern * weights[None, :]
    k_t = airy_kernel(nodes, np.array([t]), ai, aip, *map(np.real, ai_and_prime(np.array([t + 0j]))))
    rhs = np.column_stack([ai, aip, k_t[:, 0].real])
    try:
        lu_piv = linalg.lu_factor(system, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise IllConditionedError(f"Nystrom system at t={t} could not be factored") from exc
    cond = _cond_estimate(lu_piv, np.linalg.norm(system, 1))
    if not np.isfinite(cond) or cond > 1e12:
        raise IllConditionedError(f"I - K_t at t={t} has condition number {cond:.3e}")
    sol = linalg.lu_solve(lu_piv, rhs)
    resid = np.linalg.norm(system @ sol - rhs, axis=0) / np.maximum(np.linalg.norm(rhs, axis=0), 1e-300)
    return AiryResolvent(t, nodes, weights, sol[:, 0].copy(), sol[:, 1].copy(), sol[:, 2].copy(),
                         end - t, np.nan, cond, float(resid.max()), cfg,
                         ai.astype(complex), aip.astype(complex))


def q_at(res: AiryResolvent, z):
    return res.q(z)


def p_at(res: AiryResolvent, z):
    return res.p(z)


def r_at(res: AiryResolvent, z):
    """R_t(z, t), computed from the resolvent equation R = K + K R."""
    return res.r(z)


def r_divided(res: AiryResolvent, z):
    """R_t(z, t) from the Christoffel-Darboux form ``(Q(z)p - P(z)q) / (z - t)``."""
    b = res.boundary()
    z = np.asarray(z, dtype=complex)
    return (res.q(z) * b.p - res.p(z) * b.q) / (z - res.t)


def r_kernel(res: AiryResolvent, x, y):
    """R_t(x, y) for x != y from ``(Q(x)P(y) - P(x)Q(y)) / (x - y)``."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    return (res.q(x) * res.p(y) - res.p(x) * res.q(y)) / (x - y)


def boundary_values(res: AiryResolvent) -> PainleveQuadruple:
    """(q, p, u, v) at ``res.t`` read off the resolvent."""
    return res.boundary()
