"""Residual checks for the identities satisfied by the tacnode RH solution.

Each check returns a :class:`ResidualReport`. Failures inside a check
(quadrature, conditioning, domain errors) are recorded as failed points
with an infinite residual instead of being raised.

Composite checks (``asymptotics``, ``kernels``, ``psi_2x2``) mix quantities
with different natural tolerances; they report each residual divided by its
own tolerance and use an overall tolerance of 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .airyop import AiryResolvent, QuadratureConfig, build_resolvent, r_kernel
from .errors import InvalidArgumentError, TacnodeError
from .kernels import (cached_resolvent, dg_params, lax_matrix, m_hat, m_tilde, psi_2x2,
                      dg_kernel, dg_kernel_via_integral)
from .painleve import closed_system_rhs
from .tacnode import (TacnodeParams, TacnodeSystem, ab_matrices, derive_constants, jump_matrix,
                      theta)

FD_TOL = 1e-6
ALG_TOL = 1e-8
TW_TOL = 1e-7
CONJ_TOL = 1e-9
_T_STEP = 1e-3
_S_STEP = 1e-4

_FAILURES = (TacnodeError, ArithmeticError, np.linalg.LinAlgError, ValueError)


@dataclass(frozen=True)
class PointResidual:
    z: complex
    residual: float
    label: str = ""
    error: str | None = None


@dataclass(frozen=True)
class ResidualReport:
    check_name: str
    params: TacnodeParams | None
    sample_points: list
    max_residual: float
    tolerance: float
    passed: bool
    details: list = field(default_factory=list)

    @classmethod
    def build(cls, name, params, details, tolerance) -> "ResidualReport":
        worst = max((d.residual for d in details), default=math.inf)
        return cls(name, params, [d.z for d in details], float(worst), float(tolerance),
                   bool(worst <= tolerance), list(details))

    def to_dict(self) -> dict:
        return {
            "check_name": self.check_name,
            "params": None if self.params is None else self.params.as_dict(),
            "tolerance": self.tolerance,
            "max_residual": _num(self.max_residual),
            "passed": self.passed,
            "points": [_point_dict(d) for d in self.details],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ResidualReport":
        params = None if data["params"] is None else TacnodeParams(**data["params"])
        details = [PointResidual(complex(pt["z_re"], pt["z_im"]), _unnum(pt["residual"]),
                                 pt.get("label", ""), pt.get("error"))
                   for pt in data["points"]]
        return cls(data["check_name"], params, [d.z for d in details],
                   _unnum(data["max_residual"]), float(data["tolerance"]),
                   bool(data["passed"]), details)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _num(x):
    # JSON has no infinity; a failed point is stored as null
    return float(x) if math.isfinite(x) else None


def _unnum(x):
    return math.inf if x is None else float(x)


def _point_dict(d: PointResidual) -> dict:
    out = {"z_re": float(d.z.real), "z_im": float(d.z.imag), "residual": _num(d.residual)}
    if d.label:
        out["label"] = d.label
    if d.error:
        out["error"] = d.error
    return out


def _guarded(z, fn, label=""):
    try:
        value, lab = fn()
        return PointResidual(complex(z), float(value), lab or label)
    except _FAILURES as exc:
        return PointResidual(complex(z), math.inf, label, f"{type(exc).__name__}: {exc}")


def default_grid(radii=(0.5, 1.5), per_sector: int = 3) -> list:
    """``per_sector`` points strictly inside each of the six sectors, at each radius."""
    pts = []
    for r in radii:
        for k in range(6):
            for i in range(1, per_sector + 1):
                pts.append(complex(r * np.exp(1j * (k + i / (per_sector + 1)) * np.pi / 3)))
    return pts


def _step(z):
    return 1e-4 * max(1.0, abs(z))


def _d1(values, h):
    """4th order central difference from samples at z-2h, z-h, z+h, z+2h."""
    return (values[0] - 8 * values[1] + 8 * values[2] - values[3]) / (12 * h)


_STENCIL = np.array([-2.0, -1.0, 1.0, 2.0])


def _system(p, res, config=None):
    if res is None:
        res = cached_resolvent(_t(p), config)
    return TacnodeSystem(p, res)


def _t(p):
    return derive_constants(p).t


# ----------------------------------------------------------------------------
# checks on the six solutions and M

def check_ode(p: TacnodeParams, res: AiryResolvent | None = None, grid=None,
              tol: float = FD_TOL) -> ResidualReport:
    """||m' - U m|| / ||m|| for all six solutions, m' by finite differences."""
    system = _system(p, res)
    grid = default_grid() if grid is None else grid

    def one(z):
        h = _step(z)
        U = system.U(z)
        worst, label = 0.0, ""
        for j in range(6):
            fd = _d1(system.m(j, z + h * _STENCIL).T, h)
            m = system.m(j, z)
            r = np.linalg.norm(fd - U @ m) / np.linalg.norm(m)
            if r >= worst:
                worst, label = r, f"j={j}"
        return worst, label

    return ResidualReport.build("ode", p, [_guarded(z, lambda z=z: one(z)) for z in grid], tol)


def check_second_order(p: TacnodeParams, res: AiryResolvent | None = None, grid=None,
                       tol: float = FD_TOL) -> ResidualReport:
    """psi'' = A psi' + B psi for psi from m0, m2, m4 (psi'' by differencing the exact psi')."""
    system = _system(p, res)
    k = system.const
    grid = default_grid() if grid is None else grid
    A, _ = ab_matrices(p, system.pq, 0.0)
    g = k.gamma * np.sqrt(p.r1 / p.r2)

    def psi_and_prime(j, z):
        c = system.m_components(j, z)
        e = np.exp(-k.lam * np.asarray(z))
        psi = np.stack([e * g * c[0], e * c[1]])
        dpsi = np.stack([e * g * (c[4] - k.lam * c[0]), e * (c[5] - k.lam * c[1])])
        return psi, dpsi

    def one(z):
        h = _step(z)
        _, B = ab_matrices(p, system.pq, z)
        worst, label = 0.0, ""
        for j in (0, 2, 4):
            psi, dpsi = psi_and_prime(j, z)
            _, dstencil = psi_and_prime(j, z + h * _STENCIL)
            d2 = _d1(dstencil.T, h)
            lhs, rhs = d2, A @ dpsi + B @ psi
            scale = max(np.linalg.norm(lhs), np.linalg.norm(A @ dpsi), np.linalg.norm(B @ psi))
            r = np.linalg.norm(lhs - rhs) / scale
            if r >= worst:
                worst, label = r, f"j={j}"
        return worst, label

    return ResidualReport.build("second_order", p,
                                [_guarded(z, lambda z=z: one(z)) for z in grid], tol)


def check_jumps(p: TacnodeParams, res: AiryResolvent | None = None, rays=range(6),
                radii=(0.5, 1.0, 2.0), tol: float = ALG_TOL) -> ResidualReport:
    """M_+ = M_- J_k on each ray, comparing the two adjacent sector formulas on the ray."""
    system = _system(p, res)

    def one(k, z):
        minus = system.sector_matrix((k - 1) % 6, z)
        plus = system.sector_matrix(k, z)
        r = np.abs(plus - minus @ jump_matrix(k)).max() / np.abs(minus).max()
        return r, f"ray={k}"

    details = []
    for k in rays:
        for rho in radii:
            z = complex(rho * np.exp(1j * k * np.pi / 3))
            details.append(_guarded(z, lambda k=k, z=z: one(k, z), f"ray={k}"))
    return ResidualReport.build("jumps", p, details, tol)


def check_consistency(p: TacnodeParams, res: AiryResolvent | None = None, grid=None,
                      tol: float = ALG_TOL) -> ResidualReport:
    """m0 + m3 = m1 - m5 = m2 - m4, defects relative to ||m0 + m3||."""
    system = _system(p, res)
    grid = default_grid((0.5, 1.5, 3.0)) if grid is None else grid

    def one(z):
        ms = system.all_m(z)
        hat = ms[0] + ms[3]
        d1 = np.linalg.norm(hat - (ms[1] - ms[5]))
        d2 = np.linalg.norm(hat - (ms[2] - ms[4]))
        return max(d1, d2) / np.linalg.norm(hat), ""

    return ResidualReport.build("consistency", p,
                                [_guarded(z, lambda z=z: one(z)) for z in grid], tol)


def asymptotic_factor(p: TacnodeParams, z: complex) -> np.ndarray:
    """Leading-order behaviour of M(z) at infinity (the matrix M approaches)."""
    z = complex(z)
    t1, t2, tau = theta(p, 1, z), theta(p, 2, z), p.tau
    D = np.diag([(-z) ** -0.25, z ** -0.25, (-z) ** 0.25, z ** 0.25])
    W = np.array([[1, 0, -1j, 0], [0, 1, 0, 1j], [-1j, 0, 1, 0], [0, 1j, 0, 1]]) / np.sqrt(2)
    E = np.diag(np.exp([-t1 + tau * z, -t2 - tau * z, t1 + tau * z, t2 - tau * z]))
    return D @ W @ E


def m2_normalized_defect(system: TacnodeSystem, z: complex) -> complex:
    """z^{1/4} sqrt(2) e^{theta_2 + tau z} m2^(0)(z) - 1, which is O(z^{-1/2})."""
    p = system.params
    z = complex(z)
    return z**0.25 * np.sqrt(2) * np.exp(theta(p, 2, z) + p.tau * z) * system.m(0, z)[1] - 1


def m2_leading_coefficient(system: TacnodeSystem) -> float:
    """Coefficient c in m2_normalized_defect(z) = c z^{-1/2} + O(1/z)."""
    p = system.params
    return system.pq.u / (p.r2 * system.const.C) - p.s2**2 / p.r2


def check_asymptotics(p: TacnodeParams, res: AiryResolvent | None = None,
                      radii=(15.0, 30.0), norm_tol: float = 0.05,
                      tol: float = 1.0) -> ResidualReport:
    """Normalisation at infinity.

    Scaled residuals: ``|M A^{-1} - I| / norm_tol`` at the largest radius on
    the positive imaginary axis, ``|det M - 1| / 1e-8`` there, and the
    two-term check of m2^(0): after removing ``c z^{-1/2}`` the remainder
    must shrink by at least 0.75 between the two radii (it is O(1/z)).
    """
    system = _system(p, res)
    r_small, r_big = min(radii), max(radii)
    details = []

    def norm_point(z):
        M = system.M(z)
        err = np.abs(M @ np.linalg.inv(asymptotic_factor(p, z)) - np.eye(4)).max()
        return err / norm_tol, "normalization"

    def det_point(z):
        return abs(np.linalg.det(system.M(z)) - 1) / ALG_TOL, "det"

    def m2_point(z_small, z_big):
        c = m2_leading_coefficient(system)
        rem = [abs(m2_normalized_defect(system, z) - c / np.sqrt(z)) for z in (z_small, z_big)]
        return (rem[1] / rem[0]) / 0.75, "m2_two_term"

    z_big = complex(0, r_big)
    details.append(_guarded(z_big, lambda: norm_point(z_big), "normalization"))
    details.append(_guarded(z_big, lambda: det_point(z_big), "det"))
    za, zb = (complex(r * np.exp(1j * np.pi / 12)) for r in (r_small, r_big))
    details.append(_guarded(zb, lambda: m2_point(za, zb), "m2_two_term"))
    return ResidualReport.build("asymptotics", p, details, tol)


def check_inverse_symmetry(p: TacnodeParams, res: AiryResolvent | None = None, grid=None,
                           tol: float = ALG_TOL) -> ResidualReport:
    """M^{-1} from the tau -> -tau symmetry, times M, against the identity."""
    system = _system(p, res)
    grid = default_grid() if grid is None else grid

    def one(z):
        return np.abs(system.M_inverse(z) @ system.M(z) - np.eye(4)).max(), ""

    return ResidualReport.build("inverse_symmetry", p,
                                [_guarded(z, lambda z=z: one(z)) for z in grid], tol)


def check_determinant(p: TacnodeParams, res: AiryResolvent | None = None, grid=None,
                      tol: float = ALG_TOL) -> ResidualReport:
    system = _system(p, res)
    grid = default_grid() if grid is None else grid

    def one(z):
        return abs(np.linalg.det(system.M(z)) - 1), ""

    return ResidualReport.build("determinant", p,
                                [_guarded(z, lambda z=z: one(z)) for z in grid], tol)


def check_conjugation(p: TacnodeParams, res: AiryResolvent | None = None,
                      ys=(-1.5, -0.6, 0.4, 1.2), tol: float = CONJ_TOL) -> ResidualReport:
    """conj(m1^(1)) = m2^(2), conj(m1^(2)) = m2^(1), conj(m1^(0)) = m2^(3),
    conj(m1^(3)) = m2^(0) on the imaginary axis (needs r1 = r2, s1 = s2)."""
    if p.r1 != p.r2 or p.s1 != p.s2:
        raise InvalidArgumentError("conjugation relations need r1 = r2 and s1 = s2")
    system = _system(p, res)

    def one(y):
        ms = system.all_m(complex(0, y))
        scale = np.abs(ms[:4, :2]).max()
        pairs = ((1, 2), (2, 1), (0, 3), (3, 0))
        return max(abs(np.conj(ms[a, 0]) - ms[b, 1]) for a, b in pairs) / scale, ""

    return ResidualReport.build("conjugation", p,
                                [_guarded(1j * y, lambda y=y: one(y)) for y in ys], tol)


# ----------------------------------------------------------------------------
# Airy resolvent and Painleve identities

def _tw_points(t):
    real = [t + d for d in (0.1, 0.4, 0.8, 1.3, 1.9, 2.6, 3.3, 4.1, 5.0, 6.0)]
    cplx = [t + 1.5 * np.exp(1j * a) for a in np.linspace(0.3, 2 * np.pi - 0.3, 10)]
    return [complex(x) for x in real + cplx]


def check_tw_identities(res: AiryResolvent, points=None, tol: float = TW_TOL) -> ResidualReport:
    """x- and t-derivative identities of Q_t, P_t, R_t, plus the closed (q, p, u, v) system.

    t-derivatives use 4th order differences over resolvents at t +- h, t +- 2h
    (h = 1e-3); x-derivatives use steps 1e-4 max(1, |x|).
    """
    t = res.t
    points = _tw_points(t) if points is None else [complex(z) for z in points]
    b = res.boundary()
    shifted = [build_resolvent(t + d * _T_STEP, res.config) for d in _STENCIL]

    def one(x):
        h = _step(x)
        q, pv, r = res.q(x), res.p(x), res.r(x)
        dq = _d1(res.q(x + h * _STENCIL), h)
        dp = _d1(res.p(x + h * _STENCIL), h)
        y = x + 0.37 + 0.11j
        dq_t = _d1(np.array([s.q(x) for s in shifted]), _T_STEP)
        dp_t = _d1(np.array([s.p(x) for s in shifted]), _T_STEP)
        dr_t = _d1(np.array([r_kernel(s, x, y) for s in shifted]), _T_STEP)
        pairs = {
            "Qtdx": (dq, pv + b.q * r - b.u * q),
            "Ptdx": (dp, x * q + b.p * r + b.u * pv - 2 * b.v * q),
            "Qtdt": (dq_t, -r * b.q),
            "Ptdt": (dp_t, -r * b.p),
            "Rtdt": (dr_t, -r * res.r(y)),
        }
        worst, label = 0.0, ""
        for name, (lhs, rhs) in pairs.items():
            e = abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))
            if e >= worst:
                worst, label = e, name
        return worst, label

    details = [_guarded(x, lambda x=x: one(x)) for x in points]

    def closure():
        quads = [s.boundary() for s in shifted]
        fd = _d1(np.array([[qq.q, qq.p, qq.u, qq.v] for qq in quads]), _T_STEP)
        rhs = closed_system_rhs(b)
        e_sys = np.abs(fd - rhs).max() / max(1.0, np.abs(rhs).max())
        dq = b.p - b.u * b.q
        e_u = abs(b.u - (dq * dq - t * b.q**2 - b.q**4)) / max(1.0, abs(b.u))
        return (e_sys, "qpuv_closure") if e_sys >= e_u else (e_u, "u_identity")

    details.append(_guarded(complex(t), closure))
    return ResidualReport.build("tw_identities", None, details, tol)


def check_painleve(ts=(-6.0, -3.0, 0.0, 2.0, 6.0), config: QuadratureConfig | None = None,
                   tol: float = FD_TOL) -> ResidualReport:
    """u = q'^2 - t q^2 - q^4 and the closed (q, p, u, v) system on a t-grid."""
    details = []
    for t in ts:
        def one(t=t):
            res = build_resolvent(t, config)
            rep = check_tw_identities(res, points=[], tol=tol)
            d = rep.details[-1]
            if d.error:
                raise TacnodeError(d.error)
            return d.residual, d.label
        details.append(_guarded(complex(t), one))
    return ResidualReport.build("painleve", None, details, tol)


# ----------------------------------------------------------------------------
# kernels

def _dg_arrays(s, tau, xs, config=None):
    p = dg_params(s, tau)
    plus = TacnodeSystem(p, cached_resolvent(_t(p), config))
    minus = TacnodeSystem(p.flipped(), plus.res)
    z = 1j * np.asarray(xs, dtype=float)
    return plus, minus, z


def check_kernels(p_dg: TacnodeParams, grid=(-1.0, -0.4, 0.1, 0.6, 1.2),
                  p_tac: TacnodeParams | None = None, config: QuadratureConfig | None = None,
                  tol: float = 1.0) -> ResidualReport:
    """Kernel formula equivalences on the grid x, y in ``grid``.

    Scaled residuals per (x, y) (sample point x + iy):
    Duits-Geudens direct vs m_hat form (1e-8), m1 - m2 vs m5 - m4 (1e-8),
    realness (1e-9), rank two vs Im form of d/ds (1e-10), d/ds vs a central
    difference in s (1e-6); on the diagonal the two one-sided limits (1e-8).
    With ``p_tac``: tacnode direct vs m_hat form (1e-8) and the
    (d/dx + d/dy) identity vs finite differences (1e-6).
    """
    if p_dg.r1 != 1 or p_dg.r2 != 1 or p_dg.s1 != p_dg.s2:
        raise InvalidArgumentError("p_dg must have r1 = r2 = 1 and s1 = s2")
    s, tau = p_dg.s1, p_dg.tau
    xs = np.asarray(grid, dtype=float)
    details = []
    try:
        plus, minus, z = _dg_arrays(s, tau, xs, config)
        arrays = _kernel_arrays(plus, minus, z, s, tau, config)
        tac = _tacnode_arrays(p_tac, xs, config) if p_tac is not None else None
    except _FAILURES as exc:
        err = f"{type(exc).__name__}: {exc}"
        return ResidualReport.build("kernels", p_dg,
                                    [PointResidual(complex(x, y), math.inf, "", err)
                                     for x in xs for y in xs], tol)
    for i, x in enumerate(xs):
        for j, y in enumerate(xs):
            parts = _kernel_residuals(arrays, i, j, x, y)
            if tac is not None:
                parts.update(_tacnode_residuals(tac, i, j, x, y))
            label, worst = max(parts.items(), key=lambda kv: kv[1])
            details.append(PointResidual(complex(x, y), float(worst), label))
    return ResidualReport.build("kernels", p_dg, details, tol)


def _kernel_arrays(plus, minus, z, s, tau, config):
    mt12 = m_tilde(minus, z, "12")
    mt54 = m_tilde(minus, z, "54")
    mh = m_hat(plus, z)
    S = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    num12 = np.einsum("ai,ab,bj->ij", mt12, S, mh)
    num54 = np.einsum("ai,ab,bj->ij", mt54, S, mh)
    Mp = plus.sector_matrix(1, z)                     # (4, 4, n)
    col = np.einsum("abj,b->aj", Mp, np.array([1.0, 1, 0, 0]))
    direct = np.empty((z.size, z.size), dtype=complex)
    for i in range(z.size):
        sol = np.linalg.solve(Mp[:, :, i], col)
        direct[i] = np.array([-1.0, 1, 0, 0]) @ sol
    rank2 = -(np.outer(mt12[0], mh[0]) + np.outer(mt12[1], mh[1])) / (1j * np.pi)
    imag = -2.0 / np.pi * np.outer(mt12[0], mh[0]).imag
    # K at s +- h, s +- 2h on the off-diagonal for the s-derivative
    shifted = []
    for d in _STENCIL:
        pl, mi, _ = _dg_arrays(s + d * _S_STEP, tau, z.imag, config)
        shifted.append(np.einsum("ai,ab,bj->ij", m_tilde(mi, z), S, m_hat(pl, z)))
    diag_x = np.einsum("nab,bn,ac,cn->n", minus.U(z), mt12, S, mh) / (2 * np.pi)
    diag_y = -np.einsum("an,ab,nbc,cn->n", mt12, S, plus.U(z), mh) / (2 * np.pi)
    return dict(num12=num12, num54=num54, direct=direct, rank2=rank2, imag=imag,
                shifted=shifted, diag_x=diag_x, diag_y=diag_y, x=z.imag)


def _kernel_residuals(a, i, j, x, y):
    if i == j:
        kx, ky = a["diag_x"][i], a["diag_y"][i]
        scale = max(1.0, abs(kx.real))
        return {"dg_diag_limits": abs(kx - ky) / scale / ALG_TOL,
                "dg_real": abs(kx.imag) / scale / CONJ_TOL,
                "dg_ds_forms": abs(a["rank2"][i, j] - a["imag"][i, j]) / 1e-10}
    den = 2j * np.pi * (x - y)
    k12, k54, kd = a["num12"][i, j] / den, a["num54"][i, j] / den, a["direct"][i, j] / den
    scale = max(1.0, abs(k12.real))
    fd = _d1(np.array([sh[i, j] for sh in a["shifted"]]) / den, _S_STEP)
    return {
        "dg_direct_vs_hat": abs(kd - k12) / scale / ALG_TOL,
        "dg_tilde_pairs": abs(k54 - k12) / scale / ALG_TOL,
        "dg_real": abs(k12.imag) / scale / CONJ_TOL,
        "dg_ds_forms": abs(a["rank2"][i, j] - a["imag"][i, j]) / 1e-10,
        "dg_ds_fd": abs(fd.real - a["imag"][i, j]) / max(1.0, abs(fd)) / FD_TOL,
    }


def _tacnode_arrays(p, xs, config):
    plus = TacnodeSystem(p, cached_resolvent(_t(p), config))
    pm = p.flipped()
    minus = TacnodeSystem(pm, cached_resolvent(_t(pm), config))
    S = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])
    h = 1e-4
    out = {"p": p}
    for tag, shift in (("0", 0.0),) + tuple((f"{d:+.0f}", d * h) for d in _STENCIL):
        zp = xs + shift
        out["hat_plus" + tag] = m_hat(plus, zp)
        out["hat_minus" + tag] = m_hat(minus, zp)
    out["num"] = np.einsum("ai,ab,bj->ij", out["hat_minus0"], S, out["hat_plus0"])
    Mp = plus.sector_matrix(1, xs.astype(complex))
    col = np.einsum("abj,b->aj", Mp, np.array([1.0, 1, 0, 0]))
    direct = np.empty((xs.size, xs.size), dtype=complex)
    for j in range(xs.size):
        direct[:, j] = np.array([0.0, 0, 1, 1]) @ np.linalg.solve(Mp[:, :, j], col)
    out["direct"] = direct                              # [i, j] -> (x_i, y_j)
    out["S"], out["h"] = S, h
    return out


def _tacnode_residuals(a, i, j, x, y):
    if i == j:
        return {}
    den = 2j * np.pi * (x - y)
    k3 = a["num"][j, i] / den
    k1 = a["direct"][i, j] / den
    scale = max(1.0, abs(k3))
    S, p = a["S"], a["p"]
    vals = []
    for tag in ("-2", "-1", "+1", "+2"):
        vals.append(a[f"hat_minus{tag}"][:, j] @ S @ a[f"hat_plus{tag}"][:, i] / den)
    fd = _d1(np.array(vals), a["h"])
    mh_m, mh_p = a["hat_minus0"][:, j], a["hat_plus0"][:, i]
    ident = (p.r1 * mh_m[0] * mh_p[0] - p.r2 * mh_m[1] * mh_p[1]) / (2 * np.pi)
    return {"tac_direct_vs_hat": abs(k1 - k3) / scale / ALG_TOL,
            "tac_sum_derivative": abs(fd - ident) / max(1.0, abs(ident)) / FD_TOL}


def check_s_integral(s: float, tau: float, pairs=((0.2, -0.4), (0.5, 0.1)), s_max: float = 8.0,
                     tol: float = 1e-5, config: QuadratureConfig | None = None) -> ResidualReport:
    """K^crit directly vs the integral of -dK/ds over [s, infinity)."""
    details = []
    for x, y in pairs:
        def one(x=x, y=y):
            a = dg_kernel(x, y, s, tau, config=config).value
            b = dg_kernel_via_integral(x, y, s, tau, s_max=s_max, config=config).value
            return abs(a - b), ""
        details.append(_guarded(complex(x, y), one))
    return ResidualReport.build("s_integral", dg_params(s, tau), details, tol)


# ----------------------------------------------------------------------------
# 2x2 problem

def check_psi_2x2(t: float, res: AiryResolvent | None = None, radii=(0.5, 1.0, 2.0),
                  points=None, tol: float = 1.0, config: QuadratureConfig | None = None
                  ) -> ResidualReport:
    """Jumps (1e-8) on the four rays, and at off-contour points the Lax
    equation with a finite-difference derivative (1e-6) and det = 1 (1e-8)."""
    res = res if res is not None else cached_resolvent(float(t), config)
    b = res.boundary()
    jumps = {1: ("right", "upper", [[1, 0], [1, 1]]), 5: ("upper", "left", [[1, 0], [-1, 1]]),
             7: ("left", "lower", [[1, 1], [0, 1]]), 11: ("lower", "right", [[1, -1], [0, 1]])}
    details = []
    for k, (minus, plus, J) in jumps.items():
        for rho in radii:
            z = complex(rho * np.exp(1j * k * np.pi / 6))

            def jump(z=z, minus=minus, plus=plus, J=J):
                pm = psi_2x2(z, res=res, sector=minus)
                pp = psi_2x2(z, res=res, sector=plus)
                return np.abs(pp - pm @ np.array(J)).max() / np.abs(pm).max() / ALG_TOL, "jump"
            details.append(_guarded(z, jump, "jump"))
    points = points if points is not None else [0.7 + 0.2j, -0.4 + 1.1j, 1.5 - 0.9j,
                                                -1.8 - 0.3j, 0.2 - 1.4j]
    for z in points:
        z = complex(z)

        def lax(z=z):
            h = _step(z)
            P = psi_2x2(z, res=res)
            fd = _d1(np.array([psi_2x2(z + d * h, res=res) for d in _STENCIL]), h)
            L = lax_matrix(z, b.q, b.q_prime, res.t)
            e_lax = np.abs(fd - L @ P).max() / np.abs(L @ P).max() / FD_TOL
            e_det = abs(np.linalg.det(P) - 1) / ALG_TOL
            return (e_lax, "lax") if e_lax >= e_det else (e_det, "det")
        details.append(_guarded(z, lax))
    return ResidualReport.build("psi_2x2", None, details, tol)


# ----------------------------------------------------------------------------

SUITE = ("ode", "second_order", "jumps", "consistency", "asymptotics", "inverse_symmetry",
         "determinant", "tw_identities", "kernels", "conjugation", "psi_2x2")


def run_check(name: str, p: TacnodeParams, s_dg: float = 0.1, tau_dg: float | None = None,
              config: QuadratureConfig | None = None, tol: float | None = None,
              grid=None) -> ResidualReport:
    """Run one named check of the suite with its default arguments."""
    kw = {} if tol is None else {"tol": tol}
    tau_dg = p.tau if tau_dg is None else tau_dg
    pdg = dg_params(s_dg, tau_dg)
    try:
        res = cached_resolvent(_t(p), config)
    except _FAILURES as exc:
        return ResidualReport.build(name, p, [PointResidual(0j, math.inf, "",
                                                            f"{type(exc).__name__}: {exc}")],
                                    tol if tol is not None else 0.0)
    grid_kw = {} if grid is None else {"grid": grid}
    if name == "ode":
        return check_ode(p, res, **grid_kw, **kw)
    if name == "second_order":
        return check_second_order(p, res, **grid_kw, **kw)
    if name == "jumps":
        return check_jumps(p, res, **kw)
    if name == "consistency":
        return check_consistency(p, res, **grid_kw, **kw)
    if name == "asymptotics":
        return check_asymptotics(p, res, **kw)
    if name == "inverse_symmetry":
        return check_inverse_symmetry(p, res, **grid_kw, **kw)
    if name == "determinant":
        return check_determinant(p, res, **grid_kw, **kw)
    if name == "tw_identities":
        return check_tw_identities(res, **kw)
    if name == "kernels":
        return check_kernels(pdg, p_tac=p, config=config, **kw)
    if name == "conjugation":
        return check_conjugation(pdg, None, **kw)
    if name == "psi_2x2":
        return check_psi_2x2(res.t, res, **kw)
    if name == "s_integral":
        return check_s_integral(s_dg, tau_dg, config=config, **kw)
    raise InvalidArgumentError(f"unknown check {name!r}")


def run_suite(p: TacnodeParams, names=SUITE, **kwargs) -> list:
    return [run_check(n, p, **kwargs) for n in names]
