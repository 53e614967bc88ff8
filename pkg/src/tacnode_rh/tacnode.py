"""Tacnode Riemann-Hilbert problem: parameters, the linear system m' = U m,
its six contour-integral solutions and the sector-wise solution M(z).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .airy import OMEGA, ai_and_prime
from .airyop import AiryResolvent, PainleveQuadruple, QuadratureConfig, build_resolvent
from .errors import (BranchCutError, ConvergenceError, InvalidArgumentError,
                     InvalidParameterError, OnContourError, PrecisionWarning)

SQRT_2PI = np.sqrt(2.0 * np.pi)
_T_MATCH = 1e-12
# a ray contribution counts as converged once its last panels are this small
_TAIL_REL = 1e-16
# at the ray cap a panel this small relative to the peak still counts as converged
_CAP_REL = 1e-12
# all four components below this means the contour integrals have underflowed
_UNDERFLOW = 1e-250


@dataclass(frozen=True)
class TacnodeParams:
    r1: float
    r2: float
    s1: float
    s2: float
    tau: float

    def __post_init__(self):
        vals = (self.r1, self.r2, self.s1, self.s2, self.tau)
        if not all(np.isfinite(v) for v in vals):
            raise InvalidParameterError("parameters must be finite")
        if self.r1 <= 0 or self.r2 <= 0:
            raise InvalidParameterError("r1 and r2 must be positive")

    def swapped(self) -> "TacnodeParams":
        """Parameters after r1 <-> r2, s1 <-> s2 (tau unchanged)."""
        return TacnodeParams(self.r2, self.r1, self.s2, self.s1, self.tau)

    def flipped(self) -> "TacnodeParams":
        """Same parameters with tau -> -tau."""
        return TacnodeParams(self.r1, self.r2, self.s1, self.s2, -self.tau)

    def as_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "s1": self.s1, "s2": self.s2, "tau": self.tau}


@dataclass(frozen=True)
class DerivedConstants:
    C: float
    gamma: float
    lam: float
    mu: float
    t: float


def derive_constants(p: TacnodeParams) -> DerivedConstants:
    r1, r2, s1, s2, tau = p.r1, p.r2, p.s1, p.s2, p.tau
    if r1 <= 0 or r2 <= 0:
        raise InvalidParameterError("r1 and r2 must be positive")
    rsq = r1 * r1 + r2 * r2
    C = (r1**-2 + r2**-2) ** (1.0 / 3.0)
    gamma = np.exp(8.0 / 3.0 * (r1 * r1 - r2 * r2) / rsq**2 * tau**3
                   - 4.0 * (r1 * s1 - r2 * s2) / rsq * tau)
    lam = (r2 * r2 - r1 * r1) / rsq * tau
    mu = 2.0 / rsq * tau
    t = 2.0 / C * (s1 / r1 + s2 / r2 - 2.0 * tau * tau / rsq)
    return DerivedConstants(float(C), float(gamma), float(lam), float(mu), float(t))


def theta(p: TacnodeParams, which: int, z):
    """theta_1 (cut along [0, oo)) or theta_2 (cut along (-oo, 0]), principal branches."""
    z = np.asarray(z, dtype=complex)
    if which == 1:
        if np.any((z.imag == 0) & (z.real >= 0)):
            raise BranchCutError("theta_1 is not defined on [0, oo)")
        w, r, s = -z, p.r1, p.s1
    elif which == 2:
        if np.any((z.imag == 0) & (z.real <= 0)):
            raise BranchCutError("theta_2 is not defined on (-oo, 0]")
        w, r, s = z, p.r2, p.s2
    else:
        raise InvalidArgumentError("which must be 1 or 2")
    out = 2.0 / 3.0 * r * w**1.5 + 2.0 * s * w**0.5
    return out[()] if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# coefficient matrices

def _check_quadruple(p, pq):
    t = derive_constants(p).t
    if abs(pq.t - t) > _T_MATCH * max(1.0, abs(t)):
        raise InvalidArgumentError(f"Painleve data given at t={pq.t}, parameters need t={t}")


def u_matrix(p: TacnodeParams, pq: PainleveQuadruple, z) -> np.ndarray:
    """The 4x4 coefficient matrix U(z) of m' = U m (shape (..., 4, 4))."""
    _check_quadruple(p, pq)
    k = derive_constants(p)
    r1, r2, s1, s2, tau = p.r1, p.r2, p.s1, p.s2, p.tau
    C, g = k.C, k.gamma
    q, u = pq.q, pq.u
    dq = pq.p - pq.u * pq.q
    z = np.asarray(z, dtype=complex)
    U = np.zeros(z.shape + (4, 4), dtype=complex)
    mixed = np.sqrt(r1 * r2) * C * (dq + u * q) \
        - (r1**2 * s2**2 + r2**2 * s1**2) / (r1 * r2) ** 1.5 * q / C
    U[..., 0, 0] = tau - s1**2 + u / C
    U[..., 0, 1] = np.sqrt(r2) * q / (g * np.sqrt(r1) * C)
    U[..., 0, 2] = 1j * r1
    U[..., 1, 0] = -g * np.sqrt(r1) * q / (np.sqrt(r2) * C)
    U[..., 1, 1] = -tau + s2**2 - u / C
    U[..., 1, 3] = 1j * r2
    U[..., 2, 0] = 1j * (r1 * z - 2 * s1 + s1**4 / r1 - 2 * s1**2 * u / (r1 * C)
                         + (u * u - q * q) / (r1 * C * C))
    U[..., 2, 1] = 1j / g * mixed
    U[..., 2, 2] = tau + s1**2 - u / C
    U[..., 2, 3] = np.sqrt(r1) * q / (g * np.sqrt(r2) * C)
    U[..., 3, 0] = 1j * g * mixed
    U[..., 3, 1] = 1j * (-r2 * z - 2 * s2 + s2**4 / r2 - 2 * s2**2 * u / (r2 * C)
                         + (u * u - q * q) / (r2 * C * C))
    U[..., 3, 2] = -g * np.sqrt(r2) * q / (np.sqrt(r1) * C)
    U[..., 3, 3] = -tau - s2**2 + u / C
    return U


def ab_matrices(p: TacnodeParams, pq: PainleveQuadruple, z):
    """A and B(z) of the second order system psi'' = A psi' + B psi."""
    _check_quadruple(p, pq)
    k = derive_constants(p)
    r1, r2, s1, s2 = p.r1, p.r2, p.s1, p.s2
    C, mu, q = k.C, k.mu, pq.q
    dq = pq.p - pq.u * pq.q
    z = np.asarray(z, dtype=complex)
    A = np.array([[2 * r1**2 * mu, C * C * r1**2 * q],
                  [-C * C * r2**2 * q, -2 * r2**2 * mu]], dtype=complex)
    B = np.zeros(z.shape + (2, 2), dtype=complex)
    B[..., 0, 0] = -r1**2 * z + 2 * r1 * s1 + C * r1**2 * q * q - r1**4 * mu**2
    B[..., 0, 1] = -C * r1**2 * dq
    B[..., 1, 0] = -C * r2**2 * dq
    B[..., 1, 1] = r2**2 * z + 2 * r2 * s2 + C * r2**2 * q * q - r2**4 * mu**2
    return A, B


# ----------------------------------------------------------------------------
# the six solutions

# rotation index k of y_k, and which ray the integral runs along
_ROTATION = {0: 0, 1: 1, 2: 2, 3: 0, 4: 1, 5: 2}
_RAY = {0: 0, 3: 0, 2: 1, 5: 1, 1: -1, 4: -1}
_SIGN = {0: 1.0, 1: -1.0, 2: -1.0, 3: 1.0, 4: 1.0, 5: 1.0}


def f_factor(j: int, p: TacnodeParams, z):
    """F_j(z) and F_j'(z).

    Even j use (r2, s2), odd j use (r1, s1); F_j(z) = y_k(r^{2/3} z + 2s/r^{1/3}) e^{-r^2 mu z}.
    """
    if j not in _ROTATION:
        raise InvalidArgumentError(f"solution index must be 0..5, got {j!r}")
    r, s = (p.r2, p.s2) if j % 2 == 0 else (p.r1, p.s1)
    mu = derive_constants(p).mu
    rot = OMEGA ** _ROTATION[j]
    z = np.asarray(z, dtype=complex)
    arg = r ** (2.0 / 3.0) * z + 2.0 * s / r ** (1.0 / 3.0)
    ai, aip = ai_and_prime(rot * arg)
    ex = np.exp(-r * r * mu * z)
    val = rot * ai * ex
    der = (rot * rot * r ** (2.0 / 3.0) * aip - r * r * mu * rot * ai) * ex
    return val, der


@dataclass(frozen=True)
class SolutionVector:
    """One solution m of m' = U m at ``z``; ``d_m1``, ``d_m2`` are exact z-derivatives."""

    z: complex
    m1: complex
    m2: complex
    m3: complex
    m4: complex
    d_m1: complex
    d_m2: complex

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.m3, self.m4])


class TacnodeSystem:
    """Parameters bound to the resolvent at their ``t``.

    All evaluations are pure; the object only caches the derived constants
    and the Painleve data read from the resolvent.
    """

    def __init__(self, params: TacnodeParams, res: AiryResolvent | None = None,
                 config: QuadratureConfig | None = None):
        self.params = params
        self.const = derive_constants(params)
        if res is None:
            res = build_resolvent(self.const.t, config)
        if abs(res.t - self.const.t) > _T_MATCH * max(1.0, abs(self.const.t)):
            raise InvalidArgumentError(
                f"resolvent built at t={res.t}, parameters need t={self.const.t}")
        self.res = res
        self.pq = res.boundary()

    def flipped(self) -> "TacnodeSystem":
        """System for tau -> -tau; t only depends on tau^2 so the resolvent is shared."""
        return TacnodeSystem(self.params.flipped(), self.res)

    def U(self, z):
        return u_matrix(self.params, self.pq, z)

    # -- solutions ---------------------------------------------------------
    def _ray_sums(self, j, w):
        """Contour sums of F_j(w + C(x - t)) against Q_t and R_t(., t) and their w-derivatives."""
        offsets, weights, qx, rx = self.res.ray(_RAY[j])
        C = self.const.C
        panel = self.res.config.panel_nodes
        n_panels = offsets.size // panel
        sums = np.zeros((4, w.size), dtype=complex)
        scale = np.zeros(w.size)
        quiet = np.zeros(w.size, dtype=int)
        last = np.zeros(w.size)
        active = np.ones(w.size, dtype=bool)
        for start in range(0, n_panels, 4):
            sl = slice(start * panel, min(n_panels, start + 4) * panel)
            idx = np.nonzero(active)[0]
            if idx.size == 0:
                break
            arg = w[idx, None] + C * offsets[None, sl]
            val, der = f_factor(j, self.params, arg)
            wq = weights[sl] * qx[sl]
            wr = weights[sl] * rx[sl]
            terms = np.stack([val * wq, val * wr, der * wq, der * wr])
            sums[:, idx] += terms.sum(axis=-1)
            mag = np.abs(terms).max(axis=0).reshape(idx.size, -1, panel).max(axis=-1)
            for col, i in enumerate(idx):
                for pm in mag[col]:
                    scale[i] = max(scale[i], pm)
                    quiet[i] = quiet[i] + 1 if pm <= _TAIL_REL * scale[i] else 0
                last[i] = mag[col, -1]
                active[i] = quiet[i] < 3
        if np.any(active & (last > _CAP_REL * scale)):
            raise ConvergenceError(
                f"contour integral for m^({j}) did not decay within the ray cap "
                f"{self.res.config.ray_cap}")
        return sums

    def m_components(self, j: int, z):
        """Components (m1, m2, m3, m4) and (m1', m2') of m^(j) on an array of z.

        Returns an array of shape ``(6,) + z.shape``.
        """
        if j not in _ROTATION:
            raise InvalidArgumentError(f"solution index must be 0..5, got {j!r}")
        p, k, pq = self.params, self.const, self.pq
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        sign = 1.0 if j % 2 == 0 else -1.0
        w = sign * flat
        f0, df0 = f_factor(j, p, w)
        iq, ir, diq, dir_ = self._ray_sums(j, w)
        r = p.r2 if j % 2 == 0 else p.r1
        pref = _SIGN[j] * SQRT_2PI * r ** (1.0 / 6.0) * np.exp(k.lam * flat)
        ratio = np.sqrt(p.r2) / (k.gamma * np.sqrt(p.r1))
        if j % 2 == 0:
            g1, dg1 = -ratio * iq, -ratio * diq
            g2, dg2 = f0 + ir, df0 + dir_
        else:
            # d/dz of F(-z + ...) is -F'(...)
            g1, dg1 = f0 + ir, -(df0 + dir_)
            g2, dg2 = -iq / ratio, diq / ratio
        m1 = pref * g1
        m2 = pref * g2
        dm1 = pref * (k.lam * g1 + dg1)
        dm2 = pref * (k.lam * g2 + dg2)
        C, g, q, u = k.C, k.gamma, pq.q, pq.u
        a11 = p.tau - p.s1**2 + u / C
        a12 = np.sqrt(p.r2) * q / (g * np.sqrt(p.r1) * C)
        a21 = -g * np.sqrt(p.r1) * q / (np.sqrt(p.r2) * C)
        a22 = -p.tau + p.s2**2 - u / C
        m3 = (dm1 - a11 * m1 - a12 * m2) / (1j * p.r1)
        m4 = (dm2 - a21 * m1 - a22 * m2) / (1j * p.r2)
        out = np.stack([m1, m2, m3, m4, dm1, dm2])
        if np.any(np.abs(out[:4]).max(axis=0) < _UNDERFLOW):
            warnings.warn(f"m^({j}) underflows near |z| = {np.abs(flat).max():.3g}; "
                          "values are not reliable", PrecisionWarning, stacklevel=2)
        return out.reshape((6,) + z.shape)

    def m(self, j: int, z):
        """m^(j)(z) as a 4-vector (or array with components along the first axis)."""
        return self.m_components(j, z)[:4]

    def solution(self, j: int, z) -> SolutionVector:
        c = self.m_components(j, complex(z))
        return SolutionVector(complex(z), *(complex(v) for v in c))

    def all_m(self, z):
        """Stack of the six solutions, shape ``(6, 4) + z.shape``."""
        return np.stack([self.m(j, z) for j in range(6)])

    # -- sectors -----------------------------------------------------------
    def sector_matrix(self, k: int, z) -> np.ndarray:
        """The sector formula for Omega_k evaluated (analytically continued) at ``z``."""
        if k not in range(6):
            raise InvalidArgumentError(f"sector index must be 0..5, got {k!r}")
        need = sorted({abs(j) for col in _SECTORS[k] for j, _ in col})
        ms = {j: self.m(j, z) for j in need}
        cols = [sum(c * ms[j] for j, c in col) for col in _SECTORS[k]]
        return np.stack(cols, axis=1)

    def M(self, z) -> np.ndarray:
        """M(z) off the contour, shape (4, 4)."""
        z = complex(z)
        return self.sector_matrix(sector_of(z), z)

    def M_inverse(self, z) -> np.ndarray:
        """M(z)^{-1} through the tau -> -tau symmetry (no matrix inversion)."""
        z = complex(z)
        Mf = self.flipped().M(z)
        return _S_LEFT @ Mf.T @ _S_RIGHT

    def psi(self, z):
        """psi = e^{-lambda z} (gamma sqrt(r1/r2) m1, m2) for each of the six solutions."""
        k = self.const
        z = np.asarray(z, dtype=complex)
        out = np.empty((6, 2) + z.shape, dtype=complex)
        for j in range(6):
            m = self.m(j, z)
            out[j] = psi_from_m(self.params, m[:2], z, k)
        return out

    def consistency_defect(self, z) -> float:
        """max |m0 + m3 - (m1 - m5)|, |m1 - m5 - (m2 - m4)| relative to max |m|."""
        ms = self.all_m(z)
        a = ms[0] + ms[3]
        b = ms[1] - ms[5]
        c = ms[2] - ms[4]
        scale = max(1.0, float(np.abs(ms).max()))
        return float(max(np.abs(a - b).max(), np.abs(b - c).max()) / scale)


def psi_from_m(p: TacnodeParams, m12, z, const: DerivedConstants | None = None):
    """Map (m1, m2) to the 2-vector psi of the second order system."""
    k = const or derive_constants(p)
    z = np.asarray(z, dtype=complex)
    e = np.exp(-k.lam * z)
    return np.stack([e * k.gamma * np.sqrt(p.r1 / p.r2) * m12[0], e * m12[1]])


def m_from_psi(p: TacnodeParams, psi, z, const: DerivedConstants | None = None):
    """Inverse of :func:`psi_from_m`."""
    k = const or derive_constants(p)
    z = np.asarray(z, dtype=complex)
    e = np.exp(k.lam * z)
    return np.stack([e * psi[0] / (k.gamma * np.sqrt(p.r1 / p.r2)), e * psi[1]])


# column recipes per sector: list of (solution index, coefficient)
_SECTORS = {
    0: [[(5, -1)], [(0, 1)], [(1, 1)], [(2, 1), (1, -1)]],
    1: [[(3, 1)], [(0, 1)], [(1, 1)], [(2, 1)]],
    2: [[(3, 1)], [(4, -1)], [(1, 1), (2, -1)], [(2, 1)]],
    3: [[(3, 1)], [(2, 1)], [(5, 1), (4, -1)], [(4, 1)]],
    4: [[(3, 1)], [(0, 1)], [(5, 1)], [(4, 1)]],
    5: [[(1, 1)], [(0, 1)], [(5, 1)], [(4, 1), (5, -1)]],
}

_JUMPS = {
    0: [[0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0], [0, 0, 0, 1]],
    1: [[1, 0, 0, 0], [-1, 1, 0, 0], [1, 0, 1, 1], [0, 0, 0, 1]],
    2: [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, -1, -1, 1]],
    3: [[1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0]],
    4: [[1, -1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, -1, 1, 1]],
    5: [[1, 0, 0, 0], [1, 1, 0, 0], [1, 0, 1, -1], [0, 0, 0, 1]],
}

_I2 = np.eye(2)
_Z2 = np.zeros((2, 2))
_S_LEFT = np.block([[_Z2, -_I2], [_I2, _Z2]])
_S_RIGHT = np.block([[_Z2, _I2], [-_I2, _Z2]])
ON_CONTOUR_TOL = 1e-10


def jump_matrix(k: int) -> np.ndarray:
    """Jump J_k on the ray arg z = k pi / 3, oriented outward: M_+ = M_- J_k."""
    if k not in _JUMPS:
        raise InvalidArgumentError(f"ray index must be 0..5, got {k!r}")
    return np.array(_JUMPS[k], dtype=float)


def sector_of(z: complex) -> int:
    """Index k of the sector kpi/3 < arg z < (k+1)pi/3; raises on the contour."""
    z = complex(z)
    if not np.isfinite(z):
        raise InvalidArgumentError("z must be finite")
    tol = ON_CONTOUR_TOL * max(1.0, abs(z))
    if abs(z) <= tol:
        raise OnContourError("z is at the origin, where all rays meet")
    ang = np.angle(z) % (2 * np.pi)
    k = int(ang // (np.pi / 3)) % 6
    for edge in (k, k + 1):
        ray = np.exp(1j * edge * np.pi / 3)
        along = (z * np.conj(ray)).real
        if along > 0 and abs((z * np.conj(ray)).imag) <= tol:
            raise OnContourError(f"z = {z} lies on the ray arg z = {edge % 6}pi/3")
    return k


def _system(p: TacnodeParams, res: AiryResolvent | None) -> TacnodeSystem:
    return TacnodeSystem(p, res)


def m_solution(j: int, p: TacnodeParams, res: AiryResolvent | None, z) -> SolutionVector:
    """The solution m^(j) at a single point ``z``."""
    return _system(p, res).solution(j, z)


def consistency_defect(p: TacnodeParams, res: AiryResolvent | None, z):
    """``(m0 + m3) - (m1 - m5)`` and ``(m0 + m3) - (m2 - m4)`` at ``z``; both vanish."""
    ms = _system(p, res).all_m(complex(z))
    hat = ms[0] + ms[3]
    return hat - (ms[1] - ms[5]), hat - (ms[2] - ms[4])


def assemble_M(p: TacnodeParams, res: AiryResolvent | None, z) -> np.ndarray:
    """M(z) for z off the six rays."""
    return _system(p, res).M(z)


def m_inverse(p: TacnodeParams, res: AiryResolvent | None, z,
              res_flipped: AiryResolvent | None = None) -> np.ndarray:
    """M(z)^{-1} from M(z; -tau). ``res_flipped`` defaults to ``res`` (t depends on tau^2 only)."""
    system = _system(p, res)
    other = TacnodeSystem(p.flipped(), res_flipped or system.res)
    return _S_LEFT @ other.M(z).T @ _S_RIGHT


def monodromy() -> np.ndarray:
    """J1 J2 J3 J4 J5 J0 as an integer matrix; the identity for a consistent jump set."""
    out = np.eye(4, dtype=int)
    for k in (1, 2, 3, 4, 5, 0):
        out = out @ np.array(_JUMPS[k], dtype=int)
    return out


def swap_symmetry_defect(params: TacnodeParams, z, config: QuadratureConfig | None = None) -> float:
    """|m^(3)(z) - diag(J, -J) m^(0)(-z; swapped)| relative to |m^(3)(z)|."""
    a = TacnodeSystem(params, config=config)
    b = TacnodeSystem(params.swapped(), a.res)
    m3 = a.m(3, complex(z))
    m0 = b.m(0, -complex(z))
    P = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, -1, 0]])
    return float(np.linalg.norm(m3 - P @ m0) / np.linalg.norm(m3))
