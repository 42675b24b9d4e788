"""The 6x6 interface system and its reflection/transmission solutions.

Unknown ordering is (R_Pf, R_Ps, R_S, T_Pf, T_Ps, T_S).  All functions accept
array-valued slownesses and broadcast over them; the trailing axes hold the
matrix or vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularSystemError
from .kinematics import kappa
from .material import DerivedLayer

COND_LIMIT = 1e13
UNKNOWNS = ("R_Pf", "R_Ps", "R_S", "T_Pf", "T_Ps", "T_S")


@dataclass(frozen=True)
class SlownessPoint:
    q_x: complex
    q_y: float


@dataclass(frozen=True)
class WaveCoefficients:
    R_Pf: complex
    R_Ps: complex
    R_S: complex
    T_Pf: complex
    T_Ps: complex
    T_S: complex
    incidence: str

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in UNKNOWNS])


def _kappas(layer: DerivedLayer, qx, qy):
    return (kappa(layer.V_Pf, qx, qy), kappa(layer.V_Ps, qx, qy), kappa(layer.V_S, qx, qy))


def _normal_stress(layer: DerivedLayer, col: int, V: float, k):
    P = layer.P
    bulk = ((layer.lam + layer.m * layer.beta**2) * P[0, col] + layer.m * layer.beta * P[1, col]) / V**2
    return bulk + 2.0 * layer.mu * k**2 * P[0, col]


def assemble_matrix(qx, qy, top: DerivedLayer, bottom: DerivedLayer) -> np.ndarray:
    return _matrix(qx, qy, top, bottom, strip=False)


def _matrix(qx, qy, top, bottom, strip):
    # strip=True divides rows 1 and 5 by their common factor i*q_x
    qx = np.asarray(qx, dtype=complex)
    qy = np.asarray(qy, dtype=float)
    qx, qy = np.broadcast_arrays(qx, qy)
    kf_t, ks_t, kS_t = _kappas(top, qx, qy)
    kf_b, ks_b, kS_b = _kappas(bottom, qx, qy)
    Pt, Pb = top.P, bottom.P
    q2 = qx * qx + qy**2
    iqx = np.ones_like(qx) if strip else 1j * qx
    zero = np.zeros_like(qx)

    def pressure(layer, col, V):
        return layer.m / V**2 * (layer.beta * layer.P[0, col] + layer.P[1, col])

    rows = [
        [-iqx * Pt[0, 0], -iqx * Pt[0, 1], iqx * kS_t, iqx * Pb[0, 0], iqx * Pb[0, 1], iqx * kS_b],
        [-kf_t * Pt[0, 0], -ks_t * Pt[0, 1], q2, -kf_b * Pb[0, 0], -ks_b * Pb[0, 1], -q2],
        [-kf_t * Pt[1, 0], -ks_t * Pt[1, 1], -q2 * top.rho_f / top.rho_w,
         -kf_b * Pb[1, 0], -ks_b * Pb[1, 1], q2 * bottom.rho_f / bottom.rho_w],
        [pressure(top, 0, top.V_Pf) + zero, pressure(top, 1, top.V_Ps) + zero, zero,
         -pressure(bottom, 0, bottom.V_Pf) + zero, -pressure(bottom, 1, bottom.V_Ps) + zero, zero],
        [2 * iqx * top.mu * kf_t * Pt[0, 0], 2 * iqx * top.mu * ks_t * Pt[0, 1],
         -top.mu * iqx * (kS_t**2 + q2),
         2 * iqx * bottom.mu * kf_b * Pb[0, 0], 2 * iqx * bottom.mu * ks_b * Pb[0, 1],
         bottom.mu * iqx * (kS_b**2 + q2)],
        [_normal_stress(top, 0, top.V_Pf, kf_t), _normal_stress(top, 1, top.V_Ps, ks_t),
         -2.0 * q2 * top.mu * kS_t,
         -_normal_stress(bottom, 0, bottom.V_Pf, kf_b), -_normal_stress(bottom, 1, bottom.V_Ps, ks_b),
         -2.0 * q2 * bottom.mu * kS_b],
    ]
    M = np.empty(qx.shape + (6, 6), dtype=complex)
    for i, row in enumerate(rows):
        for j, entry in enumerate(row):
            M[..., i, j] = entry
    return M


def assemble_rhs(qx, qy, incidence: str, top: DerivedLayer) -> np.ndarray:
    """Right-hand side for a unit-strength incident Pf or Ps potential."""
    return _rhs(qx, qy, incidence, top, strip=False)


def _rhs(qx, qy, incidence, top, strip):
    qx = np.asarray(qx, dtype=complex)
    qy = np.asarray(qy, dtype=float)
    qx, qy = np.broadcast_arrays(qx, qy)
    col = 0 if incidence == "Pf" else 1
    V = top.V_Pf if col == 0 else top.V_Ps
    k = kappa(V, qx, qy)
    if np.any(k == 0):
        raise SingularSystemError("grazing incidence singularity: incident kappa vanishes", q=(qx, qy))
    P = top.P
    pref = 1.0 / (2.0 * k * V**2)
    pressure = top.m / V**2 * (top.beta * P[0, col] + P[1, col])
    b = np.empty(qx.shape + (6,), dtype=complex)
    iqx = np.ones_like(qx) if strip else 1j * qx
    b[..., 0] = iqx * P[0, col]
    b[..., 1] = -k * P[0, col]
    b[..., 2] = -k * P[1, col]
    b[..., 3] = -pressure
    b[..., 4] = 2 * iqx * top.mu * k * P[0, col]
    b[..., 5] = -_normal_stress(top, col, V, k)
    return b * pref[..., None]


def coefficient_array(qx, qy, incidence: str, top: DerivedLayer, bottom: DerivedLayer,
                      check_condition: bool = False) -> np.ndarray:
    """Solve the interface system at every slowness; returns shape (..., 6).

    Rows 1 and 5 are divided by i*q_x before solving.  This leaves the
    solution unchanged for q_x != 0 and gives the regular limit at q_x = 0,
    where the printed rows vanish identically.
    """
    M = _matrix(qx, qy, top, bottom, strip=True)
    b = _rhs(qx, qy, incidence, top, strip=True)
    # power-of-two equilibration: exact in floating point, removes the
    # ~1e13 spread between kinematic and stress rows
    r = _pow2(np.abs(M).max(axis=-1))
    M = M * r[..., :, None]
    b = b * r
    c = _pow2(np.abs(M).max(axis=-2))
    M = M * c[..., None, :]
    if check_condition:
        cond = np.linalg.cond(M, p=1)
        bad = ~(cond <= COND_LIMIT)
        if np.any(bad):
            idx = np.unravel_index(np.argmax(np.where(bad, 1, 0)), bad.shape)
            raise SingularSystemError(
                f"near-singular interface system (cond={cond[idx]:.3e}) at "
                f"q=({np.asarray(qx)[idx] if np.ndim(qx) else qx}, "
                f"{np.asarray(qy)[idx] if np.ndim(qy) else qy})", q=idx)
    try:
        x = np.linalg.solve(M, b[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(f"near-singular interface system: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("near-singular interface system: non-finite solution")
    return x * c


def _pow2(scale):
    scale = np.where(scale > 0, scale, 1.0)
    return np.exp2(-np.round(np.log2(scale)))


def backward_error(M: np.ndarray, x: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Normwise residual ||Mx - b|| / (||M|| ||x|| + ||b||), infinity norms."""
    r = np.einsum("...ij,...j->...i", M, x) - b
    nM = np.abs(M).sum(axis=-1).max(axis=-1)
    return np.abs(r).max(axis=-1) / (nM * np.abs(x).max(axis=-1) + np.abs(b).max(axis=-1))


def solve_coefficients(q: SlownessPoint, incidence: str, top: DerivedLayer,
                       bottom: DerivedLayer, check_condition: bool = True) -> WaveCoefficients:
    x = coefficient_array(q.q_x, q.q_y, incidence, top, bottom, check_condition)
    return WaveCoefficients(*(complex(v) for v in x), incidence=incidence)
