"""Biot model quantities, wave speeds and the P-wave eigenbasis."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh

from .errors import MaterialError

MODES = ("Pf", "Ps", "S")


@dataclass(frozen=True)
class PoroelasticLayer:
    """Raw physical parameters of one homogeneous half-space (SI units)."""

    rho_s: float
    rho_f: float
    phi: float
    a: float
    K_s: float
    K_f: float
    K_b: float
    mu: float

    def __post_init__(self):
        if not 0.0 < self.phi < 1.0:
            raise MaterialError(f"unphysical material: porosity must satisfy 0 < phi < 1 (got {self.phi})")
        if self.a < 1.0:
            raise MaterialError(f"unphysical material: tortuosity must satisfy a >= 1 (got {self.a})")
        for name in ("rho_s", "rho_f", "K_s", "K_f", "K_b", "mu"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise MaterialError(f"unphysical material: {name} must be > 0 (got {value})")
        if self.K_b > self.K_s:
            raise MaterialError(f"unphysical material: K_b <= K_s violated ({self.K_b} > {self.K_s})")


@dataclass(frozen=True)
class DerivedLayer:
    rho: float
    rho_f: float
    rho_w: float
    beta: float
    m: float
    lam: float
    mu: float
    alpha: float
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)
    V_Pf: float = 0.0
    V_Ps: float = 0.0
    V_S: float = 0.0
    P: np.ndarray = field(default=None, repr=False)
    P_inv: np.ndarray = field(default=None, repr=False)

    def speed(self, mode: str) -> float:
        return {"Pf": self.V_Pf, "Ps": self.V_Ps, "S": self.V_S}[mode]

    @property
    def speeds(self) -> tuple[float, float, float]:
        return (self.V_Pf, self.V_Ps, self.V_S)


@dataclass(frozen=True)
class SourceAmplitudes:
    f_u: float = 0.0
    f_w: float = 0.0
    f_p: float = 0.0


@dataclass(frozen=True)
class ModalAmplitudes:
    F_Pf: float
    F_Ps: float

    def of(self, mode: str) -> float:
        return self.F_Pf if mode == "Pf" else self.F_Ps


def _normalize_columns(P: np.ndarray) -> np.ndarray:
    P = P / np.linalg.norm(P, axis=0)
    for j in range(2):
        lead = P[0, j] if P[0, j] != 0.0 else P[1, j]
        if lead < 0.0:
            P[:, j] = -P[:, j]
    return P


def derive_layer(layer: PoroelasticLayer) -> DerivedLayer:
    """Compute densities, moduli, mass/stiffness matrices, speeds and P.

    Columns of ``P`` are unit vectors with a positive leading entry; column 0
    belongs to the fast wave.
    """
    rho_f = layer.rho_f
    rho = layer.phi * rho_f + (1.0 - layer.phi) * layer.rho_s
    rho_w = layer.a * rho_f / layer.phi
    beta = 1.0 - layer.K_b / layer.K_s
    m = 1.0 / (layer.phi / layer.K_f + (beta - layer.phi) / layer.K_s)
    lam = layer.K_b - 2.0 * layer.mu / 3.0
    mu = layer.mu
    alpha = lam + 2.0 * mu + m * beta**2

    A = np.array([[rho, rho_f], [rho_f, rho_w]])
    B = np.array([[alpha, m * beta], [m * beta, m]])
    det_a = rho * rho_w - rho_f**2
    if det_a <= 0.0:
        raise MaterialError("unphysical material: rho*rho_w - rho_f^2 > 0 violated")
    if m <= 0.0:
        raise MaterialError("unphysical material: fluid-storage modulus m > 0 violated")
    if np.linalg.det(B) <= 0.0 or alpha <= 0.0:
        raise MaterialError("unphysical material: stiffness matrix B is not positive definite")

    # B x = s^2 A x; eigh returns ascending eigenvalues
    eigval, eigvec = eigh(B, A)
    if abs(eigval[1] - eigval[0]) <= 1e-12 * abs(eigval[1]):
        raise MaterialError("degenerate P-modes: V_Pf equals V_Ps")
    order = [1, 0]
    P = _normalize_columns(eigvec[:, order].copy())
    V_Pf, V_Ps = np.sqrt(eigval[order])
    V_S = np.sqrt(mu * rho_w / det_a)
    return DerivedLayer(rho=rho, rho_f=rho_f, rho_w=rho_w, beta=beta, m=m, lam=lam,
                        mu=mu, alpha=alpha, A=A, B=B, V_Pf=float(V_Pf), V_Ps=float(V_Ps),
                        V_S=float(V_S), P=P, P_inv=np.linalg.inv(P))


def scale_columns(layer: DerivedLayer, c1: float = 1.0, c2: float = 1.0) -> DerivedLayer:
    """Return a copy with the eigenvector columns multiplied by ``c1``, ``c2``.

    Physical fields must not change; used to test normalization independence.
    """
    P = layer.P * np.array([c1, c2])
    return replace(layer, P=P, P_inv=np.linalg.inv(P))


def project_source(top: DerivedLayer, s: SourceAmplitudes) -> ModalAmplitudes:
    """Modal strengths F = (A P)^-1 (f_u - beta m f_p, f_w - m f_p)."""
    rhs = np.array([s.f_u - top.beta * top.m * s.f_p, s.f_w - top.m * s.f_p])
    F = np.linalg.solve(top.A @ top.P, rhs)
    if not np.all(np.isfinite(F)):
        raise MaterialError("internal error: singular A P in source projection")
    return ModalAmplitudes(float(F[0]), float(F[1]))
