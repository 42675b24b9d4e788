"""Solid-displacement Green functions at a receiver.

Each scattered family contributes

    u = (1/pi^2) int Re[K(g, q) dg/dt] dq

over the Cagniard contour, where K is the plane-wave displacement kernel of
the family (coefficient times mode polarization times the source strength).
On the head-wave branch the kernel is taken on the Re(q_x) > 0 side of the
cut, i.e. the complex conjugate of its value under the on-cut convention,
which makes the integrand continuous with the body-wave branch at q = q0(t).

All Green values are twice time-integrated impulse responses, matching the
closed-form incident fields.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import cagniard as cg
from .coefficients import coefficient_array
from .errors import DomainError, QuadratureError
from .kinematics import kappa
from .material import (DerivedLayer, ModalAmplitudes, PoroelasticLayer, SourceAmplitudes,
                       derive_layer, project_source)

SLOT = {("reflected", "Pf"): 0, ("reflected", "Ps"): 1, ("reflected", "S"): 2,
        ("transmitted", "Pf"): 3, ("transmitted", "Ps"): 4, ("transmitted", "S"): 5}
TOP_WAVES = ("Pf", "Ps", "PfPf", "PfPs", "PfS", "PsPf", "PsPs", "PsS")
BOTTOM_WAVES = ("PfPf", "PfPs", "PfS", "PsPf", "PsPs", "PsS")


@dataclass(frozen=True)
class Receiver:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.z == 0.0:
            raise DomainError("receivers on the interface are not supported")

    @property
    def side(self) -> str:
        return "top" if self.z > 0 else "bottom"

    @property
    def offset(self) -> float:
        return float(np.hypot(self.x, self.y))


@dataclass(frozen=True)
class GreenSample:
    t: float
    u_x: float
    u_z: float
    waves: dict = field(default_factory=dict)


@dataclass(frozen=True)
class Problem:
    """Layers, source height and modal source strengths, plus quadrature settings."""

    top: DerivedLayer
    bottom: DerivedLayer
    h: float
    modal: ModalAmplitudes
    rtol: float = 1e-10
    check_condition: bool = False
    source: SourceAmplitudes | None = None

    @classmethod
    def build(cls, top: PoroelasticLayer, bottom: PoroelasticLayer, h: float,
              source: SourceAmplitudes, **kw) -> "Problem":
        dtop = derive_layer(top)
        return cls(dtop, derive_layer(bottom), h, project_source(dtop, source),
                   source=source, **kw)

    @cached_property
    def speeds(self) -> tuple[float, ...]:
        return self.top.speeds + self.bottom.speeds

    def pairs(self, receiver: Receiver) -> list[cg.WavePair]:
        return cg.make_pairs(self.top, self.bottom, self.h, receiver.offset, receiver.z)

    def wave_names(self, receiver: Receiver) -> tuple[str, ...]:
        return TOP_WAVES if receiver.side == "top" else BOTTOM_WAVES


# -- incident field ----------------------------------------------------------

def incident_green(mode: str, modal: ModalAmplitudes, top: DerivedLayer, receiver: Receiver,
                   t, h: float):
    """Closed-form direct wave of mode Pf or Ps at an in-plane receiver (x >= 0, y = 0)."""
    if receiver.side != "top":
        raise DomainError("incident waves only exist in the top medium")
    x = receiver.offset
    dz = receiver.z - h
    r = np.hypot(x, dz)
    if r == 0.0:
        raise DomainError("singular point: receiver at the source")
    col = 0 if mode == "Pf" else 1
    V = top.speed(mode)
    t = np.asarray(t, dtype=float)
    amp = -top.P[0, col] * modal.of(mode) / V**2 * t * (t >= r / V) / (4.0 * np.pi * r**3)
    return amp * x, amp * dz


def incident_arrival(mode: str, top: DerivedLayer, receiver: Receiver, h: float) -> float:
    return float(np.hypot(receiver.offset, receiver.z - h) / top.speed(mode))


# -- scattered fields --------------------------------------------------------

class _Family:
    """Kernel evaluation for one scattered family at one receiver."""

    def __init__(self, pair: cg.WavePair, problem: Problem):
        self.pair = pair
        self.problem = problem
        self.slot = SLOT[(pair.side, pair.outgoing)]
        self.F = problem.modal.of(pair.incidence)
        self.win = cg.head_window(pair)
        lay = problem.top if pair.side == "reflected" else problem.bottom
        self.out_layer = lay
        if pair.outgoing != "S":
            self.pol = lay.P[0, 0 if pair.outgoing == "Pf" else 1]
        # natural amplitude used as the absolute quadrature floor
        self.scale = abs(self.F) * (abs(problem.top.P).max() + 1.0) / (
            4.0 * np.pi * pair.V1**2 * pair.r**2) * self.win.t0

    def kernel(self, g, q):
        """(K_x, K_z) at contour points g, transverse slownesses q."""
        p = self.problem
        c = coefficient_array(g, q, self.pair.incidence, p.top, p.bottom, p.check_condition)
        coef = self.F * c[:, self.slot]
        V = self.out_layer.speed(self.pair.outgoing)
        reflected = self.pair.side == "reflected"
        if self.pair.outgoing == "S":
            k = kappa(V, g, q)
            kx = (1j if reflected else -1j) * g * k * coef
            kz = (g * g + q * q) * coef
        else:
            k = kappa(V, g, q)
            kx = -1j * g * self.pol * coef
            kz = (-k if reflected else k) * self.pol * coef
        return kx, kz

    # integrands in the mapped variables; each returns shape (2, n).  The
    # radical (q0 cos, q0 sinh or qs cosh of the map variable) is known
    # exactly, so it is handed to the path solver as an exact time gap.

    def _gap(self, t, q, rad2, sign):
        pair = self.pair
        if pair.same_speed:
            rr = pair.r**2 * rad2
            return sign * rr / (t + np.sqrt(t * t + sign * rr))
        if sign > 0 and not self.after:
            return cg.tilde_t0(pair, q) - t
        return cg.path_gap(pair, t, q, sign * rad2)

    def body(self, t, q0, theta):
        q = q0 * np.sin(theta)
        rad = q0 * np.cos(theta)
        pair = self.pair
        g, dg = cg.gamma_nodes(pair, t, q, gap=self._gap(t, q, rad * rad, -1.0))
        if pair.same_speed:
            r = pair.r
            weighted = ((pair.h + pair.z) * t / r**2 - 1j * pair.x * rad / r) / r
        else:
            weighted = dg * rad
        kx, kz = self.kernel(g, q)
        return np.array([(kx * weighted).real, (kz * weighted).real]) / np.pi**2

    def head(self, t, q, rad):
        """Head-branch integrand; rad is dq/du, which equals the inverse-root factor."""
        pair = self.pair
        v, dv = cg.v_nodes(pair, t, q, gap=self._gap(t, q, rad * rad, 1.0))
        if pair.same_speed:
            r = pair.r
            d = -1j * ((pair.h + pair.z) * t / r**2 + pair.x * rad / r) / r
        else:
            d = dv * rad
        kx, kz = self.kernel(v, q)
        return np.array([(np.conj(kx) * d).real, (np.conj(kz) * d).real]) / np.pi**2

    def evaluate(self, t: float) -> np.ndarray:
        win = self.win
        pair = self.pair
        if win.head_exists:
            if t <= win.t_h1:
                return np.zeros(2)
            if t <= win.t0:
                return self._head_part(t, before=True)
            total = self._body_part(t)
            if t <= win.t_h2:
                total = total + self._head_part(t, before=False)
            return total
        if t <= win.t0:
            return np.zeros(2)
        return self._body_part(t)

    def _tol(self, value):
        return self.problem.rtol * (np.abs(value).max() + self.scale)

    def _body_part(self, t):
        q0 = cg.q0_of_t(self.pair, t)
        if q0 == 0.0:
            return np.zeros(2)
        self.after = True
        return _adaptive(lambda th: self.body(t, q0, th), 0.0, np.pi / 2, self._tol,
                         smooth=(False, False), where=(self.pair, t, "body"))

    def _head_part(self, t, before):
        pair = self.pair
        q1 = cg.q1_of_t(pair, t)
        self.after = not before
        if before:
            if pair.same_speed:
                qs = np.sqrt(max(1.0 / pair.V1**2 - t * t / pair.r**2, 0.0))
            else:
                qs = np.sqrt(max(self.win.t0 - t, 0.0) / float(cg._curvature(pair, 0.0)[0]))
            if q1 <= 0.0 or qs <= 0.0:
                return np.zeros(2)
            to_u = lambda q: np.arcsinh(q / qs)
            f = lambda u: self.head(t, qs * np.sinh(u), qs * np.cosh(u))
            lo_q = 0.0
        else:
            q0 = cg.q0_of_t(pair, t)
            if q1 <= q0 or q0 <= 0.0:
                return np.zeros(2)
            to_u = lambda q: np.arccosh(max(q / q0, 1.0))
            f = lambda u: self.head(t, q0 * np.cosh(u), q0 * np.sinh(u))
            lo_q = q0
        cuts = [lo_q] + cg.branch_breaks(pair, t, self.problem.speeds, lo_q, q1) + [q1]
        edges = [float(to_u(q)) for q in cuts]
        total = np.zeros(2)
        for i, (ua, ub) in enumerate(zip(edges[:-1], edges[1:])):
            if ub > ua:
                total = total + _adaptive(f, ua, ub, self._tol, smooth=(i > 0, True),
                                          where=(pair, t, "head"))
        return total


_GL = {}


def _nodes(n):
    if n not in _GL:
        _GL[n] = np.polynomial.legendre.leggauss(n)
    return _GL[n]


def _adaptive(f, a, b, tol, smooth, where, depth=0):
    """Gauss-Legendre with node doubling, then bisection if needed.

    ``smooth`` = (left, right) selects ends to flatten with a polynomial map
    that removes square-root behaviour there: the cubic (2 + 3s - s^3)/4 for
    both ends, a quadratic for one.
    """
    n = 16
    prev = val = None
    while n <= 256:
        s, wts = _nodes(n)
        y, dy = _end_map(s, smooth)
        u = a + (b - a) * y
        val = (f(u) * (wts * dy * (b - a))).sum(axis=1)
        if prev is not None and np.abs(val - prev).max() <= tol(val):
            return val
        prev = val
        n *= 2
    if depth >= 8 or not np.all(np.isfinite(val)):
        pair, t, part = where
        raise QuadratureError(
            f"quadrature non-convergence ({pair.side} {pair.label}, {part} branch) at t={t}: "
            f"worst subinterval [{a}, {b}], estimate change {np.abs(val - prev).max():.3e}")
    m = 0.5 * (a + b)
    left, right = smooth
    return (_adaptive(f, a, m, tol, (left, False), where, depth + 1)
            + _adaptive(f, m, b, tol, (False, right), where, depth + 1))


def _end_map(s, smooth):
    # maps [-1, 1] onto [0, 1]; returns the point and its derivative
    left, right = smooth
    if left and right:
        return (2.0 + 3.0 * s - s**3) / 4.0, 3.0 * (1.0 - s * s) / 4.0
    p = 0.5 * (s + 1.0)
    if right:
        return 1.0 - (1.0 - p) ** 2, (1.0 - p)
    if left:
        return p * p, p
    return p, np.full_like(s, 0.5)


# -- receivers ----------------------------------------------------------------

class ReceiverModel:
    """All contributions at one receiver; window tables are built once."""

    def __init__(self, problem: Problem, receiver: Receiver):
        self.problem = problem
        self.receiver = receiver
        self.families = {p.label: _Family(p, problem) for p in problem.pairs(receiver)}

    @property
    def waves(self) -> tuple[str, ...]:
        return self.problem.wave_names(self.receiver)

    def arrivals(self) -> dict[str, cg.TimeWindows]:
        out = {}
        p = self.problem
        if self.receiver.side == "top":
            for mode in ("Pf", "Ps"):
                out[mode] = cg.TimeWindows(incident_arrival(mode, p.top, self.receiver, p.h),
                                           None, None, False)
        for name, fam in self.families.items():
            out[name] = fam.win
        return out

    def onset(self, wave: str) -> float:
        win = self.arrivals()[wave]
        return win.t_h1 if win.head_exists else win.t0

    def wave_green(self, wave: str, t: float) -> tuple[float, float]:
        if wave in ("Pf", "Ps"):
            ux, uz = incident_green(wave, self.problem.modal, self.problem.top,
                                    self.receiver, t, self.problem.h)
            return float(ux), float(uz)
        ux, uz = self.families[wave].evaluate(t)
        return float(ux), float(uz)

    def sample(self, t: float) -> GreenSample:
        waves = {w: self.wave_green(w, t) for w in self.waves}
        ux = sum(v[0] for v in waves.values())
        uz = sum(v[1] for v in waves.values())
        return GreenSample(t, ux, uz, waves)


def scattered_green(pair: cg.WavePair, problem: Problem, t: float) -> tuple[float, float]:
    ux, uz = _Family(pair, problem).evaluate(t)
    return float(ux), float(uz)


def total_green(receiver: Receiver, t: float, problem: Problem) -> GreenSample:
    return ReceiverModel(problem, receiver).sample(t)


def rotate_to_3d(u_x: float, u_z: float, x: float, y: float) -> tuple[float, float, float]:
    rho = np.hypot(x, y)
    if rho == 0.0:
        return 0.0, 0.0, u_z
    return u_x * x / rho, u_x * y / rho, u_z
