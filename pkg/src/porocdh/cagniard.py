"""Cagniard-de Hoop kinematics for one scattered-wave family.

Conventions: the source sits at height h above the interface, the receiver
leg has length z >= 0 (its distance to the interface) and the receiver
offset is x >= 0.  For a contour variable g at transverse slowness q,

    F(g, q, t) = h k1(g) + z k2(g) + i g x - t,   kj = (1/Vj^2 + q^2 + g^2)^(1/2),

so the contour lies in the lower half-plane.  The body-wave branch gamma has
Re >= 0; the head-wave branch v = -i w is purely imaginary with
1/V_max(q) <= w <= w0(q), w0 being the saddle point of F on the imaginary axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PathTrackingError
from .kinematics import csqrt, fictitious_velocity
from .material import DerivedLayer

RESIDUAL_TOL = 1e-9
X_AXIS_TOL = 1e-9
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WavePair:
    incidence: str
    outgoing: str
    side: str
    V1: float
    V2: float
    h: float
    x: float
    z: float
    Vmax: float
    closed_form: bool = True   # False forces the implicit-path engine for same-speed pairs

    def __post_init__(self):
        if not self.h > 0:
            raise DomainError("source height must be positive")
        if self.x < 0 or self.z < 0:
            raise DomainError("offset and leg length must be non-negative")

    @property
    def label(self) -> str:
        return self.incidence + self.outgoing

    @property
    def same_speed(self) -> bool:
        return self.closed_form and self.side == "reflected" and self.incidence == self.outgoing

    @property
    def r(self) -> float:
        return float(np.hypot(self.x, self.h + self.z))

    def slownesses(self, q):
        """Squared fictitious slownesses 1/V1(q)^2, 1/V2(q)^2."""
        q2 = np.asarray(q, dtype=float) ** 2
        return 1.0 / self.V1**2 + q2, 1.0 / self.V2**2 + q2


@dataclass(frozen=True)
class PathPoint:
    value: complex
    dvalue_dt: complex
    branch: str


@dataclass(frozen=True)
class TimeWindows:
    t0: float
    t_h1: float | None
    t_h2: float | None
    head_exists: bool


def max_speed(top: DerivedLayer, bottom: DerivedLayer) -> float:
    return max(top.speeds + bottom.speeds)


def make_pairs(top: DerivedLayer, bottom: DerivedLayer, h: float, x: float, z: float) -> list[WavePair]:
    """The six scattered families seen by a receiver at signed height z."""
    side = "reflected" if z > 0 else "transmitted"
    out_layer = top if z > 0 else bottom
    vmax = max_speed(top, bottom)
    return [WavePair(inc, out, side, top.speed(inc), out_layer.speed(out), h, abs(x), abs(z), vmax)
            for inc in ("Pf", "Ps") for out in ("Pf", "Ps", "S")]


def residual(pair: WavePair, value, q, t):
    """F(value, q, t) in seconds."""
    a, b = pair.slownesses(q)
    g = np.asarray(value, dtype=complex)
    return pair.h * csqrt(a + g * g) + pair.z * csqrt(b + g * g) + 1j * g * pair.x - t


def dF_dvalue(pair: WavePair, value, q):
    a, b = pair.slownesses(q)
    g = np.asarray(value, dtype=complex)
    out = 1j * pair.x + pair.h * g / csqrt(a + g * g)
    if pair.z > 0:
        out = out + pair.z * g / csqrt(b + g * g)
    return out


# -- travel times ----------------------------------------------------------

def _fermat(h, z, x, s1, s2):
    """min over xi of s1 |S-xi| + s2 |xi-R|; golden section then Newton."""
    span = h + z + x
    lo, hi = min(0.0, x) - span, max(0.0, x) + span

    def f(xi):
        return s1 * np.hypot(xi, h) + s2 * np.hypot(x - xi, z)

    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > 1e-7 * span:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(d)
    xi = 0.5 * (lo + hi)
    for _ in range(8):
        d1 = np.hypot(xi, h)
        d2 = np.hypot(x - xi, z)
        if d2 == 0.0:
            break
        g1 = s1 * xi / d1 - s2 * (x - xi) / d2
        g2 = s1 * h * h / d1**3 + s2 * z * z / d2**3
        if g2 <= 0.0:
            break
        step = g1 / g2
        xi -= step
        if abs(step) <= 1e-15 * span:
            break
    return float(f(xi))


def travel_time(pair: WavePair, q: float) -> float:
    """t~0(q): Fermat time of the fictitious wave with speeds V1(q), V2(q)."""
    s1 = 1.0 / fictitious_velocity(pair.V1, q)
    s2 = 1.0 / fictitious_velocity(pair.V2, q)
    if pair.x < X_AXIS_TOL:
        return float(pair.h * s1 + pair.z * s2)
    return _fermat(pair.h, pair.z, pair.x, s1, s2)


def arrival_time(pair: WavePair) -> float:
    if pair.same_speed:
        return pair.r / pair.V1
    return travel_time(pair, 0.0)


def saddle(pair: WavePair, q):
    """w0(q): the real stationary point of tau(w) = F(-i w) + t on [0, 1/V_slow(q)).

    Solved for p, the ray-angle tangent in the faster leg, where the
    condition reads x = L_f p + L_s c p / (1 + (1 - c^2) p^2)^(1/2) with
    c^2 the slowness ratio.  The right side is concave and increasing, so
    Newton from p = 0 converges monotonically.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    a, b = pair.slownesses(q)
    if pair.x < X_AXIS_TOL:
        return np.zeros_like(q)
    if pair.same_speed:
        return pair.x * np.sqrt(a) / pair.r
    if pair.z <= 0.0:
        p = np.full_like(q, pair.x / pair.h)
        return np.sqrt(a) * p / np.sqrt(1.0 + p * p)
    first = a <= b
    s_f = np.where(first, a, b)
    L_f = np.where(first, pair.h, pair.z)
    L_s = np.where(first, pair.z, pair.h)
    e = 1.0 - s_f / np.where(first, b, a)      # 1 - c^2
    c = np.sqrt(1.0 - e)
    p = np.zeros_like(q)
    last = False
    for _ in range(100):
        root = np.sqrt(1.0 + e * p * p)
        phi = L_f * p + L_s * c * p / root - pair.x
        step = phi / (L_f + L_s * c / root**3)
        p = p - step
        if last:
            break
        # quadratic convergence: one more step after 1e-9 gives full precision
        last = bool(np.all(np.abs(step) <= 1e-9 * p))
    return np.sqrt(s_f) * p / np.sqrt(1.0 + p * p)


def tau_imag(pair: WavePair, w, q):
    """tau(w) = h k1 + z k2 + w x along the imaginary axis g = -i w (real k)."""
    a, b = pair.slownesses(q)
    return (pair.h * np.sqrt(np.maximum(a - w * w, 0.0))
            + pair.z * np.sqrt(np.maximum(b - w * w, 0.0)) + w * pair.x)


def tilde_t0(pair: WavePair, q):
    """Vectorized t~0(q) via the saddle point; agrees with travel_time."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if pair.same_speed:
        return pair.r * np.sqrt(1.0 / pair.V1**2 + q * q)
    return tau_imag(pair, saddle(pair, q), q)


def _curvature(pair: WavePair, q, w=None):
    # d t~0 / d(q^2) = (h/k1 + z/k2)/2 evaluated at the saddle
    if w is None:
        w = saddle(pair, q)
    a, b = pair.slownesses(q)
    out = pair.h / np.sqrt(a - w * w)
    if pair.z > 0:
        out = out + pair.z / np.sqrt(b - w * w)
    return 0.5 * out


def q0_of_t(pair: WavePair, t: float) -> float:
    """Inverse of t~0 on q >= 0."""
    t0 = arrival_time(pair)
    if t < t0 * (1.0 - 1e-14):
        raise DomainError(f"q0 undefined before the arrival time ({t} < {t0})")
    if t <= t0:
        return 0.0
    if pair.same_speed:
        return float(np.sqrt((t - t0) * (t + t0)) / pair.r)
    # Newton in s = q^2 with a growing bracket; t~0 and its slope share one saddle solve
    s_lo, s_hi = 0.0, None
    s = (t - t0) / float(_curvature(pair, 0.0)[0])
    for _ in range(200):
        q = np.array([np.sqrt(s)])
        w = saddle(pair, q)
        val = float(tau_imag(pair, w, q)[0]) - t
        if val > 0:
            s_hi = s
        else:
            s_lo = s
        if abs(val) <= 1e-15 * t:
            break
        slope = float(_curvature(pair, q, w)[0])
        s_new = s - val / slope
        upper = s_hi if s_hi is not None else np.inf
        if not (s_lo < s_new < upper):
            s_new = 0.5 * (s_lo + s_hi) if s_hi is not None else 2.0 * max(s, s_lo) + 1e-300
        if abs(s_new - s) <= 1e-16 * s:
            s = s_new
            break
        s = s_new
    return float(np.sqrt(s))


def head_constants(pair: WavePair, V: float | None = None):
    """c_j = (1/Vj^2 - 1/V^2)^(1/2) for the two legs (V defaults to V_max)."""
    V = pair.Vmax if V is None else V
    c1 = np.sqrt(max(1.0 / pair.V1**2 - 1.0 / V**2, 0.0))
    c2 = np.sqrt(max(1.0 / pair.V2**2 - 1.0 / V**2, 0.0))
    return c1, c2


def q1_of_t(pair: WavePair, t: float) -> float:
    """End of the head-wave segment in q at time t."""
    return float(_branch_q(pair, t, pair.Vmax, strict=True))


def _branch_q(pair, t, V, strict=False):
    # q at which v(t, q) reaches the branch point 1/V(q)
    if pair.x < X_AXIS_TOL:
        raise DomainError("no head-wave segment on the axis")
    c1, c2 = head_constants(pair, V)
    lead = t - pair.h * c1 - pair.z * c2
    rad = (lead / pair.x) ** 2 - 1.0 / V**2
    if lead < 0 or rad < 0:
        if strict and rad > -1e-12 / V**2 and lead >= 0:
            return 0.0
        if strict:
            raise DomainError(f"q1 undefined at t={t}: negative radicand")
        return None
    return np.sqrt(rad)


def head_window(pair: WavePair) -> TimeWindows:
    """Arrival t0 and, when the head wave exists, its window (t_h1, t_h2).

    The head wave exists when the saddle point at q = 0 lies beyond the
    branch point of the fastest mode, w0(0) > 1/V_max.
    """
    t0 = arrival_time(pair)
    if pair.x < X_AXIS_TOL:
        return TimeWindows(t0, None, None, False)
    if pair.same_speed:
        exists = pair.x / pair.r > pair.V1 / pair.Vmax
    else:
        exists = float(saddle(pair, 0.0)[0]) * pair.Vmax > 1.0
    c1, c2 = head_constants(pair)
    if not exists or c1 == 0.0 or (pair.z > 0 and c2 == 0.0):
        return TimeWindows(t0, None, None, False)
    h, z, x = pair.h, pair.z, pair.x
    t_h1 = h * c1 + z * c2 + x / pair.Vmax
    if z > 0:
        t_h2 = (h * h + z * z + h * z * (c2 / c1 + c1 / c2) + x * x) / (h / c1 + z / c2)
    else:
        t_h2 = (h * h + x * x) / (h / c1)
    return TimeWindows(t0, float(t_h1), float(t_h2), True)


# -- contour points --------------------------------------------------------

def path_gap(pair: WavePair, t: float, q, dq2):
    """t~0(q) - t where q^2 = q0(t)^2 + dq2, free of cancellation for small dq2.

    Near q0 the difference is the chord dq2 times the slope d t~0/d(q^2)
    at the midpoint, which is exact to second order in dq2.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    dq2 = np.broadcast_to(np.asarray(dq2, dtype=float), q.shape)
    if pair.same_speed:
        return pair.r**2 * dq2 / (t + pair.r * np.sqrt(1.0 / pair.V1**2 + q * q))
    mid = np.sqrt(np.maximum(q * q - 0.5 * dq2, 0.0))
    chord = dq2 * _curvature(pair, mid)
    direct = tilde_t0(pair, q) - t
    return np.where(np.abs(chord) <= 1e-6 * t, chord, direct)


def _local_terms(pair, q, w0, d):
    # contour point g = -i (w0 - d) measured from the saddle; returns g,
    # E(d) with T(w0) - T(g) = d^2 E(d), and T'(g), all without cancellation
    a, b = pair.slownesses(q)
    h, z = pair.h, pair.z
    w = w0 - d
    g = -1j * w
    E = 0.0
    S = 0.0
    for leg, s2 in ((h, a), (z, b)):
        if leg == 0.0:
            continue
        k0 = np.sqrt(s2 - w0 * w0)
        kw = csqrt(s2 + g * g)
        E = E + leg * (w0 * (2.0 * w0 - d) / (k0 + kw) + k0) / (k0 * (k0 + kw))
        with np.errstate(divide="ignore", invalid="ignore"):  # only at d = 0 on the axis
            S = S + leg * s2 / (k0 * kw * (w0 * kw + w * k0))
    with np.errstate(invalid="ignore"):
        return g, E, 1j * d * (2.0 * w0 - d) * S


def _saddle_solve(pair, q, gap, g_init, t):
    """Solve d^2 E(d) = gap by Newton; gap < 0 gives gamma, gap > 0 gives v."""
    w0 = saddle(pair, q)
    _, E0, _ = _local_terms(pair, q, w0, np.zeros_like(w0, dtype=complex))
    quad = np.where(gap < 0, -1j * np.sqrt(np.abs(gap) / E0.real), np.sqrt(np.abs(gap) / E0.real))
    d = np.asarray(quad, dtype=complex)
    if g_init is not None:
        far = np.abs(gap) > 1e-6 * t
        d = np.where(far, w0 - 1j * g_init, d)
    for _ in range(30):
        g, E, Tp = _local_terms(pair, q, w0, d)
        f = d * d * E - gap
        step = f / (-1j * Tp)
        d = d - step
        if np.all(np.abs(step) <= 1e-15 * np.abs(d)):
            break
    if np.all(gap > 0):
        d = d.real.astype(complex)
    g, _, Tp = _local_terms(pair, q, w0, d)
    return g, 1.0 / Tp


def gamma_nodes(pair: WavePair, t: float, q, gap=None):
    """gamma(t, q) and d gamma/dt for an array of q with t > t~0(q).

    ``gap`` = t~0(q) - t, when supplied accurately (see path_gap), lets the
    solution be rebuilt from the saddle point with full relative accuracy
    even where the path pinches onto it.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    a, b = pair.slownesses(q)
    x, h, z = pair.x, pair.h, pair.z
    if pair.same_speed:
        r = pair.r
        if gap is None:
            sigma = np.sqrt(np.maximum(t * t / r**2 - a, 0.0))
        else:
            sigma = np.sqrt(np.maximum(-gap * (2.0 * t + gap), 0.0)) / r
        g = -1j * x * t / r**2 + (h + z) / r * sigma
        k = (h + z) * t / r**2 - 1j * x * sigma / r
        with np.errstate(divide="ignore", invalid="ignore"):
            dg = k / (r * sigma)
        return g, dg
    g = _gamma_quartic(pair, t, a, b)
    # Newton polish on the exact equation
    for _ in range(4):
        F = residual(pair, g, q, t)
        d = dF_dvalue(pair, g, q)
        step = np.where(d != 0, F / np.where(d != 0, d, 1.0), 0.0)
        g = g - step
    g = np.where(g.real < 0, -np.conj(g), g)
    if gap is not None:
        g, dg = _saddle_solve(pair, q, np.asarray(gap, dtype=float), g, t)
        g = np.where(g.real < 0, -np.conj(g), g)
    F = residual(pair, g, q, t)
    bad = ~(np.abs(F) <= RESIDUAL_TOL)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise PathTrackingError(
            f"path tracking failure ({pair.side} {pair.label}): t={t}, q={q[i]}, "
            f"last iterate={g[i]}, residual={abs(F[i]):.3e}")
    if gap is not None:
        return g, dg
    return g, 1.0 / dF_dvalue(pair, g, q)


def _gamma_quartic(pair, t, a, b):
    # square twice: h^2 k1^2 + z^2 k2^2 + 2 h z k1 k2 = (t - i g x)^2, in scaled units
    L = pair.r
    S = t / L
    hh, zz, xx = pair.h / L, pair.z / L, pair.x / L
    A = a / S**2
    B = b / S**2
    K = 4.0 * hh**2 * zz**2
    w0 = 1.0 - hh**2 * A - zz**2 * B
    w1 = -2j * xx
    w2 = -(xx**2 + hh**2 + zz**2)
    c4 = w2**2 - K
    c3 = 2.0 * w1 * w2
    c2 = w1**2 + 2.0 * w0 * w2 - K * (A + B)
    c1 = 2.0 * w0 * w1
    c0 = w0**2 - K * A * B
    n = len(a)
    comp = np.zeros((n, 4, 4), dtype=complex)
    comp[:, 0, 0] = -c3 / c4
    comp[:, 0, 1] = -c2 / c4
    comp[:, 0, 2] = -c1 / c4
    comp[:, 0, 3] = -c0 / c4
    comp[:, 1, 0] = comp[:, 2, 1] = comp[:, 3, 2] = 1.0
    roots = np.linalg.eigvals(comp)
    F = (hh * csqrt(A[:, None] + roots**2) + zz * csqrt(B[:, None] + roots**2)
         + 1j * roots * xx - 1.0)
    score = np.abs(F) + np.where(roots.real < -1e-7 * np.abs(roots), 1.0, 0.0)
    pick = roots[np.arange(n), np.argmin(score, axis=1)]
    return pick * S


def v_nodes(pair: WavePair, t: float, q, gap=None):
    """v(t, q) = -i w and dv/dt on the head-wave segment, for arrays of q.

    ``gap`` plays the same role as in gamma_nodes.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    a, b = pair.slownesses(q)
    x, h, z = pair.x, pair.h, pair.z
    if pair.same_speed:
        r = pair.r
        if gap is None:
            rho = np.sqrt(np.maximum(a - t * t / r**2, 0.0))
        else:
            rho = np.sqrt(np.maximum(gap * (2.0 * t + gap), 0.0)) / r
        w = x * t / r**2 - (h + z) / r * rho
        k = (h + z) * t / r**2 + x * rho / r
        with np.errstate(divide="ignore"):
            dv = -1j * k / (r * rho)
        return -1j * w, dv
    lo = np.sqrt(1.0 / pair.Vmax**2 + q * q)
    hi = saddle(pair, q)
    lo = np.minimum(lo, hi)
    w = lo.copy()
    for _ in range(200):
        f = tau_imag(pair, w, q) - t
        k1 = np.sqrt(np.maximum(a - w * w, 1e-300))
        k2 = np.sqrt(np.maximum(b - w * w, 1e-300))
        d = x - h * w / k1 - (z * w / k2 if z > 0 else 0.0)
        lo = np.where(f < 0, w, lo)
        hi = np.where(f > 0, w, hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            w_new = w - f / d
        bad = ~((w_new >= lo) & (w_new <= hi))
        w_new = np.where(bad, 0.5 * (lo + hi), w_new)
        done = np.all(np.abs(w_new - w) <= 2e-16 * np.abs(w))
        w = w_new
        if done:
            break
    F = tau_imag(pair, w, q) - t
    if not np.all(np.abs(F) <= RESIDUAL_TOL):
        i = int(np.argmax(np.abs(F)))
        raise PathTrackingError(
            f"path tracking failure ({pair.side} {pair.label}, head branch): t={t}, "
            f"q={q[i]}, last iterate=-{w[i]}j, residual={abs(F[i]):.3e}")
    if gap is not None:
        g, dg = _saddle_solve(pair, q, np.asarray(gap, dtype=float), -1j * w, t)
        return -1j * np.abs(g.imag), 1j * dg.imag
    k1 = np.sqrt(a - w * w)
    d = x - h * w / k1
    if z > 0:
        d = d - z * w / np.sqrt(b - w * w)
    with np.errstate(divide="ignore"):
        dv = -1j / d
    return -1j * w, dv


def gamma_point(pair: WavePair, t: float, q: float) -> PathPoint:
    if t <= float(tilde_t0(pair, q)[0]):
        raise DomainError(f"gamma branch requires t > t~0(q) (t={t}, q={q})")
    g, dg = gamma_nodes(pair, t, q)
    return PathPoint(complex(g[0]), complex(dg[0]), "gamma")


def v_point(pair: WavePair, t: float, q: float) -> PathPoint:
    win = head_window(pair)
    if not win.head_exists or t <= win.t_h1 or t >= win.t_h2:
        raise DomainError(f"no head-wave segment for {pair.label} at t={t}")
    lo = q0_of_t(pair, t) if t > win.t0 else 0.0
    inside = lo < q or (t <= win.t0 and q == 0.0)
    if not (inside and q < q1_of_t(pair, t)):
        raise DomainError(f"q={q} outside the head-wave segment at t={t}")
    v, dv = v_nodes(pair, t, q)
    return PathPoint(complex(v[0]), complex(dv[0]), "v")


def branch_breaks(pair: WavePair, t: float, speeds, q_lo: float, q_hi: float) -> list[float]:
    """q values inside (q_lo, q_hi) where v(t, q) crosses another branch point.

    The crossing for speed V happens where the head-wave time built with V
    equals t; kernels are only square-root continuous there.
    """
    out = []
    slow_leg = max(pair.V1, pair.V2 if pair.z > 0 else 0.0)
    for V in sorted(set(speeds)):
        if not (slow_leg < V < pair.Vmax):
            continue
        qb = _branch_q(pair, t, V)
        if qb is not None and q_lo < qb < q_hi:
            out.append(float(qb))
    return sorted(out)
