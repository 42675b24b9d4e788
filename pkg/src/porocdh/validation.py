"""Independent oracles and the audit suite behind ``porocdh validate``.

Nothing here reuses the code it checks: travel times come from direct
golden-section minimization (scipy), path residuals from a separately
written contour function, and the Green checks from physical identities
(continuity across the interface, invariance under eigenvector scaling).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import cagniard as cg
from .coefficients import coefficient_array
from .errors import DomainError
from .kinematics import kappa
from .greens import Problem, Receiver, ReceiverModel
from .material import DerivedLayer, project_source, scale_columns


@dataclass(frozen=True)
class OracleReport:
    name: str
    max_error: float
    tolerance: float
    passed: bool
    worst: str = ""


def _report(name, err, tol, worst=""):
    err = float(err)
    return OracleReport(name, err, tol, bool(err <= tol), worst)


# -- travel-time oracles -------------------------------------------------------

_XTOL = 1e-13


def _golden(f, lo, hi):
    # scipy's golden section on an explicit bracket of a convex function
    mid = lo + (hi - lo) * 0.381966011250105
    if not (f(mid) < f(lo) and f(mid) < f(hi)):
        # the minimum sits on an end of the bracket
        return min(f(lo), f(hi))
    xm = optimize.golden(f, brack=(lo, mid, hi), tol=_XTOL)
    return float(f(xm))


def fermat_two_leg(h: float, z: float, x: float, V1: float, V2: float) -> float:
    """Least time from the source (height h) to a receiver at leg length z and offset x."""
    if not (h > 0 and V1 > 0 and V2 > 0):
        raise DomainError("fermat_two_leg needs h > 0 and positive speeds")
    x = abs(x)
    z = abs(z)

    def total(xi):
        return np.hypot(xi, h) / V1 + np.hypot(x - xi, z) / V2

    if x == 0.0:
        return h / V1 + z / V2
    span = h + z + x
    return _golden(total, -span, x + span)


def fermat_head_wave(h: float, z: float, x: float, V1: float, V2: float, Vmax: float) -> float:
    """Least time along source -> A -> B -> receiver with A->B run on the interface at Vmax.

    Nested golden-section over the two interface points.  Returns the
    unconstrained minimum; compare it with the body-wave time yourself.
    """
    if Vmax < max(V1, V2):
        raise DomainError("fermat_head_wave needs Vmax >= max(V1, V2)")
    x = abs(x)
    z = abs(z)
    span = h + z + x

    def inner(xa):
        return _golden(lambda xb: abs(xb - xa) / Vmax + np.hypot(x - xb, z) / V2,
                       -span, x + span) + np.hypot(xa, h) / V1

    return _golden(inner, -span, x + span)


# -- contour checks ------------------------------------------------------------

def contour_residual(pair: cg.WavePair, g, q, t):
    """h k1 + z k2 + i g x - t, written out with numpy's principal square root."""
    g = np.asarray(g, dtype=complex)
    q = np.asarray(q, dtype=float)
    k1 = np.sqrt(1.0 / pair.V1**2 + q * q + g * g + 0j)
    k2 = np.sqrt(1.0 / pair.V2**2 + q * q + g * g + 0j)
    return pair.h * k1 + pair.z * k2 + 1j * g * pair.x - t


def sample_points(pair: cg.WavePair, n: int, rng: np.random.Generator, span: float = 0.8):
    """Random (t, q, branch) triples inside the pair's valid windows."""
    win = cg.head_window(pair)
    out = []
    n_head = n // 2 if win.head_exists else 0
    for _ in range(n - n_head):
        for _try in range(1000):
            t = win.t0 * (1.0 + 1e-6) + rng.random() * span
            q = cg.q0_of_t(pair, t) * rng.random()
            if _edge_gap(pair, t, q, "gamma") >= MIN_GAP:
                break
        out.append((t, q, "gamma"))
    for _ in range(n_head):
        # keep a 1e-7 s time gap to both ends of the segment, where the
        # contour pinches and double precision cannot resolve dv/dt
        for _try in range(1000):
            t = win.t_h1 + (win.t_h2 - win.t_h1) * rng.random()
            lo = cg.q0_of_t(pair, t) if t > win.t0 else 0.0
            hi = cg.q1_of_t(pair, t)
            q = lo + (hi - lo) * rng.random()
            if _edge_gap(pair, t, q, "v") >= MIN_GAP:
                break
        out.append((t, q, "v"))
    return out


MIN_GAP = 1e-7


def _edge_gap(pair, t, q, branch):
    edge = abs(t - float(cg.tilde_t0(pair, q)[0]))
    if branch == "v":
        c1, c2 = cg.head_constants(pair)
        t_end = pair.h * c1 + pair.z * c2 + pair.x * np.sqrt(1.0 / pair.Vmax**2 + q * q)
        edge = min(edge, abs(t - t_end))
    return edge


def _node(pair, t, q, branch):
    fn = cg.gamma_nodes if branch == "gamma" else cg.v_nodes
    g, dg = fn(pair, t, np.array([q]))
    return complex(g[0]), complex(dg[0])


def check_paths(pairs, n=1000, seed=0):
    """Residual, finite-difference derivative and q0 round-trip audits."""
    rng = np.random.default_rng(seed)
    res = (0.0, "")
    der = (0.0, "")
    inv = (0.0, "")
    for pair in pairs:
        pts = sample_points(pair, max(n // len(pairs), 4), rng)
        for t, q, branch in pts:
            g, dg = _node(pair, t, q, branch)
            r = abs(contour_residual(pair, g, q, t))
            if r > res[0]:
                res = (r, f"{pair.side} {pair.label} {branch} t={t:.9g} q={q:.6g}")
            # fourth-order central stencil with the step scaled to the distance
            # from the nearest segment end, where the path has a root singularity
            step = min(1e-6 * t, 0.03 * _edge_gap(pair, t, q, branch))
            f = {k: _node(pair, t + k * step, q, branch)[0] for k in (-2, -1, 1, 2)}
            fd = (8.0 * (f[1] - f[-1]) - (f[2] - f[-2])) / (12.0 * step)
            e = abs(fd - dg) / abs(dg)
            if e > der[0]:
                der = (e, f"{pair.side} {pair.label} {branch} t={t:.9g} q={q:.6g}")
        win = cg.head_window(pair)
        for t in win.t0 * (1.0 + 1e-6) + rng.random(max(n // len(pairs), 4)) * 0.8:
            e = abs(float(cg.tilde_t0(pair, cg.q0_of_t(pair, t))[0]) - t)
            if e > inv[0]:
                inv = (e, f"{pair.side} {pair.label} t={t:.9g}")
    return [
        _report("path residual |F| (s)", res[0], 1e-9, res[1]),
        _report("path derivative vs finite difference (rel)", der[0], 1e-6, der[1]),
        _report("q0 round trip (s)", inv[0], 1e-9, inv[1]),
    ]


def check_arrivals(pairs):
    worst_body = (0.0, "")
    worst_head = (0.0, "none with a head wave")
    for pair in pairs:
        fermat = fermat_two_leg(pair.h, pair.z, pair.x, pair.V1, pair.V2)
        e = abs(fermat - cg.arrival_time(pair))
        if e >= worst_body[0]:
            worst_body = (e, f"{pair.side} {pair.label}")
        win = cg.head_window(pair)
        if win.head_exists:
            e = abs(fermat_head_wave(pair.h, pair.z, pair.x, pair.V1, pair.V2, pair.Vmax) - win.t_h1)
            if e >= worst_head[0]:
                worst_head = (e, f"{pair.side} {pair.label}")
    return [
        _report("arrival t0 vs two-leg Fermat (s)", worst_body[0], 1e-9, worst_body[1]),
        _report("head onset t_h1 vs interface Fermat (s)", worst_head[0], 1e-6, worst_head[1]),
    ]


# -- material and coefficient checks -----------------------------------------

def check_eigen(layers: dict[str, DerivedLayer]):
    worst = (0.0, "")
    for name, lay in layers.items():
        V2 = np.array([lay.V_Pf**2, lay.V_Ps**2])
        lhs = lay.B @ lay.P
        rhs = lay.A @ lay.P * V2
        e = np.abs(lhs - rhs).max() / np.abs(lhs).max()
        if e >= worst[0]:
            worst = (e, name)
    return _report("eigen reconstruction B P = A P V^2 (rel)", worst[0], 1e-12, worst[1])


def check_null_interface(layer: DerivedLayer, n=200, seed=1):
    """Identical half-spaces: no reflection; the incident mode passes with its own amplitude."""
    rng = np.random.default_rng(seed)
    smax = 1.0 / min(layer.V_Pf, layer.V_Ps, layer.V_S)
    qx = rng.uniform(0, 2 * smax, n) * np.exp(-1j * rng.uniform(0, np.pi / 2, n))
    qy = rng.uniform(0, smax, n)
    worst = 0.0
    for k, inc in enumerate(("Pf", "Ps")):
        c = coefficient_array(qx, qy, inc, layer, layer)
        V = layer.V_Pf if inc == "Pf" else layer.V_Ps
        amp = 1.0 / (2.0 * kappa(V, qx, qy) * V**2)
        expect = np.zeros((n, 6), dtype=complex)
        expect[:, 3 + k] = amp
        worst = max(worst, (np.abs(c - expect).max(axis=1) / np.abs(amp)).max())
    return _report("null interface, relative to the incident amplitude", worst, 1e-10, "identical layers")


# -- Green-level checks --------------------------------------------------------

def check_continuity(problem: Problem, x: float, eps: float = 0.1, n_times: int = 5,
                     span: float = 0.5):
    up = ReceiverModel(problem, Receiver(x, 0.0, eps))
    down = ReceiverModel(problem, Receiver(x, 0.0, -eps))
    last = max(max(m.onset(w) for w in m.waves) for m in (up, down))
    times = last + 0.01 + np.linspace(0.0, span, n_times)
    a = np.array([[s.u_x, s.u_z] for s in map(up.sample, times)])
    b = np.array([[s.u_x, s.u_z] for s in map(down.sample, times)])
    peak = np.abs(np.vstack([a, b])).max()
    err = np.abs(a - b).max() / peak
    return _report("interface continuity at z = +-%g m (frac. of peak)" % eps, err, 0.02,
                   f"x={x} t in [{times[0]:.4f}, {times[-1]:.4f}]")


def rescaled(problem: Problem, c1: float, c2: float, which: str = "both") -> Problem:
    """Same physics, eigenvector columns scaled; modal amplitudes re-projected."""
    top = scale_columns(problem.top, c1, c2) if which in ("top", "both") else problem.top
    bot = scale_columns(problem.bottom, c1, c2) if which in ("bottom", "both") else problem.bottom
    if problem.source is not None:
        modal = project_source(top, problem.source)
    else:
        F = np.array([problem.modal.F_Pf, problem.modal.F_Ps])
        if which in ("top", "both"):
            F = F / np.array([c1, c2])
        modal = dataclasses.replace(problem.modal, F_Pf=float(F[0]), F_Ps=float(F[1]))
    return dataclasses.replace(problem, top=top, bottom=bot, modal=modal)


def check_rescaling(problem: Problem, receivers, times, factors=(-1.0, 0.5, 3.0)):
    worst = (0.0, "")
    base = {}
    for rec in receivers:
        m = ReceiverModel(problem, rec)
        base[rec] = np.array([[s.u_x, s.u_z] for s in map(m.sample, times)])
    for f in factors:
        for cols in ((f, 1.0), (1.0, f)):
            alt = rescaled(problem, *cols)
            for rec in receivers:
                m = ReceiverModel(alt, rec)
                u = np.array([[s.u_x, s.u_z] for s in map(m.sample, times)])
                e = np.abs(u - base[rec]).max() / np.abs(base[rec]).max()
                if e >= worst[0]:
                    worst = (e, f"columns x {cols}, receiver z={rec.z}")
    return _report("eigenvector rescaling invariance (rel)", worst[0], 1e-10, worst[1])


def audit(problem: Problem, receivers, samples: int = 200, seed: int = 0) -> list[OracleReport]:
    """Run every oracle on a configured problem; failures are reported, never raised."""
    receivers = list(receivers)
    pairs = [p for rec in receivers for p in problem.pairs(rec)]
    reports: list[OracleReport] = []

    def guarded(name, fn):
        try:
            out = fn()
        except Exception as exc:  # noqa: BLE001 - the audit reports, it does not raise
            out = OracleReport(name, float("inf"), 0.0, False, f"{type(exc).__name__}: {exc}")
        reports.extend(out if isinstance(out, list) else [out])

    guarded("eigen reconstruction", lambda: check_eigen({"top": problem.top,
                                                         "bottom": problem.bottom}))
    guarded("null interface", lambda: check_null_interface(problem.top))
    guarded("paths", lambda: check_paths(pairs, samples, seed))
    guarded("arrivals", lambda: check_arrivals(pairs))
    xs = sorted({rec.offset for rec in receivers}) or [400.0]
    guarded("continuity", lambda: check_continuity(problem, xs[0]))
    late = max(ReceiverModel(problem, r).onset(w) for r in receivers
               for w in problem.wave_names(r))
    guarded("rescaling", lambda: check_rescaling(problem, receivers,
                                                 late + np.array([0.02, 0.1, 0.3])))
    return reports
