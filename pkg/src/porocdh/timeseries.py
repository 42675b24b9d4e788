"""Source wavelet and causal convolution of sampled Green functions."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

MIN_SAMPLES_PER_PERIOD = 20


@dataclass(frozen=True)
class Wavelet:
    f0: float
    kind: str = "gaussian_d4"

    def __post_init__(self):
        if not self.f0 > 0:
            raise DomainError(f"wavelet frequency must be positive (got {self.f0})")
        if self.kind != "gaussian_d4":
            raise DomainError(f"unknown wavelet kind {self.kind!r}")


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled series; ``jumps`` lists times of known discontinuities."""

    t_start: float
    dt: float
    samples: np.ndarray
    jumps: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError("trace dt must be positive")
        if len(self.samples) < 2:
            raise DomainError("trace needs at least two samples")

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(len(self.samples))


def default_dt(w: Wavelet) -> float:
    return 1.0 / (200.0 * w.f0)


def wavelet_value(w: Wavelet, t):
    """The source time function, transcribed term by term from its printed form."""
    c = np.pi**2 / w.f0**2
    s = np.asarray(t, dtype=float) - 1.0 / w.f0
    s2 = s * s
    return 2.0 * c * (3.0 + 12.0 * c * s2 + 4.0 * c * c * s2 * s2) * np.exp(-c * s2)


def wavelet_derivative(w: Wavelet, t):
    c = np.pi**2 / w.f0**2
    s = np.asarray(t, dtype=float) - 1.0 / w.f0
    s2 = s * s
    return 2.0 * c * s * (18.0 * c - 8.0 * c * c * s2 - 8.0 * c**3 * s2 * s2) * np.exp(-c * s2)


def convolve(green: Trace, w: Wavelet, derivative: bool = False) -> Trace:
    """Trapezoid evaluation of int_{t_start}^{t} g(tau) f(t - tau) dtau on the trace grid.

    Panels that straddle a listed jump are re-integrated piecewise with
    one-sided linear extrapolation, which keeps the rule second order.
    With ``derivative`` the wavelet derivative is used, giving the time
    derivative of the seismogram.
    """
    dt = green.dt
    if 1.0 / (w.f0 * dt) < MIN_SAMPLES_PER_PERIOD:
        raise DomainError(
            f"undersampled wavelet: {1.0 / (w.f0 * dt):.1f} samples per period, "
            f"need at least {MIN_SAMPLES_PER_PERIOD}")
    f = wavelet_derivative if derivative else wavelet_value
    g = np.asarray(green.samples, dtype=float)
    n = len(g)
    lag = dt * np.arange(n)
    fk = f(w, lag)
    full = np.convolve(g, fk)[:n]
    out = dt * (full - 0.5 * g[0] * fk - 0.5 * g * fk[0])
    out[0] = 0.0

    t = green.times
    for tj in green.jumps:
        k = int(np.floor((tj - green.t_start) / dt))
        if k < 1 or k + 2 >= n:
            continue
        a = tj - t[k]
        b = t[k + 1] - tj
        g_left = g[k] + (g[k] - g[k - 1]) * a / dt
        g_right = g[k + 1] - (g[k + 2] - g[k + 1]) * b / dt
        m = np.arange(k + 1, n)
        f_k = fk[m - k]
        f_k1 = fk[m - k - 1]
        f_j = f(w, t[m] - tj)
        piecewise = 0.5 * a * (g[k] * f_k + g_left * f_j) + 0.5 * b * (g_right * f_j + g[k + 1] * f_k1)
        out[m] += piecewise - 0.5 * dt * (g[k] * f_k + g[k + 1] * f_k1)
    return Trace(green.t_start, dt, out, green.jumps)
