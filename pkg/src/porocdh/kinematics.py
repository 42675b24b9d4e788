"""Branch-cut square root, fictitious velocities and vertical slownesses."""

from __future__ import annotations

import numpy as np


def csqrt(q):
    """Square root with positive real part, cut along the negative reals.

    On the cut the upper-side limit is taken: csqrt(-r) = i*sqrt(r).
    Works elementwise on arrays.
    """
    q = np.asarray(q, dtype=complex)
    root = np.sqrt(q)
    on_cut = (q.imag == 0.0) & (q.real < 0.0)
    if np.any(on_cut):
        root = np.where(on_cut, 1j * np.sqrt(np.abs(q.real)), root)
    return root[()] if root.ndim == 0 else root


def fictitious_velocity(V, q_y):
    """V / sqrt(1 + V^2 q_y^2): the in-plane speed seen at transverse slowness q_y."""
    return V / np.sqrt(1.0 + (V * q_y) ** 2)


def kappa(V, q_x, q_y):
    """Vertical slowness (1/V^2 + q_x^2 + q_y^2)^(1/2) on the principal branch."""
    q_x = np.asarray(q_x, dtype=complex)
    return csqrt((1.0 / V**2 + np.asarray(q_y, dtype=float) ** 2) + q_x * q_x)
