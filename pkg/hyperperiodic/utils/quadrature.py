"""Exact x-integrals of profiles that are linear between stored nodes."""
import numpy as np


def pl_inner(u: np.ndarray, v: np.ndarray, spacing: np.ndarray) -> np.ndarray:
    """∫ u·conj(v) dx over (0,1) for piecewise-linear profiles.

    u and v have shape (..., cells, R+1); spacing holds the subnode width of
    each cell. Leading axes are kept, the last two are integrated out.
    """
    u0, u1 = u[..., :-1], u[..., 1:]
    v0, v1 = np.conj(v[..., :-1]), np.conj(v[..., 1:])
    segment = 2.0 * u0 * v0 + u0 * v1 + u1 * v0 + 2.0 * u1 * v1
    per_cell = segment.sum(axis=-1) * (spacing / 6.0)
    return per_cell.sum(axis=-1)


def pl_norm_sq(u: np.ndarray, spacing: np.ndarray) -> np.ndarray:
    """∫ |u|² dx; same conventions as pl_inner."""
    return pl_inner(u, u, spacing).real

