"""Cyclic Jacobi eigensolver for real symmetric matrices.

Each sweep visits every off-diagonal pair once using round-robin ordering:
the n-1 rounds of a sweep each hold n/2 disjoint (p, q) pairs, so all
rotations of a round commute and are applied together with array
operations. Stacks of matrices (``shape == (..., n, n)``) are handled in one
call; each matrix stops rotating once its own off-diagonal norm is small.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 60


def round_robin_pairs(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Pairings covering every (p, q), p < q, exactly once over n-1 (or n) rounds."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for k in range(m // 2):
            a, b = players[k], players[m - 1 - k]
            if a < n and b < n:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _off_norm_sq(a: np.ndarray) -> np.ndarray:
    off = a * (1.0 - np.eye(a.shape[-1]))
    return np.sum(off * off, axis=(-2, -1))


def _sweep(a: np.ndarray, v: np.ndarray, rounds) -> None:
    for p, q in rounds:
        if p.size == 0:
            continue
        app = a[:, p, p]
        aqq = a[:, q, q]
        apq = a[:, p, q]
        nonzero = apq != 0.0
        safe_apq = np.where(nonzero, apq, 1.0)
        with np.errstate(over="ignore"):
            theta = (aqq - app) / (2.0 * safe_apq)
        t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
        t = np.where(theta == 0.0, 1.0, t)
        t = np.where(nonzero, t, 0.0)
        c = 1.0 / np.sqrt(t * t + 1.0)
        s = t * c

        cr, sr = c[:, None, :], s[:, None, :]
        col_p = a[:, :, p]
        col_q = a[:, :, q]
        a[:, :, p] = cr * col_p - sr * col_q
        a[:, :, q] = sr * col_p + cr * col_q
        cc, sc = c[:, :, None], s[:, :, None]
        row_p = a[:, p, :]
        row_q = a[:, q, :]
        a[:, p, :] = cc * row_p - sc * row_q
        a[:, q, :] = sc * row_p + cc * row_q
        a[:, p, q] = 0.0
        a[:, q, p] = 0.0

        vp = v[:, :, p]
        vq = v[:, :, q]
        v[:, :, p] = cr * vp - sr * vq
        v[:, :, q] = sr * vp + cr * vq


def jacobi_eigh(
    matrices: np.ndarray, tol: float = DEFAULT_TOL, max_sweeps: int = MAX_SWEEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and eigenvectors (columns) of symmetric matrices.

    Iterates until the off-diagonal Frobenius norm is at most ``tol`` times
    the Frobenius norm of the input. Each eigenvector is sign-fixed so that its
    largest-magnitude component (first one on ties) is positive.

    Raises:
        ValueError: non-square input, non-finite entries, or no convergence
            within ``max_sweeps``.
    """
    a = np.array(matrices, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    batch_shape = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n))
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    v = np.broadcast_to(np.eye(n), a.shape).copy()

    threshold = (tol * tol) * np.sum(a * a, axis=(-2, -1))
    rounds = round_robin_pairs(n)
    active = np.flatnonzero(_off_norm_sq(a) > threshold)
    sweeps = 0
    while active.size:
        if sweeps == max_sweeps:
            raise ValueError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
        sub_a, sub_v = a[active], v[active]
        _sweep(sub_a, sub_v, rounds)
        a[active], v[active] = sub_a, sub_v
        sweeps += 1
        still = _off_norm_sq(sub_a) > threshold[active]
        active = active[still]

    w = np.diagonal(a, axis1=-2, axis2=-1).copy()
    order = np.argsort(w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[:, None, :], axis=-1)

    lead = np.argmax(np.abs(v), axis=-2)
    signs = np.sign(np.take_along_axis(v, lead[:, None, :], axis=-2))
    v = v * np.where(signs == 0, 1.0, signs)
    return w.reshape(batch_shape + (n,)), v.reshape(batch_shape + (n, n))
