"""Conjugate-gradient solver used by the elasticity and crack-field systems."""

from __future__ import annotations

import numpy as np


def conjugate_gradient(A, b, x0=None, M_diag=None, tol=1e-8, max_iter=None):
    """Jacobi-preconditioned CG for a symmetric positive-definite system.

    Terminates when ||A x - b|| <= tol * ||b|| or at max_iter.  Returns
    (x, iters, rel_residual, converged); the caller decides whether a
    non-converged result is an error.

    A may be anything supporting ``A @ x`` (sparse matrix or LinearOperator).
    M_diag, if given, is the diagonal of A used as a Jacobi preconditioner.
    """
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    norm_b = np.linalg.norm(b)
    if norm_b == 0.0:
        return np.zeros(n), 0, 0.0, True

    inv_diag = None if M_diag is None else 1.0 / np.asarray(M_diag, dtype=float)
    r = b - A @ x
    res = np.linalg.norm(r)
    if res <= tol * norm_b:
        return x, 0, res / norm_b, True
    zv = r if inv_diag is None else inv_diag * r
    p = zv.copy()
    rz = float(r @ zv)
    iters = 0
    while iters < max_iter:
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            # loss of positive definiteness, typically from round-off on a
            # nearly converged system; stop and report what we have
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        iters += 1
        res = np.linalg.norm(r)
        if res <= tol * norm_b:
            return x, iters, res / norm_b, True
        zv = r if inv_diag is None else inv_diag * r
        rz_new = float(r @ zv)
        p = zv + (rz_new / rz) * p
        rz = rz_new
    return x, iters, res / norm_b, False
