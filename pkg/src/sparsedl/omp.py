"""Error-constrained orthogonal matching pursuit.

Greedy sparse coding against a fixed dictionary: atoms are selected by
largest absolute correlation with the running residual (ties go to the
lowest index), the residual is kept orthogonal to the selected span via
incremental Gram-Schmidt, and selection stops once the squared residual
drops to the error goal or the support hits the atom cap.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import linalg, sparse

from .exceptions import ConfigError

__all__ = ["omp_code", "omp_code_matrix", "REACHED_ERROR_GOAL", "REACHED_ATOM_CAP", "DEGENERATE"]

REACHED_ERROR_GOAL = "error_goal"
REACHED_ATOM_CAP = "atom_cap"
DEGENERATE = "degenerate"

# Relative norm loss under which a Gram-Schmidt step counts as singular.
_SPAN_TOL = 1e-10


def omp_code(D: np.ndarray, y: np.ndarray, error_goal: float, max_atoms: Optional[int] = None):
    """Sparse-code one signal.

    Parameters
    ----------
    D : ndarray, shape (n, J)
        Dictionary with unit-norm columns.
    y : ndarray, shape (n,)
        Signal to approximate.
    error_goal : float
        Stop once ``||y - D code||_2^2 <= error_goal``.  Nonnegative.
    max_atoms : int, optional
        Support cap; defaults to ``min(n, J)``.

    Returns
    -------
    code : ndarray, shape (J,)
    status : str
        ``"error_goal"`` when the goal was met, ``"atom_cap"`` when the
        cap stopped selection first, ``"degenerate"`` when a selected
        atom fell inside the span of the current support (it is dropped
        and selection stops) or no atom correlated with the residual.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if D.ndim != 2:
        raise ConfigError(f"dictionary must be 2-D, got shape {D.shape}")
    n, J = D.shape
    if y.shape != (n,):
        raise ConfigError(f"signal length {y.shape} does not match dictionary rows {n}")
    if not (np.isfinite(error_goal) and error_goal >= 0.0):
        raise ConfigError(f"error_goal must be finite and nonnegative, got {error_goal}")
    cap = min(n, J) if max_atoms is None else int(max_atoms)
    if not 1 <= cap <= min(n, J):
        raise ConfigError(f"max_atoms must lie in [1, {min(n, J)}], got {cap}")

    code = np.zeros(J)
    r = y.copy()
    rsq = float(r @ r)
    if rsq <= error_goal:
        return code, REACHED_ERROR_GOAL

    support: list[int] = []
    Q = np.empty((n, cap))  # orthonormal basis of the selected atoms
    R = np.zeros((cap, cap))  # D[:, support] == Q R
    status = REACHED_ATOM_CAP
    while len(support) < cap:
        corr = D.T @ r
        pick = int(np.argmax(np.abs(corr)))
        if corr[pick] == 0.0:
            status = DEGENERATE
            break
        a = D[:, pick]
        s = len(support)
        z = Q[:, :s].T @ a
        q = a - Q[:, :s] @ z
        qnorm = float(np.linalg.norm(q))
        if qnorm <= _SPAN_TOL * float(np.linalg.norm(a)):
            status = DEGENERATE
            break
        q /= qnorm
        Q[:, s] = q
        R[:s, s] = z
        R[s, s] = qnorm
        support.append(pick)
        proj = float(q @ r)
        r -= proj * q
        rsq -= proj * proj
        if rsq <= error_goal:
            status = REACHED_ERROR_GOAL
            break

    if support:
        s = len(support)
        coeff = linalg.solve_triangular(R[:s, :s], Q[:, :s].T @ y, lower=False)
        code[support] = coeff
    return code, status


def omp_code_matrix(D: np.ndarray, Y: np.ndarray, error_goal: float, max_atoms: Optional[int] = None):
    """Sparse-code every column of ``Y`` with the same error goal.

    Returns the coefficient matrix as a csc array of shape (N, J) (row i
    holds the code of signal i, matching the learner's convention) plus
    the per-signal stop statuses.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ConfigError(f"signal matrix must be 2-D, got shape {Y.shape}")
    n, N = Y.shape
    J = D.shape[1]
    indptr = np.zeros(N + 1, dtype=np.int64)
    index_parts = []
    data_parts = []
    statuses = []
    for i in range(N):
        code, status = omp_code(D, Y[:, i], error_goal, max_atoms)
        idx = np.flatnonzero(code)
        indptr[i + 1] = indptr[i] + idx.size
        index_parts.append(idx)
        data_parts.append(code[idx])
        statuses.append(status)
    indices = np.concatenate(index_parts) if index_parts else np.empty(0, dtype=np.int64)
    data = np.concatenate(data_parts) if data_parts else np.empty(0)
    C = sparse.csr_array((data, indices, indptr), shape=(N, J)).tocsc()
    return C, statuses
