"""Block coordinate descent for l0-penalized dictionary learning.

The training matrix ``Y`` (one signal per column, shape n x N) is
approximated by a sum of sparse rank-one terms ``sum_j d_j c_j^T``:

    minimize   || Y - sum_j d_j c_j^T ||_F^2  +  lam^2 * nnz(C)
    subject to || d_j ||_2 = 1  and  | C_ij | <= code_bound,

where ``d_j`` is column j of the dictionary ``D`` (n x J) and ``c_j``
is column j of the coefficient matrix ``C`` (N x J).  Each sweep
updates every (c_j, d_j) pair in turn; both block updates are exact
closed forms (truncated hard thresholding for the code, a normalized
residual/code product for the atom), so the objective never increases.

Zeros in ``C`` are structural: an entry is zero iff it was never
assigned a nonzero value, and nnz counts are exact with no tolerance.
All arithmetic is float64, and for a fixed BLAS thread configuration a
run is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import sparse

from .exceptions import ConfigError, InvariantError

__all__ = [
    "LearnConfig",
    "LearnTrace",
    "hard_threshold",
    "truncated_hard_threshold",
    "code_rhs",
    "sparse_code_step",
    "atom_rhs",
    "atom_update_step",
    "learn",
    "objective",
    "nsre",
    "sparsity_factor",
]

ATOM_ORDERS = ("cyclic", "random")
EMPTY_CODE_POLICIES = ("unit_basis", "keep_previous", "random_unit")

# Unit-norm slack accepted on input dictionaries before exact renormalization.
_NORM_TOL = 1e-8


def hard_threshold(b: np.ndarray, lam: float) -> np.ndarray:
    """Zero every entry of ``b`` whose magnitude is below ``lam``.

    Entries with magnitude exactly equal to ``lam`` are kept (the
    minimizer is non-unique there; keeping the value makes the operator
    deterministic).  Total function: no validation, never raises.
    """
    b = np.asarray(b, dtype=float)
    return np.where(np.abs(b) < lam, 0.0, b)


def truncated_hard_threshold(b: np.ndarray, lam: float, code_bound: float) -> np.ndarray:
    """Hard-threshold ``b`` at ``lam``, then clip magnitudes to ``code_bound``.

    This is the exact minimizer of the single-column code update: entry i
    of the result is 0 when ``|b_i| < lam``, ``b_i`` when
    ``lam <= |b_i| <= code_bound``, and ``sign(b_i) * code_bound`` above.
    Requires ``code_bound > lam`` (otherwise clipping could produce
    nonzeros that thresholding should have removed).
    """
    if not code_bound > lam:
        raise ConfigError(
            f"code_bound must exceed the sparsity weight (got bound={code_bound}, lam={lam})"
        )
    t = hard_threshold(b, lam)
    return np.sign(t) * np.minimum(np.abs(t), code_bound)


def _is_sparse(C) -> bool:
    return sparse.issparse(C)


def _code_column(C, j: int) -> np.ndarray:
    """Column j of a dense or scipy-sparse coefficient matrix, as 1-D dense."""
    if _is_sparse(C):
        return np.asarray(C[:, [j]].todense()).ravel()
    return np.asarray(C)[:, j]


def _code_nnz(C) -> int:
    """Exact structural nonzero count of a coefficient matrix."""
    if _is_sparse(C):
        return int(np.count_nonzero(C.data))
    return int(np.count_nonzero(C))


def _reconstruction(D: np.ndarray, C) -> np.ndarray:
    """Dense n x N product ``D C^T``."""
    if _is_sparse(C):
        return np.asarray(C @ D.T).T
    return D @ np.asarray(C).T


def code_rhs(Y: np.ndarray, D: np.ndarray, C, j: int) -> np.ndarray:
    """Correlation vector driving the code update for atom ``j``.

    Returns ``E_j^T d_j`` where ``E_j = Y - sum_{k != j} d_k c_k^T`` is
    the residual with atom j's contribution excluded, computed as

        Y^T d_j - C (D^T d_j) + c_j

    so the n x N matrix ``E_j`` is never materialized.  ``C`` may be a
    dense array or any scipy sparse matrix; column j must hold the
    current (pre-update) code.
    """
    d = D[:, j]
    w = D.T @ d
    return Y.T @ d - C @ w + _code_column(C, j)


def sparse_code_step(Y: np.ndarray, D: np.ndarray, C, j: int, lam: float, code_bound: float) -> np.ndarray:
    """Exact single-column code update.

    Computes the global minimizer of the learning objective with respect
    to ``c_j``, all other columns fixed: the truncated hard threshold of
    the correlation vector ``E_j^T d_j``.

    Parameters
    ----------
    Y : ndarray, shape (n, N)
        Training matrix.
    D : ndarray, shape (n, J)
        Dictionary with unit-norm columns; column j is the atom paired
        with the code being updated.
    C : ndarray or scipy sparse, shape (N, J)
        Coefficient matrix; column j holds the pre-update code.
    j : int
        Atom index.
    lam : float
        Sparsity weight (threshold level).
    code_bound : float
        Magnitude cap; must exceed ``lam``.

    Returns
    -------
    ndarray, shape (N,)
        The updated code column.  Every nonzero entry has magnitude in
        ``[lam, code_bound]``.
    """
    if not 0 <= j < D.shape[1]:
        raise ConfigError(f"atom index {j} out of range for {D.shape[1]} atoms")
    return truncated_hard_threshold(code_rhs(Y, D, C, j), lam, code_bound)


def atom_rhs(Y: np.ndarray, D: np.ndarray, C, j: int, new_code: np.ndarray) -> np.ndarray:
    """Residual/code product driving the atom update for atom ``j``.

    Returns ``E_j @ new_code`` computed as

        Y c - D (C^T c) + d_j (c_j^T c),        c = new_code

    where ``C`` and ``D`` are the matrices from *before* the code commit
    (column j of ``C`` is the pre-update code ``c_j``, column j of ``D``
    the pre-update atom).  As with :func:`code_rhs`, ``E_j`` is never
    formed.
    """
    c = np.asarray(new_code, dtype=float)
    u = C.T @ c
    return Y @ c - D @ u + D[:, j] * float(_code_column(C, j) @ c)


def atom_update_step(
    Y: np.ndarray,
    D: np.ndarray,
    C,
    j: int,
    new_code: np.ndarray,
    policy: str = "unit_basis",
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Exact single-atom update following a code update.

    Computes the unit-norm global minimizer of the fit term with respect
    to ``d_j``: the normalized product of the atom-j residual with the
    freshly updated code.  ``C`` and ``D`` must still be in their
    pre-commit state (column j of ``C`` is the code that ``new_code``
    replaces), matching the sweep order in :func:`learn`.

    When ``new_code`` is identically zero any unit vector is optimal and
    ``policy`` decides: ``"unit_basis"`` returns the first standard
    basis vector, ``"keep_previous"`` returns the current atom,
    ``"random_unit"`` draws a fresh unit vector from ``rng``.

    Raises
    ------
    InvariantError
        If ``new_code`` is nonzero but the residual/code product is the
        zero vector.  After an exact code update this cannot happen, so
        it is surfaced instead of silently normalized.
    """
    if policy not in EMPTY_CODE_POLICIES:
        raise ConfigError(f"unknown empty-code policy {policy!r}; choose from {EMPTY_CODE_POLICIES}")
    n = D.shape[0]
    c = np.asarray(new_code, dtype=float)
    if not np.any(c):
        if policy == "keep_previous":
            return D[:, j].copy()
        if policy == "random_unit":
            if rng is None:
                raise ConfigError("policy 'random_unit' needs an rng")
            return _random_unit_vector(rng, n)
        e1 = np.zeros(n)
        e1[0] = 1.0
        return e1
    h = atom_rhs(Y, D, C, j, c)
    norm = np.linalg.norm(h)
    if norm == 0.0:
        raise InvariantError(
            f"atom {j}: residual/code product vanished for a nonzero code; "
            "the preceding code update cannot have been exact"
        )
    return h / norm


def _random_unit_vector(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.standard_normal(n)
    norm = np.linalg.norm(v)
    while norm == 0.0:  # measure zero, but stay total
        v = rng.standard_normal(n)
        norm = np.linalg.norm(v)
    return v / norm


def objective(Y: np.ndarray, D: np.ndarray, C, lam: float) -> float:
    """Value of the learning objective: fit term plus ``lam^2 * nnz(C)``.

    The nonzero count is structural/exact; no tolerance is applied when
    deciding whether an entry is zero.
    """
    resid = np.asarray(Y, dtype=float) - _reconstruction(D, C)
    return float(np.vdot(resid, resid)) + lam * lam * _code_nnz(C)


def nsre(Y: np.ndarray, D: np.ndarray, C) -> float:
    """Normalized representation error ``||Y - D C^T||_F / ||Y||_F``."""
    Y = np.asarray(Y, dtype=float)
    ynorm = np.linalg.norm(Y)
    if ynorm == 0.0:
        raise ConfigError("nsre is undefined for an all-zero training matrix")
    resid = Y - _reconstruction(D, C)
    return float(np.linalg.norm(resid) / ynorm)


def sparsity_factor(C, signal_dim: int) -> float:
    """Nonzero fraction of ``C`` relative to ``signal_dim * N``.

    The denominator uses the signal dimension n (not the atom count), so
    the value reads as average nonzeros per signal over n.
    """
    if signal_dim < 1:
        raise ConfigError("signal_dim must be positive")
    N = C.shape[0]
    return _code_nnz(C) / (signal_dim * N)


@dataclass
class LearnConfig:
    """Settings for :func:`learn`.

    ``code_bound=None`` resolves to ``||Y||_F`` at call time.
    ``init_codes=None`` means all-zero initial codes.  ``seed`` drives
    the random atom order and the ``random_unit`` policy only.
    ``record_inner_objectives`` stores the exact objective after every
    half-step (2J values per sweep), recomputed from scratch against a
    dense mirror of ``C``; intended for small diagnostic runs.
    """

    num_atoms: int
    iterations: int
    lam: float
    init_dictionary: Optional[np.ndarray] = None
    code_bound: Optional[float] = None
    init_codes: object = None
    atom_order: str = "cyclic"
    empty_code_policy: str = "unit_basis"
    seed: int = 0
    record_inner_objectives: bool = False


@dataclass
class LearnTrace:
    """Per-sweep diagnostics collected by :func:`learn`.

    All arrays have one entry per outer iteration.  ``delta_dict`` and
    ``delta_codes`` are Frobenius norms of the change from the previous
    iterate (iteration 1 measures the change from the initialization).
    ``nsre`` is NaN when the training matrix is all zero.
    """

    objective: np.ndarray = field(default_factory=lambda: np.empty(0))
    nsre: np.ndarray = field(default_factory=lambda: np.empty(0))
    sparsity_factor: np.ndarray = field(default_factory=lambda: np.empty(0))
    delta_dict: np.ndarray = field(default_factory=lambda: np.empty(0))
    delta_codes: np.ndarray = field(default_factory=lambda: np.empty(0))
    inner_objectives: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return len(self.objective)


def _column_lists(init_codes, N: int, J: int, code_bound: float):
    """Internal (indices, values) pair per column, validated against the bound."""
    cols = []
    if init_codes is None:
        empty_i = np.empty(0, dtype=np.int64)
        empty_v = np.empty(0, dtype=float)
        return [(empty_i, empty_v) for _ in range(J)]
    if _is_sparse(init_codes):
        M = sparse.csc_array(init_codes)
    else:
        M = np.asarray(init_codes, dtype=float)
    if M.shape != (N, J):
        raise ConfigError(f"init_codes shape {M.shape} does not match (N, J)=({N}, {J})")
    for j in range(J):
        col = _code_column(M, j)
        if not np.all(np.isfinite(col)):
            raise ConfigError("init_codes must be finite")
        idx = np.flatnonzero(col)
        val = col[idx].astype(float, copy=True)
        if val.size and np.max(np.abs(val)) > code_bound:
            raise ConfigError(
                f"init_codes column {j} exceeds the magnitude bound {code_bound}"
            )
        cols.append((idx.astype(np.int64), val))
    return cols


def _columns_to_csc(cols, N: int, J: int) -> sparse.csc_array:
    indptr = np.zeros(J + 1, dtype=np.int64)
    for k, (idx, _) in enumerate(cols):
        indptr[k + 1] = indptr[k] + idx.size
    if indptr[-1] == 0:
        return sparse.csc_array((N, J), dtype=float)
    indices = np.concatenate([idx for idx, _ in cols])
    data = np.concatenate([val for _, val in cols])
    return sparse.csc_array((data, indices, indptr), shape=(N, J))


def _validated_dictionary(D, n: int, J: int) -> np.ndarray:
    D = np.array(D, dtype=float, copy=True)
    if D.ndim != 2 or D.shape != (n, J):
        raise ConfigError(f"init dictionary must have shape ({n}, {J}), got {getattr(D, 'shape', None)}")
    if not np.all(np.isfinite(D)):
        raise ConfigError("init dictionary must be finite")
    norms = np.linalg.norm(D, axis=0)
    if np.any(np.abs(norms - 1.0) > _NORM_TOL):
        raise ConfigError("init dictionary columns must have unit l2 norm")
    return D / norms


def learn(Y: np.ndarray, config: LearnConfig):
    """Run the block coordinate descent learner.

    Each of ``config.iterations`` sweeps visits every atom index j (in
    cyclic or seeded-random order) and performs the code update followed
    by the atom update, in that fixed order, always against the latest
    values of all other blocks.

    Parameters
    ----------
    Y : ndarray, shape (n, N)
        Training matrix, one signal per column.  Must be finite.  An
        all-zero matrix is allowed (an explicit ``code_bound`` is then
        required, since the default ``||Y||_F`` would be zero).
    config : LearnConfig

    Returns
    -------
    D : ndarray, shape (n, J)
        Learned dictionary, unit-norm columns.
    C : scipy.sparse.csc_array, shape (N, J)
        Learned codes; stored nonzeros are exactly the structural
        nonzeros produced by the updates.
    trace : LearnTrace

    Raises
    ------
    ConfigError
        On invalid settings (including ``code_bound <= lam``).
    InvariantError
        If the objective turns non-finite, or an atom update sees a
        vanishing residual/code product for a nonzero code.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1 or Y.shape[1] < 1:
        raise ConfigError(f"training matrix must be 2-D and non-empty, got shape {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ConfigError("training matrix must be finite")
    n, N = Y.shape

    J = int(config.num_atoms)
    K = int(config.iterations)
    if J < 1:
        raise ConfigError("num_atoms must be at least 1")
    if K < 0:
        raise ConfigError("iterations must be nonnegative")
    lam = float(config.lam)
    if not (np.isfinite(lam) and lam >= 0.0):
        raise ConfigError(f"lam must be finite and nonnegative, got {lam}")
    ynorm = float(np.linalg.norm(Y))
    bound = ynorm if config.code_bound is None else float(config.code_bound)
    if not (np.isfinite(bound) and bound > lam):
        raise ConfigError(
            f"code_bound must be finite and exceed lam (got bound={bound}, lam={lam}); "
            "pass an explicit code_bound for zero training data"
        )
    if config.atom_order not in ATOM_ORDERS:
        raise ConfigError(f"unknown atom_order {config.atom_order!r}; choose from {ATOM_ORDERS}")
    if config.empty_code_policy not in EMPTY_CODE_POLICIES:
        raise ConfigError(
            f"unknown empty_code_policy {config.empty_code_policy!r}; choose from {EMPTY_CODE_POLICIES}"
        )
    if config.init_dictionary is None:
        raise ConfigError("init_dictionary is required (see the dictionaries module)")

    D = _validated_dictionary(config.init_dictionary, n, J)
    cols = _column_lists(config.init_codes, N, J, bound)
    rng = np.random.default_rng(config.seed)

    record = bool(config.record_inner_objectives)
    inner = np.empty((K, 2 * J)) if record else None
    mirror = None
    if record:
        mirror = np.zeros((N, J))
        for k, (idx, val) in enumerate(cols):
            mirror[idx, k] = val

    trace = LearnTrace(
        objective=np.empty(K),
        nsre=np.empty(K),
        sparsity_factor=np.empty(K),
        delta_dict=np.empty(K),
        delta_codes=np.empty(K),
        inner_objectives=inner,
    )
    recon = np.empty((n, N))

    for t in range(K):
        order = np.arange(J) if config.atom_order == "cyclic" else rng.permutation(J)
        D_prev = D.copy()
        delta_codes_sq = 0.0

        for pos, j in enumerate(order):
            d_old = D[:, j].copy()
            idx_old, val_old = cols[j]

            # Code update: correlation vector, then truncated thresholding.
            w = D.T @ d_old
            b = Y.T @ d_old
            for k, (idx, val) in enumerate(cols):
                if idx.size:
                    b[idx] -= w[k] * val
            if idx_old.size:
                b[idx_old] += val_old
            c_new = truncated_hard_threshold(b, lam, bound)
            idx_new = np.flatnonzero(c_new)
            val_new = c_new[idx_new].copy()

            # Atom update from the pre-commit state.
            if idx_new.size:
                u = np.empty(J)
                for k, (idx, val) in enumerate(cols):
                    u[k] = val @ c_new[idx] if idx.size else 0.0
                h = Y[:, idx_new] @ val_new
                h -= D @ u
                if idx_old.size:
                    h += d_old * float(val_old @ c_new[idx_old])
                hnorm = float(np.linalg.norm(h))
                if hnorm == 0.0:
                    raise InvariantError(
                        f"iteration {t + 1}, atom {j}: residual/code product vanished "
                        "for a nonzero code"
                    )
                d_new = h / hnorm
            elif config.empty_code_policy == "keep_previous":
                d_new = d_old
            elif config.empty_code_policy == "random_unit":
                d_new = _random_unit_vector(rng, n)
            else:
                d_new = np.zeros(n)
                d_new[0] = 1.0

            if record:
                mirror[:, j] = c_new
            if idx_old.size:  # c_new now becomes the code delta vector
                c_new[idx_old] -= val_old
            delta_codes_sq += float(c_new @ c_new)

            cols[j] = (idx_new, val_new)
            if record:
                inner[t, 2 * pos] = _mirror_objective(Y, D, mirror, lam)
            D[:, j] = d_new
            if record:
                inner[t, 2 * pos + 1] = _mirror_objective(Y, D, mirror, lam)

        # Per-sweep diagnostics from an exact dense reconstruction.
        recon[:] = 0.0
        nnz = 0
        for k, (idx, val) in enumerate(cols):
            if idx.size:
                recon[:, idx] += D[:, k, None] * val[None, :]
                nnz += idx.size
        np.subtract(Y, recon, out=recon)
        fit = float(np.vdot(recon, recon))
        obj = fit + lam * lam * nnz
        if not np.isfinite(obj):
            raise InvariantError(f"objective became non-finite at iteration {t + 1}")
        trace.objective[t] = obj
        trace.nsre[t] = np.sqrt(fit) / ynorm if ynorm > 0.0 else np.nan
        trace.sparsity_factor[t] = nnz / (n * N)
        trace.delta_dict[t] = float(np.linalg.norm(D - D_prev))
        trace.delta_codes[t] = np.sqrt(delta_codes_sq)

    return D, _columns_to_csc(cols, N, J), trace


def _mirror_objective(Y: np.ndarray, D: np.ndarray, mirror: np.ndarray, lam: float) -> float:
    resid = Y - D @ mirror.T
    return float(np.vdot(resid, resid)) + lam * lam * int(np.count_nonzero(mirror))
