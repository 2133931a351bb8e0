"""Constructive checks of identification through heteroskedasticity.

Given covariance matrices ``Sigma_t = B Lambda_t B'`` with ``Lambda_0 = I``
and diagonal ``Lambda_t``, column ``n`` of ``B`` is unique up to sign when
the variance sequence of shock ``n`` differs from that of every other shock.
The functions here recover such columns by simultaneous diagonalisation and
probe the rotational freedom left in the remaining columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment
from scipy.stats import ortho_group

__all__ = [
    "IdentificationAmbiguity",
    "VarianceSequence",
    "check_condition",
    "equal_variance_groups",
    "recover_columns",
    "recover_column",
    "recover_row",
    "rotation_ambiguity_probe",
    "sign_normalize",
    "identification_report",
]


class IdentificationAmbiguity(ValueError):
    """The requested column is not identified by the variance sequences."""


@dataclass(frozen=True)
class VarianceSequence:
    """Shock variances, shape (K+1, N); row ``t`` is the diagonal of ``Lambda_t`` and row 0 is all ones."""

    lambdas: np.ndarray

    def __post_init__(self):
        lam = np.atleast_2d(np.asarray(self.lambdas, dtype=float))
        if lam.shape[0] < 2:
            raise ValueError("need Lambda_0 and at least one further period")
        if np.any(~(lam > 0)):
            raise ValueError("variances must be strictly positive")
        if not np.allclose(lam[0], 1.0, rtol=0, atol=1e-12):
            raise ValueError("Lambda_0 must be the identity")
        object.__setattr__(self, "lambdas", lam)

    @property
    def N(self) -> int:
        return self.lambdas.shape[1]

    def covariances(self, B) -> np.ndarray:
        """``B Lambda_t B'`` for every period, shape (K+1, N, N)."""
        B = np.asarray(B, dtype=float)
        return np.einsum("ij,tj,kj->tik", B, self.lambdas, B)


def check_condition(seq: VarianceSequence, n: int, tol: float = 1e-12) -> bool:
    """True iff shock ``n``'s variance vector differs from every other shock's."""
    lam = seq.lambdas
    for m in range(seq.N):
        if m != n and np.max(np.abs(lam[:, n] - lam[:, m])) <= tol:
            return False
    return True


def equal_variance_groups(seq: VarianceSequence, tol: float = 1e-12) -> list:
    """Partition of the shocks into groups with identical variance vectors."""
    groups = []
    for n in range(seq.N):
        for g in groups:
            if np.max(np.abs(seq.lambdas[:, n] - seq.lambdas[:, g[0]])) <= tol:
                g.append(n)
                break
        else:
            groups.append([n])
    return groups


def sign_normalize(v, tol: float = 1e-12):
    """Flip ``v`` so that its first entry with magnitude above ``tol`` is positive."""
    v = np.asarray(v, dtype=float)
    nz = np.flatnonzero(np.abs(v) > tol)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def _whiten(sigmas):
    S = np.asarray(sigmas, dtype=float)
    L = linalg.cholesky(S[0], lower=True)
    M = np.array([linalg.solve_triangular(L, linalg.solve_triangular(L, s, lower=True).T, lower=True) for s in S])
    return L, 0.5 * (M + np.transpose(M, (0, 2, 1)))


def recover_columns(sigmas, seq: VarianceSequence, rng=None, max_tries: int = 20, gap: float = 1e-10):
    """Recover B column by column from ``Sigma_t = B Lambda_t B'``.

    Whitens by the Cholesky factor of ``Sigma_0``, diagonalises a random
    convex combination of the whitened matrices, and assigns eigenvectors to
    shocks by matching ``q' M_t q`` with the variance vectors.  Columns of
    shocks that share a variance vector come back as an arbitrary basis of
    their common eigenspace.
    """
    rng = np.random.default_rng() if rng is None else rng
    L, M = _whiten(sigmas)
    lam = seq.lambdas
    if M.shape[0] != lam.shape[0]:
        raise ValueError(f"{M.shape[0]} covariance matrices but {lam.shape[0]} variance vectors")
    groups = equal_variance_groups(seq)
    K1, N = lam.shape
    for _ in range(max_tries):
        c = rng.dirichlet(np.ones(K1 - 1)) if K1 > 1 else np.ones(0)
        vals, vecs = linalg.eigh(np.tensordot(c, M[1:], axes=1))
        target = np.sort(lam[1:].T @ c)
        # shocks in different groups must map to separated eigenvalues
        group_vals = sorted({round(float(lam[1:, g[0]] @ c), 14) for g in groups})
        if len(group_vals) < 2 or np.min(np.diff(group_vals)) > gap * max(1.0, np.abs(target).max()):
            break
    else:
        raise IdentificationAmbiguity("no random combination separated the variance patterns")
    patterns = np.einsum("ik,tij,jk->kt", vecs, M, vecs)
    cost = ((patterns[:, None, :] - lam.T[None, :, :]) ** 2).sum(axis=2)
    rows, cols = linear_sum_assignment(cost)
    B = np.empty((N, N))
    for k, n in zip(rows, cols):
        B[:, n] = sign_normalize(L @ vecs[:, k])
    return B


def recover_column(sigmas, n: int, seq: VarianceSequence, rng=None):
    """Column ``n`` of B up to sign, first nonzero coordinate positive.

    Raises
    ------
    IdentificationAmbiguity
        When another shock shares the variance vector of shock ``n``.
    """
    if not check_condition(seq, n):
        raise IdentificationAmbiguity(f"shock {n} shares its variance sequence with another shock")
    return recover_columns(sigmas, seq, rng)[:, n]


def recover_row(sigmas, n: int, seq: VarianceSequence, rng=None):
    """Row ``n`` of ``B0 = B^{-1}`` up to sign, from the inverse problem.

    ``Sigma_t^{-1} = B0' Lambda_t^{-1} B0``, so row ``n`` of B0 is column
    ``n`` recovered from the inverted covariances and reciprocal variances.
    """
    inv = np.array([linalg.inv(s) for s in np.asarray(sigmas, dtype=float)])
    return recover_column(inv, n, VarianceSequence(1.0 / seq.lambdas), rng)


def _column_deviation(a, b):
    return min(np.max(np.abs(a - b)), np.max(np.abs(a + b)))


def rotation_ambiguity_probe(sigmas, seq: VarianceSequence, n: int, n_rotations: int = 100, rng=None) -> dict:
    """Measure how far admissible rotations move the columns of a recovered B.

    Draws block-orthogonal ``Q`` acting within groups of shocks with equal
    variance vectors (so ``Q Lambda_t Q' = Lambda_t``), forms ``B Q`` and
    records the covariance fit and the movement of every column.

    Returns
    -------
    dict
        ``column_n``: max deviation of column ``n``; ``others``: per-column max
        deviation; ``fit``: max error of ``B Q Lambda_t Q' B'`` against ``Sigma_t``.
    """
    rng = np.random.default_rng() if rng is None else rng
    S = np.asarray(sigmas, dtype=float)
    B = recover_columns(S, seq, rng)
    groups = equal_variance_groups(seq)
    N = seq.N
    dev = np.zeros(N)
    fit = 0.0
    for _ in range(n_rotations):
        Q = np.eye(N)
        for g in groups:
            if len(g) > 1:
                Q[np.ix_(g, g)] = ortho_group.rvs(len(g), random_state=rng)
        Bq = B @ Q
        fit = max(fit, float(np.max(np.abs(seq.covariances(Bq) - S))))
        for j in range(N):
            dev[j] = max(dev[j], _column_deviation(Bq[:, j], B[:, j]))
    return {"column_n": float(dev[n]), "others": dev, "fit": fit}


def identification_report(sigmas, lambdas=None, rng=None, tol: float = 1e-8) -> list:
    """Which columns of B are identified by a covariance sequence.

    With ``lambdas`` the theoretical condition is checked and identified
    columns are recovered.  Without them the variance patterns are estimated
    from the data: after whitening by ``Sigma_0`` the matrices commute, so a
    random combination is diagonalised and ``q' M_t q`` gives each column's
    pattern; columns whose patterns coincide within ``tol`` are flagged.

    Returns
    -------
    list of dict
        One entry per column with ``column`` (0-based), ``identified`` and
        ``vector`` (the recovered column, or None when not identified).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    S = np.asarray(sigmas, dtype=float)
    if S.ndim != 3 or S.shape[1] != S.shape[2] or S.shape[0] < 2:
        raise ValueError("sigmas must have shape (K+1, N, N) with K >= 1")
    if lambdas is not None:
        seq = VarianceSequence(lambdas)
    else:
        L, M = _whiten(S)
        c = rng.dirichlet(np.ones(M.shape[0] - 1))
        _, vecs = linalg.eigh(np.tensordot(c, M[1:], axes=1))
        patterns = np.einsum("ik,tij,jk->tk", vecs, M, vecs)
        patterns[0] = 1.0
        # snap patterns that agree within tol so the grouping is exact
        for k in range(patterns.shape[1]):
            for j in range(k):
                if np.max(np.abs(patterns[:, k] - patterns[:, j])) <= tol:
                    patterns[:, k] = patterns[:, j]
                    break
        seq = VarianceSequence(patterns)
    B = recover_columns(S, seq, rng)
    out = []
    for n in range(seq.N):
        ok = check_condition(seq, n)
        out.append({"column": n, "identified": ok, "vector": B[:, n] if ok else None})
    return out
