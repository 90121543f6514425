"""Spectral tools for small cooperative (Metzler) matrices, plus the
shared Perron iteration engine used on matrices of any size.

A cooperative matrix has nonnegative off-diagonal entries, so A + cI is
nonnegative for c = 1 + max(0, -min diag A) and its rightmost eigenvalue
is real (Perron root).  The engine below runs normalized power iteration
on the shifted matrix and, when the iteration stalls on a clustered
spectrum, switches to repeated matrix squaring: the squared-matrix
iterate equals the 2^k-th power-method iterate, so the method stays a
power iteration while the effective step count grows geometrically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, ResolventDomainError

TOL_ZERO = 1e-13  # entries below this count as structural zeros


class IllConditionedWarning(UserWarning):
    """Resolvent solve with estimated condition number above 1e14."""


class NearSingularWarning(UserWarning):
    """Resolvent parameter within rounding distance of a pole."""


@dataclass(frozen=True)
class CoopMatrix:
    """Square matrix with nonnegative off-diagonal entries."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"need a square matrix, got shape {a.shape}")
        off = a - np.diag(np.diag(a))
        if np.min(off) < -TOL_ZERO:
            i, j = np.unravel_index(np.argmin(off), off.shape)
            raise ValueError(
                f"not cooperative: entry ({i},{j}) = {a[i, j]:.6g} < 0")
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.shape[0]


def _as_matrix(C) -> np.ndarray:
    if isinstance(C, CoopMatrix):
        return C.entries
    return CoopMatrix(np.asarray(C, dtype=float)).entries


@dataclass(frozen=True)
class PerronResult:
    """Outcome of a Perron iteration on a Metzler matrix."""

    value: float
    vector: np.ndarray
    iterations: int
    residual: float
    converged: bool


def metzler_bound(A: np.ndarray, tol: float = 1e-12,
                  power_budget: int = 200,
                  max_squarings: int = 70) -> PerronResult:
    """Spectral bound of a Metzler matrix by shifted power iteration.

    The residual is measured on the shifted matrix B = A + cI as
    ||B u - rho u||_inf / rho with ||u||_inf = 1, which tracks value
    convergence even when the eigenvector direction rotates slowly.
    Returns the best estimate flagged non-converged if both iteration
    phases exhaust their budget.
    """
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if m == 0:
        return PerronResult(-np.inf, np.zeros(0), 0, 0.0, True)
    if m == 1:
        return PerronResult(float(A[0, 0]), np.ones(1), 0, 0.0, True)
    c = 1.0 + max(0.0, -float(np.min(np.diag(A))))
    B = A + c * np.eye(m)
    u = np.ones(m)

    def assess(u):
        v = B @ u
        uu = float(u @ u)
        rho = float(u @ v) / uu
        res = float(np.max(np.abs(v - rho * u))) / max(abs(rho), 1e-300)
        return v, rho, res

    rho = c
    res = np.inf
    iters = 0
    for _ in range(power_budget):
        v, rho, res = assess(u)
        iters += 1
        if res <= tol:
            break
        nv = float(np.max(np.abs(v)))
        if nv == 0.0:  # cannot happen for positive u: diag(B) >= 1
            break
        u = v / nv
    if res > tol:
        # squaring phase: after k rounds u equals the 2^k-step iterate
        S = B / np.max(B)
        ones = np.ones(m)
        for _ in range(max_squarings):
            S = S @ S
            S /= np.max(S)
            u = S @ ones
            u /= np.max(np.abs(u))
            _, rho, res = assess(u)
            iters += 1
            if res <= tol:
                break
    # Rayleigh quotient on A itself avoids the rho - c cancellation
    u = u / np.max(np.abs(u))
    value = float(u @ (A @ u)) / float(u @ u)
    return PerronResult(value, u, iters, res, bool(res <= tol))


def perron_bound(C, tol: float = 1e-12) -> float:
    """Spectral bound s(C) of a cooperative matrix.

    Raises NonConvergenceError if the iteration budget is exhausted.
    """
    r = metzler_bound(_as_matrix(C), tol=tol)
    if not r.converged:
        raise NonConvergenceError("Perron iteration did not converge",
                                  r.value, r.residual)
    return r.value


def is_irreducible(C, tol_zero: float = TOL_ZERO) -> bool:
    """True iff the off-diagonal adjacency graph is strongly connected."""
    a = np.asarray(C.entries if isinstance(C, CoopMatrix) else C, dtype=float)
    m = a.shape[0]
    if m <= 1:
        return True
    adj = a > tol_zero
    np.fill_diagonal(adj, False)
    return _reaches_all(adj) and _reaches_all(adj.T)


def _reaches_all(adj: np.ndarray) -> bool:
    m = adj.shape[0]
    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.nonzero(adj[i])[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


def schur_reduce(C, l1: int, gamma: float) -> CoopMatrix:
    """Eliminate the trailing block at resolvent parameter gamma:
    C11 + C12 (gamma I - C22)^{-1} C21, an l1 x l1 cooperative matrix.

    Requires gamma > s(C22) so the resolvent is entrywise nonnegative.
    """
    a = _as_matrix(C)
    m = a.shape[0]
    if not 0 < l1 <= m:
        raise ValueError(f"block split l1={l1} out of range for order {m}")
    if l1 == m:
        return CoopMatrix(a.copy())
    c22 = a[l1:, l1:]
    s22 = metzler_bound(c22).value
    if not gamma > s22:
        raise ResolventDomainError(
            f"resolvent parameter {gamma:.6g} is not above the trailing "
            f"block bound {s22:.6g}")
    R = gamma * np.eye(m - l1) - c22
    cond = np.linalg.cond(R, 1)
    if cond > 1e14:
        warnings.warn(f"resolvent solve condition estimate {cond:.3g}",
                      IllConditionedWarning, stacklevel=2)
    X = np.linalg.solve(R, a[l1:, :l1])
    reduced = a[:l1, :l1] + a[:l1, l1:] @ X
    return CoopMatrix(reduced)


def large_shift_limit_check(C, l1: int, mu_schedule) -> list[float]:
    """Spectral bounds of C - diag(mu, ..., mu, 0, ..., 0) along a
    positive increasing schedule of shifts applied to the first l1 rows.

    The values decrease toward s(C22); the caller asserts convergence.
    """
    a = _as_matrix(C)
    mus = [float(m) for m in mu_schedule]
    if any(m < 0 for m in mus) or any(m2 <= m1 for m1, m2 in zip(mus, mus[1:])):
        raise ValueError("shift schedule must be nonnegative and increasing")
    out = []
    for mu in mus:
        shift = np.zeros(a.shape[0])
        shift[:l1] = mu
        out.append(metzler_bound(a - np.diag(shift)).value)
    return out
