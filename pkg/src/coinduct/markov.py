r"""Finite Markov chains analysed through a shifted contractive map.

For a row-stochastic ``P`` the matrix ``P`` itself is not contractive, but

.. math:: Q = P - \tfrac1n \mathbf 1 \mathbf 1^T

is eventually contractive when ``P`` is irreducible and aperiodic.  The
affine map ``x -> x Q + 1/n`` agrees with ``x -> x P`` on stochastic vectors
and its unique fixpoint is the stationary distribution.  Recurrence
statistics (first-return law, mean recurrence time, renewal identities) are
computed by taboo-mass propagation and cross-checked on truncated series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, NonConvergence, NotErgodic, NotSquare, NotStochastic, ValidationError
from .fixpoint import L1_NORM, ContractiveSystem, iterate_to_fixpoint

ROW_SUM_TOL = 1e-9
DEFAULT_TOL = 1e-10
DEFAULT_HORIZON = 200
MAX_POWER = 10_000


@dataclass(frozen=True, eq=False)
class StochasticChain:
    P: np.ndarray

    @property
    def n(self) -> int:
        return self.P.shape[0]

    def successors(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.P[s] > 0)

    def predecessors(self, s: int) -> np.ndarray:
        return np.flatnonzero(self.P[:, s] > 0)


def validate_chain(P) -> StochasticChain:
    """Check that ``P`` is square, nonnegative and has unit row sums."""
    try:
        arr = np.array(P, dtype=float)
    except (TypeError, ValueError) as exc:
        raise NotSquare(f"transition matrix is not a rectangular array of reals: {exc}") from None
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise NotSquare(f"transition matrix must be square and nonempty, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NotStochastic("transition matrix has non-finite entries")
    if np.any(arr < 0):
        i, j = np.argwhere(arr < 0)[0]
        raise NotStochastic(f"negative transition probability P[{i},{j}] = {arr[i, j]}")
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise NotStochastic(f"row {bad[0]} sums to {sums[bad[0]]!r}, not 1")
    arr.setflags(write=False)
    return StochasticChain(arr)


# --- structure --------------------------------------------------------------

def _reach(chain: StochasticChain, s: int, backward: bool = False) -> set[int]:
    step = chain.predecessors if backward else chain.successors
    seen = {s}
    todo = [s]
    while todo:
        for v in step(todo.pop()):
            v = int(v)
            if v not in seen:
                seen.add(v)
                todo.append(v)
    return seen


def is_irreducible(chain: StochasticChain) -> bool:
    """Strong connectivity of the support graph via a forward and a backward sweep from state 0."""
    n = chain.n
    return len(_reach(chain, 0)) == n and len(_reach(chain, 0, backward=True)) == n


def period(chain: StochasticChain, s: int) -> int:
    """gcd of the lengths of closed walks through ``s``; 0 if there are none.

    BFS levels inside the strongly connected class of ``s``; every internal
    edge ``(a, b)`` contributes ``level[a] + 1 - level[b]`` to the gcd.
    """
    cls = _reach(chain, s) & _reach(chain, s, backward=True)
    level = {s: 0}
    queue = [s]
    g = 0
    for a in queue:
        for b in chain.successors(a):
            b = int(b)
            if b not in cls:
                continue
            if b not in level:
                level[b] = level[a] + 1
                queue.append(b)
            else:
                g = math.gcd(g, level[a] + 1 - level[b])
    return g


def is_aperiodic(chain: StochasticChain) -> bool:
    """True iff every state has period 1.

    The period is a class property, so one state per strongly connected
    class is examined.
    """
    done: set[int] = set()
    for s in range(chain.n):
        if s in done:
            continue
        done |= _reach(chain, s) & _reach(chain, s, backward=True)
        if period(chain, s) != 1:
            return False
    return True


def _require_ergodic(chain: StochasticChain) -> None:
    if not is_irreducible(chain):
        raise NotErgodic("chain is reducible (support graph not strongly connected)")
    if not is_aperiodic(chain):
        raise NotErgodic(f"chain is periodic with period {period(chain, 0)}")


# --- shifted map ------------------------------------------------------------

def shifted_matrix(chain: StochasticChain) -> np.ndarray:
    return chain.P - 1.0 / chain.n


def shifted_map_apply(chain: StochasticChain, x) -> np.ndarray:
    """``x (P - 11^T/n) + 1^T/n`` for a row vector ``x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (chain.n,):
        raise DimensionMismatch(f"expected a vector of length {chain.n}, got shape {x.shape}")
    return x @ shifted_matrix(chain) + 1.0 / chain.n


def _row_norm(A: np.ndarray) -> float:
    # Operator norm of x -> x A on (R^n, l1).
    return float(np.abs(A).sum(axis=1).max())


def contraction_power(chain: StochasticChain, target: float = 0.5, max_power: int = MAX_POWER) -> tuple[int, float]:
    """Smallest ``p`` with ``||Q^p||`` at most ``target`` (l1 operator norm for row vectors).

    Falls back to the smallest power with norm below 1 if ``target`` is not
    reached by ``max_power``.  Raises :class:`NonConvergence` if no power up to
    ``max_power`` is contractive.
    """
    Q = shifted_matrix(chain)
    A = Q.copy()
    first_below_one = None
    for p in range(1, max_power + 1):
        norm = _row_norm(A)
        if norm <= target:
            return p, norm
        if first_below_one is None and norm < 1:
            first_below_one = (p, norm)
        A = A @ Q
    if first_below_one is not None:
        return first_below_one
    raise NonConvergence(f"no power of the shifted matrix up to {max_power} is contractive")


@dataclass(frozen=True, eq=False)
class StationaryResult:
    u: np.ndarray
    iterations: int
    residual: float
    power: int
    contraction: float


def stationary_distribution(chain: StochasticChain, tol: float = DEFAULT_TOL, max_iter: int = 1_000_000) -> StationaryResult:
    """Stationary distribution as the fixpoint of the shifted map.

    Parameters
    ----------
    chain : StochasticChain
        Irreducible, aperiodic chain.
    tol : float
        Bound on ``||uP - u||_inf`` for the returned vector.

    Returns
    -------
    StationaryResult
        ``u`` together with the number of map applications, the measured
        residual ``||uP - u||_inf``, and the contractive power of the shifted
        map that was used with its l1 operator norm.

    Notes
    -----
    The iteration starts at the uniform vector and runs through
    :func:`~coinduct.fixpoint.iterate_to_fixpoint` with the l1 distance.  The
    l1 error bound ``e`` yields ``||uP - u||_inf <= 2 e``, so the inner
    tolerance is ``tol / 2``.
    """
    if not (tol > 0):
        raise ValidationError(f"tol must be positive, got {tol!r}")
    _require_ergodic(chain)
    p, c = contraction_power(chain)
    sys = ContractiveSystem(partial(shifted_map_apply, chain), c, L1_NORM, power_n=p)
    start = np.full(chain.n, 1.0 / chain.n)
    res = iterate_to_fixpoint(sys, start, tol / 2, max_iter=max_iter)
    u = res.point
    residual = float(np.abs(u @ chain.P - u).max())
    return StationaryResult(u=u, iterations=res.iterations, residual=residual, power=p, contraction=c)


def is_stochastic_vector(x, atol: float = 1e-12) -> bool:
    x = np.asarray(x, dtype=float)
    return bool(np.all(x >= -atol) and abs(x.sum() - 1.0) <= atol)


def spectral_gap_estimate(chain: StochasticChain, iters: int = 2000, seed: int = 0) -> float:
    """Power-iteration estimate of the spectral radius of ``P - 11^T/n``.

    Row-vector power iteration with renormalisation; the estimate is the
    geometric mean of the per-step growth factors over the second half of
    the run, which also settles when the dominant eigenvalues form a complex
    pair.  Despite the name this is the radius, not ``1 - radius``.
    """
    if iters < 2:
        raise ValidationError("need at least 2 iterations")
    Q = shifted_matrix(chain)
    x = np.random.default_rng(seed).standard_normal(chain.n)
    x /= np.abs(x).sum()
    logs = []
    for k in range(iters):
        y = x @ Q
        norm = np.abs(y).sum()
        if norm < 1e-300:
            return 0.0
        if k >= iters // 2:
            logs.append(math.log(norm))
        x = y / norm
    return math.exp(math.fsum(logs) / len(logs))


# --- recurrence statistics --------------------------------------------------

def first_return_probabilities(chain: StochasticChain, t: int, M: int) -> np.ndarray:
    """``f[m-1]`` = probability that the chain started at ``t`` first returns to ``t`` at step ``m``.

    Mass leaves ``t``, is pushed through ``P`` one step at a time, and whatever
    lands on ``t`` is recorded and removed.
    """
    if M < 1:
        raise ValidationError(f"horizon must be >= 1, got {M}")
    _check_state(chain, t)
    mass = np.zeros(chain.n)
    mass[t] = 1.0
    f = np.empty(M)
    for m in range(M):
        mass = mass @ chain.P
        f[m] = mass[t]
        mass[t] = 0.0
    return f


def return_probabilities(chain: StochasticChain, t: int, M: int) -> np.ndarray:
    """``u[m] = (P^m)[t, t]`` for ``0 <= m <= M``."""
    _check_state(chain, t)
    x = np.zeros(chain.n)
    x[t] = 1.0
    u = np.empty(M + 1)
    u[0] = 1.0
    for m in range(1, M + 1):
        x = x @ chain.P
        u[m] = x[t]
    return u


def _check_state(chain: StochasticChain, t: int) -> None:
    if not (0 <= t < chain.n):
        raise ValidationError(f"state {t} out of range for a chain with {chain.n} states")


def _prefix_fsum(x: np.ndarray) -> np.ndarray:
    """Correctly rounded prefix sums, carrying Shewchuk's exact partials forward."""
    partials: list[float] = []
    out = np.empty(len(x))
    for i, v in enumerate(x.tolist()):
        kept = []
        for p in partials:
            if abs(v) < abs(p):
                v, p = p, v
            hi = v + p
            lo = p - (hi - v)
            if lo:
                kept.append(lo)
            v = hi
        kept.append(v)
        partials = kept
        out[i] = math.fsum(partials)
    return out


@dataclass(frozen=True, eq=False)
class RecurrenceStats:
    """Truncated recurrence statistics for one state.

    ``f[m-1]`` is the first-return probability at step ``m`` and ``u_seq[m]``
    the return probability ``(P^m)[t, t]``.  ``rho_partial[k]`` is
    ``sum_{m<=k} rho_m`` with ``rho_m = sum_{j>m} f_j`` and
    ``sigma_partial[k]`` the k-th partial sum of ``sigma(1)``, which
    telescopes to ``u_k``.
    """

    t: int
    horizon: int
    f: np.ndarray
    u_seq: np.ndarray
    mu_partial: float
    rho_partial: np.ndarray
    sigma_partial: np.ndarray
    renewal_residual: float
    reciprocal_residual: float
    limit_residual: float
    partial_sum_residual: float

    @property
    def mean_recurrence_time(self) -> float:
        return self.mu_partial


def recurrence_report(chain: StochasticChain, t: int, M: int = DEFAULT_HORIZON) -> RecurrenceStats:
    """First-return law, return probabilities and the identities linking them.

    Residuals reported:

    * ``renewal_residual``: ``max_n |u_n - sum_{m<n} u_m f_{n-m}|`` for ``1 <= n <= M``;
    * ``reciprocal_residual``: largest coefficient error of ``sigma(x) rho(x) = 1``
      through degree ``M``;
    * ``limit_residual``: ``|u_M - 1 / mu_partial|``;
    * ``partial_sum_residual``: ``max_m |sigma_partial[m] - u_m|``.
    """
    _require_ergodic(chain)
    f = first_return_probabilities(chain, t, M)
    u = return_probabilities(chain, t, M)

    # f_seq[k] = f_k with f_0 = 0
    f_seq = np.concatenate(([0.0], f))
    renewal = 0.0
    for n in range(1, M + 1):
        conv = math.fsum(u[:n] * f_seq[n:0:-1])
        renewal = max(renewal, abs(u[n] - conv))

    mu = math.fsum(np.arange(M + 1) * f_seq)

    # rho_m = 1 - sum_{k<=m} f_k, using sum_k f_k = 1 for a recurrent state
    cum_f = _prefix_fsum(f_seq)
    rho = 1.0 - cum_f
    rho_partial = _prefix_fsum(rho)

    sigma = np.empty(M + 1)
    sigma[0] = u[0]
    sigma[1:] = np.diff(u)
    sigma_partial = _prefix_fsum(sigma)

    recip = 0.0
    for k in range(M + 1):
        coef = math.fsum(sigma[: k + 1] * rho[k::-1])
        recip = max(recip, abs(coef - (1.0 if k == 0 else 0.0)))

    return RecurrenceStats(
        t=t,
        horizon=M,
        f=f,
        u_seq=u,
        mu_partial=mu,
        rho_partial=rho_partial,
        sigma_partial=sigma_partial,
        renewal_residual=renewal,
        reciprocal_residual=recip,
        limit_residual=abs(u[M] - 1.0 / mu),
        partial_sum_residual=float(np.abs(sigma_partial - u).max()),
    )


def linear_solve_stationary(P: Sequence[Sequence[float]]) -> np.ndarray:
    """Stationary vector from ``u (P - I) = 0, u 1 = 1`` by least squares.

    Independent of the fixpoint route; used as an oracle.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    A = np.vstack([(P - np.eye(n)).T, np.ones(n)])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    return np.linalg.lstsq(A, b, rcond=None)[0]
