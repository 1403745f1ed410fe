"""Finite discounted Markov decision processes.

States are ``0..n-1``; state ``x`` has actions ``0..k_x-1``.  The one-step
utility is pluggable: any ``h(mdp, x, d, u)`` that is uniformly bounded,
``c``-contractive in ``u`` (sup norm) and monotone in ``u`` may replace
:func:`discounted_utility`, with ``c = mdp.discount``.

Operators
---------
``bellman_policy``      u -> h(x, delta_x, u) for a fixed deterministic policy
``bellman_opt``         u -> max_d h(x, d, u)
``prob_policy_apply``   u -> sum_d mu_x(d) h(x, d, u)

Their fixpoints are computed with :mod:`coinduct.fixpoint`; exhaustive
policy enumeration with direct linear solves serves as the oracle.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidDistribution, InvalidMdp, InvalidPolicy, NoWitness, TooLarge, UnknownAction, ValidationError
from .fixpoint import DEFAULT_MAX_ITER, SUP_NORM, ContractiveSystem, iterate_to_fixpoint

PROB_TOL = 1e-12
BRUTE_FORCE_LIMIT = 10**6


@dataclass(frozen=True, eq=False)
class Mdp:
    """``rewards[x][d]`` is r(x, d); ``kernel[x][d, y]`` is P(y | x, d)."""

    rewards: tuple[np.ndarray, ...]
    kernel: tuple[np.ndarray, ...]
    discount: float
    state_names: tuple[str, ...] | None = None
    action_names: tuple[tuple[str, ...], ...] | None = None

    @property
    def n_states(self) -> int:
        return len(self.rewards)

    def n_actions(self, x: int) -> int:
        return len(self.rewards[x])

    @property
    def n_policies(self) -> int:
        out = 1
        for x in range(self.n_states):
            out *= self.n_actions(x)
        return out

    def policies(self):
        """All deterministic policies in lexicographic order."""
        return itertools.product(*(range(self.n_actions(x)) for x in range(self.n_states)))


def make_mdp(rewards, kernel, discount, state_names=None, action_names=None, tol: float = PROB_TOL) -> Mdp:
    """Validate and freeze an MDP.

    ``rewards`` is a sequence (over states) of sequences (over actions);
    ``kernel`` a sequence over states of ``(k_x, n)`` arrays.
    """
    if not (0 <= discount < 1):
        raise InvalidMdp(f"discount must lie in [0, 1), got {discount!r}")
    n = len(rewards)
    if n == 0:
        raise InvalidMdp("an MDP needs at least one state")
    if len(kernel) != n:
        raise InvalidMdp(f"{n} reward rows but {len(kernel)} kernel blocks")
    rs, ks = [], []
    for x in range(n):
        r = np.array(rewards[x], dtype=float).reshape(-1)
        k = np.array(kernel[x], dtype=float)
        if r.size == 0:
            raise InvalidMdp(f"state {x} has no actions")
        if k.ndim != 2 or k.shape != (r.size, n):
            raise InvalidMdp(f"kernel block of state {x} has shape {k.shape}, expected {(r.size, n)}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(k))):
            raise InvalidMdp(f"non-finite data at state {x}")
        if np.any(k < 0):
            raise InvalidMdp(f"negative transition probability at state {x}")
        sums = k.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > tol):
            d = int(np.argmax(np.abs(sums - 1.0)))
            raise InvalidMdp(f"P(.|{x},{d}) sums to {sums[d]!r}, not 1")
        r.setflags(write=False)
        k.setflags(write=False)
        rs.append(r)
        ks.append(k)
    return Mdp(tuple(rs), tuple(ks), float(discount),
               tuple(state_names) if state_names is not None else None,
               tuple(tuple(a) for a in action_names) if action_names is not None else None)


Utility = Callable[[Mdp, int, int, np.ndarray], float]


def discounted_utility(mdp: Mdp, x: int, d: int, u: np.ndarray) -> float:
    """r(x, d) + c * E[u(next state)]."""
    return float(mdp.rewards[x][d] + mdp.discount * (mdp.kernel[x][d] @ u))


def _values(mdp: Mdp, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (mdp.n_states,):
        raise ValidationError(f"value function must have {mdp.n_states} entries, got shape {u.shape}")
    return u


def h_eval(mdp: Mdp, x: int, d: int, u, h: Utility = discounted_utility) -> float:
    if not (0 <= x < mdp.n_states):
        raise ValidationError(f"unknown state {x}")
    if not (0 <= d < mdp.n_actions(x)):
        raise UnknownAction(f"state {x} has no action {d}")
    return h(mdp, x, d, _values(mdp, u))


def check_policy(mdp: Mdp, policy: Sequence[int]) -> tuple[int, ...]:
    policy = tuple(int(d) for d in policy)
    if len(policy) != mdp.n_states:
        raise InvalidPolicy(f"policy has {len(policy)} entries, MDP has {mdp.n_states} states")
    for x, d in enumerate(policy):
        if not (0 <= d < mdp.n_actions(x)):
            raise UnknownAction(f"state {x} has no action {d}")
    return policy


def check_prob_policy(mdp: Mdp, mu, tol: float = PROB_TOL) -> tuple[np.ndarray, ...]:
    if len(mu) != mdp.n_states:
        raise InvalidDistribution(f"strategy has {len(mu)} entries, MDP has {mdp.n_states} states")
    out = []
    for x, row in enumerate(mu):
        w = np.array(row, dtype=float).reshape(-1)
        if w.size != mdp.n_actions(x):
            raise InvalidDistribution(f"state {x}: {w.size} weights for {mdp.n_actions(x)} actions")
        if np.any(w < 0) or not np.all(np.isfinite(w)) or abs(w.sum() - 1.0) > tol:
            raise InvalidDistribution(f"state {x}: weights {w.tolist()} are not a probability vector")
        w.setflags(write=False)
        out.append(w)
    return tuple(out)


def point_mass(mdp: Mdp, policy: Sequence[int]) -> tuple[np.ndarray, ...]:
    policy = check_policy(mdp, policy)
    rows = []
    for x, d in enumerate(policy):
        w = np.zeros(mdp.n_actions(x))
        w[d] = 1.0
        rows.append(w)
    return tuple(rows)


# --- operators ----------------------------------------------------------------

def bellman_policy(mdp: Mdp, policy: Sequence[int], u, h: Utility = discounted_utility) -> np.ndarray:
    policy = check_policy(mdp, policy)
    u = _values(mdp, u)
    return np.array([h(mdp, x, d, u) for x, d in enumerate(policy)])


def action_values(mdp: Mdp, x: int, u, h: Utility = discounted_utility) -> np.ndarray:
    u = _values(mdp, u)
    return np.array([h(mdp, x, d, u) for d in range(mdp.n_actions(x))])


def bellman_opt(mdp: Mdp, u, h: Utility = discounted_utility) -> np.ndarray:
    u = _values(mdp, u)
    return np.array([action_values(mdp, x, u, h).max() for x in range(mdp.n_states)])


def prob_policy_apply(mdp: Mdp, mu, u, h: Utility = discounted_utility) -> np.ndarray:
    mu = check_prob_policy(mdp, mu)
    u = _values(mdp, u)
    return np.array([float(mu[x] @ action_values(mdp, x, u, h)) for x in range(mdp.n_states)])


# --- fixpoints ----------------------------------------------------------------

def _solve(mdp: Mdp, op, tol: float, max_iter: int) -> np.ndarray:
    sys = ContractiveSystem(op, mdp.discount, SUP_NORM)
    return iterate_to_fixpoint(sys, np.zeros(mdp.n_states), tol, max_iter=max_iter).point


def policy_value(mdp: Mdp, policy, tol: float = 1e-10, h: Utility = discounted_utility,
                 max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Value of a deterministic policy, within ``tol`` in sup norm."""
    policy = check_policy(mdp, policy)
    return _solve(mdp, partial(bellman_policy, mdp, policy, h=h), tol, max_iter)


def optimal_value(mdp: Mdp, tol: float = 1e-10, h: Utility = discounted_utility,
                  max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    """Fixpoint of the optimality operator, within ``tol`` in sup norm."""
    return _solve(mdp, partial(bellman_opt, mdp, h=h), tol, max_iter)


def prob_policy_value(mdp: Mdp, mu, tol: float = 1e-10, h: Utility = discounted_utility,
                      max_iter: int = DEFAULT_MAX_ITER) -> np.ndarray:
    mu = check_prob_policy(mdp, mu)
    return _solve(mdp, partial(prob_policy_apply, mdp, mu, h=h), tol, max_iter)


def greedy_policy(mdp: Mdp, v, eps: float = 0.0, h: Utility = discounted_utility) -> tuple[int, ...]:
    """Per state, the lowest-index action within ``(1 - c) * eps`` of the best one-step value.

    With ``eps = 0`` this is the argmax with ties broken towards the lowest
    index.  When ``v`` is the optimal value the returned policy's value is
    within ``eps`` of it.
    """
    if eps < 0:
        raise ValidationError(f"eps must be nonnegative, got {eps!r}")
    slack = (1 - mdp.discount) * eps
    out = []
    for x in range(mdp.n_states):
        q = action_values(mdp, x, v, h)
        best = q.max()
        out.append(next(d for d, val in enumerate(q) if val == best or best - val < slack))
    return tuple(out)


def derandomize(mdp: Mdp, mu, tol: float = 1e-10, h: Utility = discounted_utility) -> tuple[int, ...]:
    """Deterministic policy at least as good as the probabilistic strategy ``mu``.

    Per state the action maximising ``h(x, d, v_mu)`` is chosen (lowest index
    on ties); it satisfies ``h(x, d, v_mu) >= v_mu(x) - tol`` because an
    average never exceeds its maximum.  :class:`NoWitness` signals that this
    check failed, i.e. ``v_mu`` was not accurate to ``tol``.
    """
    v_mu = prob_policy_value(mdp, mu, tol, h)
    out = []
    for x in range(mdp.n_states):
        q = action_values(mdp, x, v_mu, h)
        d = int(np.argmax(q))
        if q[d] < v_mu[x] - tol:
            raise NoWitness(f"state {x}: best one-step value {q[d]!r} below v_mu = {v_mu[x]!r}")
        out.append(d)
    return tuple(out)


# --- oracle -------------------------------------------------------------------

def policy_matrices(mdp: Mdp, policy: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and reward vector induced by a deterministic policy."""
    P = np.array([mdp.kernel[x][d] for x, d in enumerate(policy)])
    r = np.array([mdp.rewards[x][d] for x, d in enumerate(policy)])
    return P, r


def policy_value_exact(mdp: Mdp, policy: Sequence[int]) -> np.ndarray:
    """Solve ``(I - c P_delta) v = r_delta`` directly (discounted utility only)."""
    P, r = policy_matrices(mdp, check_policy(mdp, policy))
    return np.linalg.solve(np.eye(mdp.n_states) - mdp.discount * P, r)


def brute_force_optimal(mdp: Mdp, tol: float = 1e-10) -> tuple[np.ndarray, tuple[int, ...]]:
    """Enumerate every deterministic policy and return the pointwise maximum value.

    The returned policy is the first one (lexicographically) whose value is
    within ``tol`` of the maximum in sup norm, or the closest one if none is.
    """
    if mdp.n_policies > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{mdp.n_policies} policies exceed the enumeration limit {BRUTE_FORCE_LIMIT}")
    policies = list(mdp.policies())
    values = np.array([policy_value_exact(mdp, p) for p in policies])
    best = values.max(axis=0)
    gaps = np.abs(best - values).max(axis=1)
    hits = np.flatnonzero(gaps <= tol)
    i = int(hits[0]) if hits.size else int(np.argmin(gaps))
    return best, policies[i]
