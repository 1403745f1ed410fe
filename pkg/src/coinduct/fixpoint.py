"""Certified fixpoint iteration for (eventually) contractive maps.

A :class:`ContractiveSystem` bundles a self-map with a caller-declared
contraction constant ``c`` and a power ``n`` such that ``map**n`` shrinks
distances by ``c``.  :func:`iterate_to_fixpoint` runs the Picard iteration
in blocks of ``n`` steps and stops on the a-posteriori bound

    d(u_k, u*) <= c / (1 - c) * d(u_k, u_{k-1}),

which requires no knowledge of the limit.  Declared constants are trusted;
:func:`estimate_lipschitz` can only falsify a declaration, never prove it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Generic, Iterable, Sequence, TypeVar

import numpy as np

from .errors import EmptySampleSet, InvalidContraction, NonConvergence, PredicateViolated, ValidationError

P = TypeVar("P")

DEFAULT_MAX_ITER = 100_000


class ContractionWarning(UserWarning):
    """Measured Lipschitz ratio exceeds the declared contraction constant."""


@dataclass(frozen=True)
class MetricCarrier(Generic[P]):
    """A set of points together with a distance function on it."""

    distance: Callable[[P, P], float]
    name: str = "metric"

    def axiom_violations(self, samples: Sequence[P], atol: float = 0.0) -> list[str]:
        """Check reflexivity, symmetry and the triangle inequality on ``samples``."""
        bad = []
        d = self.distance
        for i, a in enumerate(samples):
            if d(a, a) > atol:
                bad.append(f"d(x{i},x{i}) = {d(a, a)!r} != 0")
            for j, b in enumerate(samples):
                dab = d(a, b)
                if dab < 0:
                    bad.append(f"d(x{i},x{j}) < 0")
                if abs(dab - d(b, a)) > atol:
                    bad.append(f"d(x{i},x{j}) != d(x{j},x{i})")
                for k, c in enumerate(samples):
                    if d(a, c) > dab + d(b, c) + atol:
                        bad.append(f"triangle fails for (x{i},x{j},x{k})")
        return bad


def _abs_diff(a, b):
    return abs(a - b)


def _sup_diff(a, b):
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return float(diff.max()) if diff.size else 0.0


def _l1_diff(a, b):
    return float(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)).sum())


REAL_LINE: MetricCarrier = MetricCarrier(_abs_diff, "real line")
SUP_NORM: MetricCarrier = MetricCarrier(_sup_diff, "sup norm")
L1_NORM: MetricCarrier = MetricCarrier(_l1_diff, "l1 norm")


def _check_contraction(c) -> None:
    if not (0 <= c < 1):
        raise InvalidContraction(f"contraction constant must lie in [0, 1), got {c!r}")


@dataclass(frozen=True)
class ContractiveSystem(Generic[P]):
    """Self-map ``map`` whose ``power_n``-th iterate is ``contraction_c``-contractive."""

    map: Callable[[P], P]
    contraction_c: float
    carrier: MetricCarrier[P] = REAL_LINE
    power_n: int = 1

    def __post_init__(self):
        _check_contraction(self.contraction_c)
        if not isinstance(self.power_n, (int, np.integer)) or self.power_n < 1:
            raise ValidationError(f"power_n must be a positive integer, got {self.power_n!r}")

    def distance(self, a: P, b: P) -> float:
        return self.carrier.distance(a, b)

    def block(self, u: P) -> P:
        """Apply ``map`` ``power_n`` times."""
        for _ in range(self.power_n):
            u = self.map(u)
        return u


@dataclass(frozen=True)
class FixpointResult(Generic[P]):
    point: P
    iterations: int
    residual: float
    error_bound: float
    trajectory: tuple | None = field(default=None, repr=False)


def iterate_to_fixpoint(
    sys: ContractiveSystem[P],
    start: P,
    tol: float,
    max_iter: int = DEFAULT_MAX_ITER,
    *,
    record: bool = False,
) -> FixpointResult[P]:
    """Iterate ``sys.map`` from ``start`` until the a-posteriori error bound is below ``tol``.

    The iteration advances in blocks of ``sys.power_n`` applications.  After
    each block the residual is the distance between the two most recent block
    endpoints and ``error_bound = residual * c / (1 - c)`` bounds the distance
    from the current point to the fixpoint.  ``iterations`` counts single
    applications of ``map``; with ``record=True`` every intermediate iterate
    is kept in ``trajectory``.

    Raises :class:`NonConvergence` when ``max_iter`` applications do not
    suffice or the residual stops being finite.
    """
    if not (tol > 0):
        raise ValidationError(f"tol must be positive, got {tol!r}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be positive, got {max_iter!r}")
    c = sys.contraction_c
    _check_contraction(c)
    ratio = c / (1 - c)

    u = start
    k = 0
    trail = [start] if record else None
    while True:
        prev = u
        for _ in range(sys.power_n):
            if k >= max_iter:
                raise NonConvergence(f"no convergence to tol={tol:g} within {max_iter} iterations")
            u = sys.map(u)
            k += 1
            if trail is not None:
                trail.append(u)
        residual = float(sys.distance(u, prev))
        if not math.isfinite(residual):
            raise NonConvergence(f"residual became {residual} after {k} iterations")
        bound = residual * ratio
        if bound <= tol:
            return FixpointResult(
                point=u,
                iterations=k,
                residual=residual,
                error_bound=bound,
                trajectory=tuple(trail) if trail is not None else None,
            )


def cauchy_bound(c, n: int, m: int, d1):
    """A-priori bound ``c**n * (1 - c**m) / (1 - c) * d1`` on ``d(H^{n+m}(u), H^n(u))``.

    ``d1`` is ``d(H(u), u)``.  Works for any ordered field type, so exact
    rationals give exact bounds.
    """
    _check_contraction(c)
    if n < 0 or m < 1:
        raise ValidationError(f"need n >= 0 and m >= 1, got n={n}, m={m}")
    if d1 < 0:
        raise ValidationError(f"d1 must be nonnegative, got {d1!r}")
    return c**n * (1 - c**m) / (1 - c) * d1


def orbit(map: Callable[[P], P], start: P, count: int) -> list[P]:
    """``[start, map(start), ..., map**count(start)]``."""
    out = [start]
    for _ in range(count):
        out.append(map(out[-1]))
    return out


@dataclass(frozen=True)
class CoinductionReport:
    """Outcome of :func:`check_coinduction_step`.

    ``first_violation[i]`` is the first ``k`` such that ``u_k = map**k(sample_i)``
    satisfies the predicate but ``map(u_k)`` does not, or ``None`` if every
    checked step preserved it.  Passing is evidence, not proof; the
    closedness side condition of the rule is not checked at all.
    """

    samples: int
    steps: int
    first_violation: tuple[int | None, ...]
    closedness_checked: bool = False

    @property
    def all_preserved(self) -> bool:
        return all(v is None for v in self.first_violation)

    @property
    def violations(self) -> list[tuple[int, int]]:
        return [(i, s) for i, s in enumerate(self.first_violation) if s is not None]


def check_coinduction_step(
    sys: ContractiveSystem[P],
    predicate: Callable[[P], bool],
    samples: Iterable[P],
    steps: int,
) -> CoinductionReport:
    """Apply ``sys.map`` up to ``steps`` times to each sample and record where the predicate breaks."""
    samples = list(samples)
    if not samples:
        raise EmptySampleSet("the predicate must be witnessed by at least one sample")
    if steps < 1:
        raise ValidationError(f"steps must be positive, got {steps}")
    firsts: list[int | None] = []
    for i, u in enumerate(samples):
        if not predicate(u):
            raise PredicateViolated(f"sample {i} does not satisfy the predicate")
        hit = None
        for k in range(steps):
            u = sys.map(u)
            if not predicate(u):
                hit = k
                break
        firsts.append(hit)
    return CoinductionReport(samples=len(samples), steps=steps, first_violation=tuple(firsts))


def estimate_lipschitz(
    sys: ContractiveSystem[P],
    pairs: Iterable[tuple[P, P]],
    *,
    warn: bool = True,
    slack: float = 1e-12,
) -> float:
    """Largest observed ratio ``d(G u, G v) / d(u, v)`` for ``G = map**power_n``.

    Pairs at distance zero are skipped.  Emits :class:`ContractionWarning`
    when the ratio exceeds the declared constant by more than ``slack``.
    """
    worst = 0.0
    for u, v in pairs:
        duv = sys.distance(u, v)
        if duv == 0:
            continue
        worst = max(worst, float(sys.distance(sys.block(u), sys.block(v)) / duv))
    if warn and worst > sys.contraction_c + slack:
        warnings.warn(
            f"measured Lipschitz ratio {worst:.6g} exceeds declared constant {sys.contraction_c:.6g}",
            ContractionWarning,
            stacklevel=2,
        )
    return worst


__all__ = [
    "CoinductionReport",
    "ContractionWarning",
    "ContractiveSystem",
    "FixpointResult",
    "L1_NORM",
    "MetricCarrier",
    "REAL_LINE",
    "SUP_NORM",
    "cauchy_bound",
    "check_coinduction_step",
    "estimate_lipschitz",
    "iterate_to_fixpoint",
    "orbit",
]
