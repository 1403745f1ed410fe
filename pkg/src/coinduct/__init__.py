"""Metric-coinduction toolkit: certified fixpoint iteration plus four applications.

Submodules: :mod:`~coinduct.fixpoint`, :mod:`~coinduct.streams`,
:mod:`~coinduct.markov`, :mod:`~coinduct.mdp`, :mod:`~coinduct.nwf`,
and the :mod:`~coinduct.cli` front end.
"""

from . import errors, fixpoint, markov, mdp, nwf, streams
from .fixpoint import ContractiveSystem, FixpointResult, MetricCarrier, cauchy_bound, check_coinduction_step, iterate_to_fixpoint

__version__ = "0.1.0"

__all__ = [
    "ContractiveSystem",
    "FixpointResult",
    "MetricCarrier",
    "cauchy_bound",
    "check_coinduction_step",
    "errors",
    "fixpoint",
    "iterate_to_fixpoint",
    "markov",
    "mdp",
    "nwf",
    "streams",
]
