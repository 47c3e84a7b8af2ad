"""Exact and asymptotic enumeration of bipartite graphs and loopless digraphs
with given degree sequences."""

__version__ = "0.1.0"

from .model import Balance, DegreeSequence, GraphClass, Kind, SeqStats, balance_state, perturb, stats
from .realize import ForbiddenSet, Sufficiency, feasible_exact, feasible_sufficient
from .exact import count, edge_prob_exact, path_prob_exact, ratio_exact, switching_bound

__all__ = [
    "Balance",
    "DegreeSequence",
    "ForbiddenSet",
    "GraphClass",
    "Kind",
    "SeqStats",
    "Sufficiency",
    "balance_state",
    "count",
    "edge_prob_exact",
    "feasible_exact",
    "feasible_sufficient",
    "path_prob_exact",
    "perturb",
    "ratio_exact",
    "stats",
    "switching_bound",
]
