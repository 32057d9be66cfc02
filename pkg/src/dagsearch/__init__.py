"""Score-based causal discovery by tree search in DAG space."""

from .dag_space import CycleCandidateSet, CycleError, Dag
from .env import DagState, EnvConfig
from .scoring import ObservationDataset, ScoreCache, ScoreFunctionKind, Scorer
from .search import SearchConfig, SearchResult, run_search

__version__ = "0.1.0"

__all__ = [
    "CycleCandidateSet",
    "CycleError",
    "Dag",
    "DagState",
    "EnvConfig",
    "ObservationDataset",
    "ScoreCache",
    "ScoreFunctionKind",
    "Scorer",
    "SearchConfig",
    "SearchResult",
    "run_search",
]
