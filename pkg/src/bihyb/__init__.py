"""Bi-level hybrid search: modify a graph, let a fast heuristic solve it, score on the original."""

from .env import ActionPair, EnvConfig, EnvState, StepOutcome, observe, reset, run_episode, step
from .errors import (BiHybError, ContractError, CycleError, EpisodeDoneError, InvalidActionError, ParseError,
                     ValidationError)
from .formats import load_instance, parse_instance, serialize_instance
from .graph import DagInstance, HcpInstance, LabeledGraph, WeightedDigraph
from .policies import PolicyConfig, beam_search, run_policy

__all__ = [
    "ActionPair", "BiHybError", "ContractError", "CycleError", "DagInstance", "EnvConfig", "EnvState",
    "EpisodeDoneError", "HcpInstance", "InvalidActionError", "LabeledGraph", "ParseError", "PolicyConfig",
    "StepOutcome", "ValidationError", "WeightedDigraph", "beam_search", "load_instance", "observe",
    "parse_instance", "reset", "run_episode", "run_policy", "serialize_instance", "step",
]
