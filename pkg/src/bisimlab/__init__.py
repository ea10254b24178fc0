"""bisimlab: finite-MDP bisimulations, latent-dynamics training, collapse diagnostics."""

from bisimlab.mdp import DeterministicMDP, counting_abstract_mdp, random_mdp, validate_mdp
from bisimlab.relation import PairRelation, Partition
from bisimlab.bisim import (
    apply_F,
    distinguishing_oracle,
    empirical_apply_F,
    empirical_lfp,
    least_fixed_point,
    partition_refine,
    quotient,
)
from bisimlab.dataset import TransitionDataset, TransitionRecord

__all__ = [
    "DeterministicMDP",
    "PairRelation",
    "Partition",
    "TransitionDataset",
    "TransitionRecord",
    "apply_F",
    "counting_abstract_mdp",
    "distinguishing_oracle",
    "empirical_apply_F",
    "empirical_lfp",
    "least_fixed_point",
    "partition_refine",
    "quotient",
    "random_mdp",
    "validate_mdp",
]

__version__ = "0.1.0"
