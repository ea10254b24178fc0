"""Finite deterministic MDPs as dense tables.

Observations and actions are dense integer ids. The auxiliary table holds one
fixed-width real vector per observation (dimension 1 for scalar auxiliaries
such as reward).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTION_INC = 0
ACTION_DEC = 1


@dataclass
class DeterministicMDP:
    """Tabular deterministic MDP (observations, actions, transition, aux, reward, mu).

    transition[o, a] is the successor observation id. aux[o] is the auxiliary
    vector attached to observation o; reward[o] a scalar; initial_dist a
    probability vector over observations.
    """

    num_observations: int
    num_actions: int
    transition: np.ndarray  # int [|O|, |A|]
    aux: np.ndarray  # float [|O|, d_p]
    reward: np.ndarray  # float [|O|]
    initial_dist: np.ndarray  # float [|O|]

    def __post_init__(self) -> None:
        self.transition = np.asarray(self.transition, dtype=np.int64)
        self.aux = np.atleast_2d(np.asarray(self.aux, dtype=np.float64))
        if self.aux.shape[0] == 1 and self.num_observations > 1:
            self.aux = self.aux.T
        self.reward = np.asarray(self.reward, dtype=np.float64).reshape(-1)
        self.initial_dist = np.asarray(self.initial_dist, dtype=np.float64).reshape(-1)

    @property
    def aux_dim(self) -> int:
        return self.aux.shape[1]


def validate_mdp(mdp: DeterministicMDP) -> list[str]:
    """Return a list of invariant violations; empty means valid."""
    errors: list[str] = []
    n, na = mdp.num_observations, mdp.num_actions
    if n < 1:
        errors.append("num_observations must be positive")
    if na < 1:
        errors.append("num_actions must be positive")
    if mdp.transition.shape != (n, na):
        errors.append(f"transition shape {mdp.transition.shape} != ({n}, {na})")
    elif mdp.transition.size and (mdp.transition.min() < 0 or mdp.transition.max() >= n):
        errors.append("transition out of range")
    if mdp.aux.shape[0] != n:
        errors.append(f"aux has {mdp.aux.shape[0]} rows, expected {n}")
    if mdp.reward.shape != (n,):
        errors.append(f"reward shape {mdp.reward.shape} != ({n},)")
    if mdp.initial_dist.shape != (n,):
        errors.append(f"initial_dist shape {mdp.initial_dist.shape} != ({n},)")
    else:
        if mdp.initial_dist.size and mdp.initial_dist.min() < 0:
            errors.append("initial_dist has negative entries")
        if abs(mdp.initial_dist.sum() - 1.0) > 1e-9:
            errors.append("initial_dist not normalized")
    if not np.all(np.isfinite(mdp.aux)):
        errors.append("aux has non-finite entries")
    return errors


def counting_abstract_mdp(max_count: int = 8, target_n: int = 4) -> DeterministicMDP:
    """Count-chain MDP: states 0..max_count, actions inc/dec with clamping.

    Reward (and aux) is the indicator of count == target_n; initial
    distribution is uniform.
    """
    if not 0 <= target_n <= max_count:
        raise ValueError(f"target_n {target_n} not in [0, {max_count}]")
    n = max_count + 1
    counts = np.arange(n)
    transition = np.stack(
        [np.minimum(counts + 1, max_count), np.maximum(counts - 1, 0)], axis=1
    )
    reward = (counts == target_n).astype(np.float64)
    return DeterministicMDP(
        num_observations=n,
        num_actions=2,
        transition=transition,
        aux=reward.reshape(-1, 1),
        reward=reward,
        initial_dist=np.full(n, 1.0 / n),
    )


def random_mdp(
    num_obs: int,
    num_actions: int,
    num_aux_values: int,
    rng: np.random.Generator,
) -> DeterministicMDP:
    """Uniformly random deterministic MDP; aux drawn from `num_aux_values` distinct reals."""
    if min(num_obs, num_actions, num_aux_values) < 1:
        raise ValueError("all counts must be >= 1")
    transition = rng.integers(0, num_obs, size=(num_obs, num_actions))
    levels = np.sort(rng.standard_normal(num_aux_values))
    aux = levels[rng.integers(0, num_aux_values, size=num_obs)].reshape(-1, 1)
    return DeterministicMDP(
        num_observations=num_obs,
        num_actions=num_actions,
        transition=transition,
        aux=aux,
        reward=aux[:, 0].copy(),
        initial_dist=np.full(num_obs, 1.0 / num_obs),
    )


def save_mdp_json(mdp: DeterministicMDP, path: str) -> None:
    payload = {
        "num_observations": mdp.num_observations,
        "num_actions": mdp.num_actions,
        "transition": mdp.transition.reshape(-1).tolist(),
        "aux": mdp.aux.tolist(),
        "reward": mdp.reward.tolist(),
        "initial_dist": mdp.initial_dist.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_mdp_json(path: str) -> DeterministicMDP:
    with open(path) as fh:
        payload = json.load(fh)
    n = int(payload["num_observations"])
    na = int(payload["num_actions"])
    mdp = DeterministicMDP(
        num_observations=n,
        num_actions=na,
        transition=np.asarray(payload["transition"], dtype=np.int64).reshape(n, na),
        aux=np.asarray(payload["aux"], dtype=np.float64).reshape(n, -1),
        reward=np.asarray(payload["reward"], dtype=np.float64),
        initial_dist=np.asarray(payload["initial_dist"], dtype=np.float64),
    )
    errors = validate_mdp(mdp)
    if errors:
        raise ValueError(f"invalid MDP file {path}: " + "; ".join(errors))
    return mdp
