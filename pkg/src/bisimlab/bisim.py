"""Largest bisimulation over finite deterministic MDPs.

Three independent routes to the same object:

  * least_fixed_point — full sweeps of the distinguishability operator F
    starting from the empty relation (the reference path);
  * partition_refine — Moore-style block splitting on successor signatures
    (the fast path);
  * distinguishing_oracle — breadth-first search over the pair (product)
    graph for a shortest distinguishing action sequence.

Plus the dataset-restricted operator F_D, which consults only co-observed
actions and sources that actually appear in the data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bisimlab.dataset import TransitionDataset
from bisimlab.mdp import DeterministicMDP
from bisimlab.relation import PairRelation, Partition, canonicalize_blocks


def aux_disagreement(aux: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Boolean matrix of pairs whose aux vectors differ (exact by default)."""
    diff = np.abs(aux[:, None, :] - aux[None, :, :]).max(axis=2)
    return diff > tol


def apply_F(mdp: DeterministicMDP, rel: PairRelation, aux_tol: float = 0.0) -> PairRelation:
    """One application of the distinguishability operator.

    F(R) = {(o,o') : p(o) != p(o')}  union
           {(o,o') : exists a with (f(o,a), f(o',a)) in R}.
    """
    n = mdp.num_observations
    if rel.num_observations != n:
        raise ValueError(f"relation over {rel.num_observations} observations, MDP has {n}")
    out = aux_disagreement(mdp.aux, aux_tol)
    for a in range(mdp.num_actions):
        fa = mdp.transition[:, a]
        out |= rel.bits[np.ix_(fa, fa)]
    return PairRelation(out)


def least_fixed_point(
    mdp: DeterministicMDP, aux_tol: float = 0.0
) -> tuple[PairRelation, int, list[int]]:
    """Iterate F from the empty relation until it stabilizes.

    Returns (R*, iteration count, per-iteration frontier sizes |R^(t+1) \\ R^(t)|).
    """
    rel = PairRelation.empty(mdp.num_observations)
    trace: list[int] = []
    iterations = 0
    while True:
        nxt = apply_F(mdp, rel, aux_tol)
        iterations += 1
        frontier = int(np.sum(nxt.bits & ~rel.bits))
        trace.append(frontier)
        if frontier == 0 and nxt == rel:
            break
        rel = nxt
    return rel, iterations, trace


def quotient(r_star: PairRelation, mdp: DeterministicMDP, aux_tol: float = 0.0) -> Partition:
    """Equivalence classes of B* = (O x O) \\ R*.

    Requires R* to actually be a fixed point of F and its complement to be
    transitive; fails loudly otherwise (guards against feeding in empirical
    relations, whose complements need not be equivalences).
    """
    if apply_F(mdp, r_star, aux_tol) != r_star:
        raise ValueError("relation is not a fixed point of F")
    if not r_star.complement_is_transitive():
        raise ValueError("non-transitive complement")
    comp = ~r_star.bits
    # representative = smallest j equivalent to i; dense renumbering by first occurrence
    reps = np.argmax(comp, axis=1)
    return canonicalize_blocks(reps)


def partition_refine(mdp: DeterministicMDP, aux_tol: float = 0.0) -> Partition:
    """Coarsest partition refining the aux-partition and closed under f.

    Moore-style: split blocks on the vector of successor blocks until stable.
    Identical to quotient(least_fixed_point(mdp)) but with per-block rather
    than per-pair work.
    """
    return partition_refine_with_rounds(mdp, aux_tol)[0]


def partition_refine_with_rounds(
    mdp: DeterministicMDP, aux_tol: float = 0.0
) -> tuple[Partition, int]:
    labels = _initial_aux_labels(mdp.aux, aux_tol)
    rounds = 0
    while True:
        succ_labels = labels[mdp.transition]  # [n, |A|]
        signature = np.column_stack([labels, succ_labels])
        _, new_labels = np.unique(signature, axis=0, return_inverse=True)
        rounds += 1
        if len(np.unique(new_labels)) == len(np.unique(labels)):
            break
        labels = new_labels
    return canonicalize_blocks(labels), rounds


def _initial_aux_labels(aux: np.ndarray, tol: float) -> np.ndarray:
    if tol == 0.0:
        _, labels = np.unique(aux, axis=0, return_inverse=True)
        return labels.astype(np.int64)
    # tolerance > 0: group greedily by first matching representative
    labels = np.full(aux.shape[0], -1, dtype=np.int64)
    reps: list[np.ndarray] = []
    for i in range(aux.shape[0]):
        for k, rep in enumerate(reps):
            if np.abs(aux[i] - rep).max() <= tol:
                labels[i] = k
                break
        else:
            labels[i] = len(reps)
            reps.append(aux[i])
    return labels


def partition_to_relation(part: Partition) -> PairRelation:
    """R from a partition: pairs in different blocks."""
    bits = part.block_of[:, None] != part.block_of[None, :]
    return PairRelation(bits)


def distinguishing_oracle(
    mdp: DeterministicMDP, max_depth: int, aux_tol: float = 0.0
) -> PairRelation:
    """Pairs separable by some action sequence of length <= max_depth.

    Breadth-first search on the pair graph (i,j) -a-> (f(i,a), f(j,a)),
    computing the shortest distance to an aux-disagreeing pair. Depth
    |O|^2 is always sufficient for exactness; smaller depths give an
    under-approximation (depth 0 = immediate aux disagreement only).
    """
    n = mdp.num_observations
    bad = aux_disagreement(mdp.aux, aux_tol)
    reached = bad.copy()
    succ_pairs = []
    for a in range(mdp.num_actions):
        fa = mdp.transition[:, a]
        succ_pairs.append((fa[:, None], fa[None, :]))
    for _ in range(max_depth):
        frontier = np.zeros_like(reached)
        for fa_i, fa_j in succ_pairs:
            frontier |= reached[fa_i, fa_j]
        frontier &= ~reached
        if not frontier.any():
            break
        reached |= frontier
    return PairRelation(reached)


# --- empirical path (dataset-restricted operator) ---


@dataclass
class CoObservedIndex:
    """Sources appearing in a dataset, plus per-action coverage and successors.

    obs_ids maps dense source index -> original observation id. has_action[k, a]
    says source k has a record for action a; succ_dense[k, a] is the successor's
    dense index, or -1 when the successor never appears as a source.
    """

    obs_ids: np.ndarray  # int [m]
    aux: np.ndarray  # float [m, d_p]
    has_action: np.ndarray  # bool [m, |A|]
    succ_dense: np.ndarray  # int [m, |A|], -1 when successor not a source

    @property
    def num_sources(self) -> int:
        return self.obs_ids.shape[0]

    def co_observed(self, x: int, y: int) -> list[int]:
        """Actions present in the data for both dense sources x and y."""
        return np.nonzero(self.has_action[x] & self.has_action[y])[0].tolist()


def build_co_observed_index(ds: TransitionDataset) -> CoObservedIndex:
    errors = ds.validate()
    if errors:
        raise ValueError("inconsistent dataset: " + "; ".join(errors))
    obs_ids = np.unique(ds.sources)
    m = obs_ids.shape[0]
    dense = {int(o): k for k, o in enumerate(obs_ids.tolist())}
    aux = np.zeros((m, ds.aux_dim))
    has_action = np.zeros((m, ds.num_actions), dtype=bool)
    succ_dense = np.full((m, ds.num_actions), -1, dtype=np.int64)
    for s, a, t, p in zip(ds.sources.tolist(), ds.actions.tolist(), ds.successors.tolist(), ds.aux):
        k = dense[s]
        aux[k] = p
        has_action[k, a] = True
        succ_dense[k, a] = dense.get(t, -1)
    return CoObservedIndex(obs_ids=obs_ids, aux=aux, has_action=has_action, succ_dense=succ_dense)


def empirical_apply_F(
    index: CoObservedIndex, rel: PairRelation, aux_tol: float = 0.0
) -> PairRelation:
    """F_D: aux disagreement over observed sources, plus successor
    disagreement through co-observed actions only."""
    m = index.num_sources
    if rel.num_observations != m:
        raise ValueError("relation not dimensioned to the dataset's sources")
    out = aux_disagreement(index.aux, aux_tol)
    # pad with an always-false row/col so dense index -1 contributes nothing
    padded = np.zeros((m + 1, m + 1), dtype=bool)
    padded[:m, :m] = rel.bits
    for a in range(index.has_action.shape[1]):
        has = index.has_action[:, a]
        succ = np.where(index.succ_dense[:, a] < 0, m, index.succ_dense[:, a])
        clause = padded[np.ix_(succ, succ)]
        clause &= has[:, None] & has[None, :]
        out |= clause
    return out if isinstance(out, PairRelation) else PairRelation(out)


def empirical_lfp(
    ds: TransitionDataset, aux_tol: float = 0.0
) -> tuple[PairRelation, PairRelation, CoObservedIndex]:
    """Least fixed point of F_D from the empty relation.

    Returns (R*_D, B*_D, index) where both relations are over the dataset's
    dense source indices. B*_D is the complement restricted to O_D x O_D and
    is returned as a relation (it need not be transitive under partial
    coverage).
    """
    index = build_co_observed_index(ds)
    rel = PairRelation.empty(index.num_sources)
    while True:
        nxt = empirical_apply_F(index, rel, aux_tol)
        if nxt == rel:
            break
        rel = nxt
    return rel, PairRelation(~rel.bits), index
