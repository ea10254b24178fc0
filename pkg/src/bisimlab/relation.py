"""Pair relations over observations and partitions into blocks.

A PairRelation is a symmetric boolean |O|x|O| matrix. At desk scale
(|O| up to a few thousand) a byte-per-entry numpy matrix fits easily in
memory and vectorizes every sweep, so we store plain bool rather than packed
bits; `packed_rows` gives the bit-packed form for compact export.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PairRelation:
    bits: np.ndarray  # bool [n, n]

    def __post_init__(self) -> None:
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.ndim != 2 or self.bits.shape[0] != self.bits.shape[1]:
            raise ValueError(f"relation matrix must be square, got {self.bits.shape}")

    @classmethod
    def empty(cls, num_observations: int) -> "PairRelation":
        return cls(np.zeros((num_observations, num_observations), dtype=bool))

    @classmethod
    def from_pairs(cls, num_observations: int, pairs) -> "PairRelation":
        rel = cls.empty(num_observations)
        for i, j in pairs:
            rel.bits[i, j] = True
        return rel

    @property
    def num_observations(self) -> int:
        return self.bits.shape[0]

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return bool(self.bits[pair[0], pair[1]])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PairRelation):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __le__(self, other: "PairRelation") -> bool:
        """Subset check."""
        return bool(np.all(~self.bits | other.bits))

    def count(self) -> int:
        return int(self.bits.sum())

    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.bits, self.bits.T))

    def is_irreflexive(self) -> bool:
        return not bool(np.any(np.diagonal(self.bits)))

    def pairs(self) -> list[tuple[int, int]]:
        """Unordered pairs (i, j) with i < j, lexicographically sorted."""
        ii, jj = np.nonzero(np.triu(self.bits, k=1))
        return list(zip(ii.tolist(), jj.tolist()))

    def complement_is_transitive(self) -> bool:
        """Whether (O x O) \\ R is transitive (boolean matrix check)."""
        comp = ~self.bits
        closure = (comp.astype(np.uint8) @ comp.astype(np.uint8)) > 0
        return bool(np.all(~closure | comp))

    def packed_rows(self) -> np.ndarray:
        """Rows packed to bits (uint8, big-endian within a byte)."""
        return np.packbits(self.bits, axis=1)


@dataclass
class Partition:
    block_of: np.ndarray  # int [n]
    num_blocks: int

    def __post_init__(self) -> None:
        self.block_of = np.asarray(self.block_of, dtype=np.int64)

    @property
    def num_observations(self) -> int:
        return self.block_of.shape[0]

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for obs, blk in enumerate(self.block_of.tolist()):
            out[blk].append(obs)
        return out

    def same_block(self, i: int, j: int) -> bool:
        return bool(self.block_of[i] == self.block_of[j])


def canonicalize_blocks(labels: np.ndarray) -> Partition:
    """Renumber arbitrary block labels so block ids sort by smallest member."""
    labels = np.asarray(labels)
    first_seen: dict = {}
    for lab in labels.tolist():
        if lab not in first_seen:
            first_seen[lab] = len(first_seen)
    block_of = np.array([first_seen[lab] for lab in labels.tolist()], dtype=np.int64)
    return Partition(block_of=block_of, num_blocks=len(first_seen))


def write_relation_csv(rel: PairRelation, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("i,j\n")
        for i, j in rel.pairs():
            fh.write(f"{i},{j}\n")


def write_partition_csv(part: Partition, path: str) -> None:
    with open(path, "w") as fh:
        fh.write("observation_id,block_id\n")
        for obs, blk in enumerate(part.block_of.tolist()):
            fh.write(f"{obs},{blk}\n")
