"""
Per-sensor trust tree kept by the coordinator.

Three domain separated leaves, (device id, score, epoch), are paired into a
two level tree, duplicating the odd node. The root at epoch j is the sensor's
trust token TS_(i,j). Scores enter the tree as fixed point values with two
decimals so the hash input is platform independent.

Each of init_token, update_tree and verify_token is one root evaluation and
is tallied as a single T_SHA, regardless of the node hashes inside it.
"""

# use annotations to type hint a method with the type of the enclosing class
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import List, Tuple

from ztac_py.crypto_core.encoding import INT_WIDTH
from ztac_py.crypto_core.error import MalformedEncoding
from ztac_py.crypto_core.primitives import DIGEST_LENGTH, HashDigest
from ztac_py.runtime_utils.op_tally import Term, counted

from .error import EmptyDeviceId, NonMonotonicEpoch
from .scoring import MAX_SCORE

TOKEN_LENGTH = DIGEST_LENGTH + INT_WIDTH

_ID_LEAF = b"leaf:id:"
_SCORE_LEAF = b"leaf:score:"
_EPOCH_LEAF = b"leaf:epoch:"
_NODE = b"node:"


def _digest(data: bytes) -> HashDigest:
    return HashDigest(hashlib.sha256(data).digest())


def id_leaf(device_id: bytes) -> HashDigest:
    """leaf committing to the device id"""
    return _digest(_ID_LEAF + device_id)


def score_leaf(score: float) -> HashDigest:
    """leaf committing to the score in hundredths"""
    return _digest(_SCORE_LEAF + int(round(score * 100)).to_bytes(INT_WIDTH, "big"))


def epoch_leaf(epoch: int) -> HashDigest:
    """leaf committing to the epoch"""
    return _digest(_EPOCH_LEAF + epoch.to_bytes(INT_WIDTH, "big"))


def merkle_levels(leaves: List[HashDigest]) -> List[List[HashDigest]]:
    """every level of the tree, leaves first and the root level last"""
    levels = [list(leaves)]
    while len(levels[-1]) > 1:
        current = levels[-1]
        if len(current) % 2 == 1:
            current = current + [current[-1]]
        levels.append([_digest(_NODE + current[i].raw + current[i + 1].raw) for i in range(0, len(current), 2)])
    return levels


@dataclass(frozen=True)
class TrustToken:
    """TS_(i,j): tree root and the epoch it was issued for"""

    root: HashDigest
    epoch: int

    def to_bytes(self) -> bytes:
        """root followed by the 8 byte epoch"""
        return self.root.raw + self.epoch.to_bytes(INT_WIDTH, "big")

    @classmethod
    def from_bytes(cls, data: bytes) -> TrustToken:
        """decode the output of to_bytes"""
        if len(data) != TOKEN_LENGTH:
            raise MalformedEncoding(f"trust token must be {TOKEN_LENGTH} bytes, got {len(data)}")
        return cls(HashDigest(data[:DIGEST_LENGTH]), int.from_bytes(data[DIGEST_LENGTH:], "big"))


@dataclass(frozen=True)
class TrustMerkleTree:
    """
    the coordinator's tree for one sensor. score and epoch are the values the
    score and epoch leaves commit to.
    """

    device_id: bytes
    score: float
    epoch: int
    levels: Tuple[Tuple[HashDigest, ...], ...]

    @classmethod
    def from_leaves(cls, device_id: bytes, score: float, epoch: int) -> TrustMerkleTree:
        """build the tree for (device_id, score, epoch)"""
        leaves = [id_leaf(device_id), score_leaf(score), epoch_leaf(epoch)]
        levels = tuple(tuple(level) for level in merkle_levels(leaves))
        return cls(device_id=device_id, score=score, epoch=epoch, levels=levels)

    @property
    def leaves(self) -> Tuple[HashDigest, ...]:
        """id, score and epoch leaves"""
        return self.levels[0]

    @property
    def root(self) -> HashDigest:
        """current root"""
        return self.levels[-1][0]

    def token(self) -> TrustToken:
        """token for the current state"""
        return TrustToken(root=self.root, epoch=self.epoch)


@counted(Term.SHA)
def init_token(device_id: bytes, seed_score: float = MAX_SCORE) -> Tuple[TrustMerkleTree, TrustToken]:
    """tree at epoch 0 and the seed token TS_(i,0)"""
    if not device_id:
        raise EmptyDeviceId("device id must be non-empty")
    tree = TrustMerkleTree.from_leaves(device_id, seed_score, 0)
    return tree, tree.token()


@counted(Term.SHA)
def update_tree(tree: TrustMerkleTree, new_score: float, epoch: int) -> Tuple[TrustMerkleTree, TrustToken]:
    """replace the score and epoch leaves; epochs strictly increase"""
    if epoch <= tree.epoch:
        raise NonMonotonicEpoch(tree.epoch, epoch)
    updated = TrustMerkleTree.from_leaves(tree.device_id, new_score, epoch)
    return updated, updated.token()


@counted(Term.SHA)
def verify_token(tree: TrustMerkleTree, presented: TrustToken) -> bool:
    """does presented match the tree's recomputed root and current epoch?"""
    recomputed = merkle_levels(list(tree.leaves))[-1][0]
    return recomputed == presented.root and presented.epoch == tree.epoch
