from dataclasses import dataclass
from typing import Tuple

from ztac_py.runtime_utils.op_tally import Term, counted

from .error import IndexOutOfRange
from .primitives import SymKey, hash_bytes


@dataclass(frozen=True)
class KeyHashChain:
    """
    forward hash chain h_0 = seed, h_i = H(h_(i-1)). h_j is the data key of
    epoch j, so a chain of length n covers epochs 0..n.
    """

    seed: SymKey
    length: int
    keys: Tuple[SymKey, ...]


@counted(Term.SHA, weight=lambda seed, n: n)
def chain_generate(seed: SymKey, n: int) -> KeyHashChain:
    """derive h_0..h_n from seed, n hash evaluations"""
    if n < 1:
        raise IndexOutOfRange(n, n)
    keys = [seed]
    for _ in range(n):
        keys.append(SymKey.from_digest(hash_bytes(keys[-1].raw)))
    return KeyHashChain(seed=seed, length=n, keys=tuple(keys))


def chain_key(chain: KeyHashChain, i: int) -> SymKey:
    """h_i of a generated chain"""
    if i < 0 or i > chain.length:
        raise IndexOutOfRange(i, chain.length)
    return chain.keys[i]
