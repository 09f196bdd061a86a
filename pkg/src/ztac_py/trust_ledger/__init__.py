"""
Zero-trust scoring. Weighted trust scores, the coordinator side Merkle tree
trust token per sensor, and the pluggable cloud side trust evaluator.
"""
