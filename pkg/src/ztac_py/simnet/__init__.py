"""
Deterministic discrete tick simulator with scripted network adversary,
scenario runner, reports, primitive benchmarks and the ztac_sim command line.
"""
