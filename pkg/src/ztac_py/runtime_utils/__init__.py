"""
Shared runtime helpers: process logging, environment validation and the
primitive operation tally used for per-phase cost accounting.
"""
