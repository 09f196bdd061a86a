"""
Pairing based schemes over BN254: key-policy attribute based encryption with
threshold access trees, and constant header identity based broadcast
encryption.
"""
