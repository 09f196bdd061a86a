"""
Cryptographic building blocks shared by every other package: hashing, HMAC,
authenticated symmetric encryption, ECDH with HKDF, Ed25519 signatures and
certificates, public key sealing, canonical byte encoding and the key hash
chain.
"""
