class CryptoCoreException(Exception):
    """
    Generic exception for the ztac crypto_core library
    """


class AuthenticationFailure(CryptoCoreException):
    """
    Authenticated decryption failed. The ciphertext, nonce, associated data or
    key was modified.
    """


class InvalidPoint(CryptoCoreException):
    """
    A public key does not decode to a valid point on the agreement curve
    """

    def __init__(self, detail: str):
        message = f"Invalid curve point: {detail}"
        super().__init__(message)
        self.detail = detail


class IndexOutOfRange(CryptoCoreException):
    """
    Requested key hash chain index lies outside of the generated chain
    """

    def __init__(self, index: int, length: int):
        message = f"Chain index {index} outside of chain with length {length}"
        super().__init__(message)
        self.index = index
        self.length = length


class InvalidKeyLength(CryptoCoreException):
    """
    Fixed width key or digest material with the wrong number of bytes
    """

    def __init__(self, kind: str, expected: int, actual: int):
        message = f"{kind} must be {expected} bytes, got {actual}"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class MalformedEncoding(CryptoCoreException):
    """
    Canonical byte encoding could not be decoded
    """


class NonceReuse(CryptoCoreException):
    """
    The same nonce was used twice with one symmetric key
    """

    def __init__(self, key_fingerprint: str, nonce: bytes):
        message = f"Nonce {nonce.hex()} reused under key {key_fingerprint}"
        super().__init__(message)
        self.key_fingerprint = key_fingerprint
        self.nonce = nonce
