"""
Canonical byte encoding shared by keys, ciphertexts and wire messages.

Every field is written as a 4 byte big-endian length followed by its bytes.
Integers are 8 byte big-endian values inside such a field, sequences are a
count field followed by their items. Field order is fixed by the caller, so
encodings are bit exact and HMACs over them are reproducible.
"""

from typing import Iterable, List

from .error import MalformedEncoding

LENGTH_PREFIX = 4
INT_WIDTH = 8


class Encoder:
    """append-only builder of a canonical encoding"""

    def __init__(self) -> None:
        self._parts: List[bytes] = []

    def put_bytes(self, value: bytes) -> "Encoder":
        """length prefixed raw bytes"""
        self._parts.append(len(value).to_bytes(LENGTH_PREFIX, "big"))
        self._parts.append(bytes(value))
        return self

    def put_str(self, value: str) -> "Encoder":
        """utf-8 text"""
        return self.put_bytes(value.encode("utf-8"))

    def put_int(self, value: int) -> "Encoder":
        """non-negative integer below 2**64"""
        if value < 0 or value >= 1 << (8 * INT_WIDTH):
            raise MalformedEncoding(f"integer {value} out of encodable range")
        return self.put_bytes(value.to_bytes(INT_WIDTH, "big"))

    def put_bool(self, value: bool) -> "Encoder":
        """single byte flag"""
        return self.put_bytes(b"\x01" if value else b"\x00")

    def put_strs(self, values: Iterable[str]) -> "Encoder":
        """count followed by each string"""
        items = list(values)
        self.put_int(len(items))
        for item in items:
            self.put_str(item)
        return self

    def put_blobs(self, values: Iterable[bytes]) -> "Encoder":
        """count followed by each byte string"""
        items = list(values)
        self.put_int(len(items))
        for item in items:
            self.put_bytes(item)
        return self

    def to_bytes(self) -> bytes:
        """the encoding built so far"""
        return b"".join(self._parts)


class Decoder:
    """reader over a canonical encoding, MalformedEncoding on any mismatch"""

    def __init__(self, data: bytes) -> None:
        self._data = bytes(data)
        self._offset = 0

    def take_bytes(self) -> bytes:
        """next length prefixed field"""
        end = self._offset + LENGTH_PREFIX
        if end > len(self._data):
            raise MalformedEncoding("truncated length prefix")
        length = int.from_bytes(self._data[self._offset : end], "big")
        if end + length > len(self._data):
            raise MalformedEncoding(f"field of {length} bytes overruns encoding")
        value = self._data[end : end + length]
        self._offset = end + length
        return value

    def take_str(self) -> str:
        """next utf-8 text field"""
        try:
            return self.take_bytes().decode("utf-8")
        except UnicodeDecodeError as exception:
            raise MalformedEncoding("text field is not utf-8") from exception

    def take_int(self) -> int:
        """next integer field"""
        value = self.take_bytes()
        if len(value) != INT_WIDTH:
            raise MalformedEncoding(f"integer field has {len(value)} bytes")
        return int.from_bytes(value, "big")

    def take_bool(self) -> bool:
        """next flag field"""
        value = self.take_bytes()
        if value not in (b"\x00", b"\x01"):
            raise MalformedEncoding("flag field is not a single 0 or 1 byte")
        return value == b"\x01"

    def take_count(self, limit: int = 1 << 16) -> int:
        """sequence length, bounded so corrupt counts fail fast"""
        count = self.take_int()
        if count > limit:
            raise MalformedEncoding(f"sequence count {count} above limit {limit}")
        return count

    def take_strs(self) -> List[str]:
        """count prefixed strings"""
        return [self.take_str() for _ in range(self.take_count())]

    def take_blobs(self) -> List[bytes]:
        """count prefixed byte strings"""
        return [self.take_bytes() for _ in range(self.take_count())]

    @property
    def exhausted(self) -> bool:
        """have all bytes been consumed?"""
        return self._offset == len(self._data)

    def finish(self) -> None:
        """require that every byte was consumed"""
        if not self.exhausted:
            raise MalformedEncoding(f"{len(self._data) - self._offset} trailing bytes")
