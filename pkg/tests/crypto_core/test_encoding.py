import pytest

from ztac_py.crypto_core.encoding import Decoder, Encoder
from ztac_py.crypto_core.error import MalformedEncoding


def test_field_layout() -> None:
    """
    fields are a 4 byte big-endian length followed by their bytes
    """
    assert Encoder().put_bytes(b"ab").to_bytes() == b"\x00\x00\x00\x02ab"
    assert Encoder().put_int(1).to_bytes() == b"\x00\x00\x00\x08" + bytes(7) + b"\x01"
    assert Encoder().put_bool(True).to_bytes() == b"\x00\x00\x00\x01\x01"


def test_decode_mixed() -> None:
    """
    a decoder reads back every kind of field in order
    """
    encoded = (
        Encoder()
        .put_str("sensor-1")
        .put_int(2**64 - 1)
        .put_bool(False)
        .put_strs(["a", "b"])
        .put_blobs([b"", b"\x00\xff"])
        .to_bytes()
    )

    decoder = Decoder(encoded)
    assert decoder.take_str() == "sensor-1"
    assert decoder.take_int() == 2**64 - 1
    assert decoder.take_bool() is False
    assert decoder.take_strs() == ["a", "b"]
    assert decoder.take_blobs() == [b"", b"\x00\xff"]
    assert decoder.exhausted
    decoder.finish()


def test_malformed() -> None:
    """
    truncation, trailing bytes and wrong field shapes raise MalformedEncoding
    """
    encoded = Encoder().put_str("window").put_int(3).to_bytes()

    truncated = Decoder(encoded[:-1])
    truncated.take_str()
    with pytest.raises(MalformedEncoding):
        truncated.take_int()

    trailing = Decoder(encoded + b"\x00")
    trailing.take_str()
    trailing.take_int()
    with pytest.raises(MalformedEncoding):
        trailing.finish()

    with pytest.raises(MalformedEncoding):
        Decoder(Encoder().put_bytes(b"abc").to_bytes()).take_int()
    with pytest.raises(MalformedEncoding):
        Decoder(Encoder().put_bytes(b"\x02").to_bytes()).take_bool()
    with pytest.raises(MalformedEncoding):
        Decoder(Encoder().put_bytes(b"\xff\xfe").to_bytes()).take_str()
    with pytest.raises(MalformedEncoding):
        Decoder(Encoder().put_int(10).to_bytes()).take_count(limit=4)

    with pytest.raises(MalformedEncoding):
        Encoder().put_int(-1)
    with pytest.raises(MalformedEncoding):
        Encoder().put_int(2**64)
