import pytest
from hypothesis import given, strategies as st

from thingchain.errors import WireError
from thingchain.gateway import wire


def test_roundtrip_request():
    msg = wire.request(wire.PUT, 0xBEEF, "/things/t17/data", b"\x01\x02")
    decoded = wire.decode_message(msg.encode())
    assert decoded == msg


def test_layout_is_bit_exact():
    msg = wire.request(wire.GET, 0x0102, "/a", b"zz")
    assert msg.encode() == bytes([1, 0, 1, 1, 2]) + b"\x00\x02/a" + b"\x00\x02zz"


def test_unknown_version_rejected_with_id():
    data = bytearray(wire.request(wire.GET, 0x1234, "/x").encode())
    data[0] = 9
    with pytest.raises(WireError) as info:
        wire.decode_message(bytes(data))
    assert info.value.reason == "BadVersion"
    assert info.value.message_id == 0x1234


def test_truncated_datagrams():
    data = wire.request(wire.GET, 7, "/things/t/last").encode()
    for cut in (0, 3, 5, 8, len(data) - 1):
        with pytest.raises(WireError):
            wire.decode_message(data[:cut])


def test_trailing_bytes_rejected():
    data = wire.request(wire.GET, 7, "/x").encode() + b"\x00"
    with pytest.raises(WireError) as info:
        wire.decode_message(data)
    assert info.value.reason == "TrailingBytes"


def test_oversize_rejected_on_encode_and_decode():
    with pytest.raises(WireError):
        wire.request(wire.PUT, 1, "/x", b"z" * wire.MAX_DATAGRAM).encode()
    with pytest.raises(WireError) as info:
        wire.decode_message(b"\x01" + b"\x00" * 1400)
    assert info.value.reason == "TooLong"


def test_bad_request_code():
    data = bytearray(wire.request(wire.GET, 5, "/x").encode())
    data[2] = 77
    with pytest.raises(WireError) as info:
        wire.decode_message(bytes(data))
    assert info.value.reason == "BadCode"


def test_error_reply_payload():
    reply = wire.error(42, "UnknownThing", "t99")
    decoded = wire.decode_message(reply.encode())
    assert decoded.msg_type == wire.MSG_ERROR
    assert wire.error_reason(decoded) == ("UnknownThing", "t99")


@given(st.integers(0, 3), st.integers(0, 0xFFFF), st.text(max_size=40),
       st.binary(max_size=60))
def test_roundtrip_property(code, msg_id, path, payload):
    msg = wire.GatewayMessage(wire.MSG_REQUEST, code or 1, msg_id, path, payload)
    try:
        encoded = msg.encode()
    except WireError:
        return
    assert wire.decode_message(encoded) == msg


@given(st.binary(max_size=80))
def test_decode_never_silent(data):
    """Decoding either succeeds or raises a WireError with a usable id; it
    never crashes with anything else."""
    try:
        wire.decode_message(data)
    except WireError as exc:
        assert isinstance(exc.message_id, int)
