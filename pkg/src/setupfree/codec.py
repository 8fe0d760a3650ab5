"""Canonical serialization of nested payload values.

Payloads are trees of ``None``, ints, bytes, str and tuples (lists encode as
tuples).  The encoding is a tag-length-value format, so equal values always
produce equal bytes and the byte length is what the metrics count.
"""

_NONE, _UINT, _NINT, _BYTES, _STR, _SEQ = range(6)


class DecodeError(ValueError):
    pass


def _varint(out, x):
    while x >= 0x80:
        out.append((x & 0x7F) | 0x80)
        x >>= 7
    out.append(x)


def _enc(out, v):
    if v is None:
        out.append(_NONE)
    elif isinstance(v, int):
        if v >= 0:
            out.append(_UINT)
        else:
            out.append(_NINT)
            v = -v
        b = v.to_bytes((v.bit_length() + 7) >> 3, "big")
        _varint(out, len(b))
        out += b
    elif isinstance(v, (bytes, bytearray)):
        out.append(_BYTES)
        _varint(out, len(v))
        out += v
    elif isinstance(v, str):
        b = v.encode()
        out.append(_STR)
        _varint(out, len(b))
        out += b
    elif isinstance(v, (tuple, list)):
        out.append(_SEQ)
        _varint(out, len(v))
        for x in v:
            _enc(out, x)
    else:
        raise TypeError(f"cannot encode {type(v).__name__}")


def encode(v) -> bytes:
    out = bytearray()
    _enc(out, v)
    return bytes(out)


def _read_varint(buf, i):
    x = shift = 0
    while True:
        if i >= len(buf):
            raise DecodeError("truncated varint")
        b = buf[i]
        i += 1
        x |= (b & 0x7F) << shift
        if b < 0x80:
            return x, i
        shift += 7
        if shift > 63:
            raise DecodeError("varint too long")


def _dec(buf, i):
    if i >= len(buf):
        raise DecodeError("truncated value")
    t = buf[i]
    i += 1
    if t == _NONE:
        return None, i
    if t == _SEQ:
        k, i = _read_varint(buf, i)
        items = []
        for _ in range(k):
            x, i = _dec(buf, i)
            items.append(x)
        return tuple(items), i
    if t > _SEQ:
        raise DecodeError(f"bad tag {t}")
    k, i = _read_varint(buf, i)
    if i + k > len(buf):
        raise DecodeError("truncated body")
    body = bytes(buf[i:i + k])
    i += k
    if t == _UINT:
        return int.from_bytes(body, "big"), i
    if t == _NINT:
        return -int.from_bytes(body, "big"), i
    if t == _BYTES:
        return body, i
    return body.decode(), i


def decode(buf: bytes):
    v, i = _dec(buf, 0)
    if i != len(buf):
        raise DecodeError("trailing bytes")
    return v
