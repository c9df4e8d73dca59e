"""Big-integer packed convolution kernels.

Polynomial/series multiplication over Z/p^N (and towers of such rings) is
reduced to a single Python big-integer multiplication by Kronecker
substitution: nonnegative sub-coefficients are packed into fixed-width
byte slots, multiplied once, and sliced back out.  CPython's subquadratic
integer multiplication then does the heavy lifting in C.

All inputs must be canonical nonnegative representatives; slot width must
leave enough headroom for the largest convolution sum (caller's duty, see
`slot_bytes_for`).
"""

_SCHOOLBOOK_CUTOFF = 24


def slot_bytes_for(max_value: int, n_terms: int) -> int:
    """Byte width of a slot holding sums of n_terms products of values <= max_value."""
    bits = 2 * max(max_value, 1).bit_length() + max(n_terms, 1).bit_length() + 1
    return (bits + 7) // 8


def conv_flat(a: list[int], b: list[int], slot_bytes: int) -> list[int]:
    """Convolution of two flat nonnegative coefficient lists.

    Returns the full product of length len(a)+len(b)-1, without any modular
    reduction.  Slot overflow is the caller's responsibility.
    """
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return []
    if min(la, lb) <= _SCHOOLBOOK_CUTOFF:
        out = [0] * (la + lb - 1)
        if la > lb:
            a, b, la, lb = b, a, lb, la
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    out[i + j] += ai * bj
        return out
    pa = _pack(a, slot_bytes)
    pb = _pack(b, slot_bytes)
    return _unpack(pa * pb, slot_bytes, la + lb - 1)


def _pack(vals: list[int], slot_bytes: int) -> int:
    buf = bytearray(len(vals) * slot_bytes)
    pos = 0
    for v in vals:
        buf[pos:pos + slot_bytes] = v.to_bytes(slot_bytes, "little")
        pos += slot_bytes
    return int.from_bytes(buf, "little")


def _unpack(n: int, slot_bytes: int, count: int) -> list[int]:
    buf = n.to_bytes(count * slot_bytes + slot_bytes, "little")
    out = []
    pos = 0
    for _ in range(count):
        out.append(int.from_bytes(buf[pos:pos + slot_bytes], "little"))
        pos += slot_bytes
    return out
