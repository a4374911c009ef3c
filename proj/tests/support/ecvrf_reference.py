"""Pure-integer ECVRF-P256-SHA256-TAI (RFC 9381, suite 0x01) used to generate test vectors.

Independent of OpenSSL: affine arithmetic over Python ints, square roots via p = 3 mod 4.
Run: python3 ecvrf_reference.py  -> prints C++ initializers for tests/unit/test_vrf.cpp
"""
import hashlib
import hmac

P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
A = P - 3
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
Q = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
G = (0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
     0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5)
SUITE = b"\x01"


def add(p1, p2):
    if p1 is None:
        return p2
    if p2 is None:
        return p1
    if p1[0] == p2[0] and (p1[1] + p2[1]) % P == 0:
        return None
    if p1 == p2:
        lam = (3 * p1[0] * p1[0] + A) * pow(2 * p1[1], -1, P) % P
    else:
        lam = (p2[1] - p1[1]) * pow(p2[0] - p1[0], -1, P) % P
    x = (lam * lam - p1[0] - p2[0]) % P
    return (x, (lam * (p1[0] - x) - p1[1]) % P)


def mul(k, pt):
    r = None
    while k:
        if k & 1:
            r = add(r, pt)
        pt = add(pt, pt)
        k >>= 1
    return r


def neg(pt):
    return (pt[0], (-pt[1]) % P)


def encode(pt):
    return bytes([2 + (pt[1] & 1)]) + pt[0].to_bytes(32, "big")


def decode(b):
    if len(b) != 33 or b[0] not in (2, 3):
        return None
    x = int.from_bytes(b[1:], "big")
    if x >= P:
        return None
    rhs = (x * x * x + A * x + B) % P
    y = pow(rhs, (P + 1) // 4, P)
    if y * y % P != rhs:
        return None
    if (y & 1) != (b[0] & 1):
        y = P - y
    return (x, y)


def encode_to_curve(pk, alpha):
    for ctr in range(256):
        h = hashlib.sha256(SUITE + b"\x01" + pk + alpha + bytes([ctr]) + b"\x00").digest()
        pt = decode(b"\x02" + h)
        if pt is not None:
            return pt
    raise ValueError("no point")


def nonce(x, h_string):
    h1 = hashlib.sha256(h_string).digest()
    xo = x.to_bytes(32, "big")
    ho = (int.from_bytes(h1, "big") % Q).to_bytes(32, "big")
    v, k = b"\x01" * 32, b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + xo + ho, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + xo + ho, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        t = int.from_bytes(v, "big")
        if 1 <= t < Q:
            return t
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def challenge(*points):
    data = SUITE + b"\x02" + b"".join(encode(p) for p in points) + b"\x00"
    return int.from_bytes(hashlib.sha256(data).digest()[:16], "big")


def prove(sk, alpha):
    x = int.from_bytes(sk, "big")
    y = mul(x, G)
    pk = encode(y)
    h = encode_to_curve(pk, alpha)
    gamma = mul(x, h)
    k = nonce(x, encode(h))
    c = challenge(y, h, gamma, mul(k, G), mul(k, h))
    s = (k + c * x) % Q
    return pk, encode(gamma) + c.to_bytes(16, "big") + s.to_bytes(32, "big")


def proof_to_hash(pi):
    return hashlib.sha256(SUITE + b"\x03" + pi[:33] + b"\x00").digest()


def verify(pk, alpha, pi):
    y, gamma = decode(pk), decode(pi[:33])
    c = int.from_bytes(pi[33:49], "big")
    s = int.from_bytes(pi[49:], "big")
    h = encode_to_curve(pk, alpha)
    u = add(mul(s, G), neg(mul(c, y)))
    v = add(mul(s, h), neg(mul(c, gamma)))
    return challenge(y, h, gamma, u, v) == c


if __name__ == "__main__":
    cases = [
        ("c9afa9d845ba75166b5c215767b1d6934e50c3db36e89b127b8a622b120f6721", b"sample"),
        ("c9afa9d845ba75166b5c215767b1d6934e50c3db36e89b127b8a622b120f6721", b"test"),
        ("2ca1411a41b17b24cc8c3b089cfd033f1920202a6c0de8abb97df1498d50d2c8", b"sample message"),
        ("0000000000000000000000000000000000000000000000000000000000000001", b""),
    ]
    for sk_hex, alpha in cases:
        pk, pi = prove(bytes.fromhex(sk_hex), alpha)
        assert verify(pk, alpha, pi)
        print('    {"%s", "%s", "%s",\n     "%s",\n     "%s"},'
              % (sk_hex, alpha.hex(), pk.hex(), pi.hex(), proof_to_hash(pi).hex()))
