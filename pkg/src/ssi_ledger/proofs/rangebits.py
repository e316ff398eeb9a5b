"""range-bits.v1: Pedersen commitment to a u64, bit-decomposition range proofs.

commitment  C = v*G + r*H, value is the 8-byte big-endian encoding of v
randomness  r as a 32-byte big-endian scalar

To show a <= v <= b, let k be the smallest integer with 2**k > b - a. Two
sides are proven with the same construction:

    low side   D = C - a*G        commits to v - a with blinding  r
    high side  D = b*G - C        commits to b - v with blinding -r

For each side the prover commits to the k bits of the difference,
C_i = bit_i*G + r_i*H, gives an OR proof that each C_i opens to 0 or 1,
and a Schnorr proof that D - sum(2**i * C_i) is a multiple of H. Both
differences are then in [0, 2**k), so v lies in [a, b]. A single
challenge drives every sub-proof.

Equals(candidate) is accepted as the single-value range [c, c] (k = 0).

transcript layout (first move, then response)::

    k (1)
    low side:  k x [C_i | t0_i | t1_i] | t_agg        (32 bytes each)
    high side: k x [C_i | t0_i | t1_i] | t_agg
    low side:  k x [e0_i | z0_i | z1_i] | z_agg
    high side: k x [e0_i | z0_i | z1_i] | z_agg

challenge = SHA-256("ssi-ledger/range-bits.v1" | C | a (8) | b (8) | first move | nonce) mod ORDER
"""

from __future__ import annotations

from .. import group
from ..encoding import u64
from ..errors import MalformedTranscript, ValueRejectedByBackend
from ..group import G, ORDER
from .core import Equals, InRange, SigmaBackend, register_backend
from .sigma import or_check, or_commit, or_respond, schnorr_check, schnorr_commit, schnorr_respond

DOMAIN_TAG = b"ssi-ledger/range-bits.v1"
VALUE_BYTES = 8
_E = 32  # element / scalar width


def encode_value(v: int) -> bytes:
    return v.to_bytes(VALUE_BYTES, "big")


def decode_value(value: bytes) -> int:
    if len(value) != VALUE_BYTES:
        raise ValueRejectedByBackend(f"range-bits values are 8-byte unsigned integers, got {len(value)} bytes")
    return int.from_bytes(value, "big")


def bit_length_for(low: int, high: int) -> int:
    """Smallest k with 2**k > high - low."""
    return (high - low).bit_length()


def bounds(predicate) -> tuple[int, int]:
    if isinstance(predicate, InRange):
        return predicate.low, predicate.high
    c = decode_value(predicate.candidate)
    return c, c


def weighted_sum(points: list[bytes]) -> bytes:
    """sum(2**i * points[i]) by Horner's rule, additions only."""
    acc = group.IDENTITY
    for p in reversed(points):
        acc = group.add(group.add(acc, acc), p)
    return acc


class RangeBitsBackend(SigmaBackend):
    format_id = "range-bits.v1"

    def check_value(self, value):
        decode_value(value)

    def commit_with(self, value: bytes, r: int) -> bytes:
        return group.commit(decode_value(value), r)

    def commit(self, value, rng):
        r = group.random_scalar(rng)
        return self.commit_with(value, r), group.scalar_bytes(r)

    def opens(self, value, randomness, commitment):
        r = group.decode_scalar(randomness)
        return self.commit_with(value, r) == commitment

    def supports(self, predicate):
        if isinstance(predicate, InRange):
            return True
        return isinstance(predicate, Equals) and len(predicate.candidate) == VALUE_BYTES

    def holds(self, value, predicate):
        a, b = bounds(predicate)
        return a <= decode_value(value) <= b

    @staticmethod
    def _sides(commitment: bytes, a: int, b: int) -> tuple[bytes, bytes]:
        low = group.sub(commitment, group.base_mul(a))
        high = group.sub(group.base_mul(b), commitment)
        return low, high

    def first_move(self, commitment, witness, predicate, rng):
        a, b = bounds(predicate)
        k = bit_length_for(a, b)
        v = decode_value(witness.value)
        r = group.decode_scalar(witness.randomness)
        move = [bytes([k])]
        states = []
        for diff, blind in ((v - a, r), (b - v, -r % ORDER)):
            bit_states = []
            for i in range(k):
                bit = (diff >> i) & 1
                r_i = group.random_scalar(rng)
                c_i = group.mul(r_i, group.H)
                if bit:
                    c_i = group.add(c_i, G)
                st, t0, t1 = or_commit(c_i, group.sub(c_i, G), bit, rng)
                bit_states.append((st, r_i))
                move += [c_i, t0, t1]
            delta = (blind - sum(r_i << i for i, (_, r_i) in enumerate(bit_states))) % ORDER
            w, t_agg = schnorr_commit(rng)
            move.append(t_agg)
            states.append((bit_states, w, delta))
        return b"".join(move), states

    def respond(self, state, challenge):
        out = []
        for bit_states, w, delta in state:
            for st, r_i in bit_states:
                e0, z0, z1 = or_respond(st, challenge, r_i)
                out += [group.scalar_bytes(e0), group.scalar_bytes(z0), group.scalar_bytes(z1)]
            out.append(group.scalar_bytes(schnorr_respond(w, challenge, delta)))
        return b"".join(out)

    @staticmethod
    def _side_len(k: int) -> int:
        return 3 * _E * k + _E

    def split(self, predicate, transcript):
        a, b = bounds(predicate)
        k = bit_length_for(a, b)
        move_len = 1 + 2 * self._side_len(k)
        if len(transcript) != 2 * move_len - 1:
            raise MalformedTranscript(f"range-bits transcript for k={k} must be {2 * move_len - 1} bytes")
        if transcript[0] != k:
            raise MalformedTranscript(f"transcript bit count {transcript[0]} != {k}")
        return transcript[:move_len], transcript[move_len:]

    def challenge(self, commitment, predicate, move, nonce):
        a, b = bounds(predicate)
        return group.hash_to_scalar(DOMAIN_TAG, commitment, u64(a), u64(b), move, nonce)

    def check(self, commitment, predicate, move, challenge, response):
        a, b = bounds(predicate)
        k = bit_length_for(a, b)
        side_len = self._side_len(k)
        if len(move) != 1 + 2 * side_len or move[0] != k or len(response) != 2 * side_len:
            raise MalformedTranscript("range-bits move/response length mismatch")
        c = group.decode_element(commitment)
        sides = self._sides(c, a, b)
        for s, target in enumerate(sides):
            m = move[1 + s * side_len: 1 + (s + 1) * side_len]
            z = response[s * side_len: (s + 1) * side_len]
            points = [group.decode_element(m[j:j + _E]) for j in range(0, side_len, _E)]
            scalars = [group.decode_scalar(z[j:j + _E]) for j in range(0, side_len, _E)]
            bit_points = []
            for i in range(k):
                c_i, t0, t1 = points[3 * i: 3 * i + 3]
                e0, z0, z1 = scalars[3 * i: 3 * i + 3]
                if not or_check(c_i, group.sub(c_i, G), t0, t1, challenge, e0, z0, z1):
                    return False
                bit_points.append(c_i)
            aggregate = group.sub(target, weighted_sum(bit_points))
            if not schnorr_check(aggregate, points[-1], challenge, scalars[-1]):
                return False
        return True


BACKEND = RangeBitsBackend()
register_backend(BACKEND)
