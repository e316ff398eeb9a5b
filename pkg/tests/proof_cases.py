"""Random honest instances, forged transcripts and mutations per proof format."""

from ssi_ledger import group, proofs
from ssi_ledger.encoding import lp32
from ssi_ledger.group import ORDER

FORMATS = (proofs.DISCLOSE, proofs.EXACT_SIGMA, proofs.RANGE_BITS)


def honest_instance(fmt: str, rng, max_width_bits: int = 12):
    """(commitment bytes, witness, predicate) with the predicate true for the witness."""
    if fmt == proofs.RANGE_BITS:
        low = rng.randrange(2**63)
        high = low + rng.randrange(2 ** rng.randint(0, max_width_bits))
        v = rng.randint(low, high)
        predicate = proofs.InRange(low, high) if rng.random() < 0.8 else \
            proofs.Equals(proofs.encode_range_value(v))
        value = proofs.encode_range_value(v)
    else:
        value = rng.randbytes(rng.randint(1, 40))
        predicate = proofs.Equals(value)
    commitment, witness = proofs.commit(fmt, value, rng)
    return commitment.data, witness, predicate


def _element(rng) -> bytes:
    return group.base_mul(rng.randrange(1, ORDER))


def _scalar(rng) -> bytes:
    return group.scalar_bytes(rng.randrange(ORDER))


def forged_transcript(fmt: str, predicate, rng) -> bytes:
    """A transcript of the right shape filled with random elements and scalars."""
    if fmt == proofs.DISCLOSE:
        return rng.randbytes(32) + lp32(predicate.candidate)
    if fmt == proofs.EXACT_SIGMA:
        return _element(rng) + _scalar(rng)
    if isinstance(predicate, proofs.InRange):
        low, high = predicate.low, predicate.high
    else:
        low = high = proofs.decode_range_value(predicate.candidate)
    k = (high - low).bit_length()
    n = 2 * (3 * k + 1)
    return bytes([k]) + b"".join(_element(rng) for _ in range(n)) + \
        b"".join(_scalar(rng) for _ in range(n))


def flip_bit(data: bytes, rng) -> bytes:
    i = rng.randrange(len(data) * 8)
    out = bytearray(data)
    out[i // 8] ^= 1 << (i % 8)
    return bytes(out)


def accepts(fmt, commitment, predicate, proof, nonce) -> bool:
    """verify_proof with malformed transcripts counted as rejections."""
    try:
        return proofs.verify_proof(fmt, commitment, predicate, proof, nonce)
    except Exception:
        return False
