import hashlib
import random
from dataclasses import replace

import pytest
from hypothesis import given, strategies as st

from ssi_ledger.chain import (
    ZERO_HASH, ZERO_KEY, Appended, BlockPair, BlockType, FileStore, HalfBlock, Intent,
    IntentResponse, MemoryStore, PowChain, PureAttestation, Revocation, Status, countersign,
    create_proposal, create_single, detect_fork, detect_pow_fork, leading_zero_bits, mine,
    signed, validate_chain, validate_pow_chain,
)
from ssi_ledger.chain.pow import PowBlock
from ssi_ledger.errors import (
    BadProposalSignature, DecodeError, InvalidEvidence, LinkMismatch, PayloadRejected, StaleTail,
    StorageCorruption,
)

from conftest import NOW, make_key

ATTESTOR = make_key("chain-attestor")
OWNER = make_key("chain-owner")
OTHER = make_key("chain-other")

# hand-assembled block: type 2, key 01.., seq 1, link 02.., link seq 0, prev zeros,
# ts 1700000000000, 32-byte payload of 0x33, signature of 0x22
GOLDEN_BLOCK = bytes.fromhex(
    "02" + "01" * 32 + "0000000000000001" + "02" * 32 + "0000000000000000" + "00" * 32
    + "0000018bcfe56800" + "00000020" + "33" * 32 + "22" * 64)
# sha256sum of GOLDEN_BLOCK, computed outside Python
GOLDEN_HASH = "eb418cf656d28348e26734f37439762853015537a3a5a2ec33311e07ccf0d53a"


def payload(i: int = 0) -> PureAttestation:
    return PureAttestation(hashlib.sha256(b"claim%d" % i).digest())


def build_chain(key, n: int, now: int = NOW) -> list[HalfBlock]:
    blocks, tail = [], None
    for i in range(n):
        tail = create_proposal(key, OTHER.public_key, payload(i), tail, now + i)
        blocks.append(tail)
    return blocks


def test_block_golden_vector():
    block = HalfBlock(2, b"\x01" * 32, 1, b"\x02" * 32, 0, ZERO_HASH, NOW, PureAttestation(b"\x33" * 32),
                      b"\x22" * 64)
    assert block.encode() == GOLDEN_BLOCK
    assert len(GOLDEN_BLOCK) == 221
    assert block.hash.hex() == GOLDEN_HASH
    assert HalfBlock.decode(GOLDEN_BLOCK) == block
    assert "bad signature" in block.problems()


def test_genesis_and_linking():
    blocks = build_chain(ATTESTOR, 3)
    assert blocks[0].sequence_number == 1 and blocks[0].previous_hash == ZERO_HASH
    for prev, cur in zip(blocks, blocks[1:]):
        assert cur.sequence_number == prev.sequence_number + 1
        assert cur.previous_hash == prev.hash
    assert validate_chain(blocks) == []
    assert validate_chain([]) == []


def test_stale_tail_rejected():
    store = MemoryStore()
    first = create_proposal(ATTESTOR, OWNER.public_key, payload(), None, NOW, store)
    store.append(first, own=True)
    with pytest.raises(StaleTail):
        create_proposal(ATTESTOR, OWNER.public_key, payload(1), None, NOW, store)
    with pytest.raises(StaleTail):
        store.append(create_proposal(ATTESTOR, OWNER.public_key, payload(1), None, NOW), own=True)


def test_countersign_produces_valid_pair():
    proposal = create_proposal(ATTESTOR, OWNER.public_key, payload(), None, NOW)
    pair = countersign(OWNER, proposal, None, NOW + 1)
    assert pair.valid()
    a = pair.agreement
    assert (a.public_key, a.link_public_key, a.link_sequence_number) == \
        (OWNER.public_key, ATTESTOR.public_key, 1)
    assert BlockPair.decode(pair.encode()) == pair


def test_countersign_refusals():
    proposal = create_proposal(ATTESTOR, OWNER.public_key, payload(), None, NOW)
    with pytest.raises(BadProposalSignature):
        countersign(OWNER, replace(proposal, signature=bytes(64)), None, NOW)
    with pytest.raises(LinkMismatch):
        countersign(OTHER, proposal, None, NOW)
    with pytest.raises(PayloadRejected):
        countersign(OWNER, proposal, None, NOW, accept=lambda _: False)


def test_pair_problems_detect_tampering():
    proposal = create_proposal(ATTESTOR, OWNER.public_key, payload(), None, NOW)
    pair = countersign(OWNER, proposal, None, NOW)
    other = signed(replace(pair.agreement, payload=payload(9)), OWNER)
    assert "payloads differ" in BlockPair(proposal, other).problems()
    relinked = signed(replace(pair.agreement, link_sequence_number=2), OWNER)
    assert not BlockPair(proposal, relinked).valid()


def test_validate_chain_reports_each_rule():
    blocks = build_chain(ATTESTOR, 4)
    gap = [blocks[0], blocks[2], blocks[3]]
    assert any("gap" in v.message for v in validate_chain(gap))
    bad_prev = signed(replace(blocks[2], previous_hash=b"\x01" * 32), ATTESTOR)
    assert any("previous hash" in v.message for v in validate_chain(blocks[:2] + [bad_prev]))
    bad_sig = replace(blocks[1], signature=bytes(64))
    assert any("bad signature" in v.message for v in validate_chain([blocks[0], bad_sig]))
    bad_payload = signed(replace(blocks[1], block_type=int(BlockType.INTENT)), ATTESTOR)
    assert any("malformed payload" in v.message for v in validate_chain([blocks[0], bad_payload]))
    foreign = build_chain(OTHER, 2)[1]
    assert any("different public key" in v.message for v in validate_chain([blocks[0], foreign]))


def test_fork_detection():
    a = create_proposal(ATTESTOR, OWNER.public_key, payload(1), None, NOW)
    b = create_proposal(ATTESTOR, OWNER.public_key, payload(2), None, NOW)
    proof = detect_fork(a, b)
    assert proof is not None and proof.valid()
    assert detect_fork(b, a) == proof
    assert detect_fork(a, a) is None
    assert detect_fork(a, create_proposal(OTHER, OWNER.public_key, payload(2), None, NOW)) is None
    assert detect_fork(a, replace(b, signature=bytes(64))) is None
    assert validate_chain([a, b]) != []


def _random_block(rng) -> HalfBlock:
    kind = rng.choice([PureAttestation, Intent, IntentResponse, Revocation])
    h = rng.randbytes(32)
    ts = rng.randrange(2**63)
    body = {
        PureAttestation: lambda: PureAttestation(h),
        Intent: lambda: Intent(h, rng.randbytes(32), ts),
        IntentResponse: lambda: IntentResponse(h, rng.choice(list(Status)), ts),
        Revocation: lambda: Revocation(h, ts),
    }[kind]()
    seq = rng.randrange(1, 2**64)
    return HalfBlock(int(body.block_type), rng.randbytes(32), seq, rng.randbytes(32),
                     rng.randrange(2**64), rng.randbytes(32), ts, body, rng.randbytes(64))


def test_encoding_round_trip_bulk():
    rng = random.Random(21)
    for _ in range(10_000):
        b = _random_block(rng)
        raw = b.encode()
        assert HalfBlock.decode(raw) == b
        assert hashlib.sha256(raw).digest() == b.hash


@given(st.integers(0, 2**32 - 1))
def test_encoding_round_trip(seed):
    b = _random_block(random.Random(seed))
    assert HalfBlock.decode(b.encode()) == b


def test_decode_rejects_trailing_and_truncated():
    with pytest.raises(DecodeError):
        HalfBlock.decode(GOLDEN_BLOCK + b"\x00")
    with pytest.raises(DecodeError):
        HalfBlock.decode(GOLDEN_BLOCK[:-1])


# -- stores ---------------------------------------------------------------

def test_memory_store_semantics():
    store = MemoryStore()
    blocks = build_chain(ATTESTOR, 3)
    for b in blocks:
        assert store.append(b, own=True) is Appended.NEW
    assert store.append(blocks[1]) is Appended.DUPLICATE
    assert store.tail(ATTESTOR.public_key) == blocks[2]
    assert store.chain(ATTESTOR.public_key) == blocks
    assert store.by_hash(blocks[1].hash) == blocks[1]
    twin = create_proposal(ATTESTOR, OWNER.public_key, payload(99), blocks[1], NOW)
    assert store.append(twin) is Appended.CONFLICT
    assert store.conflicts() == [(ATTESTOR.public_key, 3)]
    assert len(store.get_all(ATTESTOR.public_key, 3)) == 2
    with pytest.raises(InvalidEvidence):
        store.append(replace(blocks[0], signature=bytes(64)))


def test_discard_from():
    store = MemoryStore()
    for b in build_chain(ATTESTOR, 4):
        store.append(b)
    gone = store.discard_from(ATTESTOR.public_key, 3)
    assert [b.sequence_number for b in gone] == [3, 4]
    assert store.tail(ATTESTOR.public_key).sequence_number == 2


def test_file_store_layout_and_reopen(tmp_path):
    store = FileStore(tmp_path)
    blocks = build_chain(ATTESTOR, 3)
    for b in blocks:
        store.append(b, own=True)
    log = (tmp_path / "chains" / f"{ATTESTOR.public_key.hex()}.log").read_bytes()
    expected, offsets = b"", []
    for b in blocks:
        offsets.append(len(expected))
        expected += len(b.encode()).to_bytes(4, "big") + b.encode()
    assert log == expected
    index = (tmp_path / "index").read_text().splitlines()
    assert index == [f"{b.public_key.hex()} {b.sequence_number} {o} {b.hash.hex()}"
                     for b, o in zip(blocks, offsets)]
    again = FileStore(tmp_path)
    assert again.chain(ATTESTOR.public_key) == blocks


def test_file_store_detects_corruption(tmp_path):
    store = FileStore(tmp_path)
    for b in build_chain(ATTESTOR, 2):
        store.append(b)
    log = tmp_path / "chains" / f"{ATTESTOR.public_key.hex()}.log"
    data = bytearray(log.read_bytes())
    data[-1] ^= 1
    log.write_bytes(bytes(data))
    with pytest.raises(StorageCorruption):
        FileStore(tmp_path)
    log.write_bytes(bytes(data[:-5]))
    with pytest.raises(StorageCorruption):
        FileStore(tmp_path)


def test_file_store_rebuilds_missing_index(tmp_path):
    store = FileStore(tmp_path)
    blocks = build_chain(ATTESTOR, 2)
    for b in blocks:
        store.append(b)
    (tmp_path / "index").unlink()
    assert FileStore(tmp_path).chain(ATTESTOR.public_key) == blocks
    assert len((tmp_path / "index").read_text().splitlines()) == 2


# -- proof of work --------------------------------------------------------

def test_leading_zero_bits():
    assert leading_zero_bits(bytes(32)) == 256
    assert leading_zero_bits(b"\x80" + bytes(31)) == 0
    assert leading_zero_bits(b"\x00\x01" + bytes(30)) == 15


@pytest.mark.parametrize("difficulty", [0, 8])
def test_mining_meets_difficulty(difficulty):
    entries = build_chain(ATTESTOR, 2)
    block = mine(1, ZERO_HASH, NOW, difficulty, entries, random.Random(1))
    assert leading_zero_bits(block.hash) >= difficulty
    assert block.problems() == []
    assert PowBlock.decode(block.encode()) == block


def test_pow_tamper_detected():
    block = mine(1, ZERO_HASH, NOW, 8, build_chain(ATTESTOR, 1), random.Random(2))
    assert replace(block, entries=tuple(build_chain(OTHER, 1))).problems()
    assert replace(block, body_digest=bytes(32)).problems()


def test_pow_chain_validation_and_persistence(tmp_path):
    path = tmp_path / "pow.chain"
    chain = PowChain(difficulty=8, path=path)
    rng = random.Random(3)
    entries = build_chain(ATTESTOR, 3)
    for i, e in enumerate(entries):
        chain.append([e], NOW + i, rng)
    assert validate_pow_chain(chain.blocks) == []
    assert [b.height for b in chain.blocks] == [1, 2, 3]
    assert chain.entry(entries[1].hash) == entries[1]
    reopened = PowChain(difficulty=8, path=path)
    assert reopened.blocks == chain.blocks
    bad = [chain.blocks[0], chain.blocks[2]]
    assert validate_pow_chain(bad)
    raw = bytearray(path.read_bytes())
    raw[20] ^= 1
    path.write_bytes(bytes(raw))
    with pytest.raises(StorageCorruption):
        PowChain(difficulty=8, path=path)


def test_pow_fork():
    rng = random.Random(4)
    a = mine(1, ZERO_HASH, NOW, 4, build_chain(ATTESTOR, 1), rng)
    b = mine(1, ZERO_HASH, NOW, 4, build_chain(OTHER, 1), rng)
    assert detect_pow_fork(a, b)
    assert not detect_pow_fork(a, a)


def test_revocation_is_single_half():
    rev = create_single(ATTESTOR, Revocation(payload().metadata_block_hash, NOW), None, NOW)
    assert rev.link_public_key == ZERO_KEY and not rev.is_proposal and not rev.is_agreement
    assert rev.problems() == []
