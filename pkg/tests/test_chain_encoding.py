import random
import threading

import pytest
from hypothesis import given, strategies as st

from thingchain import Node
from thingchain.chain import (
    Block,
    GenesisConfig,
    Receipt,
    Transaction,
    dump_chain,
    genesis_block,
    load_chain,
)
from thingchain.codec import encode_values
from thingchain.errors import BrokenChain


_tx_strategy = st.builds(
    Transaction,
    sender_key=st.binary(min_size=32, max_size=32),
    nonce=st.integers(0, 2**32),
    target=st.one_of(st.none(), st.binary(min_size=32, max_size=32)),
    method=st.text(max_size=20),
    args=st.binary(max_size=40),
    tokens=st.integers(0, 2**40),
    signature=st.binary(max_size=64),
)


@given(_tx_strategy)
def test_transaction_roundtrip(tx):
    assert Transaction.decode(tx.encode()) == tx


@given(_tx_strategy, _tx_strategy)
def test_transaction_encoding_injective(a, b):
    if a != b:
        assert a.encode() != b.encode()


def test_block_roundtrip(node, alice, bob):
    node.transfer(alice, bob.account, 3)
    block = node.seal_block()
    decoded = Block.decode(block.encode())
    assert decoded == block
    assert decoded.compute_hash() == block.block_hash


def test_genesis_config_roundtrip():
    cfg = GenesisConfig(((b"\x01" * 32, 5), (b"\x02" * 32, 9)), tx_cap=7)
    assert GenesisConfig.decode(cfg.encode()) == cfg
    assert genesis_block(cfg).prev_hash == cfg.config_digest


def test_chain_file_roundtrip(node, alice, bob):
    node.transfer(alice, bob.account, 1)
    node.seal_block()
    config, blocks = load_chain(dump_chain(node.config, node.blocks))
    assert config == node.config
    assert [b.encode() for b in blocks] == [b.encode() for b in node.blocks]


def test_replay_rejects_forged_signature(node, alice, bob):
    """A block whose hashes are recomputed around a bad signature still fails
    verification at the signature check."""
    node.transfer(alice, bob.account, 2)
    node.seal_block()
    config, blocks = load_chain(node.export_bytes())
    victim = blocks[1]
    tx = victim.txs[0]
    forged_tx = Transaction(tx.sender_key, tx.nonce, tx.target, tx.method,
                            tx.args, tx.tokens, b"\x00" * 64)
    forged = Block.seal(victim.height, victim.prev_hash, victim.timestamp,
                        (forged_tx,), victim.receipts)
    from thingchain.ledger import replay

    with pytest.raises(BrokenChain) as info:
        replay((config, [blocks[0], forged] + blocks[2:]))
    assert info.value.height == 1
    assert "signature" in info.value.detail


def test_replay_rejects_tampered_receipt(node, alice):
    """Recomputed receipts must match the sealed ones bit for bit."""
    _, feed = node.deploy(alice, "feed")
    node.call(alice, feed, "push", encode_values([1_000, "C", 1]))
    node.seal_block()
    config, blocks = load_chain(node.export_bytes())
    victim = blocks[1]
    fake_receipts = (victim.receipts[0], Receipt("ok", "", b"\x99"))
    forged = Block.seal(victim.height, victim.prev_hash, victim.timestamp,
                        victim.txs, fake_receipts)
    from thingchain.ledger import replay

    with pytest.raises(BrokenChain) as info:
        replay((config, [blocks[0], forged] + blocks[2:]))
    assert "receipt" in info.value.detail


def test_event_order_identical_across_replays(node, alice):
    _, actuation = node.deploy(alice, "actuation")
    for i in range(5):
        node.call(alice, actuation, "request", encode_values([f"a{i}", b""]))
    node.seal_block()

    def event_order(n):
        return [
            (e.height, e.tx_index, intra, e.name)
            for b in n.blocks
            for r in b.receipts
            for intra, e in enumerate(r.events)
        ]

    live = event_order(node)
    assert len(live) >= 5
    assert live == sorted(live)
    config, blocks = load_chain(node.export_bytes())
    replayed = Node.from_chain(config, blocks)
    assert event_order(replayed) == live


def test_digest_ignores_registered_but_unused_accounts(node):
    before = node.state_digest()
    node.create_account("lurker-with-no-activity")
    assert node.state_digest() == before


def test_concurrent_readers_see_only_sealed_state(node, alice, bob):
    """Readers racing the sequencer observe a consistent committed view."""
    errors = []
    stop = threading.Event()

    def reader():
        while not stop.is_set():
            balance_a = node.balance(alice.account)
            balance_b = node.balance(bob.account)
            if (balance_a + balance_b) % 10 != 0:
                errors.append((balance_a, balance_b))

    threads = [threading.Thread(target=reader) for _ in range(3)]
    for t in threads:
        t.start()
    # alice->bob transfers in multiples of 10: a torn read would break the sum
    rng = random.Random(1)
    for _ in range(150):
        node.transfer(alice, bob.account, 0)
        node.transfer(alice, bob.account, rng.choice((0, 10)) if
                      node.balance(alice.account) >= 10 else 0)
        node.seal_block()
    stop.set()
    for t in threads:
        t.join()
    assert errors == []
