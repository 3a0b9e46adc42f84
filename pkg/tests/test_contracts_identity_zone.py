import pytest

from thingchain.codec import encode_values
from thingchain.contracts.zone import NameRecord, normalize_label


def test_owner_sets_attribute_readable_by_anyone(node, alice, bob):
    _, ident = node.deploy(alice, "identity")
    receipt = node.call(alice, ident, "set_attribute",
                        encode_values(["name", b"BMS-Thing-17"]))
    node.seal_block()
    assert receipt.ok
    assert node.read_state(ident, b"attr/name") == b"BMS-Thing-17"
    assert node.static(ident, "get_attribute", ["name"],
                       caller=bob.account) == b"BMS-Thing-17"


def test_non_owner_set_rejected(node, alice, bob):
    _, ident = node.deploy(alice, "identity")
    receipt = node.call(bob, ident, "set_attribute", encode_values(["name", b"x"]))
    node.seal_block()
    assert receipt.reason == "NotOwner"
    assert node.read_state(ident, b"attr/name") is None


def test_revoke_keeps_both_states_in_history(node, alice):
    _, ident = node.deploy(alice, "identity")
    node.call(alice, ident, "set_attribute", encode_values(["qr", b"\xa1\xb2"]))
    node.call(alice, ident, "revoke", encode_values(["qr"]))
    node.seal_block()
    assert node.read_state(ident, b"attr/qr") is None
    entries = node.history(ident, b"attr/qr")
    assert [v for _, v in entries] == [b"\xa1\xb2", None]


def test_identity_records_subject_key(node, alice):
    _, ident = node.deploy(alice, "identity", encode_values([alice.verify_key_bytes]))
    node.seal_block()
    assert node.read_state(ident, b"subject_key") == alice.verify_key_bytes


# --- zone -------------------------------------------------------------------

@pytest.fixture
def zone(node, alice):
    _, addr = node.deploy(alice, "zone")
    node.seal_block()
    return addr


def _set_mapping(node, signer, zone, label, service_key=b"", uri="", text=b""):
    return node.call(signer, zone, "set_mapping",
                     encode_values([label, service_key, uri, text]))


def test_delegation_followable(node, alice, zone):
    _, child = node.deploy(alice, "zone")
    receipt = node.call(alice, zone, "delegate", encode_values(["gr", child]))
    node.seal_block()
    assert receipt.ok
    record = NameRecord.decode(node.read_state(zone, b"name/gr"))
    assert record.delegation == child


def test_labels_case_folded(node, alice, zone):
    receipt = _set_mapping(node, alice, zone, "EXAMPLE", service_key=b"k")
    node.seal_block()
    assert receipt.ok
    record = NameRecord.decode(node.read_state(zone, b"name/example"))
    assert record.service_key == b"k"


def test_label_too_long_rejected(node, alice, zone):
    receipt = _set_mapping(node, alice, zone, "x" * 64)
    node.seal_block()
    assert receipt.reason == "BadLabel"


@pytest.mark.parametrize("bad", ["", "has space", "dot.dot", "Ünïcode", "a/b"])
def test_bad_label_characters(node, alice, zone, bad):
    receipt = _set_mapping(node, alice, zone, bad)
    node.seal_block()
    assert receipt.reason == "BadLabel"


def test_zone_only_owner_modifies(node, alice, bob, zone):
    receipt = _set_mapping(node, bob, zone, "gr", service_key=b"evil")
    node.seal_block()
    assert receipt.reason == "NotOwner"


def test_delegation_and_leaf_coexist(node, alice, zone):
    _, child = node.deploy(alice, "zone")
    node.call(alice, zone, "delegate", encode_values(["gr", child]))
    _set_mapping(node, alice, zone, "gr", service_key=b"K", uri="https://gr")
    node.seal_block()
    record = NameRecord.decode(node.read_state(zone, b"name/gr"))
    assert record.delegation == child
    assert record.service_key == b"K"
    assert record.uri == "https://gr"


def test_normalize_label_pure():
    assert normalize_label("AbC-1_2") == "abc-1_2"
    with pytest.raises(ValueError):
        normalize_label("")


def test_zone_audit_completeness(node, alice, zone):
    """Replaying the zone's set_mapping/delegate transactions from the chain
    reproduces its current map exactly."""
    _, child = node.deploy(alice, "zone")
    _set_mapping(node, alice, zone, "uni", service_key=b"K1")
    node.call(alice, zone, "delegate", encode_values(["gr", child]))
    _set_mapping(node, alice, zone, "uni", service_key=b"K2")  # remap
    _set_mapping(node, alice, zone, "www", uri="https://www")
    node.call(alice, zone, "unset", encode_values(["www"]))
    node.seal_block()

    # independent fold over the logged transactions
    from thingchain.codec import decode_values

    rebuilt: dict = {}
    for block in node.blocks:
        for tx, receipt in zip(block.txs, block.receipts):
            if tx.target != zone or not receipt.ok:
                continue
            if tx.method == "set_mapping":
                label, key, uri, text = decode_values(tx.args)
                label = label.lower()
                old = rebuilt.get(label, NameRecord())
                rebuilt[label] = NameRecord(old.delegation, key or None,
                                            uri or None, text or None)
            elif tx.method == "delegate":
                label, addr = decode_values(tx.args)
                label = label.lower()
                old = rebuilt.get(label, NameRecord())
                rebuilt[label] = NameRecord(addr, old.service_key, old.uri, old.text)
            elif tx.method == "unset":
                rebuilt.pop(decode_values(tx.args)[0].lower(), None)

    live = {
        key[len(b"name/"):].decode(): NameRecord.decode(node.read_state(zone, key))
        for key in node.state_keys(zone, b"name/")
    }
    assert live == rebuilt
