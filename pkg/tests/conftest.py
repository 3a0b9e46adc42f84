import pytest

from thingchain import Node, Signer


@pytest.fixture
def alice():
    return Signer.from_seed("alice")


@pytest.fixture
def bob():
    return Signer.from_seed("bob")


@pytest.fixture
def carol():
    return Signer.from_seed("carol")


@pytest.fixture
def node(alice, bob, carol):
    n = Node({alice.account: 1000, bob.account: 500, carol.account: 0})
    for seed in ("alice", "bob", "carol"):
        n.create_account(seed)
    return n
