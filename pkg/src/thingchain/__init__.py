"""thingchain: a deterministic permissioned-ledger simulator with a contract
runtime, IoT contract patterns, name resolution and a datagram gateway."""

from .chain import Block, GenesisConfig, Receipt, Transaction, make_transaction
from .keys import Signer, account_id
from .ledger import Node, replay
from .runtime import Registry, Revert

__all__ = [
    "Block",
    "GenesisConfig",
    "Node",
    "Receipt",
    "Registry",
    "Revert",
    "Signer",
    "Transaction",
    "account_id",
    "make_transaction",
    "replay",
]

__version__ = "0.1.0"
