"""Standard contract behaviors, registered at process start.

See docs/contracts.md for the method catalog and argument conventions.
"""

from __future__ import annotations

from ..runtime import Registry
from .access import AccessContract
from .actuation import ActuationContract
from .device import DeviceExtended, DeviceStub
from .escrow import EscrowContract
from .feed import FeedContract
from .identity import IdentityContract
from .pointer import PointerContract
from .skeleton import SkeletonContract
from .topic import TopicContract
from .zone import NameRecord, ZoneContract

STANDARD_BEHAVIORS = (
    IdentityContract,
    ZoneContract,
    FeedContract,
    PointerContract,
    TopicContract,
    ActuationContract,
    EscrowContract,
    SkeletonContract,
    AccessContract,
    DeviceStub,
    DeviceExtended,
)


def standard_registry() -> Registry:
    return Registry(cls() for cls in STANDARD_BEHAVIORS)


__all__ = [
    "AccessContract",
    "ActuationContract",
    "DeviceExtended",
    "DeviceStub",
    "EscrowContract",
    "FeedContract",
    "IdentityContract",
    "NameRecord",
    "PointerContract",
    "SkeletonContract",
    "STANDARD_BEHAVIORS",
    "TopicContract",
    "ZoneContract",
    "standard_registry",
]
