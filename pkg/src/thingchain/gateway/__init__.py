from .journal import Journal
from .service import Gateway, GatewayConfig, RecordingTransport, ThingRegistration
from . import wire

__all__ = [
    "Gateway",
    "GatewayConfig",
    "Journal",
    "RecordingTransport",
    "ThingRegistration",
    "wire",
]
