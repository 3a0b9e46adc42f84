"""The gateway: terminates the datagram protocol, custodies Thing keys, turns
requests into signed transactions and chain events into outbound deliveries.

Things never see key material: every signing key is derived on demand from
the gateway's master seed and the thing id, and only ids and addresses are
persisted.  Registrations, the event cursor and dead-lettered deliveries live
in a checksummed append-only journal, so a restarted gateway resumes without
skipping on-chain events (receivers deduplicate by (height, tx_index)).
"""

from __future__ import annotations

import json
import socket as socket_module
import threading
from dataclasses import dataclass, field

from ..codec import decode_values, encode_values
from ..contracts.actuation import DENIED, request_outcome
from ..errors import DuplicateThing, ThingChainError, WireError
from ..keys import Signer
from ..runtime import Revert
from ..units import parse_milli
from . import wire
from .journal import Journal

RETRY_BASE_TICKS = 1
RETRY_CAP_TICKS = 32
MAX_DELIVERY_ATTEMPTS = 5


@dataclass
class GatewayConfig:
    master_seed: str
    journal_path: str
    listen: str = "127.0.0.1:5683"
    requesters: dict = field(default_factory=dict)   # endpoint -> account seed
    root_zones: list = field(default_factory=list)   # zone contract addresses
    genesis: dict = field(default_factory=dict)      # account seed -> tokens

    @classmethod
    def from_file(cls, path) -> "GatewayConfig":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            master_seed=raw["master_seed"],
            journal_path=raw["journal"],
            listen=raw.get("listen", "127.0.0.1:5683"),
            requesters=dict(raw.get("requesters", {})),
            root_zones=[bytes.fromhex(a) for a in raw.get("root_zones", [])],
            genesis=dict(raw.get("genesis", {})),
        )


@dataclass
class ThingRegistration:
    thing_id: str
    account: bytes
    feed_addr: bytes
    actuation_addr: bytes
    endpoint: str = ""
    sink_uri: str = ""


class RecordingTransport:
    """In-memory delivery transport; optionally fails the first N attempts
    per destination to exercise the retry and dead-letter paths."""

    def __init__(self):
        self.datagrams: list[tuple[str, bytes]] = []
        self.uri_payloads: list[tuple[str, bytes]] = []
        self.fail_remaining: dict[str, int] = {}

    def _maybe_fail(self, destination: str) -> None:
        left = self.fail_remaining.get(destination, 0)
        if left > 0:
            self.fail_remaining[destination] = left - 1
            raise ConnectionError(f"injected delivery failure to {destination}")

    def deliver_datagram(self, endpoint: str, data: bytes) -> None:
        self._maybe_fail(endpoint)
        self.datagrams.append((endpoint, data))

    def deliver_uri(self, uri: str, payload: bytes) -> None:
        self._maybe_fail(uri)
        self.uri_payloads.append((uri, payload))


class UdpTransport:
    """Sends actuation datagrams over UDP; URI deliveries are recorded only
    (off-chain sink transports are deployment-specific)."""

    def __init__(self):
        self._sock = socket_module.socket(socket_module.AF_INET, socket_module.SOCK_DGRAM)
        self.uri_payloads: list[tuple[str, bytes]] = []

    def deliver_datagram(self, endpoint: str, data: bytes) -> None:
        host, port = endpoint.rsplit(":", 1)
        self._sock.sendto(data, (host, int(port)))

    def deliver_uri(self, uri: str, payload: bytes) -> None:
        self.uri_payloads.append((uri, payload))


class Gateway:
    def __init__(self, node, config: GatewayConfig, transport=None,
                 sleep_fn=None, record_traffic: bool = True):
        self.node = node
        self.config = config
        self.transport = transport if transport is not None else RecordingTransport()
        self.sleep_fn = sleep_fn
        self.journal = Journal(config.journal_path)
        self.things: dict[str, ThingRegistration] = {}
        self.cursor = (0, -1)                     # last fully processed (height, tx_index)
        self.dead_letters: list[tuple] = []
        self.traffic: list[tuple[str, str, bytes]] = [] if record_traffic else None
        self._msg_counter = 0
        self._lock = threading.RLock()
        self._requesters: dict[str, Signer] = {}
        for endpoint, seed in config.requesters.items():
            _, signer = node.create_account(seed)
            self._requesters[endpoint] = signer
        self._recover()

    # ------------------------------------------------------------------
    # custody

    def _thing_signer(self, thing_id: str) -> Signer:
        return Signer.from_seed(f"{self.config.master_seed}/thing/{thing_id}")

    def _recover(self) -> None:
        for record in self.journal.records():
            kind = record[0]
            if kind == "thing":
                _, thing_id, endpoint, sink_uri, feed_addr, act_addr = record
                account, _ = self.node.create_account(
                    f"{self.config.master_seed}/thing/{thing_id}")
                self.things[thing_id] = ThingRegistration(
                    thing_id, account, feed_addr, act_addr, endpoint, sink_uri)
            elif kind == "cursor":
                self.cursor = (record[1], record[2])
            elif kind == "dead":
                self.dead_letters.append(tuple(record[1:]))

    def register_thing(self, thing_id: str, endpoint: str = "", sink_uri: str = "",
                       feed_addr: bytes | None = None,
                       actuation_addr: bytes | None = None) -> ThingRegistration:
        """Create the thing's account, deploy (or bind) its contracts and
        persist the registration."""
        with self._lock:
            if thing_id in self.things:
                raise DuplicateThing(thing_id)
            account, signer = self.node.create_account(
                f"{self.config.master_seed}/thing/{thing_id}")
            if feed_addr is None:
                receipt, feed_addr = self.node.deploy(signer, "feed")
                if not receipt.ok:
                    raise ThingChainError(f"feed deploy reverted: {receipt.reason}")
            if actuation_addr is None:
                receipt, actuation_addr = self.node.deploy(signer, "actuation")
                if not receipt.ok:
                    raise ThingChainError(f"actuation deploy reverted: {receipt.reason}")
            self.node.seal_block()
            reg = ThingRegistration(thing_id, account, feed_addr, actuation_addr,
                                    endpoint, sink_uri)
            self.things[thing_id] = reg
            self.journal.append("thing", [thing_id, endpoint, sink_uri,
                                          feed_addr, actuation_addr])
            return reg

    def allow_requester(self, reg_or_thing_id, endpoint: str) -> None:
        """Owner-side helper: put a mapped requester on a thing's actor list."""
        reg = self.things[reg_or_thing_id] if isinstance(reg_or_thing_id, str) else reg_or_thing_id
        requester = self._requesters[endpoint]
        signer = self._thing_signer(reg.thing_id)
        receipt = self.node.call(signer, reg.actuation_addr, "allow_actor",
                                 encode_values([requester.account]))
        self.node.seal_block()
        if not receipt.ok:
            raise ThingChainError(f"allow_actor reverted: {receipt.reason}")

    # ------------------------------------------------------------------
    # request handling

    def handle_datagram(self, data: bytes, source: str = "") -> bytes:
        """Translate one inbound datagram; always returns a reply datagram."""
        if self.traffic is not None:
            self.traffic.append(("in", source, data))
        try:
            msg = wire.decode_message(data)
        except WireError as exc:
            return self._reply(source, wire.error(exc.message_id, exc.reason))
        if msg.msg_type != wire.MSG_REQUEST:
            return self._reply(source, wire.error(msg.message_id, "NotARequest"))
        try:
            reply = self._route(msg, source)
        except Revert as exc:
            reply = wire.error(msg.message_id, exc.reason)
        except WireError as exc:
            reply = wire.error(msg.message_id, exc.reason)
        except ThingChainError as exc:
            # unreachable for well-registered things, but never go silent
            reply = wire.error(msg.message_id, type(exc).__name__)
        return self._reply(source, reply)

    def _reply(self, source: str, msg: wire.GatewayMessage) -> bytes:
        data = msg.encode()
        if self.traffic is not None:
            self.traffic.append(("out", source, data))
        return data

    def _route(self, msg: wire.GatewayMessage, source: str) -> wire.GatewayMessage:
        path, _, query = msg.path.partition("?")
        parts = [p for p in path.split("/") if p]
        if len(parts) != 3 or parts[0] != "things":
            raise WireError("BadPath", msg.message_id)
        thing_id, action = parts[1], parts[2]
        reg = self.things.get(thing_id)
        if reg is None:
            raise WireError("UnknownThing", msg.message_id)

        if msg.code == wire.GET and action == "last":
            return wire.ack(msg.message_id, self.node.static(reg.feed_addr, "last", []))
        if msg.code == wire.GET and action == "stats":
            lo, hi = self._parse_window(query, msg.message_id)
            return wire.ack(msg.message_id,
                            self.node.static(reg.feed_addr, "stats", [lo, hi]))
        if msg.code == wire.PUT and action == "data":
            return self._put_data(msg, reg)
        if msg.code == wire.POST and action == "actuate":
            return self._post_actuate(msg, reg, source)
        raise WireError("BadPath", msg.message_id)

    @staticmethod
    def _parse_window(query: str, msg_id: int) -> tuple[int, int]:
        params = {}
        for pair in query.split("&"):
            key, eq, value = pair.partition("=")
            if eq:
                params[key] = value
        try:
            return int(params["from"]), int(params["to"])
        except (KeyError, ValueError):
            raise WireError("BadQuery", msg_id) from None

    def _decode_put_payload(self, msg: wire.GatewayMessage) -> tuple[int, str, int]:
        """PUT payload: [value_milli:int | value:str, unit, (tick)]."""
        try:
            values = decode_values(msg.payload)
        except Exception:
            raise WireError("BadPayload", msg.message_id) from None
        if not 2 <= len(values) <= 3:
            raise WireError("BadPayload", msg.message_id)
        value = values[0]
        if isinstance(value, str):
            try:
                value = parse_milli(value)
            except ValueError:
                raise WireError("BadPayload", msg.message_id) from None
        if not isinstance(value, int) or isinstance(value, bool) or not isinstance(values[1], str):
            raise WireError("BadPayload", msg.message_id)
        tick = values[2] if len(values) == 3 else self.node.height + 1
        if not isinstance(tick, int) or isinstance(tick, bool) or tick < 0:
            raise WireError("BadPayload", msg.message_id)
        return value, values[1], tick

    def _put_data(self, msg: wire.GatewayMessage, reg: ThingRegistration) -> wire.GatewayMessage:
        value, unit, tick = self._decode_put_payload(msg)
        signer = self._thing_signer(reg.thing_id)
        with self._lock:
            receipt = self.node.call(signer, reg.feed_addr, "push",
                                     encode_values([value, unit, tick]))
            self.node.seal_block()
        if not receipt.ok:
            return wire.error(msg.message_id, receipt.reason)
        return wire.ack(msg.message_id, encode_values(["ok", receipt.return_value]))

    def _post_actuate(self, msg: wire.GatewayMessage, reg: ThingRegistration,
                      source: str) -> wire.GatewayMessage:
        requester = self._requesters.get(source)
        if requester is None:
            raise WireError("UnknownRequester", msg.message_id)
        try:
            action, args = decode_values(msg.payload)
            if not isinstance(action, str) or not isinstance(args, bytes):
                raise ValueError
        except Exception:
            raise WireError("BadPayload", msg.message_id) from None
        with self._lock:
            receipt = self.node.call(requester, reg.actuation_addr, "request",
                                     encode_values([action, args]))
            self.node.seal_block()
        if not receipt.ok:
            return wire.error(msg.message_id, receipt.reason)
        if request_outcome(receipt.return_value) == DENIED:
            return wire.error(msg.message_id, "NotAuthorized")
        return wire.ack(msg.message_id, encode_values(["ok", receipt.return_value]))

    # ------------------------------------------------------------------
    # event watching

    def _next_msg_id(self) -> int:
        self._msg_counter = (self._msg_counter + 1) & 0xFFFF
        return self._msg_counter

    def _deliver_with_retry(self, describe: tuple, send) -> bool:
        backoff = RETRY_BASE_TICKS
        for attempt in range(1, MAX_DELIVERY_ATTEMPTS + 1):
            try:
                send()
                return True
            except Exception as exc:
                if attempt == MAX_DELIVERY_ATTEMPTS:
                    entry = (*describe, f"{type(exc).__name__}: {exc}")
                    self.dead_letters.append(entry)
                    self.journal.append("dead", list(entry))
                    return False
                if self.sleep_fn is not None:
                    self.sleep_fn(backoff)
                backoff = min(backoff * 2, RETRY_CAP_TICKS)
        return False

    def poll_events(self) -> int:
        """Process newly sealed events once; returns the delivery count.

        Actuate events on registered things go to the thing's endpoint as POST
        datagrams; Notify events with URI sinks go to the sink.  The cursor is
        journaled only after a transaction's deliveries complete, giving
        at-least-once delivery across crashes.
        """
        delivered = 0
        with self._lock:
            actuation_to_thing = {reg.actuation_addr: reg for reg in self.things.values()}
            last_h, last_i = self.cursor
            for block in self.node.blocks[1:]:
                if block.height < last_h:
                    continue
                for tx_index, receipt in enumerate(block.receipts):
                    if block.height == last_h and tx_index <= last_i:
                        continue
                    attempted = False
                    for intra, event in enumerate(receipt.events):
                        if event.name == "Actuate" and event.source in actuation_to_thing:
                            attempted = True
                            delivered += self._deliver_actuation(
                                actuation_to_thing[event.source], event, intra)
                        elif event.name == "Notify":
                            sent = self._deliver_notification(event, intra)
                            attempted = attempted or sent >= 0
                            delivered += max(sent, 0)
                    if attempted:
                        self.cursor = (block.height, tx_index)
                        self.journal.append("cursor", [block.height, tx_index])
            if self.node.blocks:
                tip = self.node.blocks[-1]
                if self.cursor < (tip.height, len(tip.txs) - 1):
                    self.cursor = (tip.height, len(tip.txs) - 1)
                    self.journal.append("cursor", [self.cursor[0], self.cursor[1]])
        return delivered

    def _deliver_actuation(self, reg: ThingRegistration, event, intra: int) -> int:
        action, args, caller = decode_values(event.payload)
        payload = encode_values([event.height, event.tx_index, intra, action, args, caller])
        datagram = wire.request(wire.POST, self._next_msg_id(),
                                f"/things/{reg.thing_id}/event", payload).encode()

        def send():
            if self.traffic is not None:
                self.traffic.append(("watch", reg.endpoint, datagram))
            self.transport.deliver_datagram(reg.endpoint, datagram)

        ok = self._deliver_with_retry(
            (event.height, event.tx_index, "actuate", reg.thing_id), send)
        return 1 if ok else 0

    def _deliver_notification(self, event, intra: int) -> int:
        """Returns deliveries (0/1), or -1 when the sink is on-chain only."""
        from ..contracts.topic import SINK_URI

        sub_id, sink_kind, sink, path, body = decode_values(event.payload)
        if sink_kind != SINK_URI:
            return -1
        uri = sink.decode("utf-8", "replace")
        payload = encode_values([event.height, event.tx_index, intra, sub_id, path, body])

        def send():
            if self.traffic is not None:
                self.traffic.append(("watch", uri, payload))
            self.transport.deliver_uri(uri, payload)

        ok = self._deliver_with_retry((event.height, event.tx_index, "notify", uri), send)
        return 1 if ok else 0

    # ------------------------------------------------------------------
    # serving

    def serve(self, stop_event: threading.Event, poll_interval: float = 0.05) -> None:
        """Blocking UDP loop; also drives the event watcher."""
        host, port = self.config.listen.rsplit(":", 1)
        sock = socket_module.socket(socket_module.AF_INET, socket_module.SOCK_DGRAM)
        sock.bind((host, int(port)))
        sock.settimeout(poll_interval)
        try:
            while not stop_event.is_set():
                try:
                    data, addr = sock.recvfrom(65535)
                except socket_module.timeout:
                    self.poll_events()
                    continue
                reply = self.handle_datagram(data, f"{addr[0]}:{addr[1]}")
                sock.sendto(reply, addr)
        finally:
            sock.close()

    def close(self) -> None:
        self.journal.close()
