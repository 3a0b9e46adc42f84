"""Contract runtime: deploys, addresses, dispatches and kills contracts.

Contract "code" is a registry of native deterministic behaviors keyed by
code id; the id is recorded in the deploy transaction and on the instance, so
anyone can see which behavior an address runs.  Behaviors are pure functions
of (state, call, height, tick): no clock, no randomness, no I/O.
"""

from __future__ import annotations

from .chain import Event, Receipt, STATUS_OK, STATUS_REVERTED, Transaction
from .codec import decode_values, enc_u64, encode_values
from .errors import StaticCallError, UnknownContract
from .keys import DIGEST_SIZE, digest
from .state import ContractMeta, WorldState

MAX_CALL_DEPTH = 8

# reason codes shared across behaviors
NOT_OWNER = "NotOwner"
NOT_AUTHORIZED = "NotAuthorized"
METHOD_NOT_FOUND = "MethodNotFound"
CONTRACT_KILLED = "ContractKilled"
ALREADY_KILLED = "AlreadyKilled"
UNKNOWN_CODE = "UnknownCode"
UNKNOWN_CONTRACT = "UnknownContract"
REENTRANCY_LIMIT = "ReentrancyLimit"
BAD_ARGS = "BadArgs"
INSUFFICIENT_TOKENS = "InsufficientTokens"


class Revert(Exception):
    """Abort the current call; the runtime rolls back every effect."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason


def contract_address(deployer: bytes, nonce: int) -> bytes:
    """Address of the contract created by (deployer, nonce-at-deploy)."""
    return digest(b"contract:" + deployer + enc_u64(nonce))


class Behavior:
    """Base class for registered contract behaviors.

    Subclasses set `code_id`, list callable method names in `exports`, and
    implement each export as `def name(self, ctx, args)` where `args` is the
    decoded value list.  `init` runs once at deployment.
    """

    code_id = ""
    exports: tuple = ()

    def init(self, ctx, args: list) -> None:
        pass

    def dispatch(self, ctx, method: str, args: list) -> bytes | None:
        if method not in self.exports:
            raise Revert(METHOD_NOT_FOUND, method)
        return getattr(self, method)(ctx, args)


class Registry:
    """Static table of behaviors, fixed at process start."""

    def __init__(self, behaviors=()):
        self._by_id: dict[str, Behavior] = {}
        for behavior in behaviors:
            self.add(behavior)

    def add(self, behavior: Behavior) -> None:
        if not behavior.code_id:
            raise ValueError("behavior has no code_id")
        if behavior.code_id in self._by_id:
            raise ValueError(f"duplicate code_id {behavior.code_id!r}")
        self._by_id[behavior.code_id] = behavior

    def get(self, code_id: str) -> Behavior | None:
        return self._by_id.get(code_id)

    def code_ids(self) -> list[str]:
        return sorted(self._by_id)


# --- argument helpers used by behavior implementations ----------------------


def want(args: list, index: int, kind: type, what: str):
    if index >= len(args) or not isinstance(args[index], kind) or (
        kind is int and isinstance(args[index], bool)
    ):
        raise Revert(BAD_ARGS, f"expected {what} at position {index}")
    return args[index]


def want_bytes(args, index, what="bytes"):
    return want(args, index, bytes, what)


def want_str(args, index, what="string"):
    return want(args, index, str, what)


def want_int(args, index, what="integer"):
    return want(args, index, int, what)


def want_account(args, index, what="account"):
    value = want(args, index, bytes, what)
    if len(value) != DIGEST_SIZE:
        raise Revert(BAD_ARGS, f"{what} must be {DIGEST_SIZE} bytes")
    return value


class CallContext:
    """Execution context handed to behavior methods.

    The caller identity comes from the enclosing transaction's signature, never
    from the arguments.  All storage written here is readable by anyone via
    read_state, so behaviors cannot hold secrets.
    """

    def __init__(self, executor, address: bytes, caller: bytes, tokens: int, depth: int,
                 static: bool = False):
        self._executor = executor
        self.address = address
        self.caller = caller
        self.tokens = tokens
        self.depth = depth
        self.static = static

    # --- chain environment ----------------------------------------------

    @property
    def height(self) -> int:
        return self._executor.height

    @property
    def tick(self) -> int:
        return self._executor.tick

    @property
    def owner(self) -> bytes:
        return self._executor.world.contract(self.address).owner

    @property
    def balance(self) -> int:
        return self._executor.world.contract(self.address).balance

    def require_owner(self) -> None:
        if self.caller != self.owner:
            raise Revert(NOT_OWNER)

    # --- storage ----------------------------------------------------------

    def get(self, key: bytes) -> bytes | None:
        return self._executor.world.get_storage(self.address, key)

    def set(self, key: bytes, value: bytes) -> None:
        self._write_guard()
        self._executor.world.set_storage(self.address, key, value)
        self._executor.record_write(self.address, key, value)

    def delete(self, key: bytes) -> None:
        self._write_guard()
        self._executor.world.delete_storage(self.address, key)
        self._executor.record_write(self.address, key, None)

    def keys(self, prefix: bytes = b"") -> list[bytes]:
        return self._executor.world.storage_keys(self.address, prefix)

    # --- tokens and events --------------------------------------------------

    def transfer_out(self, to_account: bytes, amount: int) -> None:
        """Move tokens from this contract's balance to an account."""
        self._write_guard()
        meta = self._executor.world.contract(self.address)
        if amount < 0 or meta.balance < amount:
            raise Revert(INSUFFICIENT_TOKENS, "contract balance too low")
        self._executor.world.update_contract(self.address, balance=meta.balance - amount)
        self._executor.world.credit(to_account, amount)

    def emit(self, name: str, payload: bytes = b"") -> None:
        self._write_guard()
        self._executor.record_event(self.address, name, payload)

    def call(self, address: bytes, method: str, args: list, tokens: int = 0) -> bytes:
        """Synchronous call into another contract; reverts propagate."""
        self._write_guard()
        if self.depth + 1 > MAX_CALL_DEPTH:
            raise Revert(REENTRANCY_LIMIT, f"call depth over {MAX_CALL_DEPTH}")
        if tokens:
            meta = self._executor.world.contract(self.address)
            if meta.balance < tokens:
                raise Revert(INSUFFICIENT_TOKENS, "contract balance too low")
            self._executor.world.update_contract(self.address, balance=meta.balance - tokens)
        return self._executor.run_call(
            address, caller=self.address, method=method,
            args=encode_values(args), tokens=tokens, depth=self.depth + 1,
        )

    def _write_guard(self) -> None:
        if self.static:
            raise StaticCallError("read-only call attempted a state effect")


class Executor:
    """Executes one transaction (or one read-only call) against world state."""

    def __init__(self, world: WorldState, registry: Registry, height: int, tick: int):
        self.world = world
        self.registry = registry
        self.height = height
        self.tick = tick
        self.events: list[tuple[bytes, str, bytes]] = []
        self.writes: list[tuple[bytes, bytes, bytes | None]] = []
        self.static = False

    def record_event(self, source: bytes, name: str, payload: bytes) -> None:
        self.events.append((source, name, payload))

    def record_write(self, address: bytes, key: bytes, value: bytes | None) -> None:
        self.writes.append((address, key, value))

    # --- entry points -----------------------------------------------------

    def run_deploy(self, deployer: bytes, nonce: int, code_id: str, init_args: bytes,
                   tokens: int) -> bytes:
        behavior = self.registry.get(code_id)
        if behavior is None:
            raise Revert(UNKNOWN_CODE, code_id)
        address = contract_address(deployer, nonce)
        if self.world.contract(address) is not None:
            raise Revert("AddressCollision", address.hex())
        self.world.set_contract(address, ContractMeta(code_id, deployer, tokens, False))
        ctx = CallContext(self, address, deployer, tokens, depth=1)
        try:
            args = decode_values(init_args) if init_args else []
        except Exception as exc:
            raise Revert(BAD_ARGS, f"undecodable init args: {exc}") from exc
        behavior.init(ctx, args)
        return address

    def run_call(self, address: bytes, caller: bytes, method: str, args: bytes,
                 tokens: int, depth: int = 1) -> bytes:
        meta = self.world.contract(address)
        if meta is None:
            raise Revert(UNKNOWN_CONTRACT, address.hex())
        if method == "kill":
            if self.static:
                raise StaticCallError("kill is not available in a read-only call")
            return self._run_kill(address, caller)
        if meta.killed:
            raise Revert(CONTRACT_KILLED)
        behavior = self.registry.get(meta.code_id)
        if behavior is None:
            raise Revert(UNKNOWN_CODE, meta.code_id)
        if tokens and not self.static:
            self.world.update_contract(address, balance=meta.balance + tokens)
        ctx = CallContext(self, address, caller, tokens, depth, static=self.static)
        try:
            decoded = decode_values(args) if args else []
        except Exception as exc:
            raise Revert(BAD_ARGS, f"undecodable args: {exc}") from exc
        result = behavior.dispatch(ctx, method, decoded)
        return result if result is not None else b""

    def _run_kill(self, address: bytes, caller: bytes) -> bytes:
        meta = self.world.contract(address)
        if caller != meta.owner:
            raise Revert(NOT_OWNER)
        if meta.killed:
            raise Revert(ALREADY_KILLED)
        # full balance moves to the owner; code and data stay readable forever
        self.world.update_contract(address, balance=0, killed=True)
        self.world.credit(meta.owner, meta.balance)
        self.record_event(address, "Killed", enc_u64(meta.balance))
        return enc_u64(meta.balance)


def execute_transaction(world: WorldState, registry: Registry, tx: Transaction,
                        height: int, tx_index: int, tick: int) -> tuple[Receipt, list]:
    """Run a validated transaction; returns (receipt, committed storage writes).

    The nonce bump happens before the call and survives a revert, so every
    submitted transaction stays attributable on-chain exactly once.
    """
    sender = tx.sender
    world.push_layer()
    world.nonces.set(sender, world.nonce(sender) + 1)
    executor = Executor(world, registry, height, tick)
    try:
        if tx.target is None:
            if tx.tokens:
                world.debit(sender, tx.tokens)
            address = executor.run_deploy(sender, tx.nonce, tx.method, tx.args, tx.tokens)
            return_value = address
        elif world.contract(tx.target) is not None:
            if tx.tokens:
                world.debit(sender, tx.tokens)
            return_value = executor.run_call(
                tx.target, caller=sender, method=tx.method, args=tx.args, tokens=tx.tokens,
            )
        elif tx.method == "":
            # plain token transfer to an account address
            world.debit(sender, tx.tokens)
            world.credit(tx.target, tx.tokens)
            return_value = b""
        else:
            raise Revert(UNKNOWN_CONTRACT, tx.target.hex())
    except Revert as exc:
        world.pop_layer(merge=False)
        # re-apply the nonce bump at the enclosing (block) layer
        world.nonces.set(sender, world.nonce(sender) + 1)
        return Receipt(STATUS_REVERTED, exc.reason), []
    world.pop_layer(merge=True)
    events = tuple(
        Event(source, name, payload, height, tx_index)
        for source, name, payload in executor.events
    )
    return Receipt(STATUS_OK, "", return_value, events), executor.writes


def static_call(world: WorldState, registry: Registry, address: bytes, method: str,
                args: list, height: int, tick: int, caller: bytes = b"\x00" * 32) -> bytes:
    """Execute a method read-only against committed ("sealed") state.

    This is the offline-execution path: any write, event, token move or kill
    raises StaticCallError, and pending-block state is never visible.
    """
    view = world.committed_view()
    meta = view.contract(address)
    if meta is None:
        raise UnknownContract(address.hex())
    executor = Executor(view, registry, height, tick)
    executor.static = True
    return executor.run_call(address, caller, method, encode_values(args), tokens=0)
