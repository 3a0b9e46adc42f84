"""Actuation contract: authorized callers raise Actuate events that Things
watch for; every decision, granted or denied, is appended to an on-chain log.

A denied request still commits (that is what makes the denial auditable), so
it reports the refusal in its return value rather than reverting.

State layout:
    actor/<account>     authorized-actor membership (owner implicit)
    logseq              next decision-log index (u64)
    log/<index>         encoded [height, caller, action, decision]
"""

from __future__ import annotations

from ..codec import enc_u64, encode_values
from ..runtime import Behavior, Revert, want_account, want_bytes, want_str

ACTOR_PREFIX = b"actor/"
LOG_SEQ_KEY = b"logseq"
LOG_PREFIX = b"log/"

GRANTED = "granted"
DENIED = "denied"


def request_outcome(return_value: bytes) -> str:
    """Decode a request() return into "granted" or "denied"."""
    from ..codec import decode_values

    return decode_values(return_value)[0]


class ActuationContract(Behavior):
    code_id = "actuation"
    exports = ("request", "allow_actor", "revoke_actor")

    def allow_actor(self, ctx, args):
        ctx.require_owner()
        ctx.set(ACTOR_PREFIX + want_account(args, 0), b"\x01")

    def revoke_actor(self, ctx, args):
        ctx.require_owner()
        account = want_account(args, 0)
        if ctx.get(ACTOR_PREFIX + account) is None:
            raise Revert("UnknownActor")
        ctx.delete(ACTOR_PREFIX + account)

    def _log(self, ctx, action: str, decision: str) -> None:
        seq = int.from_bytes(ctx.get(LOG_SEQ_KEY) or b"", "big")
        ctx.set(LOG_SEQ_KEY, enc_u64(seq + 1))
        ctx.set(LOG_PREFIX + enc_u64(seq),
                encode_values([ctx.height, ctx.caller, action, decision]))

    def request(self, ctx, args):
        """(action, args): emit Actuate when authorized, log either way."""
        action = want_str(args, 0, "action")
        payload = want_bytes(args, 1, "action args")
        allowed = ctx.caller == ctx.owner or ctx.get(ACTOR_PREFIX + ctx.caller) is not None
        decision = GRANTED if allowed else DENIED
        self._log(ctx, action, decision)
        body = encode_values([action, payload, ctx.caller])
        if allowed:
            ctx.emit("Actuate", body)
            return encode_values([GRANTED])
        ctx.emit("Denied", body)
        return encode_values([DENIED, "NotAuthorized"])
