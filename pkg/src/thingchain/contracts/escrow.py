"""Escrow contract: tokens committed by a customer are held until the customer
confirms delivery (pay the provider) or the deadline passes (refund).

Each deal settles exactly once; the contract protects customers from the
owner as much as from providers, since nobody can alter the rules after
deployment.

State layout:
    dealseq             next deal id (u64)
    deal/<id>           encoded [customer, provider, amount, deadline, state]
"""

from __future__ import annotations

from ..codec import decode_values, enc_u64, encode_values
from ..runtime import Behavior, Revert, want_account, want_int

DEAL_SEQ_KEY = b"dealseq"
DEAL_PREFIX = b"deal/"

COMMITTED = "committed"
RELEASED = "released"
REFUNDED = "refunded"


def decode_deal(raw: bytes) -> tuple[bytes, bytes, int, int, str]:
    customer, provider, amount, deadline, state = decode_values(raw)
    return customer, provider, amount, deadline, state


class EscrowContract(Behavior):
    code_id = "escrow"
    exports = ("commit", "confirm", "refund")

    def _deal(self, ctx, deal_id: int):
        raw = ctx.get(DEAL_PREFIX + enc_u64(deal_id))
        if raw is None:
            raise Revert("UnknownDeal", str(deal_id))
        return decode_deal(raw)

    def commit(self, ctx, args):
        """(provider, deadline_height), escrowing the attached tokens."""
        provider = want_account(args, 0, "provider")
        deadline = want_int(args, 1, "deadline height")
        if deadline < 0:
            raise Revert("BadArgs", "deadline must be nonnegative")
        deal_id = int.from_bytes(ctx.get(DEAL_SEQ_KEY) or b"", "big")
        ctx.set(DEAL_SEQ_KEY, enc_u64(deal_id + 1))
        ctx.set(DEAL_PREFIX + enc_u64(deal_id),
                encode_values([ctx.caller, provider, ctx.tokens, deadline, COMMITTED]))
        return enc_u64(deal_id)

    def confirm(self, ctx, args):
        """Customer releases the funds to the provider."""
        deal_id = want_int(args, 0, "deal id")
        customer, provider, amount, deadline, state = self._deal(ctx, deal_id)
        if ctx.caller != customer:
            raise Revert("NotCustomer")
        if state != COMMITTED:
            raise Revert("AlreadySettled", state)
        ctx.set(DEAL_PREFIX + enc_u64(deal_id),
                encode_values([customer, provider, amount, deadline, RELEASED]))
        ctx.transfer_out(provider, amount)

    def refund(self, ctx, args):
        """Customer reclaims the funds once the deadline has passed."""
        deal_id = want_int(args, 0, "deal id")
        customer, provider, amount, deadline, state = self._deal(ctx, deal_id)
        if ctx.caller != customer:
            raise Revert("NotCustomer")
        if state != COMMITTED:
            raise Revert("AlreadySettled", state)
        if ctx.height <= deadline:
            raise Revert("TooEarly", f"deadline is height {deadline}")
        ctx.set(DEAL_PREFIX + enc_u64(deal_id),
                encode_values([customer, provider, amount, deadline, REFUNDED]))
        ctx.transfer_out(customer, amount)
