"""Economic flows over a double-entry ledger, and person-to-person messages.

Every ledger entry moves an exact integer amount from one account to
another, so the sum of all balances (BANK included, as a negative-liability
account) is invariant over any event sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CONTENT_TOO_LARGE, SimError

GOVERNMENT = "GOVERNMENT"
BANK = "BANK"

MAX_MESSAGE_BYTES = 4096


def person_account(person_id: int) -> str:
    return f"person:{person_id}"


def enterprise_account(aoi_id: int, index: int = 0) -> str:
    return f"enterprise:{aoi_id}:{index}"


@dataclass
class LedgerEntry:
    step: int
    debit: str
    credit: str
    amount: int
    kind: str  # consumption | wage | tax | interest


class Ledger:
    """Append-only double-entry ledger with integer balances."""

    def __init__(self):
        self.accounts: dict[str, int] = {GOVERNMENT: 0, BANK: 0}
        self.entries: list[LedgerEntry] = []

    def open_account(self, account: str, balance: int = 0) -> None:
        self.accounts.setdefault(account, 0)
        if balance:
            self.accounts[account] += balance

    def transfer(self, step: int, debit: str, credit: str, amount: int, kind: str) -> LedgerEntry:
        if amount < 0:
            raise ValueError("ledger amounts are non-negative")
        self.accounts[debit] = self.accounts.get(debit, 0) - amount
        self.accounts[credit] = self.accounts.get(credit, 0) + amount
        entry = LedgerEntry(step, debit, credit, amount, kind)
        self.entries.append(entry)
        return entry

    def balance(self, account: str) -> int:
        return self.accounts.get(account, 0)

    def total(self) -> int:
        return sum(self.accounts.values())

    def person_balances(self) -> dict[str, int]:
        return {k: v for k, v in self.accounts.items() if k.startswith("person:")}


def wage_split(gross: int, tax_rate: float) -> tuple[int, int]:
    """(net to the person, tax to the government); tax is floored so the
    remainder stays with the person and the split is exact."""
    tax = int(math.floor(gross * tax_rate))
    return gross - tax, tax


def interest_amount(balance: int, rate: float) -> int:
    return int(math.floor(balance * rate))


@dataclass
class Message:
    id: int
    sender: int
    content: str
    sent_step: int
    targets: list[int] | None = None
    radius: float | None = None
    delivered_step: int | None = None
    recipients: list[int] = field(default_factory=list)

    def __post_init__(self):
        if (self.targets is None) == (self.radius is None):
            raise ValueError("exactly one of targets or radius must be given")
        if len(self.content.encode("utf-8")) > MAX_MESSAGE_BYTES:
            raise SimError(CONTENT_TOO_LARGE, f"content exceeds {MAX_MESSAGE_BYTES} bytes")
