"""Banks holding accounts as passive objects, with atomic transfers between them."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

from ..runtime import ActorRef, ActorSystem, BestowedRef, FutureValue


class Account:
    def __init__(self, number: int, balance: int):
        if balance < 0:
            raise ValueError("opening balance must be non-negative")
        self.number = number
        self.balance = balance
        self.version = 0
        self.history: List[Tuple[int, int]] = []  # (version, delta)

    def _apply(self, delta: int) -> None:
        self.balance += delta
        self.version += 1
        self.history.append((self.version, delta))

    def withdraw(self, amount: int) -> bool:
        if amount > self.balance:
            return False
        self._apply(-amount)
        return True

    def deposit(self, amount: int) -> None:
        self._apply(amount)


@dataclass
class BankState:
    name: str
    accounts: Dict[int, Account] = field(default_factory=dict)


def _move(src: Account, dst: Account, amount: int) -> bool:
    if not src.withdraw(amount):
        return False
    dst.deposit(amount)
    return True


def transfer(system: ActorSystem, amount: int, src: BestowedRef, dst: BestowedRef) -> FutureValue:
    """Move ``amount`` from ``src`` to ``dst`` so no other actor sees it missing.

    Accounts held by the same bank are handled by one envelope at that bank.
    Otherwise both banks are locked with ``atomic_all``, which acquires them in
    actor-id order; two naively nested atomic blocks could deadlock against a
    transfer going the other way.
    """
    if amount <= 0:
        raise ValueError("amount must be positive")
    if src.owner == dst.owner:
        a, b = src.obj, dst.obj
        return src.owner.send(lambda _bank: _move(a, b, amount))

    def body(handles) -> bool:
        h_src, h_dst = handles
        if not h_src.send(lambda acc: acc.withdraw(amount)).get():
            return False
        h_dst.send(lambda acc: acc.deposit(amount)).get()
        return True

    try:
        return FutureValue.resolved(system.atomic_all([src, dst], body))
    except Exception as err:
        return FutureValue.failed(err)


def transfer_unsafe(system: ActorSystem, amount: int, src: BestowedRef, dst: BestowedRef) -> FutureValue:
    """Control variant: withdraw and deposit as two independent messages."""
    if not src.send(lambda acc: acc.withdraw(amount)).get():
        return FutureValue.resolved(False)
    dst.send(lambda acc: acc.deposit(amount)).get()
    return FutureValue.resolved(True)


class Bank:
    def __init__(self, system: ActorSystem, name: str, balances: List[int], first_number: int = 0):
        self.system = system
        self.ref: ActorRef = system.spawn(BankState(name), name)

        def open_accounts(st: BankState) -> List[BestowedRef]:
            refs = []
            for i, balance in enumerate(balances):
                acc = Account(first_number + i, balance)
                st.accounts[acc.number] = acc
                refs.append(system.bestow(acc))
            return refs

        self.accounts: List[BestowedRef] = self.ref.send(open_accounts).get()

    def balances(self) -> Dict[int, int]:
        return self.ref.send(lambda st: {n: a.balance for n, a in st.accounts.items()}).get()


def snapshot_total(system: ActorSystem, banks: List[Bank]) -> int:
    """Sum of all balances read inside one atomic block over every bank."""

    def body(handles) -> int:
        parts = [h.send(lambda st: sum(a.balance for a in st.accounts.values())) for h in handles]
        return sum(p.get() for p in parts)

    return system.atomic_all([b.ref for b in banks], body)


@dataclass
class MoneyRun:
    initial_total: int
    snapshots: List[int]
    violations: int
    transfers: int
    succeeded: int
    final_total: int
    results: List[Tuple[int, int, int, bool]]  # (from account, to account, amount, success)
    banks: List[Bank] = field(default_factory=list)


def run_money_race(
    system: ActorSystem,
    iterations: int = 10_000,
    *,
    banks: int = 3,
    accounts_per_bank: int = 3,
    opening_balance: int = 100,
    tellers: int = 4,
    observers: int = 1,
    snapshot_every: int = 10,
    atomic: bool = True,
    seed: int = 0,
) -> MoneyRun:
    """Race ``iterations`` random transfers against an observer taking atomic snapshots."""
    rng = random.Random(seed)
    bank_objs = [
        Bank(system, f"bank{i}", [opening_balance] * accounts_per_bank, first_number=i * accounts_per_bank)
        for i in range(banks)
    ]
    accounts = [acc for bank in bank_objs for acc in bank.accounts]
    initial_total = opening_balance * len(accounts)
    move = transfer if atomic else transfer_unsafe

    plan: List[List[Tuple[int, int, int]]] = [[] for _ in range(tellers)]
    for i in range(iterations):
        a, b = rng.sample(range(len(accounts)), 2)
        plan[i % tellers].append((a, b, rng.randint(1, opening_balance // 2)))

    results: List[Tuple[int, int, int, bool]] = []
    snapshots: List[int] = []
    teller_refs = [system.spawn(None, f"teller{i}") for i in range(tellers)]
    observer_refs = [system.spawn(None, f"observer{i}") for i in range(observers)]

    def one_transfer(a: int, b: int, amount: int):
        def op(_state) -> None:
            ok = move(system, amount, accounts[a], accounts[b]).get()
            results.append((accounts[a].obj.number, accounts[b].obj.number, amount, ok))

        return op

    def one_snapshot(_state) -> None:
        snapshots.append(snapshot_total(system, bank_objs))

    pending = []
    for teller, work in zip(teller_refs, plan):
        for a, b, amount in work:
            pending.append(teller.send(one_transfer(a, b, amount)))
    for k in range(max(1, iterations // snapshot_every)):
        pending.append(observer_refs[k % observers].send(one_snapshot))
    for fut in pending:
        fut.get()
    system.run_until_quiescent()
    final_total = sum(sum(b.balances().values()) for b in bank_objs)
    violations = sum(1 for s in snapshots if s != initial_total)
    return MoneyRun(
        initial_total,
        snapshots,
        violations,
        len(results),
        sum(1 for r in results if r[3]),
        final_total,
        results,
        bank_objs,
    )


def account_histories(banks: List[Bank]) -> Dict[int, List[Tuple[int, int]]]:
    out: Dict[int, List[Tuple[int, int]]] = {}
    for bank in banks:
        out.update(bank.ref.send(lambda st: {n: list(a.history) for n, a in st.accounts.items()}).get())
    return out


__all__ = [
    "Account",
    "Bank",
    "MoneyRun",
    "account_histories",
    "run_money_race",
    "snapshot_total",
    "transfer",
    "transfer_unsafe",
]
