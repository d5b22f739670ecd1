"""Bestowed references for actors: a small calculus and a runtime that delegates to owners."""

from .calculus import Variant, explore, parse, typecheck
from .runtime import ActorRef, ActorSystem, BestowedRef, FutureValue, TransferPolicy

__version__ = "0.1.0"

__all__ = [
    "ActorRef",
    "ActorSystem",
    "BestowedRef",
    "FutureValue",
    "TransferPolicy",
    "Variant",
    "explore",
    "parse",
    "typecheck",
]
