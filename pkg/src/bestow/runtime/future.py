"""Single-assignment result slots."""

from __future__ import annotations

import threading
from typing import Any, Callable, List, Optional

from .errors import FutureAlreadyFulfilled, Timeout

_PENDING = object()


class FutureValue:
    """A result that is fulfilled at most once.

    ``owner`` is the id of the actor expected to fulfil the future; the system
    uses it to detect an actor waiting on itself.
    """

    __slots__ = ("_system", "owner", "_value", "_error", "_callbacks", "_lock", "_event")

    def __init__(self, system=None, owner: Optional[int] = None):
        self._system = system
        self.owner = owner
        self._value: Any = _PENDING
        self._error: Optional[BaseException] = None
        self._callbacks: Optional[List[Callable[["FutureValue"], None]]] = None
        self._lock = threading.Lock()
        self._event: Optional[threading.Event] = None

    @classmethod
    def resolved(cls, value: Any) -> "FutureValue":
        fut = cls()
        fut.fulfill(value)
        return fut

    @classmethod
    def failed(cls, error: BaseException) -> "FutureValue":
        fut = cls()
        fut.fail(error)
        return fut

    def done(self) -> bool:
        return self._value is not _PENDING or self._error is not None

    def fulfill(self, value: Any) -> None:
        self._complete(value, None)

    def fail(self, error: BaseException) -> None:
        self._complete(_PENDING, error)

    def _complete(self, value: Any, error: Optional[BaseException]) -> None:
        with self._lock:
            if self.done():
                raise FutureAlreadyFulfilled("future already fulfilled")
            if error is not None:
                self._error = error
            else:
                self._value = value
            callbacks, self._callbacks = self._callbacks, None
            event = self._event
        if event is not None:
            event.set()
        for callback in callbacks or ():
            callback(self)

    def add_callback(self, callback: Callable[["FutureValue"], None]) -> None:
        """Run ``callback(self)`` on completion, immediately if already done."""
        with self._lock:
            if not self.done():
                if self._callbacks is None:
                    self._callbacks = []
                self._callbacks.append(callback)
                return
        callback(self)

    def result(self) -> Any:
        """The value of a completed future (raises its error if it failed)."""
        if self._error is not None:
            raise self._error
        if self._value is _PENDING:
            raise RuntimeError("future is not fulfilled yet")
        return self._value

    @property
    def error(self) -> Optional[BaseException]:
        return self._error

    def get(self, timeout: Optional[float] = None) -> Any:
        if not self.done():
            if self._system is None:
                self._wait_plain(timeout)
            else:
                self._system._await(self, timeout)
        return self.result()

    def _wait_plain(self, timeout: Optional[float]) -> None:
        if not self._wait_event(timeout):
            raise Timeout(f"future not fulfilled within {timeout}s")

    def _wait_event(self, timeout: Optional[float]) -> bool:
        with self._lock:
            if self.done():
                return True
            if self._event is None:
                self._event = threading.Event()
            event = self._event
        return event.wait(timeout)

    def __repr__(self) -> str:
        if self._error is not None:
            return f"FutureValue(error={self._error!r})"
        if self._value is _PENDING:
            return "FutureValue(pending)"
        return f"FutureValue({self._value!r})"
