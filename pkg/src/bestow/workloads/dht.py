"""A hash table spread over shard actors, reached through per-client proxies.

Each client actor holds a passive :class:`Proxy` with the current shard map.
The table keeps bestowed references to every proxy so a rehash can push the
new map straight into them.  Requests carry the map version they were routed
with; a shard that receives a key it does not own under its own map forwards
the request to the right shard, so requests routed with a stale map are never
lost.
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from ..runtime import ActorRef, ActorSystem, BestowedRef, FutureValue

MASK64 = (1 << 64) - 1
HASH_SPACE = 1 << 64


def splitmix64(x: int) -> int:
    """The SplitMix64 finaliser: a fixed, seedable 64-bit mix."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def key_hash(key: Any, seed: int = 0) -> int:
    if isinstance(key, int):
        raw = key & MASK64
    else:
        raw = int.from_bytes(hashlib.blake2b(str(key).encode(), digest_size=8).digest(), "little")
    return splitmix64(raw ^ splitmix64(seed))


class KeyNotFound(KeyError):
    pass


@dataclass(frozen=True)
class ShardMap:
    """Upper bounds (exclusive) of consecutive hash ranges and the shard serving each."""

    bounds: Tuple[int, ...]
    shards: Tuple[ActorRef, ...]
    version: int
    seed: int = 0

    @classmethod
    def uniform(cls, shards: List[ActorRef], version: int, seed: int = 0) -> "ShardMap":
        n = len(shards)
        if n < 1:
            raise ValueError("a shard map needs at least one shard")
        bounds = tuple(((i + 1) * HASH_SPACE) // n for i in range(n))
        return cls(bounds, tuple(shards), version, seed)

    def index_of_hash(self, h: int) -> int:
        return bisect.bisect_right(self.bounds, h)

    def index_for(self, key: Any) -> int:
        return self.index_of_hash(key_hash(key, self.seed))

    def shard_for(self, key: Any) -> ActorRef:
        return self.shards[self.index_for(key)]


@dataclass
class Request:
    kind: str  # "put" or "get"
    key: Any
    value: Any
    version: int
    reply: FutureValue


class Shard:
    """State of one shard actor."""

    def __init__(self, index: int, shard_map: Optional[ShardMap], stopped: bool = False):
        self.index = index
        self.map = shard_map
        self.data: Dict[Any, Any] = {}
        self.stopped = stopped
        self.buffer: List[Request] = []
        self.redirects = 0
        self.me: Optional[ActorRef] = None

    def owns(self, key: Any) -> bool:
        return self.map is not None and self.map.shard_for(key) == self.me

    def handle(self, req: Request) -> None:
        if self.stopped:
            self.buffer.append(req)
            return
        if not self.owns(key=req.key):
            self.redirects += 1
            self.map.shard_for(req.key).send(lambda shard: shard.handle(req))
            return
        if req.kind == "put":
            self.data[req.key] = req.value
            req.reply.fulfill(None)
        elif req.key in self.data:
            req.reply.fulfill(self.data[req.key])
        else:
            req.reply.fail(KeyNotFound(req.key))

    def stop(self, new_map: ShardMap) -> Dict[Any, Any]:
        """Stop serving and hand over the entries this shard no longer owns."""
        self.stopped = True
        leaving = {k: v for k, v in self.data.items() if new_map.shard_for(k) != self.me}
        for k in leaving:
            del self.data[k]
        return leaving

    def start(self, new_map: ShardMap, incoming: Dict[Any, Any]) -> None:
        self.map = new_map
        self.data.update(incoming)
        self.stopped = False
        pending, self.buffer = self.buffer, []
        for req in pending:
            self.handle(req)

    def migrate(self, new_map: ShardMap) -> Dict[Any, Any]:
        """Atomic-block variant of ``stop``: hand over entries without buffering."""
        leaving = {k: v for k, v in self.data.items() if new_map.shard_for(k) != self.me}
        for k in leaving:
            del self.data[k]
        return leaving

    def install(self, new_map: ShardMap, incoming: Dict[Any, Any]) -> None:
        self.map = new_map
        self.data.update(incoming)


class Proxy:
    """Client-side passive object that routes requests with its copy of the map."""

    def __init__(self, shard_map: ShardMap):
        self.map = shard_map
        self.updates = 0

    def update(self, new_map: ShardMap) -> None:
        if new_map.version > self.map.version:
            self.map = new_map
            self.updates += 1

    def request(self, system: ActorSystem, kind: str, key: Any, value: Any = None) -> FutureValue:
        reply = FutureValue(system)
        req = Request(kind, key, value, self.map.version, reply)
        self.map.shard_for(key).send(lambda shard: shard.handle(req))
        return reply


@dataclass
class TableState:
    shards: List[ActorRef]
    map: ShardMap
    proxies: List[BestowedRef] = field(default_factory=list)
    rehashes: int = 0


class ClientState:
    def __init__(self, proxy: Proxy):
        self.proxy = proxy


def _chain(system: ActorSystem, outer: FutureValue) -> FutureValue:
    """Flatten a future whose value is itself a future."""
    result = FutureValue(system)

    def inner_done(inner: FutureValue) -> None:
        if inner.error is not None:
            result.fail(inner.error)
        else:
            result.fulfill(inner.result())

    def outer_done(fut: FutureValue) -> None:
        if fut.error is not None:
            result.fail(fut.error)
        else:
            fut.result().add_callback(inner_done)

    outer.add_callback(outer_done)
    return result


class DhtClient:
    def __init__(self, table: "DistributedHashTable", ref: ActorRef):
        self.table = table
        self.ref = ref

    def put(self, key: Any, value: Any) -> FutureValue:
        system = self.table.system
        return _chain(system, self.ref.send(lambda st: st.proxy.request(system, "put", key, value)))

    def get(self, key: Any) -> FutureValue:
        system = self.table.system
        return _chain(system, self.ref.send(lambda st: st.proxy.request(system, "get", key)))

    def proxy_version(self) -> int:
        return self.ref.send(lambda st: st.proxy.map.version).get()


class DistributedHashTable:
    def __init__(self, system: ActorSystem, shards: int = 2, seed: int = 0):
        if shards < 1:
            raise ValueError("need at least one shard")
        self.system = system
        self.seed = seed
        refs = [self._spawn_shard(i, stopped=False) for i in range(shards)]
        shard_map = ShardMap.uniform(refs, 0, seed)
        for ref in refs:
            ref.send(lambda shard, m=shard_map: setattr(shard, "map", m))
        self.ref = system.spawn(TableState(refs, shard_map), "dht-table")

    def _spawn_shard(self, index: int, stopped: bool) -> ActorRef:
        shard = Shard(index, None, stopped)
        ref = self.system.spawn(shard, f"shard{index}")
        shard.me = ref
        return ref

    def current_map(self) -> ShardMap:
        return self.ref.send(lambda t: t.map).get()

    def new_client(self, name: Optional[str] = None) -> DhtClient:
        """Spawn a client actor with its own proxy, registered with the table."""
        system = self.system
        shard_map = self.current_map()
        ref = system.spawn(ClientState(Proxy(shard_map)), name or "dht-client")
        table = self.ref

        def register(st: ClientState) -> None:
            handle = system.bestow(st.proxy)
            table.send(lambda t: t.proxies.append(handle))

        ref.send(register).get()
        return DhtClient(self, ref)

    # -- rehash ---------------------------------------------------------------------------

    def _grow(self, t: TableState, count: int, stopped: bool) -> Tuple[List[ActorRef], ShardMap]:
        refs = list(t.shards[:count])
        for i in range(len(refs), count):
            refs.append(self._spawn_shard(i, stopped=stopped))
        return refs, ShardMap.uniform(refs, t.map.version + 1, self.seed)

    def rehash(self, new_count: int) -> FutureValue:
        """Stop every shard, move entries to their new owners, restart, then push the map to proxies."""
        if new_count < 1:
            raise ValueError("need at least one shard")

        def run(t: TableState) -> int:
            old = list(t.shards)
            refs, new_map = self._grow(t, new_count, stopped=True)
            stops = [s.send(lambda shard, m=new_map: shard.stop(m)) for s in old]
            incoming: Dict[int, Dict[Any, Any]] = {i: {} for i in range(len(refs))}
            for fut in stops:
                for k, v in fut.get().items():
                    incoming[new_map.index_for(k)][k] = v
            everyone = list(dict.fromkeys(old + refs))
            for s in everyone:
                idx = refs.index(s) if s in refs else None
                data = incoming[idx] if idx is not None else {}
                s.send(lambda shard, m=new_map, d=data: shard.start(m, d))
            t.shards, t.map = refs, new_map
            t.rehashes += 1
            for p in t.proxies:
                p.send(lambda proxy, m=new_map: proxy.update(m))
            return new_map.version

        return self.ref.send(run)

    def rehash_atomic(self, new_count: int) -> FutureValue:
        """The same rehash expressed as one atomic block over every shard."""
        if new_count < 1:
            raise ValueError("need at least one shard")
        system = self.system

        def run(t: TableState) -> int:
            old = list(t.shards)
            refs, new_map = self._grow(t, new_count, stopped=False)
            everyone = list(dict.fromkeys(old + refs))

            def body(handles):
                by_ref = dict(zip(everyone, handles))
                incoming: Dict[int, Dict[Any, Any]] = {i: {} for i in range(len(refs))}
                moves = [by_ref[s].send(lambda shard, m=new_map: shard.migrate(m)) for s in old]
                for fut in moves:
                    for k, v in fut.get().items():
                        incoming[new_map.index_for(k)][k] = v
                done = []
                for s in everyone:
                    data = incoming[refs.index(s)] if s in refs else {}
                    done.append(by_ref[s].send(lambda shard, m=new_map, d=data: shard.install(m, d)))
                for fut in done:
                    fut.get()

            system.atomic_all(everyone, body)
            t.shards, t.map = refs, new_map
            t.rehashes += 1
            for p in t.proxies:
                p.send(lambda proxy, m=new_map: proxy.update(m))
            return new_map.version

        return self.ref.send(run)

    # -- inspection ---------------------------------------------------------------------------

    def contents(self) -> Dict[int, Dict[Any, Any]]:
        """Shard index -> entries, for every shard in the current map."""
        shard_map = self.current_map()
        return {i: s.send(lambda shard: dict(shard.data)).get() for i, s in enumerate(shard_map.shards)}

    def assignment(self) -> Dict[Any, int]:
        """Key -> index of the shard actually holding it."""
        out: Dict[Any, int] = {}
        for i, data in self.contents().items():
            for k in data:
                if k in out:
                    raise AssertionError(f"key {k!r} stored in shards {out[k]} and {i}")
                out[k] = i
        return out

    def redirects(self) -> int:
        shard_map = self.current_map()
        return sum(s.send(lambda shard: shard.redirects).get() for s in shard_map.shards)


def dht_put(client: DhtClient, key: Any, value: Any) -> FutureValue:
    return client.put(key, value)


def dht_get(client: DhtClient, key: Any) -> FutureValue:
    return client.get(key)


def dht_rehash(table: DistributedHashTable, new_count: int, *, atomic: bool = False) -> FutureValue:
    return table.rehash_atomic(new_count) if atomic else table.rehash(new_count)


@dataclass
class RaceOutcome:
    keys: int
    lost: List[Any]
    duplicated: List[Any]
    wrong_value: List[Any]
    misplaced: List[Any]
    assignment: Dict[Any, int]
    redirects: int
    map_version: int

    @property
    def ok(self) -> bool:
        return not (self.lost or self.duplicated or self.wrong_value or self.misplaced)


def rehash_race(
    keys: int = 1000,
    *,
    seed: int = 0,
    before: int = 2,
    after: int = 4,
    atomic: bool = False,
    clients: int = 2,
    deterministic: bool = True,
) -> RaceOutcome:
    """Issue ``keys`` puts from several clients with one rehash fired halfway through.

    The result is compared against a plain dict built sequentially from the same puts.
    """
    oracle = {k: f"v{k}" for k in range(keys)}
    with ActorSystem(deterministic=deterministic, seed=seed) as system:
        table = DistributedHashTable(system, before, seed=seed)
        handles = [table.new_client(f"client{i}") for i in range(clients)]
        pending: List[FutureValue] = []
        rehash: Optional[FutureValue] = None
        for k, v in oracle.items():
            if k == keys // 2:
                rehash = dht_rehash(table, after, atomic=atomic)
            pending.append(handles[k % clients].put(k, v))
        for fut in pending:
            fut.get()
        if rehash is None:
            rehash = dht_rehash(table, after, atomic=atomic)
        rehash.get()
        system.run_until_quiescent()

        contents = table.contents()
        shard_map = table.current_map()
        seen: Dict[Any, List[int]] = {}
        for idx, data in contents.items():
            for k in data:
                seen.setdefault(k, []).append(idx)
        lost = sorted(k for k in oracle if k not in seen)
        duplicated = sorted(k for k, where in seen.items() if len(where) > 1)
        wrong = sorted(k for k, where in seen.items() if contents[where[0]][k] != oracle.get(k))
        misplaced = sorted(k for k, where in seen.items() if where[0] != shard_map.index_for(k))
        return RaceOutcome(
            keys,
            lost,
            duplicated,
            wrong,
            misplaced,
            {k: where[0] for k, where in seen.items()},
            table.redirects(),
            shard_map.version,
        )
