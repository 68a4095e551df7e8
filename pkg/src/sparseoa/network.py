"""Hypergraph topology and the in-process message-passing harness.

Nodes are joined by hyperedges, each hosting a local fusion center (LFC).
Workers exchange data only through synchronous, round-keyed mailboxes; the
collective operations (reduce, gather, broadcast, barrier) mirror their MPI
counterparts so the algorithm layer stays transport-agnostic.
"""

import hashlib
import itertools
import json
import threading
from dataclasses import dataclass

import numpy as np

ROOT = -1  # rank of the root worker in channel addressing


class MissingContribution(Exception):
    """A node failed to post its contribution before the collective."""


class NetworkTimeout(Exception):
    """A worker did not arrive within the wall limit."""


class DisconnectedTopology(Exception):
    """The hypergraph does not connect all nodes."""


@dataclass(frozen=True)
class Hypergraph:
    """Node/hyperedge topology. ``edges[j]`` is the sorted node set of LFC j."""

    N: int
    edges: tuple

    def __init__(self, N, edges):
        edges = tuple(tuple(sorted(set(int(i) for i in e))) for e in edges)
        if not edges:
            raise ValueError("hypergraph needs at least one hyperedge")
        covered = set()
        for e in edges:
            if not e:
                raise ValueError("hyperedges must be nonempty")
            if e[0] < 0 or e[-1] >= N:
                raise ValueError(f"edge {e} references nodes outside 0..{N - 1}")
            covered.update(e)
        if covered != set(range(N)):
            missing = sorted(set(range(N)) - covered)
            raise ValueError(f"nodes {missing} belong to no hyperedge")
        object.__setattr__(self, "N", int(N))
        object.__setattr__(self, "edges", edges)

    @property
    def K(self) -> int:
        return len(self.edges)

    @property
    def membership(self):
        """Node index -> list of LFC indices containing it."""
        member = [[] for _ in range(self.N)]
        for j, e in enumerate(self.edges):
            for i in e:
                member[i].append(j)
        return member

    def to_dict(self) -> dict:
        return {"N": self.N, "K": self.K, "edges": [list(e) for e in self.edges]}

    @staticmethod
    def from_dict(data: dict) -> "Hypergraph":
        return Hypergraph(data["N"], data["edges"])


def check_connected(h: Hypergraph) -> bool:
    """True iff the bipartite node-hyperedge graph is connected."""
    seen_nodes = set(h.edges[0])
    seen_edges = {0}
    frontier = True
    while frontier:
        frontier = False
        for j, e in enumerate(h.edges):
            if j in seen_edges:
                continue
            if seen_nodes.intersection(e):
                seen_edges.add(j)
                seen_nodes.update(e)
                frontier = True
    return len(seen_nodes) == h.N and len(seen_edges) == h.K


def block_topology(N: int, K: int) -> Hypergraph:
    """K contiguous blocks with one overlapping node between consecutive
    blocks (the default topology generator)."""
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={N}")
    bounds = [round(j * N / K) for j in range(K + 1)]
    edges = []
    for j in range(K):
        block = list(range(bounds[j], bounds[j + 1]))
        if j + 1 < K:
            block.append(bounds[j + 1])  # shared node with the next LFC
        edges.append(block)
    return Hypergraph(N, edges)


def load_topology(path) -> Hypergraph:
    with open(path) as fh:
        return Hypergraph.from_dict(json.load(fh))


def save_topology(h: Hypergraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(h.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _digest(payload) -> str:
    if isinstance(payload, np.ndarray):
        raw = payload.tobytes()
    elif isinstance(payload, (tuple, list)):
        raw = b"|".join(_digest(p).encode() for p in payload)
    else:
        raw = repr(payload).encode()
    return hashlib.sha1(raw).hexdigest()


class Channel:
    """Synchronous round-based mailboxes keyed by (round, receiver).

    All messages of a round are delivered before any worker proceeds past
    the round's collection point; delivery order is ascending sender rank.
    With ``trace=True`` every completed collection is recorded as
    (round, receiver, [(sender, digest), ...]), which is deterministic
    because collection order is.
    """

    def __init__(self, trace=False):
        self._boxes = {}
        self._cond = threading.Condition()
        self.trace = [] if trace else None

    def post(self, round_id, sender, receiver, payload):
        with self._cond:
            box = self._boxes.setdefault((round_id, receiver), {})
            if sender in box:
                raise ValueError(f"duplicate post from {sender} in round {round_id!r}")
            box[sender] = payload
            self._cond.notify_all()

    def _ready(self, round_id, receiver, senders):
        box = self._boxes.get((round_id, receiver), {})
        return all(s in box for s in senders)

    def collect(self, round_id, receiver, senders, timeout=None):
        """Block until every sender posted; return payloads in ascending
        sender order and drop the mailbox."""
        senders = sorted(senders)
        with self._cond:
            ok = self._cond.wait_for(
                lambda: self._ready(round_id, receiver, senders), timeout=timeout
            )
            if not ok:
                raise NetworkTimeout(f"round {round_id!r}: timed out waiting for senders")
            box = self._boxes.pop((round_id, receiver))
            if self.trace is not None:
                self.trace.append(
                    (round_id, receiver, [(s, _digest(box[s])) for s in senders])
                )
            return [box[s] for s in senders]

    def collect_now(self, round_id, receiver, senders):
        """Immediate collection; raises MissingContribution when incomplete."""
        senders = sorted(senders)
        with self._cond:
            box = self._boxes.get((round_id, receiver), {})
            missing = [s for s in senders if s not in box]
            if missing:
                raise MissingContribution(
                    f"round {round_id!r}: no contribution from nodes {missing}"
                )
            self._boxes.pop((round_id, receiver))
            if self.trace is not None:
                self.trace.append(
                    (round_id, receiver, [(s, _digest(box[s])) for s in senders])
                )
            return [box[s] for s in senders]


_DEFAULT = object()  # sentinel: fall back to the network-level timeout


class Network:
    """Collective operations among N node workers and one root worker."""

    def __init__(self, n_nodes, channel=None, timeout=None):
        self.n_nodes = n_nodes
        self.channel = channel if channel is not None else Channel()
        self.timeout = timeout

    def _limit(self, timeout):
        return self.timeout if timeout is _DEFAULT else timeout

    # -- worker side -------------------------------------------------------
    def contribute(self, round_id, node, value):
        self.channel.post(round_id, node, ROOT, value)

    def arrive(self, round_id, node):
        self.channel.post(("barrier", round_id), node, ROOT, True)

    def receive(self, round_id, node, timeout=_DEFAULT):
        (value,) = self.channel.collect(
            round_id, node, [ROOT], timeout=self._limit(timeout)
        )
        return value

    # -- root side ---------------------------------------------------------
    def barrier(self, round_id, timeout=_DEFAULT):
        """Return once every node worker arrived; NetworkTimeout otherwise."""
        self.channel.collect(
            ("barrier", round_id), ROOT, range(self.n_nodes), timeout=self._limit(timeout)
        )

    def reduce_sum(self, round_id):
        """Sum of the per-node contributions of a completed round (root only)."""
        values = self.channel.collect_now(round_id, ROOT, range(self.n_nodes))
        return sum(values)

    def gather(self, round_id):
        """Per-node payloads of a completed round in node-index order."""
        return self.channel.collect_now(round_id, ROOT, range(self.n_nodes))

    def broadcast(self, round_id, value):
        """Replicate a root payload to every node (payloads are shared by
        reference; workers treat them as read-only)."""
        for i in range(self.n_nodes):
            self.channel.post(round_id, ROOT, i, value)


class WorkerPool:
    """Runs per-node work phases on the simulated network.

    scheduler="threads" keeps one persistent worker thread per node; each
    phase is dispatched through the channel, synchronized with a barrier,
    and gathered in node order.  scheduler="sequential" executes the same
    phases inline in node order and produces identical results.
    """

    def __init__(self, n_nodes, scheduler="sequential", timeout=None, trace=False):
        if scheduler not in ("sequential", "threads"):
            raise ValueError(f"unknown scheduler {scheduler!r}")
        self.n_nodes = n_nodes
        self.scheduler = scheduler
        self.net = Network(n_nodes, channel=Channel(trace=trace), timeout=timeout)
        self._round = itertools.count()
        self._threads = []
        if scheduler == "threads":
            for i in range(n_nodes):
                t = threading.Thread(target=self._worker_loop, args=(i,), daemon=True)
                t.start()
                self._threads.append(t)

    def _worker_loop(self, i):
        for t in itertools.count():
            task = self.net.receive(("task", i, t), i, timeout=None)
            if task is None:
                return
            round_id, fn, arg = task
            try:
                result = ("ok", fn(i, arg))
            except Exception as exc:  # surfaced at the root after the barrier
                result = ("err", exc)
            self.net.contribute(round_id, i, result)
            self.net.arrive(round_id, i)

    def run_phase(self, fn, args):
        """Run fn(node, args[node]) on every node; gather results in order."""
        if self.scheduler == "sequential":
            return [fn(i, args[i]) for i in range(self.n_nodes)]
        t = next(self._round)
        r = ("phase", t)
        for i in range(self.n_nodes):
            self.net.channel.post(("task", i, t), ROOT, i, (r, fn, args[i]))
        self.net.barrier(r)
        results = self.net.gather(r)
        out = []
        for status, payload in results:
            if status == "err":
                raise payload
            out.append(payload)
        return out

    def close(self):
        if self._threads:
            t = next(self._round)
            for i in range(len(self._threads)):
                self.net.channel.post(("task", i, t), ROOT, i, None)
            for th in self._threads:
                th.join(timeout=5.0)
            self._threads = []

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
