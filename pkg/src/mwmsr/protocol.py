"""Per-node state machine: receive, trimmed update, event trigger, relay.

A node keeps its true state x and an auxiliary state x_hat holding the
last value it broadcast.  Each step it folds newly arrived messages
into a most-recent-per-(source, path) inbox, optionally updates x by
the trimmed average of everything it holds, and broadcasts the new
state only when |x_hat - x_new| exceeds the threshold c0 + c1[k].
Incomplete messages are buffered and relayed onward with the node's own
id appended, either on a fixed cadence or piggybacked on the node's own
events depending on the relay model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .graph import Graph
from .msr import Message, fuse, trim


class ConfigError(ValueError):
    """Raised for inconsistent protocol or simulation configuration."""


# -- Trigger threshold schedules ---------------------------------------------


@dataclass(frozen=True)
class C1Schedule:
    """Nonincreasing threshold sequence c1[k] with finite support.

    kinds:
      zero   -- identically 0
      exp    -- coeff * exp(-rate * (k + offset)), truncated to 0 below `cutoff`
      table  -- explicit nonincreasing values, 0 afterwards
    """

    kind: str
    coeff: float = 0.0
    rate: float = 0.0
    offset: float = 0.0
    values: tuple[float, ...] = ()
    cutoff: float = 1e-12

    def __post_init__(self) -> None:
        if self.kind == "zero":
            return
        if self.kind == "exp":
            if self.coeff < 0 or self.rate < 0:
                raise ConfigError("exp schedule needs coeff >= 0 and rate >= 0")
            if self.coeff > self.cutoff and self.rate == 0:
                raise ConfigError("exp schedule with rate 0 never reaches 0")
            return
        if self.kind == "table":
            vals = self.values
            if any(v < 0 for v in vals):
                raise ConfigError("table schedule values must be nonnegative")
            if any(a < b for a, b in zip(vals, vals[1:])):
                raise ConfigError("table schedule must be nonincreasing")
            return
        raise ConfigError(f"unknown c1 schedule kind {self.kind!r}")

    def at(self, k: int) -> float:
        if k < 0:
            k = 0
        if self.kind == "zero":
            return 0.0
        if self.kind == "exp":
            v = self.coeff * math.exp(-self.rate * (k + self.offset))
            return v if v >= self.cutoff else 0.0
        return self.values[k] if k < len(self.values) else 0.0

    def support_end(self) -> int:
        """Smallest K1 with c1[k] = 0 for all k >= K1."""
        if self.kind == "zero":
            return 0
        if self.kind == "table":
            k = len(self.values)
            while k > 0 and self.values[k - 1] == 0:
                k -= 1
            return k
        if self.coeff <= self.cutoff:
            return 0
        # coeff * exp(-rate (k + offset)) < cutoff
        k = math.log(self.coeff / self.cutoff) / self.rate - self.offset
        k1 = max(0, math.floor(k) + 1)
        while self.at(k1) > 0:  # guard against float rounding at the boundary
            k1 += 1
        return k1


ZERO_SCHEDULE = C1Schedule(kind="zero")


@dataclass(frozen=True)
class TriggerParams:
    """Event threshold: fire when |x_hat - x_new| > c0 + c1[k]."""

    c0: float = 0.0
    c1: C1Schedule = ZERO_SCHEDULE

    def __post_init__(self) -> None:
        if self.c0 < 0:
            raise ConfigError(f"c0 must be >= 0, got {self.c0}")

    def threshold(self, k: int) -> float:
        return self.c0 + self.c1.at(k)


@dataclass(frozen=True)
class RelayModel:
    """How buffered relays are flushed.

    periodic(lam): every lam steps regardless of events (lam = 1 is the
    immediate relay model).  package: only when the node's own event
    fires, bundled with its own value.
    """

    kind: str = "immediate"
    lam: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("immediate", "periodic", "package"):
            raise ConfigError(f"unknown relay model {self.kind!r}")
        if self.lam < 1:
            raise ConfigError(f"relay period must be >= 1, got {self.lam}")
        if self.kind == "immediate" and self.lam != 1:
            raise ConfigError("immediate relay means period 1")

    def flush_due(self, k: int, fired: bool) -> bool:
        if self.kind == "package":
            return fired
        return k % self.lam == 0


# -- Node state and step operations -------------------------------------------


@dataclass
class NodeState:
    """Mutable per-node protocol state owned by the engine."""

    node: int
    x: float
    x_hat: float
    inbox: dict[tuple[int, tuple[int, ...]], tuple[float, int]] = field(default_factory=dict)
    relay_buffer: dict[tuple[int, tuple[int, ...]], Message] = field(default_factory=dict)
    last_relayed: dict[tuple[int, tuple[int, ...]], tuple[float, int]] = field(default_factory=dict)
    steps_since_update: int = 0
    dropped_invalid: int = 0


def receive(state: NodeState, incoming, g: Graph) -> None:
    """Fold arrived messages into the inbox and the relay buffer.

    The receiving node appends its own id to each path: the extended
    message is stored for consensus at every hop, and buffered for
    onward relay while path slots remain.  Entries are replaced only by
    strictly fresher send times.  Messages whose last hop contradicts
    the graph, or that would revisit this node, are dropped (the former
    are counted: honest senders never produce them).
    """
    me = state.node
    for m in incoming:
        if me in m.path:
            continue
        if not g.has_edge(m.path[-1], me):
            state.dropped_invalid += 1
            continue
        ext = Message(value=m.value, path=m.path + (me,), slots=m.slots, send_time=m.send_time)
        key = ext.key()
        held = state.inbox.get(key)
        if held is None or ext.send_time > held[1]:
            state.inbox[key] = (ext.value, ext.send_time)
        if not ext.complete:
            buffered = state.relay_buffer.get(key)
            if buffered is None or ext.send_time > buffered.send_time:
                state.relay_buffer[key] = ext


def message_set(state: NodeState) -> list[Message]:
    """The node's current fusion input: self-message plus inbox contents."""
    msgs = [Message(value=state.x, path=(state.node,), slots=1)]
    for (src, path), (value, sent) in sorted(state.inbox.items()):
        msgs.append(Message(value=value, path=path, slots=len(path), send_time=sent))
    return msgs


def update(state: NodeState, f: int) -> tuple[float, list[Message]]:
    """Trimmed-average update of the node's state.

    Only called on steps where the scheduler activates the node.
    Returns the new state value and the kept messages (for metrics).
    """
    kept, _removed = trim(message_set(state), state.x, f)
    x_new = fuse(kept)
    state.x = x_new
    state.steps_since_update = 0
    return x_new, kept


def evaluate_trigger(state: NodeState, x_next: float, params: TriggerParams, k: int) -> tuple[bool, float]:
    """Event test for step k: e = x_hat - x_next, fire iff |e| exceeds threshold."""
    e = state.x_hat - x_next
    return abs(e) > params.threshold(k), e


@dataclass(frozen=True)
class TransmitResult:
    own: tuple[Message, ...]
    relays: tuple[Message, ...]
    flushed: bool


def transmit(
    state: NodeState,
    fire: bool,
    model: RelayModel,
    k: int,
    l: int,
    changed_only: bool = False,
) -> TransmitResult:
    """Emit the node's own value on events and flush relays per the model.

    On fire, x_hat is committed to the just-computed state and a fresh
    own-value message (single-node path, send_time k+1) is produced.
    With `changed_only`, relays identical to their last flushed copy are
    skipped.
    """
    own: list[Message] = []
    if fire:
        state.x_hat = state.x
        own.append(Message(value=state.x_hat, path=(state.node,), slots=l + 1, send_time=k + 1))
    relays: list[Message] = []
    flushed = model.flush_due(k, fire)
    if flushed and state.relay_buffer:
        for key in sorted(state.relay_buffer):
            m = state.relay_buffer[key]
            if changed_only and state.last_relayed.get(key) == (m.value, m.send_time):
                continue
            state.last_relayed[key] = (m.value, m.send_time)
            relays.append(m)
        state.relay_buffer.clear()
    return TransmitResult(own=tuple(own), relays=tuple(relays), flushed=flushed)


def initial_exchange(states: dict[int, NodeState], l: int) -> list[Message]:
    """Bootstrap broadcast of every node's initial auxiliary state.

    Applied before step 0 under every relay model; under package relay
    it is what prevents the nobody-ever-triggers deadlock.
    """
    return [
        Message(value=states[i].x_hat, path=(i,), slots=l + 1, send_time=0)
        for i in sorted(states)
    ]
