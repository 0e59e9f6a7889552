"""Byzantine node behaviors: equivocation, relay tampering, crash.

Adversary nodes emit arbitrary per-neighbor values and may tamper with
the values they relay, but path fields are always truthful: no strategy
API accepts a path mutation, and relayed paths are extended exactly as
an honest node would extend them.  Normal-node code never sees the
fault model; the engine alone wires adversaries in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graph import Graph, in_neighbors_l
from .msr import Message

STRATEGY_KINDS = ("constant", "per_neighbor", "oscillate", "relay_tamper", "crash")


class FaultModelError(ValueError):
    """Raised when an adversary set violates its declared locality model."""


@dataclass(frozen=True)
class ByzantineStrategy:
    """One node's misbehavior.

    kinds:
      constant      -- same fixed value to everyone; relays replaced by it
      per_neighbor  -- value table indexed by target node; relays too
      oscillate     -- amplitude * (-1)^(k // period) + offset, to everyone
      relay_tamper  -- own value fixed, relayed values shifted by `offset`
      crash         -- emits and relays nothing
    """

    kind: str
    value: float = 0.0
    table: dict[int, float] = field(default_factory=dict)
    default: float = 0.0
    amplitude: float = 0.0
    offset: float = 0.0
    period: int = 1

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.period < 1:
            raise ValueError(f"oscillation period must be >= 1, got {self.period}")

    def own_value(self, target: int, k: int) -> float | None:
        """Value emitted as the node's own state toward `target`, None to withhold."""
        if self.kind == "crash":
            return None
        if self.kind == "constant":
            return self.value
        if self.kind == "per_neighbor":
            return self.table.get(target, self.default)
        if self.kind == "oscillate":
            return self.amplitude * (-1.0) ** (k // self.period) + self.offset
        return self.value  # relay_tamper nodes still advertise a fixed own value

    def relay_value(self, true_value: float, target: int, k: int) -> float | None:
        """Value substituted into a relayed message toward `target`."""
        if self.kind == "crash":
            return None
        if self.kind == "relay_tamper":
            return true_value + self.offset
        return self.own_value(target, k)


@dataclass(frozen=True)
class FaultModel:
    """Adversary set with its locality flavor and per-node strategies."""

    flavor: str
    f: int
    strategies: dict[int, ByzantineStrategy]

    def __post_init__(self) -> None:
        if self.flavor not in ("f-total", "f-local"):
            raise ValueError(f"unknown fault model flavor {self.flavor!r}")
        if self.f < 0:
            raise ValueError(f"fault bound must be >= 0, got {self.f}")

    @property
    def adversaries(self) -> frozenset[int]:
        return frozenset(self.strategies)


def no_adversary(f: int = 0, flavor: str = "f-total") -> FaultModel:
    return FaultModel(flavor=flavor, f=f, strategies={})


def fault_model_violations(g: Graph, fm: FaultModel, l: int) -> list[str]:
    """Human-readable violations of the declared locality model, if any."""
    adv = fm.adversaries
    for v in adv:
        g.check_node(v)
    problems: list[str] = []
    if fm.flavor == "f-total":
        if len(adv) > fm.f:
            problems.append(
                f"f-total with f={fm.f} allows at most {fm.f} adversaries, got {sorted(adv)}"
            )
        return problems
    for i in sorted(set(g.nodes()) - adv):
        seen = in_neighbors_l(g, i, l) & adv
        if len(seen) > fm.f:
            problems.append(
                f"normal node {i} has {len(seen)} adversaries {sorted(seen)} within "
                f"{l} hops, exceeding f={fm.f}"
            )
    return problems


def validate_fault_model(g: Graph, fm: FaultModel, l: int) -> bool:
    """True iff the adversary set satisfies its declared flavor on g."""
    return not fault_model_violations(g, fm, l)


def adversarial_emit(
    node: int, strategy: ByzantineStrategy, targets, k: int, slots: int
) -> list[tuple[int, Message]]:
    """Per-target own-value emissions for an adversary node at step k.

    Paths are truthful single-node prefixes; crash strategies emit
    nothing.  `slots` is the network-wide path-vector length l + 1.
    """
    out: list[tuple[int, Message]] = []
    for t in sorted(targets):
        v = strategy.own_value(t, k)
        if v is None:
            continue
        out.append((t, Message(value=v, path=(node,), slots=slots, send_time=k + 1)))
    return out


def adversarial_relay(
    node: int, strategy: ByzantineStrategy, m: Message, target: int, k: int
) -> Message | None:
    """Tampered relay of a buffered message toward one target.

    The path was already extended truthfully with the adversary's id
    when the message was received; only the value may change.
    """
    v = strategy.relay_value(m.value, target, k)
    if v is None:
        return None
    return Message(value=v, path=m.path, slots=m.slots, send_time=m.send_time)
