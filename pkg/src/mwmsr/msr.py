"""Multi-hop message fusion: minimum covers, two-sided trim, uniform averaging.

A node fuses the most recent (value, path) messages it holds.  The trim
removes, on each side of its own value, the largest set of extreme
messages that could have been corrupted by f common nodes: the set of
strictly-greater messages is removed entirely when its minimum cover is
smaller than f, otherwise the longest value-sorted prefix whose minimum
cover is exactly f is removed.  The surviving messages are averaged
with uniform weights.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Message:
    """A relayed state value and the path it traveled.

    `path` is the filled prefix of the route, source first; `slots` is
    the full path-vector length (hop range + 1), so the message is
    complete once len(path) == slots.  `send_time` is the time index of
    the broadcast state carried by the message; fresher copies for the
    same (source, path) key supersede older ones upstream.
    """

    value: float
    path: tuple[int, ...]
    slots: int
    send_time: int = 0

    def __post_init__(self) -> None:
        if not self.path:
            raise ValueError("message path must contain at least the source")
        if len(set(self.path)) != len(self.path):
            raise ValueError(f"message path {self.path} repeats a node")
        if len(self.path) > self.slots:
            raise ValueError(f"path {self.path} longer than its {self.slots} slots")
        if self.value != self.value or self.value in (float("inf"), float("-inf")):
            raise ValueError(f"message value must be finite, got {self.value}")

    @property
    def source(self) -> int:
        return self.path[0]

    @property
    def complete(self) -> bool:
        return len(self.path) == self.slots

    def key(self) -> tuple[int, tuple[int, ...]]:
        return (self.path[0], self.path)


def _destination_of(msgs) -> int:
    """Common destination of a message set (the single-node self path wins)."""
    dest = None
    for m in msgs:
        d = m.path[0] if len(m.path) == 1 else m.path[-1]
        if dest is None:
            dest = d
        elif d != dest:
            raise ValueError(f"messages mix destinations {dest} and {d}")
    if dest is None:
        raise ValueError("empty message set has no destination")
    return dest


def _cover_masks(msgs, dest: int) -> list[int]:
    masks = []
    for m in msgs:
        mask = 0
        for v in m.path:
            if v != dest:
                mask |= 1 << (v - 1)
        if mask == 0:
            raise ValueError("self-message has no coverable path nodes; pass strict-side subsets only")
        masks.append(mask)
    return masks


def _coverable(masks: list[int], limit: int, chosen: list[int] | None = None) -> bool:
    """True iff some node set of size <= limit hits every mask (exact search)."""
    pending = [m for m in masks]
    if not pending:
        return True
    if limit <= 0:
        return False
    first = min(pending, key=lambda m: m.bit_count())
    bit = 1
    node = 1
    while bit <= first:
        if first & bit:
            rest = [m for m in pending if not (m & bit)]
            if chosen is not None:
                chosen.append(node)
            if _coverable(rest, limit - 1, chosen):
                return True
            if chosen is not None:
                chosen.pop()
        bit <<= 1
        node += 1
    return False


def minimum_cover(msgs, dest: int) -> tuple[set[int], int]:
    """One minimum-cardinality node set hitting every message path.

    The destination is excluded from the ground set.  Returns (cover,
    cardinality); the cardinality is canonical, the concrete set is one
    deterministic minimizer for diagnostics.  Empty input gives
    (set(), 0).
    """
    msgs = list(msgs)
    if not msgs:
        return set(), 0
    masks = _cover_masks(msgs, dest)
    limit = 0
    while True:
        chosen: list[int] = []
        if _coverable(masks, limit, chosen):
            return set(chosen), limit
        limit += 1


def _removal_prefix(side: list[Message], dest: int, f: int) -> list[Message]:
    """Longest prefix of a value-sorted side whose minimum cover is <= f.

    The prefix cover grows monotonically by at most one per message, so
    the longest prefix with cover <= f has cover exactly f whenever the
    whole side needs more; when even the whole side covers below f it
    is removed outright.  Either way this is the prefix found here.
    """
    if not side:
        return []
    masks = _cover_masks(side, dest)
    # Binary search on the monotone predicate cover(prefix) <= f.
    lo, hi = 0, len(side)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if _coverable(masks[:mid], f):
            lo = mid
        else:
            hi = mid - 1
    return side[:lo]


def trim(msgs, x_i: float, f: int) -> tuple[list[Message], list[Message]]:
    """Two-sided trim of a message set around the node's own value.

    `msgs` must include the self-message (value x_i, single-node path);
    messages valued exactly x_i are never candidates for removal.
    Returns (kept, removed) preserving input order.  Ties in value are
    broken by source id then path, fixed so results are reproducible.
    """
    if f < 0:
        raise ValueError(f"fault bound must be >= 0, got {f}")
    msgs = list(msgs)
    dest = _destination_of(msgs)
    upper = sorted(
        (m for m in msgs if m.value > x_i), key=lambda m: (-m.value, m.source, m.path)
    )
    lower = sorted(
        (m for m in msgs if m.value < x_i), key=lambda m: (m.value, m.source, m.path)
    )
    removed_ids = {id(m) for m in _removal_prefix(upper, dest, f)}
    removed_ids |= {id(m) for m in _removal_prefix(lower, dest, f)}
    kept = [m for m in msgs if id(m) not in removed_ids]
    removed = [m for m in msgs if id(m) in removed_ids]
    return kept, removed


def fuse(kept) -> float:
    """Uniform-weight average of the surviving message values."""
    kept = list(kept)
    if not kept:
        raise ValueError("cannot fuse an empty message set; the self-message is always kept")
    return sum(m.value for m in kept) / len(kept)


__all__ = ["Message", "minimum_cover", "trim", "fuse"]
