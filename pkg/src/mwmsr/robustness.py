"""Exact decision procedures for multi-hop graph robustness.

Decides (r,s)-robustness with l hops with respect to a fault set, and
r-strong robustness with l hops under the f-total / f-local models, by
exhaustive enumeration over subset pairs and admissible fault sets.
Failures come with a concrete witness (F, V1, V2).

Two paths into a common destination are treated as independent iff they
share no node except the destination; in particular their sources must
differ.  Fault-set nodes may appear as path sources or destinations but
never as intermediate nodes.

Everything here is exact and exponential by design; inputs are capped at
n = 15 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .graph import Graph, enumerate_paths, in_neighbors_l

MAX_CERTIFIER_NODES = 15


class CertifierScaleError(ValueError):
    """Raised for graphs beyond the exact-certification size cap."""


@dataclass(frozen=True)
class RobustnessCertificate:
    """Outcome of a robustness decision.

    When `holds` is False, `fault_set`, `v1` and `v2` name the first
    violating triple in deterministic enumeration order (ascending
    bitmask order, nodes mapped to bits id-1).  For decisions with a
    fixed fault set, `fault_set` echoes it.
    """

    holds: bool
    fault_set: tuple[int, ...] | None = None
    v1: tuple[int, ...] | None = None
    v2: tuple[int, ...] | None = None

    def witness_json_obj(self) -> dict | None:
        if self.holds:
            return None
        return {
            "F": list(self.fault_set or ()),
            "V1": list(self.v1 or ()),
            "V2": list(self.v2 or ()),
        }


def _mask_of(nodes) -> int:
    mask = 0
    for v in nodes:
        mask |= 1 << (v - 1)
    return mask


def _nodes_of(mask: int) -> tuple[int, ...]:
    out = []
    v = 1
    while mask:
        if mask & 1:
            out.append(v)
        mask >>= 1
        v += 1
    return tuple(out)


@lru_cache(maxsize=None)
def _path_index(g: Graph, i: int, l: int) -> tuple[tuple[int, tuple[int, ...], int, int], ...]:
    """All <=l-hop simple paths into i, as (source, path, node_mask, interior_mask).

    node_mask excludes the destination i so that mask disjointness is
    exactly path-independence.
    """
    entries = []
    for j in g.nodes():
        if j == i:
            continue
        for path in enumerate_paths(g, j, i, l):
            node_mask = _mask_of(path[:-1])
            interior_mask = _mask_of(path[1:-1])
            entries.append((j, path, node_mask, interior_mask))
    return tuple(entries)


def _candidate_masks(
    g: Graph, i: int, sources_mask: int, fault_mask: int, l: int, active_mask: int
) -> dict[int, list[int]]:
    """Per-source masks of admissible paths into i, in enumeration order."""
    per_source: dict[int, list[int]] = {}
    for src, _path, node_mask, interior_mask in _path_index(g, i, l):
        if not (sources_mask >> (src - 1)) & 1:
            continue
        if interior_mask & fault_mask:
            continue
        if node_mask & ~active_mask:
            continue
        per_source.setdefault(src, []).append(node_mask)
    return per_source


def _max_disjoint(per_source: dict[int, list[int]], at_least: int | None) -> int:
    """Maximum number of pairwise-disjoint path masks, at most one per source.

    Exact branch and bound over sources; greedy first for a fast lower
    bound, with early exit once `at_least` is reached.
    """
    sources = sorted(per_source)
    if not sources:
        return 0

    # Greedy pass: shortest masks first within each source.
    used = 0
    greedy = 0
    for src in sources:
        for mask in sorted(per_source[src], key=lambda m: (m.bit_count(), m)):
            if not (mask & used):
                used |= mask
                greedy += 1
                break
    if at_least is not None and greedy >= at_least:
        return greedy

    best = greedy

    def branch(idx: int, used: int, count: int) -> None:
        nonlocal best
        if count + (len(sources) - idx) <= best:
            return
        if idx == len(sources):
            best = max(best, count)
            return
        if at_least is not None and best >= at_least:
            return
        src = sources[idx]
        for mask in per_source[src]:
            if not (mask & used):
                branch(idx + 1, used | mask, count + 1)
                if at_least is not None and best >= at_least:
                    return
        branch(idx + 1, used, count)

    branch(0, 0, 0)
    return best


def max_independent_paths(
    g: Graph,
    i: int,
    sources,
    fault_set,
    l: int,
    at_least: int | None = None,
    within=None,
) -> int:
    """Maximum cardinality of a set of independent <=l-hop paths into i.

    Each path starts at some node of `sources`, avoids `fault_set` nodes
    as intermediates, and the chosen paths pairwise share no node except
    i.  `within` restricts paths to an induced node subset.  When
    `at_least` is given the search may stop early at that many paths
    (the return value is then min-capped but still a valid lower bound
    compared against `at_least`).
    """
    g.check_node(i)
    sources = set(sources)
    if i in sources:
        raise ValueError("destination cannot be one of the sources")
    if not sources:
        return 0
    active_mask = _mask_of(within) if within is not None else (1 << g.n) - 1
    per_source = _candidate_masks(g, i, _mask_of(sources), _mask_of(fault_set), l, active_mask)
    return _max_disjoint(per_source, at_least)


def z_set(g: Graph, va, fault_set, r: int, l: int, within=None) -> set[int]:
    """Nodes of `va` with at least r independent <=l-hop in-paths from outside."""
    va = set(va)
    if not va:
        raise ValueError("z_set requires a nonempty node set")
    universe = set(within) if within is not None else set(g.nodes())
    sources = universe - va
    result = set()
    for i in sorted(va):
        if not sources:
            break
        if max_independent_paths(g, i, sources, fault_set, l, at_least=r, within=within) >= r:
            result.add(i)
    return result


class _ZCache:
    """Memoized Z-set bitmasks over one (graph, active set, F, r, l) context."""

    def __init__(self, g: Graph, active_mask: int, fault_mask: int, r: int, l: int):
        self.g = g
        self.active_mask = active_mask
        self.fault_mask = fault_mask
        self.r = r
        self.l = l
        self._memo: dict[int, int] = {}

    def z_mask(self, va_mask: int) -> int:
        cached = self._memo.get(va_mask)
        if cached is not None:
            return cached
        sources_mask = self.active_mask & ~va_mask
        z = 0
        if sources_mask:
            for i in _nodes_of(va_mask):
                per_source = _candidate_masks(
                    self.g, i, sources_mask, self.fault_mask, self.l, self.active_mask
                )
                if _max_disjoint(per_source, at_least=self.r) >= self.r:
                    z |= 1 << (i - 1)
        self._memo[va_mask] = z
        return z


def _iter_submasks_ascending(comp: int):
    """Nonempty submasks of `comp` in increasing numeric order."""
    sub = (-comp) & comp
    while sub:
        yield sub
        if sub == comp:
            return
        sub = (sub - comp) & comp


def _rs_robust_on(
    g: Graph, active_mask: int, fault_mask: int, r: int, s: int, l: int
) -> tuple[bool, int, int]:
    """Core pair check over subsets of the active node set.

    Returns (holds, v1_mask, v2_mask); the masks name the first failing
    unordered pair (v1 < v2 numerically) when holds is False.
    """
    cache = _ZCache(g, active_mask, fault_mask, r, l)
    for v1 in _iter_submasks_ascending(active_mask):
        comp = active_mask & ~v1
        if not comp:
            continue
        for v2 in _iter_submasks_ascending(comp):
            if v2 < v1:
                continue
            z1 = cache.z_mask(v1)
            if z1 == v1:
                continue
            z2 = cache.z_mask(v2)
            if z2 == v2:
                continue
            if z1.bit_count() + z2.bit_count() >= s:
                continue
            return False, v1, v2
    return True, 0, 0


def _check_query(g: Graph, r: int, s: int, l: int) -> None:
    if g.n > MAX_CERTIFIER_NODES:
        raise CertifierScaleError(
            f"exact certification is capped at n = {MAX_CERTIFIER_NODES} nodes, got n = {g.n}"
        )
    if r < 1 or s < 1 or l < 1:
        raise ValueError(f"robustness query requires r, s, l >= 1 (got r={r}, s={s}, l={l})")


def is_rs_robust_wrt(g: Graph, r: int, s: int, l: int, fault_set) -> RobustnessCertificate:
    """Decide (r,s)-robustness with l hops with respect to a fixed fault set.

    Holds iff for every pair of nonempty disjoint subsets V1, V2 at
    least one of: Z(V1) = V1, Z(V2) = V2, |Z(V1)| + |Z(V2)| >= s, where
    Z counts nodes with r independent in-paths avoiding `fault_set`
    interiors.
    """
    _check_query(g, r, s, l)
    fault_set = set(fault_set)
    for v in fault_set:
        g.check_node(v)
    full = (1 << g.n) - 1
    holds, v1, v2 = _rs_robust_on(g, full, _mask_of(fault_set), r, s, l)
    if holds:
        return RobustnessCertificate(holds=True)
    return RobustnessCertificate(
        holds=False,
        fault_set=tuple(sorted(fault_set)),
        v1=_nodes_of(v1),
        v2=_nodes_of(v2),
    )


def f_total_sets(g: Graph, f: int):
    """All fault sets of size <= f, as masks in ascending numeric order."""
    full = (1 << g.n) - 1
    for mask in range(full + 1):
        if mask.bit_count() <= f:
            yield mask


def f_local_sets(g: Graph, f: int, l: int):
    """All fault sets F where every node outside F has <= f F-nodes among
    its <=l-hop in-neighbors, as masks in ascending numeric order."""
    in_nbr_masks = {}
    for i in g.nodes():
        in_nbr_masks[i] = _mask_of(in_neighbors_l(g, i, l))
    full = (1 << g.n) - 1
    for mask in range(full + 1):
        ok = True
        for i in g.nodes():
            if (mask >> (i - 1)) & 1:
                continue
            if (in_nbr_masks[i] & mask).bit_count() > f:
                ok = False
                break
        if ok:
            yield mask


def is_strongly_robust(g: Graph, r: int, l: int, f: int, model: str) -> RobustnessCertificate:
    """Decide r-strong robustness with l hops under the f-total or f-local model.

    Holds iff for every admissible fault set F the subgraph induced on
    the remaining nodes is (r,1)-robust with l hops, with paths
    evaluated inside the induced subgraph.  The witness names the first
    failing F together with its failing pair.
    """
    _check_query(g, r, 1, l)
    if f < 0:
        raise ValueError(f"fault bound must be >= 0, got f={f}")
    if model == "f-total":
        candidates = f_total_sets(g, f)
    elif model == "f-local":
        candidates = f_local_sets(g, f, l)
    else:
        raise ValueError(f"unknown fault model {model!r} (expected 'f-total' or 'f-local')")
    full = (1 << g.n) - 1
    for fmask in candidates:
        active = full & ~fmask
        if not active:
            continue
        # F is removed outright, so no interior exclusions remain.
        holds, v1, v2 = _rs_robust_on(g, active, 0, r, 1, l)
        if not holds:
            return RobustnessCertificate(
                holds=False,
                fault_set=_nodes_of(fmask),
                v1=_nodes_of(v1),
                v2=_nodes_of(v2),
            )
    return RobustnessCertificate(holds=True)
