"""Discrete-time simulation loop with delays, schedulers and run metrics.

One step k proceeds as: deliver every message whose sampled delay
expires, let each scheduled normal node fold its inbox into a trimmed
average, evaluate the event trigger against the freshly computed state,
emit own-value messages and relays per the relay model, then inject
adversary emissions.  Messages emitted at step k with sampled per-link
delay d become deliverable at step k + 1 + d; a value carried over an
h-hop route therefore ages by the link delays plus one step per relay
hop plus any relay-model waiting, and the realized staleness of values
actually consumed from all-normal paths is tracked as `tau_realized`.

Everything is deterministic given (config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import protocol
from .adversary import (
    FaultModel,
    adversarial_emit,
    adversarial_relay,
    fault_model_violations,
)
from .graph import Graph, enumerate_paths
from .msr import Message
from .protocol import ConfigError, NodeState, RelayModel, TriggerParams


@dataclass(frozen=True)
class SchedulerSpec:
    """Update activation policy: always | round-robin | bernoulli(p).

    Under bernoulli, a node idle for theta - 1 consecutive steps is
    forcibly scheduled so the update deadline always holds.
    """

    kind: str = "always"
    p: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("always", "round-robin", "bernoulli"):
            raise ConfigError(f"unknown scheduler {self.kind!r}")
        if self.kind == "bernoulli" and not (0.0 < self.p <= 1.0):
            raise ConfigError(f"bernoulli scheduler needs p in (0, 1], got {self.p}")


@dataclass(frozen=True)
class DelayPolicy:
    """Per-link delay sampling: zero | uniform over {0..tau} | per-edge-fixed."""

    kind: str = "zero"
    table: tuple[tuple[tuple[int, int], int], ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("zero", "uniform", "per_edge_fixed"):
            raise ConfigError(f"unknown delay policy {self.kind!r}")

    def edge_delay(self, u: int, v: int) -> int:
        for (a, b), d in self.table:
            if (a, b) == (u, v):
                return d
        return 0


@dataclass
class SimConfig:
    l: int = 1
    f: int = 0
    tau: int = 0
    theta: int = 1
    relay: RelayModel = field(default_factory=RelayModel)
    trigger: TriggerParams = field(default_factory=TriggerParams)
    horizon: int = 100
    seed: int = 0
    scheduler: SchedulerSpec = field(default_factory=SchedulerSpec)
    delay: DelayPolicy = field(default_factory=DelayPolicy)
    epsilon_conv: float | None = None
    count_packages_once: bool = False
    changed_values_only: bool = False

    def convergence_epsilon(self) -> float:
        # Default: one part in a thousand above the triggering deadband floor.
        if self.epsilon_conv is not None:
            return self.epsilon_conv
        return self.trigger.c0 + 1e-3


@dataclass
class RunMetrics:
    """Everything recorded about one run.

    Trajectory rows are indexed k = 0..horizon; row k holds the states
    x[k], x_hat[k] at the start of step k, and the fired/updated flags
    of the actions taken during step k (row `horizon` has no actions).
    Adversary columns carry the representative value emitted during
    step k (NaN when silent).
    """

    horizon: int
    n: int
    normal_nodes: tuple[int, ...]
    adversary_nodes: tuple[int, ...]
    x: list[list[float]]
    x_hat: list[list[float]]
    fired: list[list[bool]]
    updated: list[list[bool]]
    spread: list[float]
    safety_interval: tuple[float, float]
    events_per_node: dict[int, int]
    transmissions_per_neighbor: dict[int, int]
    transmissions_packages_once: dict[int, int]
    count_packages_once: bool
    theoretical_c: float
    gamma: float
    converged_at: int | None
    tau_realized: int
    dropped_invalid: dict[int, int]
    adversary_values: dict[int, list[tuple[int, float]]]

    @property
    def transmissions_per_node(self) -> dict[int, int]:
        if self.count_packages_once:
            return self.transmissions_packages_once
        return self.transmissions_per_neighbor

    def normal_x_row(self, k: int) -> list[float]:
        return [self.x[k][i - 1] for i in self.normal_nodes]

    def final_spread(self) -> float:
        return self.spread[-1]

    def to_json_obj(self) -> dict:
        return {
            "horizon": self.horizon,
            "n": self.n,
            "normal_nodes": list(self.normal_nodes),
            "adversary_nodes": list(self.adversary_nodes),
            "safety_interval": list(self.safety_interval),
            "spread": self.spread,
            "events_per_node": {str(k): v for k, v in self.events_per_node.items()},
            "transmissions_per_node": {str(k): v for k, v in self.transmissions_per_node.items()},
            "transmissions_per_neighbor": {
                str(k): v for k, v in self.transmissions_per_neighbor.items()
            },
            "transmissions_packages_once": {
                str(k): v for k, v in self.transmissions_packages_once.items()
            },
            "count_packages_once": self.count_packages_once,
            "theoretical_c": self.theoretical_c if math.isfinite(self.theoretical_c) else None,
            "theoretical_c_finite": math.isfinite(self.theoretical_c),
            "gamma": self.gamma,
            "converged_at": self.converged_at,
            "tau_realized": self.tau_realized,
            "dropped_invalid": {str(k): v for k, v in self.dropped_invalid.items()},
            "adversary_values_distinct": {
                str(b): sorted({v for _, v in vals}) for b, vals in self.adversary_values.items()
            },
        }


# -- Derived quantities --------------------------------------------------------


def max_in_path_count(g: Graph, l: int) -> int:
    """Largest total number of <=l-hop simple in-paths over all nodes."""
    best = 0
    for i in g.nodes():
        total = 0
        for j in g.nodes():
            if j != i:
                total += len(enumerate_paths(g, j, i, l))
        best = max(best, total)
    return best


def weight_floor(g: Graph, l: int) -> float:
    """Guaranteed lower bound on the uniform fusion weights 1/|kept set|."""
    return 1.0 / (1.0 + max_in_path_count(g, l))


def theoretical_error_level(c0: float, n_normal: int, theta: int, gamma: float) -> float:
    """Guaranteed consensus error level 4 c0 N theta / gamma^(N theta).

    Underflow of the denominator is reported as +inf rather than an error.
    """
    if c0 == 0:
        return 0.0
    denom = gamma ** (n_normal * theta)
    if denom == 0.0:
        return math.inf
    return 4.0 * c0 * n_normal * theta / denom


def safety_interval(x0: dict[int, float], x_hat0: dict[int, float]) -> tuple[float, float]:
    """Envelope of initial states and initial broadcast states.

    Pre-history for negative steps is the constant initial values, so
    the window length drops out.
    """
    values = list(x0.values()) + list(x_hat0.values())
    return (min(values), max(values))


def spread(normal_rows: list[list[float]], k: int, tau: int) -> float:
    """Windowed max minus min of normal states over steps k-tau..k."""
    lo = max(0, k - tau)
    window = [v for row in normal_rows[lo : k + 1] for v in row]
    return max(window) - min(window)


def joint_envelopes(metrics: RunMetrics, window: int) -> tuple[list[float], list[float]]:
    """Windowed joint max/min series over normal states and broadcast states."""
    upper: list[float] = []
    lower: list[float] = []
    for k in range(metrics.horizon + 1):
        lo = max(0, k - window)
        vals: list[float] = []
        for row in range(lo, k + 1):
            vals.extend(metrics.x[row][i - 1] for i in metrics.normal_nodes)
            vals.extend(metrics.x_hat[row][i - 1] for i in metrics.normal_nodes)
        upper.append(max(vals))
        lower.append(min(vals))
    return upper, lower


def converged_step(spread_series: list[float], eps: float, sustain: int) -> int | None:
    """First step from which the spread stays <= eps for `sustain` steps."""
    sustain = max(1, sustain)
    run_len = 0
    for k, v in enumerate(spread_series):
        run_len = run_len + 1 if v <= eps else 0
        if run_len >= sustain:
            return k - sustain + 1
    return None


# -- Validation ----------------------------------------------------------------


def validate_run_inputs(
    g: Graph, fm: FaultModel, x0: dict[int, float], cfg: SimConfig, x_hat0: dict[int, float] | None
) -> None:
    problems = fault_model_violations(g, fm, cfg.l)
    if problems:
        raise ConfigError("invalid fault model: " + "; ".join(problems))
    if cfg.l < 1:
        raise ConfigError(f"hop range must be >= 1, got {cfg.l}")
    if cfg.f < 0:
        raise ConfigError(f"trim parameter must be >= 0, got {cfg.f}")
    if cfg.tau < 0:
        raise ConfigError(f"delay bound must be >= 0, got {cfg.tau}")
    if cfg.theta < 1:
        raise ConfigError(f"update deadline must be >= 1, got {cfg.theta}")
    if cfg.horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {cfg.horizon}")
    normals = set(g.nodes()) - fm.adversaries
    if not normals:
        raise ConfigError("no normal nodes remain")
    if set(x0) != normals:
        raise ConfigError(
            f"x0 must cover exactly the normal nodes {sorted(normals)}, got {sorted(x0)}"
        )
    if x_hat0 is not None and not set(x_hat0) <= normals:
        raise ConfigError("x_hat0 must only name normal nodes")
    if cfg.scheduler.kind == "round-robin" and cfg.theta < len(normals):
        raise ConfigError(
            f"round-robin over {len(normals)} nodes cannot honor an update deadline of {cfg.theta}"
        )
    if cfg.delay.kind == "per_edge_fixed":
        for (u, v), d in cfg.delay.table:
            if (u, v) not in g.edges:
                raise ConfigError(f"delay table names missing edge ({u},{v})")
            if not (0 <= d <= cfg.tau):
                raise ConfigError(f"fixed delay {d} on edge ({u},{v}) outside 0..{cfg.tau}")


# -- The simulation loop ---------------------------------------------------------


class _DelaySampler:
    def __init__(self, policy: DelayPolicy, tau: int, rng: np.random.Generator):
        self.policy = policy
        self.tau = tau
        self.rng = rng

    def sample(self, u: int, v: int) -> int:
        if self.policy.kind == "zero":
            return 0
        if self.policy.kind == "uniform":
            return int(self.rng.integers(0, self.tau + 1))
        return self.policy.edge_delay(u, v)


def run(
    g: Graph,
    fm: FaultModel,
    x0: dict[int, float],
    cfg: SimConfig,
    x_hat0: dict[int, float] | None = None,
) -> RunMetrics:
    """Execute one deterministic simulation and collect metrics.

    The graph need not be robust: runs that fail to reach consensus are
    data, not errors.
    """
    validate_run_inputs(g, fm, x0, cfg, x_hat0)
    adversaries = tuple(sorted(fm.adversaries))
    normals = tuple(sorted(set(g.nodes()) - fm.adversaries))
    xh0 = {i: (x_hat0 or {}).get(i, x0[i]) for i in normals}

    seq = np.random.SeedSequence(cfg.seed)
    sched_seq, delay_seq = seq.spawn(2)
    rng_sched = np.random.default_rng(sched_seq)
    delays = _DelaySampler(cfg.delay, cfg.tau, np.random.default_rng(delay_seq))

    states = {i: NodeState(node=i, x=x0[i], x_hat=xh0[i]) for i in normals}
    adv_buffers: dict[int, dict] = {b: {} for b in adversaries}

    K = cfg.horizon
    n = g.n
    slots = cfg.l + 1
    out_adj = g.out_adj
    normal_set = set(normals)

    xs = [[math.nan] * n for _ in range(K + 1)]
    xhs = [[math.nan] * n for _ in range(K + 1)]
    fired_rows = [[False] * n for _ in range(K + 1)]
    updated_rows = [[False] * n for _ in range(K + 1)]
    for i in normals:
        xs[0][i - 1] = states[i].x
        xhs[0][i - 1] = states[i].x_hat
    events = {i: 0 for i in normals}
    trans_pn = {i: 0 for i in normals}
    trans_po = {i: 0 for i in normals}
    adversary_values: dict[int, list[tuple[int, float]]] = {b: [] for b in adversaries}
    tau_realized = 0

    pending: dict[int, list[tuple[int, Message]]] = {}

    def queue_message(msg: Message, target: int, arrival: int) -> None:
        pending.setdefault(arrival, []).append((target, msg))

    def count_unit(node: int, n_targets: int) -> None:
        # An own-value broadcast with no live target still costs one transmission.
        trans_pn[node] += max(1, n_targets)
        trans_po[node] += 1

    # Bootstrap exchange: emitted before step 0, deliverable from step 0 on.
    for i in normals:
        msg = Message(value=states[i].x_hat, path=(i,), slots=slots, send_time=0)
        targets = out_adj[i]
        for t in targets:
            queue_message(msg, t, delays.sample(i, t))
        count_unit(i, len(targets))

    def scheduled_nodes(k: int) -> set[int]:
        chosen: set[int] = set()
        if cfg.scheduler.kind == "always":
            return set(normals)
        if cfg.scheduler.kind == "round-robin":
            chosen.add(normals[k % len(normals)])
        else:
            draws = rng_sched.random(len(normals))
            chosen.update(i for i, u in zip(normals, draws) if u < cfg.scheduler.p)
        for i in normals:
            if states[i].steps_since_update >= cfg.theta - 1:
                chosen.add(i)
        return chosen

    def staleness_of(msg: Message, k: int) -> int:
        # Minimal age a with broadcast-state(source, k - a) == carried value.
        src_col = msg.path[0] - 1
        for a in range(0, k + 1):
            if xhs[k - a][src_col] == msg.value:
                return a
        return k - msg.send_time

    for k in range(K):
        # (a) deliveries
        for target, msg in pending.pop(k, ()):
            if target in normal_set:
                protocol.receive(states[target], [msg], g)
            else:
                # Adversaries extend paths truthfully and buffer relayable messages.
                if target in msg.path or not g.has_edge(msg.path[-1], target):
                    continue
                ext = Message(
                    value=msg.value, path=msg.path + (target,), slots=msg.slots, send_time=msg.send_time
                )
                if not ext.complete:
                    buf = adv_buffers[target]
                    held = buf.get(ext.key())
                    if held is None or ext.send_time > held.send_time:
                        buf[ext.key()] = ext

        # (b)-(c) normal nodes: update if scheduled, trigger, transmit
        active = scheduled_nodes(k)
        for i in normals:
            st = states[i]
            if i in active:
                x_new, kept = protocol.update(st, cfg.f)
                updated_rows[k][i - 1] = True
                for m in kept:
                    if len(m.path) > 1 and all(v in normal_set for v in m.path):
                        age = staleness_of(m, k)
                        if age > tau_realized:
                            tau_realized = age
            else:
                st.steps_since_update += 1
                x_new = st.x
            fire, _e = protocol.evaluate_trigger(st, x_new, cfg.trigger, k)
            result = protocol.transmit(
                st, fire, cfg.relay, k, cfg.l, changed_only=cfg.changed_values_only
            )
            if fire:
                events[i] += 1
                fired_rows[k][i - 1] = True
            targets = out_adj[i]
            if cfg.relay.kind == "package":
                if result.own:
                    bundle = list(result.own) + list(result.relays)
                    for t in targets:
                        d = delays.sample(i, t)
                        for m in bundle:
                            if t not in m.path:
                                queue_message(m, t, k + 1 + d)
                    count_unit(i, len(targets))
            else:
                for m in result.own:
                    for t in targets:
                        queue_message(m, t, k + 1 + delays.sample(i, t))
                    count_unit(i, len(targets))
                for m in result.relays:
                    eligible = [t for t in targets if t not in m.path]
                    if not eligible:
                        continue
                    for t in eligible:
                        queue_message(m, t, k + 1 + delays.sample(i, t))
                    count_unit(i, len(eligible))

        # (d) adversary emissions
        for b in adversaries:
            strat = fm.strategies[b]
            targets = out_adj[b]
            emitted = adversarial_emit(b, strat, targets, k, slots)
            seen_values: list[float] = []
            for t, m in emitted:
                queue_message(m, t, k + 1 + delays.sample(b, t))
                if m.value not in seen_values:
                    seen_values.append(m.value)
            for v in seen_values:
                adversary_values[b].append((k, v))
            if emitted:
                xs[k][b - 1] = emitted[0][1].value
                xhs[k][b - 1] = emitted[0][1].value
                fired_rows[k][b - 1] = True
            buf = adv_buffers[b]
            for key in sorted(buf):
                m = buf[key]
                for t in targets:
                    if t in m.path:
                        continue
                    relayed = adversarial_relay(b, strat, m, t, k)
                    if relayed is not None:
                        queue_message(relayed, t, k + 1 + delays.sample(b, t))
            buf.clear()

        for i in normals:
            xs[k + 1][i - 1] = states[i].x
            xhs[k + 1][i - 1] = states[i].x_hat

    normal_rows = [[xs[k][i - 1] for i in normals] for k in range(K + 1)]
    spread_series = [spread(normal_rows, k, cfg.tau) for k in range(K + 1)]
    gamma = weight_floor(g, cfg.l)
    c_level = theoretical_error_level(cfg.trigger.c0, len(normals), cfg.theta, gamma)
    sustain = 2 * cfg.tau + cfg.theta
    conv = converged_step(spread_series, cfg.convergence_epsilon(), sustain)

    return RunMetrics(
        horizon=K,
        n=n,
        normal_nodes=normals,
        adversary_nodes=adversaries,
        x=xs,
        x_hat=xhs,
        fired=fired_rows,
        updated=updated_rows,
        spread=spread_series,
        safety_interval=safety_interval(x0, xh0),
        events_per_node=events,
        transmissions_per_neighbor=trans_pn,
        transmissions_packages_once=trans_po,
        count_packages_once=cfg.count_packages_once,
        theoretical_c=c_level,
        gamma=gamma,
        converged_at=conv,
        tau_realized=tau_realized,
        dropped_invalid={i: states[i].dropped_invalid for i in normals},
        adversary_values=adversary_values,
    )


# -- Monte Carlo ----------------------------------------------------------------


class MonteCarloError(RuntimeError):
    """A single failing run aborts the batch; the message names its seed."""


@dataclass
class MonteCarloRow:
    variant: str
    runs: int
    avg_events: float
    avg_transmissions_per_neighbor: float
    avg_transmissions_packages_once: float

    def avg_transmissions(self, packages_once: bool) -> float:
        return (
            self.avg_transmissions_packages_once
            if packages_once
            else self.avg_transmissions_per_neighbor
        )


@dataclass
class MonteCarloResult:
    rows: list[MonteCarloRow]
    per_run_events: dict[str, list[float]]
    per_run_transmissions_per_neighbor: dict[str, list[float]]
    per_run_transmissions_packages_once: dict[str, list[float]]
    per_run_final_spread: dict[str, list[float]]


def monte_carlo(
    g: Graph,
    fm: FaultModel,
    variants: list[tuple[str, SimConfig]],
    runs: int,
    seed: int,
    x0_low: float = 0.0,
    x0_high: float = 10.0,
) -> MonteCarloResult:
    """Repeat paired runs with random initial states and aggregate means.

    Initial normal states are drawn uniformly from [x0_low, x0_high];
    the same draw is used for every variant within a run so variants are
    compared on identical instances.  Deterministic given `seed`.
    """
    if runs < 1:
        raise ConfigError(f"runs must be >= 1, got {runs}")
    if not variants:
        raise ConfigError("monte carlo needs at least one variant")
    normals = sorted(set(g.nodes()) - fm.adversaries)
    master = np.random.SeedSequence(seed)
    children = master.spawn(runs)

    ev: dict[str, list[float]] = {name: [] for name, _ in variants}
    tpn: dict[str, list[float]] = {name: [] for name, _ in variants}
    tpo: dict[str, list[float]] = {name: [] for name, _ in variants}
    fsp: dict[str, list[float]] = {name: [] for name, _ in variants}

    for r, child in enumerate(children):
        rng = np.random.default_rng(child)
        run_seed = int(child.generate_state(1)[0])
        x0 = {i: float(v) for i, v in zip(normals, rng.uniform(x0_low, x0_high, len(normals)))}
        for name, cfg in variants:
            cfg_r = replace(cfg, seed=run_seed)
            try:
                metrics = run(g, fm, dict(x0), cfg_r)
            except Exception as exc:
                raise MonteCarloError(f"run {r} (seed {run_seed}, variant {name}) failed: {exc}") from exc
            n_norm = len(metrics.normal_nodes)
            ev[name].append(sum(metrics.events_per_node.values()) / n_norm)
            tpn[name].append(sum(metrics.transmissions_per_neighbor.values()) / n_norm)
            tpo[name].append(sum(metrics.transmissions_packages_once.values()) / n_norm)
            fsp[name].append(metrics.final_spread())

    rows = [
        MonteCarloRow(
            variant=name,
            runs=runs,
            avg_events=sum(ev[name]) / runs,
            avg_transmissions_per_neighbor=sum(tpn[name]) / runs,
            avg_transmissions_packages_once=sum(tpo[name]) / runs,
        )
        for name, _ in variants
    ]
    return MonteCarloResult(
        rows=rows,
        per_run_events=ev,
        per_run_transmissions_per_neighbor=tpn,
        per_run_transmissions_packages_once=tpo,
        per_run_final_spread=fsp,
    )
