"""Scenario documents: strict JSON schema, variants, bundled experiments.

A scenario bundles a graph, a fault model with per-node strategies,
initial states, a simulation config and optional algorithm variants for
comparison.  Parsing is fail-closed: unknown fields are rejected so
experiment files stay honest.  The schema carries an explicit
versioning field "spec": 1.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .adversary import ByzantineStrategy, FaultModel
from .engine import DelayPolicy, SchedulerSpec, SimConfig
from .graph import Graph, graph_from_json_obj
from .protocol import C1Schedule, ConfigError, RelayModel, TriggerParams

SCHEMA_VERSION = 1

# Triggering defaults used by the bundled experiments.
DEFAULT_C0 = 1.215e-2
DEFAULT_C1 = {"kind": "exp", "coeff": 0.5, "rate": 0.06, "offset": 20}


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario documents."""


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be a JSON object")
    unknown = set(obj) - allowed
    if unknown:
        raise ScenarioError(f"unknown fields in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ScenarioError(f"missing fields in {where}: {sorted(missing)}")


# -- Simulation config ----------------------------------------------------------

_SIM_KEYS = {
    "l",
    "f",
    "tau",
    "theta",
    "relay",
    "trigger",
    "horizon",
    "seed",
    "scheduler",
    "delay",
    "epsilon_conv",
    "count_packages_once",
    "changed_values_only",
}


def _parse_relay(spec) -> RelayModel:
    if not isinstance(spec, str):
        raise ScenarioError(f"relay must be a string, got {spec!r}")
    if spec == "immediate":
        return RelayModel(kind="immediate", lam=1)
    if spec == "package":
        return RelayModel(kind="package")
    if spec.startswith("periodic:"):
        try:
            lam = int(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ScenarioError(f"bad relay period in {spec!r}") from exc
        return RelayModel(kind="periodic", lam=lam)
    raise ScenarioError(f"unknown relay model {spec!r}")


def _relay_str(model: RelayModel) -> str:
    if model.kind == "periodic":
        return f"periodic:{model.lam}"
    return model.kind


def _parse_scheduler(spec) -> SchedulerSpec:
    if not isinstance(spec, str):
        raise ScenarioError(f"scheduler must be a string, got {spec!r}")
    if spec in ("always", "round-robin"):
        return SchedulerSpec(kind=spec)
    if spec.startswith("bernoulli:"):
        try:
            p = float(spec.split(":", 1)[1])
        except ValueError as exc:
            raise ScenarioError(f"bad bernoulli rate in {spec!r}") from exc
        return SchedulerSpec(kind="bernoulli", p=p)
    raise ScenarioError(f"unknown scheduler {spec!r}")


def _scheduler_str(spec: SchedulerSpec) -> str:
    if spec.kind == "bernoulli":
        return f"bernoulli:{spec.p}"
    return spec.kind


def _parse_delay(spec) -> DelayPolicy:
    if isinstance(spec, str):
        if spec in ("zero", "uniform"):
            return DelayPolicy(kind=spec)
        raise ScenarioError(f"unknown delay policy {spec!r}")
    _require_keys(spec, {"kind", "table"}, {"kind", "table"}, "delay policy")
    if spec["kind"] != "per_edge_fixed":
        raise ScenarioError(f"unknown delay policy kind {spec['kind']!r}")
    table = []
    for key, d in spec["table"].items():
        try:
            u, v = (int(part) for part in key.split(","))
        except ValueError as exc:
            raise ScenarioError(f"bad delay table edge key {key!r}, expected 'u,v'") from exc
        table.append(((u, v), int(d)))
    return DelayPolicy(kind="per_edge_fixed", table=tuple(sorted(table)))


def _delay_obj(policy: DelayPolicy):
    if policy.kind != "per_edge_fixed":
        return policy.kind
    return {
        "kind": "per_edge_fixed",
        "table": {f"{u},{v}": d for (u, v), d in policy.table},
    }


def _parse_c1(obj) -> C1Schedule:
    _require_keys(obj, {"kind", "coeff", "rate", "offset", "values"}, {"kind"}, "c1 schedule")
    kind = obj["kind"]
    try:
        if kind == "zero":
            return C1Schedule(kind="zero")
        if kind == "exp":
            return C1Schedule(
                kind="exp",
                coeff=float(obj.get("coeff", 0.0)),
                rate=float(obj.get("rate", 0.0)),
                offset=float(obj.get("offset", 0.0)),
            )
        if kind == "table":
            return C1Schedule(kind="table", values=tuple(float(v) for v in obj.get("values", ())))
    except ConfigError as exc:
        raise ScenarioError(str(exc)) from exc
    raise ScenarioError(f"unknown c1 schedule kind {kind!r}")


def _c1_obj(c1: C1Schedule):
    if c1.kind == "zero":
        return {"kind": "zero"}
    if c1.kind == "exp":
        return {"kind": "exp", "coeff": c1.coeff, "rate": c1.rate, "offset": c1.offset}
    return {"kind": "table", "values": list(c1.values)}


def parse_sim_config(obj: dict) -> SimConfig:
    _require_keys(obj, _SIM_KEYS, {"l", "f", "horizon", "seed"}, "sim config")
    trigger_obj = obj.get("trigger", {"c0": 0.0, "c1": {"kind": "zero"}})
    _require_keys(trigger_obj, {"c0", "c1"}, set(), "trigger")
    try:
        trigger = TriggerParams(
            c0=float(trigger_obj.get("c0", 0.0)),
            c1=_parse_c1(trigger_obj.get("c1", {"kind": "zero"})),
        )
        relay = _parse_relay(obj.get("relay", "immediate"))
        scheduler = _parse_scheduler(obj.get("scheduler", "always"))
        delay = _parse_delay(obj.get("delay", "zero"))
        eps = obj.get("epsilon_conv")
        return SimConfig(
            l=int(obj["l"]),
            f=int(obj["f"]),
            tau=int(obj.get("tau", 0)),
            theta=int(obj.get("theta", 1)),
            relay=relay,
            trigger=trigger,
            horizon=int(obj["horizon"]),
            seed=int(obj["seed"]),
            scheduler=scheduler,
            delay=delay,
            epsilon_conv=float(eps) if eps is not None else None,
            count_packages_once=bool(obj.get("count_packages_once", False)),
            changed_values_only=bool(obj.get("changed_values_only", False)),
        )
    except ConfigError as exc:
        raise ScenarioError(str(exc)) from exc


def sim_config_obj(cfg: SimConfig) -> dict:
    obj = {
        "l": cfg.l,
        "f": cfg.f,
        "tau": cfg.tau,
        "theta": cfg.theta,
        "relay": _relay_str(cfg.relay),
        "trigger": {"c0": cfg.trigger.c0, "c1": _c1_obj(cfg.trigger.c1)},
        "horizon": cfg.horizon,
        "seed": cfg.seed,
        "scheduler": _scheduler_str(cfg.scheduler),
        "delay": _delay_obj(cfg.delay),
    }
    if cfg.epsilon_conv is not None:
        obj["epsilon_conv"] = cfg.epsilon_conv
    if cfg.count_packages_once:
        obj["count_packages_once"] = True
    if cfg.changed_values_only:
        obj["changed_values_only"] = True
    return obj


# -- Fault model ----------------------------------------------------------------

_STRATEGY_KEYS = {
    "constant": {"kind", "value"},
    "per_neighbor": {"kind", "table", "default"},
    "oscillate": {"kind", "amplitude", "offset", "period"},
    "relay_tamper": {"kind", "value", "offset"},
    "crash": {"kind"},
}


def _parse_strategy(obj: dict) -> ByzantineStrategy:
    _require_keys(obj, set().union(*_STRATEGY_KEYS.values()), {"kind"}, "strategy")
    kind = obj["kind"]
    if kind not in _STRATEGY_KEYS:
        raise ScenarioError(f"unknown strategy kind {kind!r}")
    unknown = set(obj) - _STRATEGY_KEYS[kind]
    if unknown:
        raise ScenarioError(f"fields {sorted(unknown)} not valid for strategy {kind!r}")
    try:
        if kind == "constant":
            return ByzantineStrategy(kind=kind, value=float(obj.get("value", 0.0)))
        if kind == "per_neighbor":
            table = {int(t): float(v) for t, v in obj.get("table", {}).items()}
            return ByzantineStrategy(kind=kind, table=table, default=float(obj.get("default", 0.0)))
        if kind == "oscillate":
            return ByzantineStrategy(
                kind=kind,
                amplitude=float(obj.get("amplitude", 0.0)),
                offset=float(obj.get("offset", 0.0)),
                period=int(obj.get("period", 1)),
            )
        if kind == "relay_tamper":
            return ByzantineStrategy(
                kind=kind, value=float(obj.get("value", 0.0)), offset=float(obj.get("offset", 0.0))
            )
        return ByzantineStrategy(kind="crash")
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def _strategy_obj(s: ByzantineStrategy) -> dict:
    if s.kind == "constant":
        return {"kind": s.kind, "value": s.value}
    if s.kind == "per_neighbor":
        return {
            "kind": s.kind,
            "table": {str(t): v for t, v in sorted(s.table.items())},
            "default": s.default,
        }
    if s.kind == "oscillate":
        return {"kind": s.kind, "amplitude": s.amplitude, "offset": s.offset, "period": s.period}
    if s.kind == "relay_tamper":
        return {"kind": s.kind, "value": s.value, "offset": s.offset}
    return {"kind": "crash"}


def _parse_fault_model(obj: dict) -> FaultModel:
    _require_keys(obj, {"flavor", "f", "adversaries"}, {"flavor", "f"}, "fault model")
    try:
        strategies = {
            int(node): _parse_strategy(strat) for node, strat in obj.get("adversaries", {}).items()
        }
        return FaultModel(flavor=obj["flavor"], f=int(obj["f"]), strategies=strategies)
    except ValueError as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(str(exc)) from exc


def _fault_model_obj(fm: FaultModel) -> dict:
    return {
        "flavor": fm.flavor,
        "f": fm.f,
        "adversaries": {str(n): _strategy_obj(s) for n, s in sorted(fm.strategies.items())},
    }


# -- Scenario -------------------------------------------------------------------


@dataclass
class Scenario:
    name: str
    graph: Graph
    fault_model: FaultModel
    x0: dict[int, float]
    sim: SimConfig
    variants: list[tuple[str, dict]] = field(default_factory=list)
    x_hat0: dict[int, float] | None = None
    description: str = ""
    certified: dict | None = None

    def normal_nodes(self) -> list[int]:
        return sorted(set(self.graph.nodes()) - self.fault_model.adversaries)

    def variant_configs(self) -> list[tuple[str, SimConfig]]:
        """Named simulation configs: declared variants, or a single default."""
        if not self.variants:
            return [("default", self.sim)]
        base = sim_config_obj(self.sim)
        out = []
        for name, overrides in self.variants:
            merged = dict(base)
            merged.update(overrides)
            out.append((name, parse_sim_config(merged)))
        return out


_SCENARIO_KEYS = {
    "spec",
    "name",
    "description",
    "graph",
    "fault_model",
    "x0",
    "x_hat0",
    "sim",
    "variants",
    "certified",
}


def parse_scenario(obj: dict) -> Scenario:
    _require_keys(obj, _SCENARIO_KEYS, {"spec", "name", "graph", "fault_model", "x0", "sim"}, "scenario")
    if obj["spec"] != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported scenario spec version {obj['spec']!r}")
    try:
        graph = graph_from_json_obj(obj["graph"])
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc
    fm = _parse_fault_model(obj["fault_model"])
    normals = sorted(set(graph.nodes()) - fm.adversaries)
    x0_list = obj["x0"]
    if not isinstance(x0_list, list) or len(x0_list) != len(normals):
        raise ScenarioError(
            f"x0 must list one initial value per normal node ({len(normals)} expected)"
        )
    x0 = {i: float(v) for i, v in zip(normals, x0_list)}
    x_hat0 = None
    if "x_hat0" in obj:
        xh_list = obj["x_hat0"]
        if not isinstance(xh_list, list) or len(xh_list) != len(normals):
            raise ScenarioError("x_hat0 must list one value per normal node")
        x_hat0 = {i: float(v) for i, v in zip(normals, xh_list)}
    sim = parse_sim_config(obj["sim"])
    variants: list[tuple[str, dict]] = []
    for v in obj.get("variants", ()):
        _require_keys(v, {"name", "overrides"}, {"name", "overrides"}, "variant")
        overrides = v["overrides"]
        _require_keys(overrides, _SIM_KEYS, set(), f"variant {v['name']!r} overrides")
        variants.append((str(v["name"]), dict(overrides)))
        # Validate eagerly so bad variants fail at parse time.
        merged = dict(sim_config_obj(sim))
        merged.update(overrides)
        parse_sim_config(merged)
    for v in fm.adversaries:
        graph.check_node(v)
    return Scenario(
        name=str(obj["name"]),
        graph=graph,
        fault_model=fm,
        x0=x0,
        sim=sim,
        variants=variants,
        x_hat0=x_hat0,
        description=str(obj.get("description", "")),
        certified=obj.get("certified"),
    )


def scenario_obj(sc: Scenario) -> dict:
    normals = sc.normal_nodes()
    obj = {
        "spec": SCHEMA_VERSION,
        "name": sc.name,
        "graph": sc.graph.to_json_obj(),
        "fault_model": _fault_model_obj(sc.fault_model),
        "x0": [sc.x0[i] for i in normals],
        "sim": sim_config_obj(sc.sim),
    }
    if sc.description:
        obj["description"] = sc.description
    if sc.x_hat0 is not None:
        obj["x_hat0"] = [sc.x_hat0[i] for i in normals]
    if sc.variants:
        obj["variants"] = [{"name": n, "overrides": o} for n, o in sc.variants]
    if sc.certified is not None:
        obj["certified"] = sc.certified
    return obj


def dump_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_obj(sc), indent=2, sort_keys=True)


def config_hash(sc: Scenario) -> str:
    canonical = json.dumps(scenario_obj(sc), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"invalid JSON in {path}: {exc}") from exc
    return parse_scenario(obj)


# -- Bundled scenarios ------------------------------------------------------------

BUNDLED = {
    "fig1a-surrogate": "fig1a_surrogate.json",
    "fig1b-surrogate": "fig1b_surrogate.json",
    "table1-protocol": "table1_protocol.json",
}


def list_bundled() -> list[tuple[str, str]]:
    """(name, description) pairs for the scenarios shipped in the package."""
    out = []
    for name in sorted(BUNDLED):
        out.append((name, load_bundled(name).description))
    return out


def load_bundled(name: str) -> Scenario:
    if name not in BUNDLED:
        raise ScenarioError(f"no bundled scenario {name!r}; available: {sorted(BUNDLED)}")
    text = resources.files("mwmsr.data").joinpath(BUNDLED[name]).read_text(encoding="utf-8")
    return parse_scenario(json.loads(text))


def resolve_scenario(ref: str) -> Scenario:
    """Load a scenario by bundled name or by file path."""
    if ref in BUNDLED:
        return load_bundled(ref)
    return load_scenario_file(ref)


# -- CLI variant specs -------------------------------------------------------------

_VARIANT_INT_KEYS = {"l", "f", "tau", "theta", "horizon", "seed"}
_VARIANT_STR_KEYS = {"relay", "scheduler", "delay"}
_VARIANT_FLOAT_KEYS = {"epsilon_conv"}


def parse_variant_spec(spec: str) -> tuple[str, dict]:
    """Parse a CLI variant like "l=2,relay=package,tau=2" into overrides."""
    overrides: dict = {}
    for part in spec.split(","):
        if "=" not in part:
            raise ScenarioError(f"variant entry {part!r} is not key=value")
        key, value = (s.strip() for s in part.split("=", 1))
        if key in _VARIANT_INT_KEYS:
            overrides[key] = int(value)
        elif key in _VARIANT_STR_KEYS:
            overrides[key] = value
        elif key in _VARIANT_FLOAT_KEYS:
            overrides[key] = float(value)
        else:
            raise ScenarioError(f"unknown variant key {key!r}")
    name = "".join(ch if ch.isalnum() else "-" for ch in spec).strip("-")
    return name, overrides
