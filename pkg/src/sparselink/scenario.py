"""End-to-end scenario driver: random coupled-plant generation, the
sweep -> rank -> attack -> reroute -> resynthesize pipeline, and the
before / immediately-after-attack / after-reroute cost report.

j_attack is computed with the pre-attack gain after zeroing the attacked
blocks only (no resynthesis), so it can be +inf when the mutilated gain no
longer stabilizes. j_reroute comes from a fresh structured synthesis on the
post-attack pattern.
"""
from __future__ import annotations

import csv
import dataclasses
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidAssumption
from .h2 import closed_loop_cost, is_stabilizing
from .plant import BlockPartition, LtiPlant, SparsityPattern
from .priority import PriorityTable, rank_links
from .render import render_pattern
from .reroute import (
    AttackScenario,
    RerouteOutcome,
    pattern_from,
    reroute_multi,
    reroute_single,
    reroute_uniform,
)
from .serialize import (
    attack_from_doc,
    dumps_canonical,
    gain_to_doc,
    outcome_to_doc,
    plant_from_doc,
    plant_to_doc,
    read_json,
    table_to_doc,
)
from .sparse import SparsityConfig, SweepResult, sparsity_sweep, sweep_csv
from .structured import AugLagConfig, SynthesisInfo, synthesize_structured_info

_REPORT_COLUMNS = (
    "scenario",
    "j_before",
    "j_attack",
    "j_reroute",
    "n_attacked",
    "n_sacrificed",
    "n_dropped",
    "feasible",
)


@dataclass(frozen=True)
class GeneratorSpec:
    """Recipe for the random coupled plant: N nodes, each with node_state
    states and node_input controls, drift entries uniform on [0, 1] shifted
    left so the dominant eigenvalue sits at -delta."""

    n_nodes: int
    seed: int
    delta: float = 0.1
    node_state: int = 2
    node_input: int = 1

    def __post_init__(self):
        if self.n_nodes < 2:
            raise InvalidAssumption(f"generator needs n_nodes >= 2, got {self.n_nodes}")
        if self.delta <= 0:
            raise InvalidAssumption(f"generator needs delta > 0, got {self.delta}")
        if self.node_state < 1 or self.node_input < 1:
            raise InvalidAssumption("node dimensions must be positive")


def generate_plant(
    n_nodes: int,
    seed: int,
    delta: float = 0.1,
    *,
    node_state: int = 2,
    node_input: int = 1,
) -> LtiPlant:
    """Random stable coupled plant: A = M - (max Re lambda(M) + delta) I
    with M entrywise uniform on [0, 1]; per-node input block puts gain 10
    on the leading states; W = 0.5 I, Q = I, R = 10 I."""
    spec = GeneratorSpec(n_nodes, seed, delta, node_state, node_input)
    n = spec.n_nodes * spec.node_state
    m = spec.n_nodes * spec.node_input
    rng = np.random.default_rng(spec.seed)
    drift = rng.uniform(0.0, 1.0, size=(n, n))
    shift = float(np.max(np.linalg.eigvals(drift).real)) + spec.delta
    a = drift - shift * np.eye(n)

    b_node = np.zeros((spec.node_state, spec.node_input))
    for k in range(min(spec.node_input, spec.node_state)):
        b_node[k, k] = 10.0
    b = np.zeros((n, m))
    for node in range(spec.n_nodes):
        rows = slice(node * spec.node_state, (node + 1) * spec.node_state)
        cols = slice(node * spec.node_input, (node + 1) * spec.node_input)
        b[rows, cols] = b_node

    partition = BlockPartition(
        (spec.node_input,) * spec.n_nodes, (spec.node_state,) * spec.n_nodes
    )
    return LtiPlant(
        a, b, 0.5 * np.eye(n), np.eye(n), 10.0 * np.eye(m), partition
    )


@dataclass(frozen=True)
class Scenario:
    """Everything the pipeline needs: a plant source (generator spec or an
    inline plant document), solver configs, and the attack spec (raw JSON
    form; resolved against the table's r1 at reroute time)."""

    name: str
    generator: GeneratorSpec | None = None
    plant_doc: dict | None = None
    sparsity: SparsityConfig | None = None
    synthesis: AugLagConfig | None = None
    attack: dict | None = None

    def __post_init__(self):
        if (self.generator is None) == (self.plant_doc is None):
            raise InvalidAssumption(
                "scenario needs exactly one plant source: generator or inline plant"
            )

    def resolve_plant(self) -> LtiPlant:
        if self.generator is not None:
            g = self.generator
            return generate_plant(
                g.n_nodes,
                g.seed,
                g.delta,
                node_state=g.node_state,
                node_input=g.node_input,
            )
        return plant_from_doc(self.plant_doc)


def _config_from(doc: dict | None, cls, label: str):
    if doc is None:
        return None
    if not isinstance(doc, dict):
        raise InvalidAssumption(f"{label} config must be a JSON object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(doc) - allowed
    if unknown:
        raise InvalidAssumption(f"unknown {label} config keys: {sorted(unknown)}")
    kwargs = dict(doc)
    if "beta_schedule" in kwargs and kwargs["beta_schedule"] is not None:
        kwargs["beta_schedule"] = tuple(float(b) for b in kwargs["beta_schedule"])
    return cls(**kwargs)


def scenario_from_doc(doc: dict, *, name: str = "scenario", base_dir=None, seed=None) -> Scenario:
    """Build a Scenario from its JSON document. seed, when given, overrides
    the generator's seed (the CLI --seed flag)."""
    if not isinstance(doc, dict):
        raise InvalidAssumption("scenario document must be a JSON object")
    unknown = set(doc) - {"name", "plant", "sparsity", "synthesis", "attack"}
    if unknown:
        raise InvalidAssumption(f"unknown scenario keys: {sorted(unknown)}")
    plant_spec = doc.get("plant")
    if not isinstance(plant_spec, dict) or len(plant_spec) != 1:
        raise InvalidAssumption(
            "scenario plant must be exactly one of"
            ' {"generator": {...}}, {"inline": {...}}, {"file": "path"}'
        )
    (kind, value), = plant_spec.items()
    generator = None
    plant_doc = None
    if kind == "generator":
        if not isinstance(value, dict):
            raise InvalidAssumption("generator spec must be a JSON object")
        allowed = {f.name for f in dataclasses.fields(GeneratorSpec)}
        unknown = set(value) - allowed
        if unknown:
            raise InvalidAssumption(f"unknown generator keys: {sorted(unknown)}")
        value = dict(value)
        if seed is not None:
            value["seed"] = seed
        if "seed" not in value:
            raise InvalidAssumption("generator spec requires a seed")
        generator = GeneratorSpec(**value)
    elif kind == "inline":
        plant_doc = value
    elif kind == "file":
        path = Path(value)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        plant_doc = read_json(path)
    else:
        raise InvalidAssumption(f"unknown plant source kind: {kind!r}")
    return Scenario(
        name=str(doc.get("name", name)),
        generator=generator,
        plant_doc=plant_doc,
        sparsity=_config_from(doc.get("sparsity"), SparsityConfig, "sparsity"),
        synthesis=_config_from(doc.get("synthesis"), AugLagConfig, "synthesis"),
        attack=doc.get("attack"),
    )


def load_scenario(path, *, seed=None) -> Scenario:
    path = Path(path)
    return scenario_from_doc(
        read_json(path), name=path.stem, base_dir=path.parent, seed=seed
    )


@dataclass(frozen=True)
class CostReport:
    scenario: str
    j_before: float
    j_attack: float
    j_reroute: float | None
    n_attacked: int
    n_sacrificed: int
    n_dropped: int
    feasible: bool


@dataclass(frozen=True)
class PipelineResult:
    plant: LtiPlant
    sweep: SweepResult
    table: PriorityTable
    attack: AttackScenario
    outcome: RerouteOutcome
    pattern_before: SparsityPattern
    pattern_after: SparsityPattern | None
    before: SynthesisInfo
    after: SynthesisInfo | None
    report: CostReport


def select_reroute(table: PriorityTable, attack: AttackScenario) -> RerouteOutcome:
    """Uniform block sizes use the pairing countermeasure; one attacked
    block on a mixed-size table uses the single-link loop; anything else
    the multi-link loop."""
    if len(set(table.sizes())) <= 1:
        return reroute_uniform(table, attack.priorities)
    if len(attack.priorities) == 1:
        return reroute_single(table, next(iter(attack.priorities)))
    return reroute_multi(table, attack.priorities)


def run_pipeline(scenario: Scenario) -> PipelineResult:
    plant = scenario.resolve_plant()
    sweep = sparsity_sweep(plant, scenario.sparsity, scenario.synthesis)
    table = rank_links(plant, sweep, scenario.synthesis)

    # The deployed pre-attack gain is the polished first sweep entry (the
    # densest footprint, which also defines the table's block universe).
    entry0 = sweep.entries[0]
    pattern_before = entry0.pattern
    before = synthesize_structured_info(
        plant, pattern_before, config=scenario.synthesis, init=entry0.polished_gain
    )

    attack = attack_from_doc(scenario.attack, table.r1)
    outcome = select_reroute(table, attack)

    after = None
    pattern_after = None
    j_reroute = None
    if outcome.feasible:
        pattern_after = pattern_from(outcome, plant.partition)
        init = before.gain.project(pattern_after)
        if not is_stabilizing(plant, init):
            init = None
        after = synthesize_structured_info(
            plant, pattern_after, config=scenario.synthesis, init=init
        )
        if after.cost < before.cost - 1e-9:
            # The post-attack gain is feasible for the richer pre-attack
            # pattern too, so it exposes a better pre-attack optimum;
            # re-polish from it to keep j_before <= j_reroute honest.
            refined = synthesize_structured_info(
                plant, pattern_before, config=scenario.synthesis, init=after.gain
            )
            if refined.cost < before.cost:
                before = refined
        j_reroute = after.cost

    attacked_blocks = [
        (row.i, row.j) for row in table.rows if row.q in attack.priorities
    ]
    j_attack = closed_loop_cost(plant, before.gain.with_zeroed_blocks(attacked_blocks))

    report = CostReport(
        scenario=scenario.name,
        j_before=before.cost,
        j_attack=j_attack,
        j_reroute=j_reroute,
        n_attacked=len(outcome.attacked),
        n_sacrificed=len(outcome.sacrificed),
        n_dropped=len(outcome.dropped),
        feasible=outcome.feasible,
    )
    return PipelineResult(
        plant=plant,
        sweep=sweep,
        table=table,
        attack=attack,
        outcome=outcome,
        pattern_before=pattern_before,
        pattern_after=pattern_after,
        before=before,
        after=after,
        report=report,
    )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def report_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_REPORT_COLUMNS)
    for r in reports:
        writer.writerow([_fmt(getattr(r, column)) for column in _REPORT_COLUMNS])
    return buf.getvalue()


def report_to_doc(report: CostReport) -> dict:
    return {
        "scenario": report.scenario,
        "j_before": report.j_before,
        "j_attack": report.j_attack,
        "j_reroute": report.j_reroute,
        "n_attacked": report.n_attacked,
        "n_sacrificed": report.n_sacrificed,
        "n_dropped": report.n_dropped,
        "feasible": report.feasible,
    }


def report_from_doc(doc: dict) -> CostReport:
    return CostReport(
        scenario=str(doc["scenario"]),
        j_before=float(doc["j_before"]),
        j_attack=float(doc["j_attack"]),
        j_reroute=None if doc["j_reroute"] is None else float(doc["j_reroute"]),
        n_attacked=int(doc["n_attacked"]),
        n_sacrificed=int(doc["n_sacrificed"]),
        n_dropped=int(doc["n_dropped"]),
        feasible=bool(doc["feasible"]),
    )


def write_artifacts(result: PipelineResult, out_dir) -> list:
    """Write every pipeline artifact under out_dir; a fixed file set whose
    bytes are a pure function of the scenario."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "plant.json": dumps_canonical(plant_to_doc(result.plant)),
        "sweep.csv": sweep_csv(result.sweep),
        "table.json": dumps_canonical(table_to_doc(result.table)),
        "outcome.json": dumps_canonical(outcome_to_doc(result.outcome)),
        "gain_before.json": dumps_canonical(
            gain_to_doc(result.before, result.pattern_before)
        ),
        "report.json": dumps_canonical(report_to_doc(result.report)),
        "report.csv": report_csv([result.report]),
        "pattern_before.txt": render_pattern(result.pattern_before),
        "pattern_before.svg": render_pattern(result.pattern_before, "svg"),
        "pattern_attack.txt": render_pattern(
            result.table,
            attacked=result.attack.priorities,
            partition=result.plant.partition,
        ),
        "pattern_attack.svg": render_pattern(
            result.table,
            "svg",
            attacked=result.attack.priorities,
            partition=result.plant.partition,
        ),
    }
    if result.after is not None:
        files["gain_after.json"] = dumps_canonical(
            gain_to_doc(result.after, result.pattern_after)
        )
        files["pattern_after.txt"] = render_pattern(
            result.table, outcome=result.outcome, partition=result.plant.partition
        )
        files["pattern_after.svg"] = render_pattern(
            result.table,
            "svg",
            outcome=result.outcome,
            partition=result.plant.partition,
        )
    written = []
    for name, content in sorted(files.items()):
        path = out / name
        path.write_text(content, encoding="utf-8")
        written.append(path)
    return written
