"""Experiment orchestration: configs, learning runs, continual plans, reports, replay."""

from __future__ import annotations

import csv
import json
import logging
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

from . import induction as ind
from . import metrics as mx
from . import sim
from .dsl import DSLError
from .library import SizeBounds, SkillLibrary, empty_library, library_prefix, load_library, save_library
from .remote import EndpointConfig
from .runtime import (
    NullPolicy,
    OraclePolicy,
    PolicyBackend,
    PolicyFault,
    ScriptedPolicy,
    SchemaMismatch,
    Trajectory,
    execute_task,
    read_jsonl,
    remote_policy,
    trajectories_from_records,
    write_jsonl,
)

log = logging.getLogger(__name__)

SITES_SCHEMA = "webskills.sites/1"
FORGETTING_COLUMNS = ("phase", "phase_site", "suite", "success_rate", "mean_steps", "delta_sr")


class ConfigError(Exception):
    """Bad or missing configuration input (usage error)."""


class ArtifactError(Exception):
    """A required run artifact is missing or unreadable."""


# ------------------------------------------------------------------ config


@dataclass
class Phase:
    site: str
    budget: int


@dataclass
class ExperimentConfig:
    mode: str = "task-defined"
    category: str = "shopping"
    n_sites: int = 3
    seed: int = 42
    sites: list[str] | None = None
    tasks: str | None = None
    n_tasks: int = 20
    eval_tasks: str | None = None
    n_eval: int = 5
    horizon: int = 15
    snapshot_interval: int = 5
    gamma: float = mx.DEFAULT_GAMMA
    min_steps: int = 2
    max_steps: int = 5
    retries: int = 0
    policy: dict = field(default_factory=lambda: {"kind": "oracle"})
    judge: dict = field(default_factory=lambda: {"kind": "programmatic"})
    inducer: dict = field(default_factory=lambda: {"kind": "scripted"})
    proposer: dict = field(default_factory=lambda: {"kind": "gap"})
    explore_steps: int = 30
    selection: str = "self-guided"
    initial_library: str | None = None
    phases: list[Phase] = field(default_factory=list)
    repeats: int = 1
    output: str = "out"

    @property
    def bounds(self) -> SizeBounds:
        return SizeBounds(self.min_steps, self.max_steps)

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "ExperimentConfig":
        data = dict(data)
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        phases = [Phase(str(p["site"]), int(p.get("budget", 1))) for p in data.pop("phases", [])]
        cfg = cls(**data, phases=phases)
        if base is not None:
            for key in ("tasks", "eval_tasks", "initial_library"):
                value = getattr(cfg, key)
                if value is not None and not Path(value).is_absolute():
                    setattr(cfg, key, str(base / value))
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.mode not in ("task-defined", "task-free", "continual"):
            raise ConfigError(f"mode must be task-defined, task-free or continual, got {self.mode!r}")
        if self.category not in sim.FAMILIES:
            raise ConfigError(f"unknown category {self.category!r}; choose from {sorted(sim.FAMILIES)}")
        for name, low in (("n_sites", 1), ("n_tasks", 1), ("n_eval", 1), ("horizon", 1), ("snapshot_interval", 1), ("explore_steps", 1), ("min_steps", 1), ("repeats", 1)):
            if getattr(self, name) < low:
                raise ConfigError(f"{name} must be >= {low}")
        if self.selection not in ("self-guided", "round-robin"):
            raise ConfigError(f"selection must be self-guided or round-robin, got {self.selection!r}")
        if self.max_steps < self.min_steps:
            raise ConfigError("max_steps must be >= min_steps")
        if self.gamma < 0:
            raise ConfigError("gamma must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.retries < 0:
            raise ConfigError("retries must be non-negative")
        for p in self.phases:
            if p.budget < 1:
                raise ConfigError(f"phase budget for {p.site} must be >= 1")
        for key in ("tasks", "eval_tasks", "initial_library"):
            value = getattr(self, key)
            if value is not None and not Path(value).exists():
                raise ConfigError(f"{key}: no such file or directory: {value}")

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["phases"] = [{"site": p.site, "budget": p.budget} for p in self.phases]
        return out


def load_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> ExperimentConfig:
    data: dict = {}
    base = None
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
        base = p.parent
    for k, v in (overrides or {}).items():
        if v is not None:
            data[k] = v
    return ExperimentConfig.from_dict(data, base)


# ---------------------------------------------------------------- backends


def make_policy(cfg: dict) -> Callable[[], PolicyBackend]:
    kind = cfg.get("kind", "oracle")
    if kind == "oracle":
        return OraclePolicy
    if kind == "null":
        return NullPolicy
    if kind == "scripted":
        path = cfg.get("script")
        if not path or not Path(path).exists():
            raise ConfigError(f"scripted policy needs an existing 'script' file, got {path!r}")
        script = json.loads(Path(path).read_text(encoding="utf-8"))
        return lambda: ScriptedPolicy(script)
    if kind == "remote":
        shared = remote_policy(EndpointConfig.from_dict(cfg))
        return lambda: shared
    raise ConfigError(f"unknown policy kind {kind!r}")


def make_judge(cfg: dict) -> ind.JudgeBackend:
    kind = cfg.get("kind", "programmatic")
    if kind == "programmatic":
        return ind.ProgrammaticJudge()
    if kind == "reject":
        return ind.RejectingJudge()
    if kind == "remote":
        return ind.remote_backends(cfg)[0]
    raise ConfigError(f"unknown judge kind {kind!r}")


def make_inducer(cfg: dict, bounds: SizeBounds) -> ind.InducerBackend:
    kind = cfg.get("kind", "scripted")
    if kind == "scripted":
        return ind.ScriptedInducer()
    if kind == "remote":
        return ind.remote_backends(cfg, bounds=bounds)[1]
    raise ConfigError(f"unknown inducer kind {kind!r}")


def make_proposer(cfg: dict) -> ind.ProposerBackend:
    kind = cfg.get("kind", "gap")
    if kind == "gap":
        return ind.GapProposer()
    if kind == "remote":
        return ind.remote_backends(cfg)[2]
    raise ConfigError(f"unknown proposer kind {kind!r}")


# ---------------------------------------------------------------- artifacts


def site_pool(cfg: ExperimentConfig) -> list[sim.SiteSpec]:
    specs = sim.generate_site_family(cfg.category, cfg.n_sites, cfg.seed)
    if cfg.sites is None:
        return specs
    by_name = {s.site: s for s in specs}
    missing = [s for s in cfg.sites if s not in by_name]
    if missing:
        raise ConfigError(f"unknown site(s) {missing}; family has {sorted(by_name)}")
    return [by_name[s] for s in cfg.sites]


def curriculum(specs: Sequence[sim.SiteSpec], n_tasks: int, seed: int, horizon: int) -> list[sim.Task]:
    """``n_tasks`` tasks split into one contiguous block per site."""
    tasks: list[sim.Task] = []
    base, extra = divmod(n_tasks, len(specs))
    for i, spec in enumerate(specs):
        k = base + (1 if i < extra else 0)
        if k:
            tasks.extend(sim.generate_tasks(spec, k, seed, horizon=horizon))
    return tasks


def held_out(specs: Sequence[sim.SiteSpec], n_eval: int, seed: int, horizon: int) -> list[sim.Task]:
    return [t for spec in specs for t in sim.generate_tasks(spec, n_eval, seed + 7919, prefix=f"{spec.site}-eval", horizon=horizon)]


def load_suite(path: str) -> list[sim.Task]:
    try:
        return sim.suite_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError, sim.SimError) as exc:
        raise ConfigError(f"{path}: cannot load task suite: {exc}") from exc


class Writer:
    """Single funnel for every file a command emits."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    def json(self, name: str, payload: Any) -> None:
        self.path(name).write_text(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")

    def jsonl(self, name: str, rows: Sequence[dict]) -> None:
        write_jsonl(self.path(name), rows)

    def library(self, lib: SkillLibrary) -> None:
        target = self.path("library")
        if target.exists():
            for f in sorted(target.rglob("*"), reverse=True):
                f.unlink() if f.is_file() else f.rmdir()
        save_library(lib, target)

    def meta(self, command: str, cfg: ExperimentConfig | None) -> None:
        self.json(
            "meta.json",
            {
                "command": command,
                "finished_at": datetime.now(timezone.utc).isoformat(),
                "python": sys.version.split()[0],
                "host": platform.node(),
                "config": cfg.to_json() if cfg else None,
            },
        )


def write_sites(w: Writer, specs: Sequence[sim.SiteSpec]) -> None:
    w.json("sites.json", {"schema": SITES_SCHEMA, "sites": [sim.spec_to_json(s) for s in specs]})


def read_sites(root: Path) -> dict[str, sim.SiteSpec]:
    path = root / "sites.json"
    if not path.exists():
        raise ArtifactError(f"missing artifact: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if data.get("schema") != SITES_SCHEMA:
        raise ArtifactError(f"{path}: unsupported schema {data.get('schema')!r}")
    return {s["site"]: sim.spec_from_json(s) for s in data["sites"]}


def _series_json(series) -> list[dict]:
    return [{"step": s, **r.to_json()} for s, r in series]


# ---------------------------------------------------------------- commands


def _learning_inputs(cfg: ExperimentConfig):
    specs = site_pool(cfg)
    spec_map = {s.site: s for s in specs}
    return specs, spec_map, make_policy(cfg.policy), make_judge(cfg.judge), make_inducer(cfg.inducer, cfg.bounds)


def _initial_library(cfg: ExperimentConfig) -> SkillLibrary:
    return load_library(cfg.initial_library) if cfg.initial_library else empty_library()


def _check_suite_sites(tasks: Sequence[sim.Task], spec_map: dict[str, sim.SiteSpec], path: str | None) -> None:
    unknown = sorted({t.site for t in tasks} - set(spec_map))
    if unknown:
        raise ConfigError(f"{path or 'task suite'}: tasks reference unknown site(s) {unknown}")


def _report_outputs(w: Writer, cfg: ExperimentConfig, run: ind.LearningRun, lib0: SkillLibrary, eval_tasks, spec_map, n_steps: int, extra: dict | None = None) -> dict:
    eval_trajs: list[Trajectory] = []
    series = mx.snapshot_series(run.outcomes, eval_tasks, cfg.snapshot_interval, lib0, spec_map, n_steps, make_policy(cfg.policy), cfg.gamma, eval_trajs)
    batch, final_trajs = mx.evaluate_suite(eval_tasks, run.library, spec_map, make_policy(cfg.policy), cfg.gamma, prefix="final")
    final = mx.report(batch)
    w.jsonl("trajectories.jsonl", run.trajectory_rows() + [r for t in eval_trajs + final_trajs for r in t.to_records()])
    w.jsonl("audit.jsonl", run.audit_rows())
    w.library(run.library)
    mx.write_csv(w.path("metrics.csv"), series + [(n_steps, final)])
    payload = {"final": final.to_json(), "series": _series_json(series), "site_counts": run.site_counts, **(extra or {})}
    w.json("metrics.json", payload)
    return payload


def cmd_run(cfg: ExperimentConfig) -> int:
    specs, spec_map, policy_factory, judge, inducer = _learning_inputs(cfg)
    tasks = load_suite(cfg.tasks) if cfg.tasks else curriculum(specs, cfg.n_tasks, cfg.seed, cfg.horizon)
    eval_tasks = load_suite(cfg.eval_tasks) if cfg.eval_tasks else held_out(specs, cfg.n_eval, cfg.seed, cfg.horizon)
    _check_suite_sites(tasks, spec_map, cfg.tasks)
    _check_suite_sites(eval_tasks, spec_map, cfg.eval_tasks)
    lib0 = _initial_library(cfg)
    run = ind.run_task_defined(tasks, lib0, spec_map, policy_factory(), judge, inducer, cfg.bounds, cfg.horizon, cfg.retries)
    w = Writer(cfg.output)
    write_sites(w, specs)
    w.json("tasks.json", sim.suite_to_json(tasks))
    w.json("eval_tasks.json", sim.suite_to_json(eval_tasks))
    _report_outputs(w, cfg, run, lib0, eval_tasks, spec_map, len(tasks))
    w.meta("run", cfg)
    return 0


def cmd_explore(cfg: ExperimentConfig) -> int:
    specs, spec_map, policy_factory, judge, inducer = _learning_inputs(cfg)
    proposer = make_proposer(cfg.proposer)
    eval_tasks = load_suite(cfg.eval_tasks) if cfg.eval_tasks else held_out(specs, cfg.n_eval, cfg.seed, cfg.horizon)
    _check_suite_sites(eval_tasks, spec_map, cfg.eval_tasks)
    lib0 = _initial_library(cfg)
    run = ind.run_task_free(cfg.explore_steps, lib0, specs, policy_factory(), judge, inducer, proposer, cfg.bounds, cfg.horizon, cfg.selection, cfg.retries)
    w = Writer(cfg.output)
    write_sites(w, specs)
    w.json("eval_tasks.json", sim.suite_to_json(eval_tasks))
    coverage = {s.site: ind.interface_coverage(run.library, s) for s in specs}
    _report_outputs(w, cfg, run, lib0, eval_tasks, spec_map, cfg.explore_steps, {"coverage": coverage})
    w.meta("explore", cfg)
    return 0


@dataclass
class ContinualResult:
    library: SkillLibrary
    run: ind.LearningRun
    # (phase index, suite site) -> report
    matrix: dict[tuple[int, str], mx.MetricsReport]
    eval_trajectories: list[Trajectory]


def run_continual(cfg: ExperimentConfig, specs: Sequence[sim.SiteSpec] | None = None) -> ContinualResult:
    specs = list(specs) if specs is not None else site_pool(cfg)
    spec_map = {s.site: s for s in specs}
    if not cfg.phases:
        raise ConfigError("continual mode needs at least one phase")
    for p in cfg.phases:
        if p.site not in spec_map:
            raise ConfigError(f"phase references unknown site {p.site!r}; family has {sorted(spec_map)}")
    policy_factory = make_policy(cfg.policy)
    judge = make_judge(cfg.judge)
    inducer = make_inducer(cfg.inducer, cfg.bounds)
    suites = {p.site: held_out([spec_map[p.site]], cfg.n_eval, cfg.seed, cfg.horizon) for p in cfg.phases}
    lib = _initial_library(cfg)
    total = ind.LearningRun(lib, [], [])
    matrix: dict[tuple[int, str], mx.MetricsReport] = {}
    eval_trajs: list[Trajectory] = []
    step = 0
    for k, phase in enumerate(cfg.phases):
        tasks = sim.generate_tasks(spec_map[phase.site], phase.budget, cfg.seed + k, horizon=cfg.horizon)
        run = ind.run_task_defined(tasks, lib, spec_map, policy_factory(), judge, inducer, cfg.bounds, cfg.horizon, cfg.retries, prefix="t", start_step=step)
        step += len(tasks)
        lib = run.library
        total.trajectories.extend(run.trajectories)
        total.outcomes.extend(run.outcomes)
        for site, count in run.site_counts.items():
            total.site_counts[site] = total.site_counts.get(site, 0) + count
        for origin in dict.fromkeys(p.site for p in cfg.phases):
            batch, trajs = mx.evaluate_suite(suites[origin], lib, spec_map, policy_factory, cfg.gamma, prefix=f"c{k}")
            eval_trajs.extend(trajs)
            matrix[(k, origin)] = mx.report(batch)
    total.library = lib
    return ContinualResult(lib, total, matrix, eval_trajs)


def forgetting_rows(cfg: ExperimentConfig, matrix: dict[tuple[int, str], mx.MetricsReport]) -> list[dict]:
    rows = []
    origin_phase = {}
    for k, p in enumerate(cfg.phases):
        origin_phase.setdefault(p.site, k)
    for (k, suite), rep in sorted(matrix.items(), key=lambda kv: (kv[0][0], origin_phase[kv[0][1]])):
        o = origin_phase[suite]
        delta = ""
        if k >= o:
            delta = rep.success_rate - matrix[(o, suite)].success_rate
        rows.append(
            {
                "phase": k,
                "phase_site": cfg.phases[k].site,
                "suite": suite,
                "success_rate": rep.success_rate,
                "mean_steps": "" if rep.mean_steps is None else rep.mean_steps,
                "delta_sr": delta,
            }
        )
    return rows


def _write_continual(w: Writer, cfg: ExperimentConfig, specs: Sequence[sim.SiteSpec], result: ContinualResult) -> list[dict]:
    write_sites(w, specs)
    w.jsonl("trajectories.jsonl", result.run.trajectory_rows() + [r for t in result.eval_trajectories for r in t.to_records()])
    w.jsonl("audit.jsonl", result.run.audit_rows())
    w.library(result.library)
    rows = forgetting_rows(cfg, result.matrix)
    _write_forgetting(w, rows)
    w.json("metrics.json", {"forgetting": rows, "site_counts": result.run.site_counts})
    return rows


def _write_forgetting(w: Writer, rows: Sequence[dict]) -> None:
    with open(w.path("forgetting.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=FORGETTING_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def average_rows(runs: Sequence[Sequence[dict]]) -> list[dict]:
    """Cell-wise mean of forgetting tables from repeated runs (blank cells stay blank)."""
    out = []
    for cells in zip(*runs):
        row = dict(cells[0])
        for key in ("success_rate", "mean_steps", "delta_sr"):
            values = [c[key] for c in cells if c[key] != ""]
            row[key] = sum(values) / len(values) if values else ""
        out.append(row)
    return out


def cmd_continual(cfg: ExperimentConfig) -> int:
    specs = site_pool(cfg)
    root = Writer(cfg.output)
    if cfg.repeats == 1:
        _write_continual(root, cfg, specs, run_continual(cfg, specs))
    else:
        # each repeat is a complete, replayable artifact set; the top level holds the mean
        tables = [_write_continual(Writer(root.path(f"repeat-{r}")), cfg, specs, run_continual(cfg, specs)) for r in range(cfg.repeats)]
        rows = average_rows(tables)
        _write_forgetting(root, rows)
        root.json("metrics.json", {"forgetting": rows, "repeats": cfg.repeats})
    root.meta("continual", cfg)
    return 0


def compute_metrics(log_paths: Sequence[str | Path], lib_path: str | Path | None, gamma: float, select: str | None = None) -> mx.MetricsReport:
    rows: list[dict] = []
    for p in log_paths:
        if not Path(p).exists():
            raise ArtifactError(f"missing log file: {p}")
        rows.extend(read_jsonl(p))
    trajs = trajectories_from_records(rows)
    if select:
        trajs = [t for t in trajs if t.id.startswith(select)]
    if not trajs:
        raise mx.EmptySet("no trajectories in the given logs")
    lib = load_library(lib_path) if lib_path else empty_library()
    return mx.report(mx.EvaluationBatch.of(trajs, lib, gamma=gamma))


def cmd_metrics(log_paths: Sequence[str], lib_path: str | None, gamma: float, out: str | None, select: str | None = None) -> int:
    rep = compute_metrics(log_paths, lib_path, gamma, select)
    if out:
        w = Writer(out)
        mx.write_csv(w.path("metrics.csv"), [(0, rep)])
        w.json("metrics.json", rep.to_json())
    print(json.dumps(rep.to_json(), sort_keys=True))
    return 0


# ------------------------------------------------------------------- replay


@dataclass
class ReplayVerdict:
    traj_id: str
    match: bool
    detail: str = ""
    step: int | None = None

    def __str__(self) -> str:
        if self.match:
            return f"match {self.traj_id}"
        where = f" at step {self.step}" if self.step is not None else ""
        return f"mismatch {self.traj_id}{where}: {self.detail}"


def replay_trajectory(traj: Trajectory, spec: sim.SiteSpec, final_lib: SkillLibrary) -> ReplayVerdict:
    """Re-execute the logged statements and compare every digest."""
    try:
        lib = ind.apply_files(library_prefix(final_lib, traj.library_size), traj.overlay)
    except Exception as exc:  # a corrupt overlay is a mismatch, not a crash
        return ReplayVerdict(traj.id, False, f"cannot rebuild library: {exc}")
    if not traj.records:
        state = sim.initial_state(spec)
        ok = state.digest() == traj.terminal
        return ReplayVerdict(traj.id, ok, "" if ok else "terminal digest differs", None if ok else 0)
    try:
        policy = ScriptedPolicy({traj.task_id: [r.statement for r in traj.records]}, id="replay")
    except DSLError as exc:
        bad = next((r.index for r in traj.records if _unparseable(r.statement)), None)
        return ReplayVerdict(traj.id, False, f"unparseable statement: {exc}", bad)
    again = execute_task(spec, traj.task, lib, policy, horizon=len(traj.records), traj_id=traj.id)
    for old, new in zip(traj.records, again.records):
        if old != new:
            fields = [f for f in ("statement", "obs", "primitives", "events", "state", "chain", "skill_id") if getattr(old, f) != getattr(new, f)]
            return ReplayVerdict(traj.id, False, f"{', '.join(fields)} differ", old.index)
    if len(again.records) != len(traj.records):
        return ReplayVerdict(traj.id, False, f"{len(again.records)} steps replayed, {len(traj.records)} logged", min(len(again.records), len(traj.records)))
    if again.terminal != traj.terminal:
        return ReplayVerdict(traj.id, False, "terminal digest differs", len(traj.records) - 1)
    if again.success != traj.success:
        return ReplayVerdict(traj.id, False, f"success flag {again.success} vs logged {traj.success}")
    return ReplayVerdict(traj.id, True)


def _unparseable(text: str) -> bool:
    from .dsl import parse_statement

    try:
        parse_statement(text)
    except DSLError:
        return True
    return False


def load_artifacts(root: str | Path) -> tuple[dict[str, sim.SiteSpec], SkillLibrary, list[Trajectory]]:
    root = Path(root)
    if not root.is_dir():
        raise ArtifactError(f"missing artifacts directory: {root}")
    specs = read_sites(root)
    log_path = root / "trajectories.jsonl"
    if not log_path.exists():
        raise ArtifactError(f"missing artifact: {log_path}")
    lib = load_library(root / "library") if (root / "library").is_dir() else empty_library()
    return specs, lib, trajectories_from_records(read_jsonl(log_path))


def cmd_replay(traj_ids: Sequence[str], artifacts: str | Path, replay_all: bool = False) -> tuple[int, list[ReplayVerdict]]:
    specs, lib, trajs = load_artifacts(artifacts)
    by_id = {t.id: t for t in trajs}
    targets = list(by_id) if replay_all else list(traj_ids)
    if not targets:
        raise ConfigError("name at least one trajectory id, or pass --all")
    verdicts = []
    for tid in targets:
        if tid not in by_id:
            raise ArtifactError(f"trajectory {tid!r} not found in {artifacts}")
        traj = by_id[tid]
        if traj.site not in specs:
            raise ArtifactError(f"site {traj.site!r} missing from sites.json")
        verdicts.append(replay_trajectory(traj, specs[traj.site], lib))
    return (0 if all(v.match for v in verdicts) else 1), verdicts


__all__ = [
    "ArtifactError",
    "ConfigError",
    "ExperimentConfig",
    "Phase",
    "ReplayVerdict",
    "cmd_continual",
    "cmd_explore",
    "cmd_metrics",
    "cmd_replay",
    "cmd_run",
    "compute_metrics",
    "load_config",
    "replay_trajectory",
    "run_continual",
]


# keep exception families importable for the CLI's exit-code mapping
RUNTIME_ERRORS = (PolicyFault, SchemaMismatch, mx.MetricsError, ind.InductionError, sim.SimError, ArtifactError)
