"""Evaluation metrics over trajectory batches and library snapshots.

Ratios are computed with :class:`fractions.Fraction` and converted to float at
the end, so independent recomputations agree exactly.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import sim
from .library import SkillLibrary, reference_graph
from .runtime import OraclePolicy, PolicyBackend, Trajectory, execute_task

DEFAULT_GAMMA = 0.01

CSV_COLUMNS = (
    "step",
    "success_rate",
    "mean_steps",
    "skill_reusability",
    "adoption_rate",
    "compositionality",
    "mean_objective",
    "n_tasks",
    "n_trajectories",
    "n_successful_tasks",
    "n_successful_trajectories",
    "n_skills",
    "n_used_skills",
    "n_adopting",
    "library_size",
)


class MetricsError(Exception):
    pass


class EmptyTaskSet(MetricsError):
    pass


class EmptySet(MetricsError):
    pass


class EmptyLibrary(MetricsError):
    pass


class NegativeGamma(MetricsError):
    pass


@dataclass(frozen=True)
class EvaluationBatch:
    trajectories: tuple[Trajectory, ...]
    library: SkillLibrary
    tasks: tuple[str, ...]
    gamma: float = DEFAULT_GAMMA

    @classmethod
    def of(cls, trajectories: Iterable[Trajectory], library: SkillLibrary, tasks: Iterable[str] | None = None, gamma: float = DEFAULT_GAMMA) -> "EvaluationBatch":
        trajs = tuple(trajectories)
        ids = tuple(dict.fromkeys(tasks if tasks is not None else (t.task_id for t in trajs)))
        stray = {t.task_id for t in trajs} - set(ids)
        if stray:
            raise MetricsError(f"trajectories for tasks outside the task set: {sorted(stray)}")
        return cls(trajs, library, ids, gamma)


def library_skill_ids(lib: SkillLibrary) -> set[str]:
    return {sid for sid, _, _ in lib.skills()}


def success_rate_exact(batch: EvaluationBatch) -> Fraction:
    if not batch.tasks:
        raise EmptyTaskSet("no tasks to evaluate")
    solved = {t.task_id for t in batch.trajectories if t.success}
    return Fraction(sum(1 for tid in batch.tasks if tid in solved), len(batch.tasks))


def success_rate(batch: EvaluationBatch) -> float:
    return float(success_rate_exact(batch))


def mean_steps_exact(batch: EvaluationBatch) -> Fraction | None:
    lengths = [t.count_steps() for t in batch.trajectories if t.success]
    if not lengths:
        return None
    return Fraction(sum(lengths), len(lengths))


def mean_steps(batch: EvaluationBatch) -> float | None:
    value = mean_steps_exact(batch)
    return None if value is None else float(value)


def used_skills(batch: EvaluationBatch) -> set[str]:
    """Library skills named by a recorded call (outermost calls only)."""
    called = {sid for t in batch.trajectories for sid in t.skill_ids()}
    return called & library_skill_ids(batch.library)


def skill_reusability_exact(batch: EvaluationBatch) -> Fraction:
    skills = library_skill_ids(batch.library)
    if not skills:
        raise EmptyLibrary("library has no skills")
    return Fraction(len(used_skills(batch)), len(skills))


def skill_reusability(batch: EvaluationBatch) -> float:
    return float(skill_reusability_exact(batch))


def adoption_rate_exact(batch: EvaluationBatch) -> Fraction:
    if not batch.trajectories:
        raise EmptySet("no trajectories to evaluate")
    return Fraction(sum(1 for t in batch.trajectories if t.uses_skills()), len(batch.trajectories))


def adoption_rate(batch: EvaluationBatch) -> float:
    """Share of trajectories with at least one skill call (also called task coverage)."""
    return float(adoption_rate_exact(batch))


task_coverage = adoption_rate


def compositionality_exact(lib: SkillLibrary) -> Fraction:
    log = lib.creation_log
    if not log:
        raise EmptyLibrary("creation log is empty")
    position = {sid: i for i, sid in enumerate(log)}
    graph = reference_graph(lib)
    total = 0
    for i, sid in enumerate(log):
        earlier = {t for t in graph.get(sid, []) if position.get(t, i) < i}
        total += len(earlier)
    return Fraction(total, len(log))


def compositionality(lib: SkillLibrary) -> float:
    return float(compositionality_exact(lib))


def mean_objective_exact(batch: EvaluationBatch) -> Fraction:
    if batch.gamma < 0:
        raise NegativeGamma(f"gamma must be non-negative, got {batch.gamma}")
    if not batch.trajectories:
        raise EmptySet("no trajectories to evaluate")
    gamma = Fraction(batch.gamma)
    # Fraction(0.01) is the exact binary value; limit_denominator recovers the decimal
    gamma = gamma.limit_denominator(10**12)
    total = sum((Fraction(int(t.success)) - gamma * t.count_steps() for t in batch.trajectories), Fraction(0))
    return total / len(batch.trajectories)


def mean_objective(batch: EvaluationBatch) -> float:
    return float(mean_objective_exact(batch))


@dataclass(frozen=True)
class MetricsReport:
    success_rate: float
    mean_steps: float | None
    skill_reusability: float
    adoption_rate: float
    compositionality: float
    mean_objective: float
    n_tasks: int
    n_trajectories: int
    n_successful_tasks: int
    n_successful_trajectories: int
    n_skills: int
    n_used_skills: int
    n_adopting: int
    library_size: int

    def to_json(self) -> dict:
        return asdict(self)

    def row(self, step: int) -> dict:
        data = {"step": step, **self.to_json()}
        return {k: ("" if data[k] is None else data[k]) for k in CSV_COLUMNS}


def report(batch: EvaluationBatch) -> MetricsReport:
    """All metrics at once; an empty library reports 0 reusability and compositionality."""
    skills = library_skill_ids(batch.library)
    has_trajs = bool(batch.trajectories)
    return MetricsReport(
        success_rate=success_rate(batch),
        mean_steps=mean_steps(batch),
        skill_reusability=skill_reusability(batch) if skills else 0.0,
        adoption_rate=adoption_rate(batch) if has_trajs else 0.0,
        compositionality=compositionality(batch.library) if batch.library.creation_log else 0.0,
        mean_objective=mean_objective(batch) if has_trajs else 0.0,
        n_tasks=len(batch.tasks),
        n_trajectories=len(batch.trajectories),
        n_successful_tasks=len({t.task_id for t in batch.trajectories if t.success} & set(batch.tasks)),
        n_successful_trajectories=sum(1 for t in batch.trajectories if t.success),
        n_skills=len(skills),
        n_used_skills=len(used_skills(batch)),
        n_adopting=sum(1 for t in batch.trajectories if t.uses_skills()),
        library_size=len(batch.library),
    )


# -------------------------------------------------------------- evaluation


def evaluate_suite(
    tasks: Sequence[sim.Task],
    lib: SkillLibrary,
    specs: dict[str, sim.SiteSpec],
    policy_factory: Callable[[], PolicyBackend] = OraclePolicy,
    gamma: float = DEFAULT_GAMMA,
    prefix: str = "e",
    horizon: int | None = None,
    workers: int = 4,
) -> tuple[EvaluationBatch, list[Trajectory]]:
    """Run every held-out task once against a fixed library snapshot.

    Episodes are independent, so they run on a small thread pool; ``map`` keeps
    the output in task order.
    """

    def one(task: sim.Task) -> Trajectory:
        return execute_task(specs[task.site], task, lib, policy_factory(), horizon, traj_id=f"{prefix}.{task.id}")

    if workers <= 1 or len(tasks) <= 1:
        trajs = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trajs = list(pool.map(one, tasks))
    return EvaluationBatch.of(trajs, lib, [t.id for t in tasks], gamma), trajs


def snapshot_steps(n_steps: int, interval: int) -> list[int]:
    if interval < 1:
        raise ValueError("interval must be >= 1")
    return list(range(0, max(n_steps, 1), interval))


def snapshot_series(
    outcomes: Sequence,
    eval_tasks: Sequence[sim.Task],
    interval: int,
    lib0: SkillLibrary,
    specs: dict[str, sim.SiteSpec],
    n_steps: int,
    policy_factory: Callable[[], PolicyBackend] = OraclePolicy,
    gamma: float = DEFAULT_GAMMA,
    sink: list[Trajectory] | None = None,
) -> list[tuple[int, MetricsReport]]:
    """Evaluate the held-out suite on library snapshots taken every ``interval`` steps.

    Snapshot ``s`` holds ``lib0`` plus every proposal accepted before step ``s``,
    so a run of ``n_steps`` yields ``ceil(n_steps / interval)`` points.
    """
    from .induction import library_at

    series = []
    for s in snapshot_steps(n_steps, interval):
        lib = library_at(lib0, outcomes, s)
        batch, trajs = evaluate_suite(eval_tasks, lib, specs, policy_factory, gamma, prefix=f"s{s:03d}")
        if sink is not None:
            sink.extend(trajs)
        series.append((s, report(batch)))
    return series


def write_csv(path: str | Path, series: Iterable[tuple[int, MetricsReport]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for step, rep in series:
            writer.writerow(rep.row(step))


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
