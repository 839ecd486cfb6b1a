from __future__ import annotations

from fractions import Fraction

import pytest

from webskills import metrics as m
from webskills import sim
from webskills.dsl import parse_skill_file
from webskills.induction import ProgrammaticJudge, ScriptedInducer, run_task_defined
from webskills.library import empty_library, register_implementation, register_interface
from webskills.runtime import OraclePolicy, StepRecord, Trajectory

CHAIN_IFACE = """
interface AbstractChain category chain {
  abstract k1();
  abstract k2();
  abstract k3();
}
"""

CHAIN_IMPL = """
implementation ChainImpl for AbstractChain site s {
  skill k3() { call k1(); call k2(); call k1() }
  skill k2() { call k1(); call k1() }
  skill k1() { click(#a); click(#b) }
}
"""


def chain_library():
    lib = register_interface(empty_library(), parse_skill_file(CHAIN_IFACE))
    return register_implementation(lib, parse_skill_file(CHAIN_IMPL))


def traj(tid, steps, success, skills=(), task_id=None):
    task = sim.Task(task_id or tid, "s", "", "searched")
    calls = list(skills) + [None] * (steps - len(skills))
    records = [StepRecord(i, "o", "noop", sid, (), (), "x", "c") for i, sid in enumerate(calls)]
    return Trajectory(tid, task, "fixture", records, "stop" if success else "horizon", success)


def test_success_rate_examples():
    four = [traj(f"t{i}", 3, i < 3) for i in range(4)]
    assert m.success_rate_exact(m.EvaluationBatch.of(four, empty_library())) == Fraction(3, 4)
    none = [traj(f"t{i}", 3, False) for i in range(5)]
    assert m.success_rate(m.EvaluationBatch.of(none, empty_library())) == 0.0
    every = [traj(f"t{i}", 3, True) for i in range(5)]
    assert m.success_rate(m.EvaluationBatch.of(every, empty_library())) == 1.0
    with pytest.raises(m.EmptyTaskSet):
        m.success_rate(m.EvaluationBatch.of([], empty_library()))


def test_success_counts_tasks_not_attempts():
    batch = m.EvaluationBatch.of([traj("a1", 3, False, task_id="a"), traj("a2", 3, True, task_id="a"), traj("b", 3, False)], empty_library())
    assert m.success_rate_exact(batch) == Fraction(1, 2)
    with pytest.raises(m.MetricsError):
        m.EvaluationBatch.of([traj("z", 1, True)], empty_library(), tasks=["a"])


def test_mean_steps_examples():
    batch = m.EvaluationBatch.of([traj("a", 3, True), traj("b", 5, True), traj("c", 9, False)], empty_library())
    assert m.mean_steps(batch) == 4.0
    assert m.mean_steps(m.EvaluationBatch.of([traj("c", 9, False)], empty_library())) is None
    lib = chain_library()
    one_call = traj("d", 1, True, skills=["AbstractChain.k3@s"])
    assert m.mean_steps(m.EvaluationBatch.of([one_call], lib)) == 1.0


def test_skill_reusability_examples():
    lib = chain_library()
    ids = ["AbstractChain.k1@s", "AbstractChain.k2@s", "AbstractChain.k3@s"]
    only_k1 = m.EvaluationBatch.of([traj("a", 2, True, [ids[0], ids[0]]), traj("b", 2, True)], lib)
    assert m.skill_reusability_exact(only_k1) == Fraction(1, 3)
    assert m.skill_reusability(m.EvaluationBatch.of([traj("a", 4, True)], lib)) == 0.0
    assert m.skill_reusability(m.EvaluationBatch.of([traj("a", 3, True, ids)], lib)) == 1.0
    with pytest.raises(m.EmptyLibrary):
        m.skill_reusability(m.EvaluationBatch.of([traj("a", 4, True)], empty_library()))


def test_adoption_examples():
    lib = chain_library()
    five = [traj(f"t{i}", 2, True, ["AbstractChain.k1@s"] if i < 2 else []) for i in range(5)]
    assert m.adoption_rate_exact(m.EvaluationBatch.of(five, lib)) == Fraction(2, 5)
    assert m.adoption_rate(m.EvaluationBatch.of([traj("a", 2, True)], empty_library())) == 0.0
    assert m.task_coverage(m.EvaluationBatch.of([traj("a", 2, True, ["AbstractChain.k1@s"])], lib)) == 1.0
    with pytest.raises(m.EmptySet):
        m.adoption_rate(m.EvaluationBatch.of([], lib, tasks=["a"]))


def test_compositionality_examples(toy_library):
    lib = chain_library()
    assert lib.creation_log[-3:] == ("AbstractChain.k1@s", "AbstractChain.k2@s", "AbstractChain.k3@s")
    # k2 calls k1 twice and still contributes 1; k3 contributes 2
    assert m.compositionality_exact(lib) == Fraction(0 + 1 + 2, 3)
    flat = register_interface(empty_library(), parse_skill_file(CHAIN_IFACE))
    flat = register_implementation(flat, parse_skill_file("""
implementation Flat for AbstractChain site s {
  skill k1() { click(#a); click(#b) }
}
"""))
    assert m.compositionality(flat) == 0.0
    with pytest.raises(m.EmptyLibrary):
        m.compositionality(empty_library())


def test_mean_objective_examples():
    lib = empty_library()
    half = [traj("a", 2, True), traj("b", 6, False)]
    assert m.mean_objective(m.EvaluationBatch.of(half, lib, gamma=0.0)) == 0.5
    assert m.mean_objective_exact(m.EvaluationBatch.of([traj("a", 4, True)], lib)) == Fraction(96, 100)
    assert m.mean_objective_exact(m.EvaluationBatch.of([traj("a", 4, False)], lib)) == Fraction(-4, 100)
    with pytest.raises(m.NegativeGamma):
        m.mean_objective(m.EvaluationBatch.of([traj("a", 4, True)], lib, gamma=-0.1))


def test_ratios_invariant_under_duplication():
    lib = chain_library()
    base = [
        traj("a", 2, True, ["AbstractChain.k1@s"]),
        traj("b", 5, False),
        traj("c", 3, True, ["AbstractChain.k2@s", "AbstractChain.k1@s"]),
    ]
    doubled = base + [traj(t.id + "'", t.count_steps(), t.success, t.skill_ids(), task_id=t.task_id) for t in base]
    r1, r2 = m.report(m.EvaluationBatch.of(base, lib)), m.report(m.EvaluationBatch.of(doubled, lib))
    for name in ("success_rate", "mean_steps", "skill_reusability", "adoption_rate", "compositionality", "mean_objective"):
        assert getattr(r1, name) == getattr(r2, name), name


def test_report_on_empty_library_is_zero():
    rep = m.report(m.EvaluationBatch.of([traj("a", 3, True)], empty_library()))
    assert rep.skill_reusability == 0.0 and rep.compositionality == 0.0
    assert rep.row(0)["step"] == 0 and list(rep.row(0)) == list(m.CSV_COLUMNS)


def test_snapshot_step_counts():
    assert len(m.snapshot_steps(100, 5)) == 20
    assert m.snapshot_steps(4, 10) == [0]
    with pytest.raises(ValueError):
        m.snapshot_steps(10, 0)


def test_snapshot_series_constant_library(shop_sites):
    spec = shop_sites[0]
    evals = sim.generate_tasks(spec, 4, 1)
    series = m.snapshot_series([], evals, 2, empty_library(), {spec.site: spec}, 6)
    assert [s for s, _ in series] == [0, 2, 4]
    assert len({r for _, r in series}) == 1


def test_snapshot_series_improves_with_learning(shop_sites, tmp_path):
    spec = shop_sites[0]
    tasks = sim.generate_tasks(spec, 6, 3)
    run = run_task_defined(tasks, empty_library(), [spec], OraclePolicy(), ProgrammaticJudge(), ScriptedInducer())
    series = m.snapshot_series(run.outcomes, sim.generate_tasks(spec, 5, 99, prefix="e"), 1, empty_library(), {spec.site: spec}, 6)
    steps = [r.mean_steps for _, r in series]
    assert steps == sorted(steps, reverse=True) and steps[-1] < steps[0]
    assert all(r.success_rate == 1.0 for _, r in series)
    m.write_csv(tmp_path / "m.csv", series)
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == ",".join(m.CSV_COLUMNS) and len(lines) == 7
