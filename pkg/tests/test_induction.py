from __future__ import annotations

import httpx
import json
import pytest

from webskills import induction as ind
from webskills import runtime as rt
from webskills import sim
from webskills.dsl import Call, Lit, Prim, SkillDef
from webskills.library import SizeBounds, empty_library, validate_library
from webskills.remote import EndpointConfig


@pytest.fixture(scope="module")
def site():
    return sim.generate_site_family("shopping", 3, 42)[0]


def solved(spec, capability, query="mug", lib=None, tid="t"):
    task = sim.make_task(tid, spec, capability, {"query": query})
    traj = rt.execute_task(spec, task, lib or empty_library(), rt.OraclePolicy(), traj_id=tid)
    assert traj.success
    return task, traj


def test_judge_programmatic(site):
    task, traj = solved(site, "add_to_cart")
    ok, why = ind.judge_programmatic(traj, task)
    assert ok and "cart=" in why
    fail = rt.execute_task(site, task, empty_library(), rt.NullPolicy())
    assert ind.judge_programmatic(fail, task)[0] is False
    other = sim.make_task("other", site, "search", {"query": "mug"})
    with pytest.raises(ind.TaskMismatch):
        ind.judge_programmatic(traj, other)


def test_abstract_first_on_empty_library(site):
    _, traj = solved(site, "add_to_cart")
    assert traj.count_steps() == 6
    outcome = ind.induce_from_trajectory(traj, empty_library(), ind.ScriptedInducer(), "shopping", 0)
    p = outcome.proposal
    assert p.interface is not None and p.interface.id == "AbstractShoppingSite"
    assert list(p.methods) == ["search"]
    assert [type(n).__name__ for n in p.nodes()] == ["CategoryInterface", "SiteImplementation"]


def test_concrete_only_once_interface_exists(site):
    task, traj = solved(site, "add_to_cart")
    lib = ind.Proposal(site.site, "shopping", "AbstractShoppingSite", ind.interface_template("shopping")).apply(empty_library())
    outcome = ind.induce_from_trajectory(traj, lib, ind.ScriptedInducer(), "shopping", 1)
    assert outcome.proposal.interface is None and list(outcome.proposal.methods) == ["search"]


def test_one_statement_method_fails_validation(site):
    _, traj = solved(site, "search")
    iface = ind.interface_template("shopping")

    class TinyInducer:
        id = "tiny"

        def propose(self, traj, lib, category, step):
            body = (Prim("noop"),)
            return ind.Proposal(traj.site, category, iface.id, iface, {"checkout": SkillDef(iface.signature("checkout"), body, "induced", step)})

    with pytest.raises(ind.ValidationFailed) as info:
        ind.induce_from_trajectory(traj, empty_library(), TinyInducer(), "shopping", 0)
    assert [v.rule for v in info.value.violations] == ["size"]


def test_verification_commits_valid_skill(site):
    task, traj = solved(site, "search")
    outcome = ind.induce_from_trajectory(traj, empty_library(), ind.ScriptedInducer(), "shopping", 0)
    lib = ind.verify_and_commit(outcome, empty_library(), site, task, traj, ind.ProgrammaticJudge())
    assert outcome.accepted and outcome.verification.success
    assert [r.statement for r in outcome.verification.records] == ['call search("mug")']
    assert lib.creation_log[-1] == f"AbstractShoppingSite.search@{site.site}"
    assert validate_library(lib) == []


def test_skill_missing_final_enter_is_rejected(site):
    task, traj = solved(site, "search")
    outcome = ind.induce_from_trajectory(traj, empty_library(), ind.ScriptedInducer(), "shopping", 0)
    method = outcome.proposal.methods["search"]
    truncated = SkillDef(method.signature, method.body[:-1], "induced", 0)
    assert len(truncated.body) == 2
    outcome.proposal = ind.Proposal(site.site, "shopping", "AbstractShoppingSite", outcome.proposal.interface, {"search": truncated}, outcome.proposal.span, outcome.proposal.call)
    lib = ind.verify_and_commit(outcome, empty_library(), site, task, traj, ind.ProgrammaticJudge())
    assert not outcome.accepted and "verification failed" in outcome.reason
    assert lib == empty_library()


def test_reference_to_later_skill_rejected_before_replay(site):
    task, traj = solved(site, "search")
    iface = ind.interface_template("shopping")
    body = (Call("checkout"), Prim("noop"))
    proposal = ind.Proposal(site.site, "shopping", iface.id, iface, {"search": SkillDef(iface.signature("search"), body, "induced")}, (0, 3), Call("search", (Lit("mug", "text"),)))
    outcome = ind.ProposalOutcome(0, task.id, site.site, traj.id, True, proposal=proposal)
    lib = ind.verify_and_commit(outcome, empty_library(), site, task, traj, ind.ProgrammaticJudge())
    assert lib == empty_library()
    assert outcome.verification is None and outcome.violations


def test_task_defined_three_tasks(site):
    tasks = [
        sim.make_task("a", site, "search", {"query": "mug"}),
        sim.make_task("b", site, "add_to_cart", {"query": "lamp"}),
        sim.make_task("c", site, "checkout", {"query": "bottle"}),
    ]
    lib, trajs, outcomes = ind.run_task_defined(tasks, empty_library(), [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    assert len(lib.interfaces) == 1
    assert sorted(lib.implementation(site.site, "AbstractShoppingSite").methods) == ["add_to_cart", "checkout", "search"]
    main = [t for t in trajs if not t.id.endswith(".v")]
    assert not main[0].uses_skills() and main[1].uses_skills() and main[2].uses_skills()
    assert all(o.accepted for o in outcomes)


def test_null_policy_leaves_library_alone(site):
    lib0 = ind.Proposal(site.site, "shopping", "AbstractShoppingSite", ind.interface_template("shopping")).apply(empty_library())
    tasks = sim.generate_tasks(site, 4, 0)
    lib, _, outcomes = ind.run_task_defined(tasks, lib0, [site], rt.NullPolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    assert lib == lib0 and not any(o.verdict for o in outcomes)


def test_duplicate_tasks_induce_nothing_new(site):
    tasks = sim.generate_tasks(site, 5, 0)
    first = ind.run_task_defined(tasks, empty_library(), [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    second = ind.run_task_defined(tasks, first.library, [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer(), start_step=5)
    assert second.library == first.library
    assert all(o.proposal is None for o in second.outcomes)


def test_library_only_grows(site):
    tasks = sim.generate_tasks(site, 10, 4)
    run = ind.run_task_defined(tasks, empty_library(), [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    logs = [ind.library_at(empty_library(), run.outcomes, s).creation_log for s in range(len(tasks) + 1)]
    for a, b in zip(logs, logs[1:]):
        assert b[: len(a)] == a
    assert logs[-1] == run.library.creation_log


def test_proposer_targets_gaps(site):
    lib = ind.Proposal(site.site, "shopping", "AbstractShoppingSite", ind.interface_template("shopping")).apply(empty_library())
    obs = sim.observe(sim.initial_state(site))
    assert ind.propose_task(obs, lib, ind.GapProposer(), site).predicate == "searched"
    run = ind.run_task_defined(sim.generate_tasks(site, 2, 0, capabilities=["search", "add_to_cart"]), lib, [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    # gap-enumeration oracle: first declared signature without a method
    gaps = [s.name for s in run.library.interfaces["shopping"].abstract_signatures if s.name not in run.library.implementation(site.site, "AbstractShoppingSite").methods]
    assert gaps[0] == "checkout"
    assert ind.propose_task(obs, run.library, ind.GapProposer(), site).capability == "checkout"


def test_proposer_fallbacks(site):
    obs = sim.observe(sim.initial_state(site))
    # affordance oracle: the home page shows the entry element of the search witness
    first = sim.parse_witness(site.witnesses["search"][:1])[0]
    assert first.args[0].value in {n.id for n in obs.nodes}
    assert ind.propose_task(obs, empty_library(), ind.GapProposer(), site).capability == "search"
    full = ind.run_task_free(5, empty_library(), [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer(), ind.GapProposer()).library
    assert ind.unimplemented(full, site) == []
    composites = {ind.propose_task(obs, full, ind.GapProposer(), site, step=k).capability for k in range(4)}
    assert composites == {"checkout", "add_to_wishlist"}


def test_task_free_coverage_non_decreasing(site):
    run = ind.run_task_free(10, empty_library(), [site], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer(), ind.GapProposer())
    cover = [ind.interface_coverage(ind.library_at(empty_library(), run.outcomes, s), site) for s in range(11)]
    assert all(a <= b for a, b in zip(cover, cover[1:]))
    assert cover[-1] == 1.0


def test_self_guided_visits_every_site():
    specs = sim.generate_site_family("coding", 2, 3)
    run = ind.run_task_free(4, empty_library(), specs, rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer(), ind.GapProposer())
    assert all(n >= 1 for n in run.site_counts.values())
    assert sum(run.site_counts.values()) == 4


def test_rejecting_judge_keeps_library(site):
    run = ind.run_task_free(6, empty_library(), [site], rt.OraclePolicy(), ind.RejectingJudge(), ind.ScriptedInducer(), ind.GapProposer())
    assert run.library == empty_library()


def test_coding_family_learns_every_signature():
    specs = sim.generate_site_family("coding", 2, 11)
    run = ind.run_task_free(12, empty_library(), specs, rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer(), ind.GapProposer())
    assert all(ind.interface_coverage(run.library, s) == 1.0 for s in specs)
    assert validate_library(run.library, SizeBounds()) == []


def test_remote_inducer_parses_files(site):
    _, traj = solved(site, "search")
    reply = (
        "```skill\ninterface AbstractShop category shopping {\n  abstract search(query);\n  abstract add_to_cart();\n}\n```\n"
        f"```skill\nimplementation {site.site}_impl for AbstractShop site {site.site} {{\n"
        + "\n".join(f"  {line}" for line in ["skill search(query) {"] + [
            s.replace('"mug"', "query") for s in (r.statement for r in traj.records)
        ] + ["}"])
        + "\n}\n```"
    )

    def handler(request):
        prompt = json.loads(request.content)["messages"][0]["content"]
        assert "No interface exists yet" in prompt
        return httpx.Response(200, json={"choices": [{"message": {"content": reply}}]})

    _, inducer, _ = ind.remote_backends(EndpointConfig("http://m.test", "m"), httpx.MockTransport(handler))
    proposal = inducer.propose(traj, empty_library(), "shopping", 0)
    assert proposal.interface.id == "AbstractShop" and list(proposal.methods) == ["search"]
    task = sim.make_task("t", site, "search", {"query": "mug"})
    outcome = ind.ProposalOutcome(0, "t", site.site, traj.id, True, proposal=proposal)
    lib = ind.verify_and_commit(outcome, empty_library(), site, task, traj, ind.ProgrammaticJudge())
    assert outcome.accepted, outcome.reason
    assert [r.statement for r in outcome.verification.records] == ['call search("mug")']
    assert len(lib) == 1
