from __future__ import annotations

import json

import httpx
import pytest

from webskills import induction as ind
from webskills import runtime as rt
from webskills import sim
from webskills.dsl import Call, Lit, Prim, Stop, format_statement, parse_statement
from webskills.library import empty_library, expand
from webskills.remote import EndpointConfig


@pytest.fixture(scope="module")
def seed42():
    return sim.generate_site_family("shopping", 3, 42)[0]


@pytest.fixture(scope="module")
def learned(seed42):
    """Library holding search and add_to_cart for the seed-42 site."""
    tasks = [sim.make_task("a", seed42, "search", {"query": "lamp"}), sim.make_task("b", seed42, "add_to_cart", {"query": "lamp"})]
    run = ind.run_task_defined(tasks, empty_library(), [seed42], rt.OraclePolicy(), ind.ProgrammaticJudge(), ind.ScriptedInducer())
    return run.library


def mug_task(spec, horizon=15):
    return sim.make_task("mug", spec, "add_to_cart", {"query": "mug"}, horizon)


def test_oracle_on_empty_library_takes_witness_length(seed42):
    witness = sim.task_witness(seed42, mug_task(seed42))
    traj = rt.execute_task(seed42, mug_task(seed42), empty_library(), rt.OraclePolicy())
    assert traj.success and traj.count_steps() == len(witness) == 6


def test_oracle_with_skills_is_shorter(seed42, learned):
    traj = rt.execute_task(seed42, mug_task(seed42), learned, rt.OraclePolicy())
    assert traj.success and traj.count_steps() <= 3
    assert [r.statement for r in traj.records] == ['call search("mug")', "call add_to_cart()"]
    assert traj.skill_ids() == [f"AbstractShoppingSite.search@{seed42.site}", f"AbstractShoppingSite.add_to_cart@{seed42.site}"]
    assert sum(r.expansion_length for r in traj.records) == 6


def test_horizon_cutoff(seed42):
    traj = rt.execute_task(seed42, mug_task(seed42), empty_library(), rt.OraclePolicy(), horizon=1)
    assert not traj.success and traj.count_steps() == 1


def test_scripted_policy_cases(seed42):
    task = mug_task(seed42)
    empty = rt.execute_task(seed42, task, empty_library(), rt.scripted_policy({"mug": []}))
    assert not empty.success and [r.statement for r in empty.records] == ["stop"]
    witness = [format_statement(p) for p in sim.task_witness(seed42, task)]
    good = rt.execute_task(seed42, task, empty_library(), rt.scripted_policy({"mug": witness}))
    assert good.success
    bad = rt.execute_task(seed42, task, empty_library(), rt.scripted_policy({"mug": ["click(#nope)"] * 3}))
    assert not bad.success and bad.fault is None and bad.count_steps() == 4
    assert len({r.state for r in bad.records[:3]}) == 3  # step counter still advances
    missing = rt.execute_task(seed42, task, empty_library(), rt.scripted_policy({}))
    assert missing.fault and "no script" in missing.fault


def test_unresolvable_call_is_policy_fault_and_applies_nothing(seed42, learned):
    task = mug_task(seed42)
    script = {"mug": ['call search("mug")', 'call buy_item("mug")']}
    traj = rt.execute_task(seed42, task, learned, rt.scripted_policy(script))
    assert traj.fault and "checkout" in traj.fault
    assert traj.count_steps() == 1
    assert traj.terminal == traj.records[0].state


def test_skill_and_primitive_executions_agree(seed42, learned):
    task = mug_task(seed42)
    calls = [Call("search", (Lit("mug", "text"),)), Call("add_to_cart")]
    prims = [p for c in calls for p in expand(learned, seed42.site, c)]
    a = rt.execute_task(seed42, task, learned, rt.scripted_policy({"mug": calls}))
    b = rt.execute_task(seed42, task, learned, rt.scripted_policy({"mug": prims}))
    assert a.terminal == b.terminal
    assert a.count_steps() == 2 and b.count_steps() == 6


def test_replay_from_log_reproduces_digests(seed42, learned, tmp_path):
    traj = rt.execute_task(seed42, mug_task(seed42), learned, rt.OraclePolicy())
    rt.write_jsonl(tmp_path / "t.jsonl", traj.to_records())
    (loaded,) = rt.trajectories_from_records(rt.read_jsonl(tmp_path / "t.jsonl"))
    assert loaded.records == traj.records and loaded.terminal == traj.terminal
    again = rt.execute_task(seed42, loaded.task, learned, rt.scripted_policy({"mug": [r.statement for r in loaded.records]}))
    assert again.terminal == traj.terminal and again.records == traj.records


def test_schema_mismatch():
    with pytest.raises(rt.SchemaMismatch):
        rt.trajectories_from_records([{"schema": "webskills.trajectory/0", "type": "end", "traj": "x"}])


def test_memory_window():
    mem = rt.WorkingMemory("q", window=3)
    for i in range(10):
        mem.record(str(i), "noop")
    assert [d for d, _ in mem.history] == ["7", "8", "9"]


def test_plan_is_monotone_in_library(seed42, learned):
    task = sim.make_task("buy", seed42, "checkout", {"query": "mug"})
    witness = sim.task_witness(seed42, task)
    lengths = [len(rt.plan_statements(seed42, lib, witness)) for lib in (empty_library(), learned)]
    assert lengths[0] == len(witness) and lengths[1] < lengths[0]


# -- remote backend ---------------------------------------------------------------


def stub(replies):
    calls = []

    def handler(request: httpx.Request) -> httpx.Response:
        calls.append(json.loads(request.content))
        reply = replies[min(len(calls) - 1, len(replies) - 1)]
        if isinstance(reply, int):
            return httpx.Response(reply)
        return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": reply}}]})

    return httpx.MockTransport(handler), calls


def remote(replies, retries=3):
    transport, calls = stub(replies)
    policy = rt.remote_policy(EndpointConfig("http://model.test/v1", "m", retries=retries), transport)
    return policy, calls


def ask(policy, spec):
    task = mug_task(spec)
    _, obs = sim.reset(spec, task)
    return policy.propose_action(task.instruction, obs, rt.WorkingMemory(task.instruction), [])


def test_remote_parses_primitive(seed42):
    policy, calls = remote(["click(#q)"])
    assert ask(policy, seed42) == Prim("click", (Lit("q", "selector"),))
    assert calls[0]["model"] == "m"
    assert "Current page" in calls[0]["messages"][-1]["content"]


def test_remote_parses_call_with_fences(seed42):
    policy, _ = remote(['Sure.\n```\nCALL search("mug")\n```'])
    assert ask(policy, seed42) == Call("search", (Lit("mug", "text"),))


def test_remote_garbage_then_fault(seed42):
    policy, calls = remote(["I think you should click it", "???", "hmm"])
    with pytest.raises(rt.MalformedReply):
        ask(policy, seed42)
    assert len(calls) == 3


def test_remote_transport_errors(seed42):
    policy, calls = remote([500, 500, 500])
    with pytest.raises(rt.TransportError):
        ask(policy, seed42)
    policy, _ = remote([503, "stop"])
    assert ask(policy, seed42) == Stop()


def test_remote_fault_aborts_episode(seed42):
    policy, _ = remote(["nonsense"], retries=1)
    traj = rt.execute_task(seed42, mug_task(seed42), empty_library(), policy)
    assert not traj.success and traj.fault and traj.count_steps() == 0


def test_api_key_from_environment(seed42, monkeypatch):
    monkeypatch.setenv("WEBSKILLS_API_KEY", "sekrit")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        return httpx.Response(200, json={"choices": [{"message": {"content": "noop"}}]})

    policy = rt.remote_policy({"base_url": "http://model.test/v1", "model": "m"}, httpx.MockTransport(handler))
    assert ask(policy, seed42) == parse_statement("noop")
    assert seen["auth"] == "Bearer sekrit"
