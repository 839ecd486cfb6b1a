"""Skill learning loops: judge, induce, verify by replay, and grow the library.

Two drivers share the same per-episode step.  ``run_task_defined`` consumes a
fixed curriculum; ``run_task_free`` lets a proposer pick its own tasks and
sites.  The library is threaded through iterations as immutable snapshots, so
nothing here can remove or rewrite an accepted skill.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Protocol, Sequence

import httpx

from . import sim
from .dsl import (
    Call,
    CategoryInterface,
    DSLError,
    Lit,
    Prim,
    Ref,
    SiteImplementation,
    SkillDef,
    SkillSignature,
    Statement,
    format_skill_file,
    format_statement,
    parse_skill_file,
)
from .library import (
    SizeBounds,
    SkillLibrary,
    SkillLibraryError,
    Violation,
    merge_node,
    validate_library,
)
from .remote import ChatClient, EndpointConfig, RemoteError
from .runtime import (
    PolicyBackend,
    PolicyFault,
    ScriptedPolicy,
    Trajectory,
    execute_task,
    unify_call,
)

log = logging.getLogger(__name__)

AUDIT_SCHEMA = "webskills.audit/1"


class InductionError(Exception):
    pass


class InducerFault(InductionError):
    pass


class ProposerFault(InductionError):
    pass


class TaskMismatch(InductionError):
    pass


class ValidationFailed(InductionError):
    def __init__(self, violations: Sequence[Violation]) -> None:
        self.violations = list(violations)
        rules = sorted({v.rule for v in self.violations})
        super().__init__(f"proposal rejected by validation ({', '.join(rules)})")


# ---------------------------------------------------------------- proposals


@dataclass(frozen=True)
class Proposal:
    """Library additions for one site: maybe an interface, plus new methods."""

    site: str
    category: str
    iface_id: str
    interface: CategoryInterface | None = None
    methods: dict[str, SkillDef] = field(default_factory=dict)
    # statement range [start, end) of the source trajectory the call replaces
    span: tuple[int, int] | None = None
    call: Call | None = None
    step: int = 0

    def nodes(self) -> list[CategoryInterface | SiteImplementation]:
        out: list[CategoryInterface | SiteImplementation] = []
        if self.interface is not None:
            out.append(self.interface)
        if self.methods:
            out.append(SiteImplementation(f"{self.site}_impl", self.iface_id, self.site, dict(self.methods), self.step))
        return out

    def files(self) -> list[str]:
        return [format_skill_file(n) for n in self.nodes()]

    def apply(self, lib: SkillLibrary) -> SkillLibrary:
        for node in self.nodes():
            lib = merge_node(lib, node)
        return lib


def apply_files(lib: SkillLibrary, files: Iterable[str]) -> SkillLibrary:
    for text in files:
        lib = merge_node(lib, parse_skill_file(text))
    return lib


@dataclass
class ProposalOutcome:
    step: int
    task_id: str
    site: str
    trajectory: str
    verdict: bool
    rationale: str = ""
    proposal: Proposal | None = None
    verification: Trajectory | None = None
    accepted: bool = False
    reason: str = ""
    violations: list[Violation] = field(default_factory=list)

    @property
    def skill_ids(self) -> list[str]:
        if self.proposal is None:
            return []
        return [f"{self.proposal.iface_id}.{n}@{self.site}" for n in self.proposal.methods]

    def to_json(self) -> dict:
        return {
            "schema": AUDIT_SCHEMA,
            "step": self.step,
            "task": self.task_id,
            "site": self.site,
            "traj": self.trajectory,
            "verdict": self.verdict,
            "rationale": self.rationale,
            "proposal": self.proposal.files() if self.proposal else None,
            "call": format_statement(self.proposal.call) if self.proposal and self.proposal.call else None,
            "verification": self.verification.id if self.verification else None,
            "verification_success": self.verification.success if self.verification else None,
            "accepted": self.accepted,
            "reason": self.reason,
            "violations": [[v.skill_id, v.rule, v.detail] for v in self.violations],
        }


def library_at(lib0: SkillLibrary, outcomes: Iterable[ProposalOutcome], step: int) -> SkillLibrary:
    """``lib0`` plus every accepted proposal made before learning step ``step``."""
    lib = lib0
    for o in outcomes:
        if o.accepted and o.step < step and o.proposal is not None:
            lib = o.proposal.apply(lib)
    return lib


def library_from_audit(lib0: SkillLibrary, rows: Iterable[dict], step: int | None = None) -> SkillLibrary:
    lib = lib0
    for row in rows:
        if row.get("schema") != AUDIT_SCHEMA:
            raise ValueError(f"expected schema {AUDIT_SCHEMA!r}, got {row.get('schema')!r}")
        if row["accepted"] and row["proposal"] and (step is None or row["step"] < step):
            lib = apply_files(lib, row["proposal"])
    return lib


# -------------------------------------------------------------------- judges


class JudgeBackend(Protocol):
    id: str

    def verdict(self, traj: Trajectory, task: sim.Task) -> tuple[bool, str]: ...


class ProgrammaticJudge:
    id = "programmatic"

    def verdict(self, traj: Trajectory, task: sim.Task) -> tuple[bool, str]:
        if traj.task_id != task.id or traj.site != task.site:
            raise TaskMismatch(f"trajectory {traj.id} is for task {traj.task_id}, not {task.id}")
        if traj.final_state is None:
            raise InductionError(f"trajectory {traj.id} carries no final state")
        ok, trace = sim.evaluate(task, traj.final_state, traj)
        return ok, f"{task.predicate}({', '.join(f'{k}={v!r}' for k, v in task.params)}): {trace}"


def judge_programmatic(traj: Trajectory, task: sim.Task) -> tuple[bool, str]:
    return ProgrammaticJudge().verdict(traj, task)


class RejectingJudge:
    """Says no to everything; useful to check that rejections leave the library alone."""

    id = "reject-all"

    def verdict(self, traj: Trajectory, task: sim.Task) -> tuple[bool, str]:
        return False, "rejected unconditionally"


JUDGE_PROMPT = """You review browser sessions. Given a goal, the commands that were run and the
final page, decide whether the goal was fully achieved. Answer on the first line with
YES or NO, then give a one-sentence reason."""


class RemoteJudge:
    def __init__(self, client: ChatClient) -> None:
        self.client = client
        self.id = f"remote-judge:{client.config.model}"

    def verdict(self, traj: Trajectory, task: sim.Task) -> tuple[bool, str]:
        if traj.task_id != task.id:
            raise TaskMismatch(f"trajectory {traj.id} is for task {traj.task_id}, not {task.id}")
        page = sim.observe(traj.final_state).render() if traj.final_state else "(unavailable)"
        steps = "\n".join(f"{r.index}. {r.statement}" for r in traj.records)
        user = f"Goal: {task.instruction}\n\nCommands:\n{steps}\n\nFinal page:\n{page}"
        messages = [{"role": "system", "content": JUDGE_PROMPT}, {"role": "user", "content": user}]
        try:
            reply = self.client.complete(messages).strip()
        except (httpx.HTTPError, RemoteError) as exc:
            return False, f"judge unavailable: {exc}"
        first = reply.splitlines()[0].strip().upper() if reply else ""
        return first.startswith("YES"), reply


# ------------------------------------------------------------------- inducers


class InducerBackend(Protocol):
    id: str

    def propose(self, traj: Trajectory, lib: SkillLibrary, category: str, step: int) -> Proposal | None: ...


def interface_template(category: str, step: int = 0) -> CategoryInterface:
    """The shared blueprint for a category, with defaults stamped at ``step``."""
    fam = sim.family(category)
    defaults = tuple(dataclasses.replace(d, created_at=step) for d in fam.defaults)
    return CategoryInterface(fam.interface_id, category, fam.signatures, defaults)


def _segments(traj: Trajectory) -> Iterator[tuple[int, int, tuple[str, ...]]]:
    """Runs of primitive statements that end in a milestone event."""
    start = 0
    for i, rec in enumerate(traj.records):
        is_prim = len(rec.primitives) == 1 and rec.skill_id is None and rec.statement == rec.primitives[0]
        if not is_prim:
            start = i + 1
            continue
        if rec.events:
            yield start, i + 1, rec.events
            start = i + 1


def abstract_segment(prims: Sequence[Prim], sig: SkillSignature) -> tuple[tuple[Prim, ...], tuple[Lit, ...]] | None:
    """Replace typed texts by the signature's parameters, in order of appearance."""
    texts: list[str] = []
    for p in prims:
        if p.kind == "type":
            value = p.args[1].value  # type: ignore[union-attr]
            if value not in texts:
                texts.append(value)  # type: ignore[arg-type]
    if len(texts) != sig.arity:
        return None
    names = {t: sig.params[i].name for i, t in enumerate(texts)}
    body = []
    for p in prims:
        if p.kind == "type":
            body.append(Prim("type", (p.args[0], Ref(names[p.args[1].value]))))  # type: ignore[union-attr,index]
        else:
            body.append(p)
    return tuple(body), tuple(Lit(t, "text") for t in texts)


class ScriptedInducer:
    """Deterministic inducer: one new method per trajectory, cut at milestone events.

    The first primitive-only run that ends in an event named after an
    unimplemented interface signature becomes that signature's method; typed
    literals become its parameters.  Signatures already implemented on the site
    are skipped, so repeated tasks induce nothing new.
    """

    id = "scripted"

    def propose(self, traj: Trajectory, lib: SkillLibrary, category: str, step: int) -> Proposal | None:
        iface = lib.interfaces.get(category)
        new_iface = None
        if iface is None:
            iface = new_iface = interface_template(category, step)
        impl = lib.implementation(traj.site, iface.id)
        have = set(impl.methods) if impl else set()
        for start, end, events in _segments(traj):
            name = events[-1]
            sig = iface.signature(name)
            if sig is None or name in have:
                continue
            prims = [p for r in traj.records[start:end] for p in _parse_prims(r.primitives)]
            shaped = abstract_segment(prims, sig)
            if shaped is None:
                continue
            body, args = shaped
            method = SkillDef(sig, body, origin="induced", created_at=step)
            return Proposal(traj.site, category, iface.id, new_iface, {name: method}, (start, end), Call(name, args), step)
        if new_iface is not None:
            return Proposal(traj.site, category, iface.id, new_iface, step=step)
        return None


def _parse_prims(texts: Iterable[str]) -> list[Prim]:
    from .dsl import parse_statement

    return [parse_statement(t) for t in texts]  # type: ignore[misc]


INDUCTION_PROMPT = """You turn a successful browser session into reusable skills.

Websites of the same kind share one interface: a list of abstract operations such as
searching or adding to a cart.  Each website then gets its own implementation that spells
out, command by command, how one operation is carried out on that website.

{interface_section}

Choose ONE interface operation that the session below performed and that the website
"{site}" does not implement yet.  Write it as an implementation file in this format:

```skill
implementation {site}_impl for {iface_id} site {site} {{
  skill <operation>(<params>) {{
    click(#element)
    type(#element, param)
    press("Enter")
  }}
}}
```

Rules:
- the body holds between {min_steps} and {max_steps} commands copied from the session;
- text the user typed becomes a parameter named as in the interface;
- do not reimplement: {implemented}.
{interface_rule}
Session goal: {instruction}
Session commands:
{steps}
"""


class RemoteInducer:
    def __init__(self, client: ChatClient, bounds: SizeBounds | None = None) -> None:
        self.client = client
        self.bounds = bounds or SizeBounds()
        self.id = f"remote-inducer:{client.config.model}"

    def prompt(self, traj: Trajectory, lib: SkillLibrary, category: str) -> str:
        iface = lib.interfaces.get(category)
        if iface is None:
            section = f'No interface exists yet for the "{category}" category.'
            rule = (
                f"- first write the interface as its own ```skill block: "
                f"`interface <Name> category {category} {{ abstract op(param); ... }}`;\n"
            )
            iface_id = "<Name>"
            implemented: list[str] = []
        else:
            section = "The interface for this category:\n```skill\n" + format_skill_file(iface) + "```"
            rule = ""
            iface_id = iface.id
            impl = lib.implementation(traj.site, iface.id)
            implemented = sorted(impl.methods) if impl else []
        steps = "\n".join(f"{r.index}. {r.statement}" for r in traj.records)
        return INDUCTION_PROMPT.format(
            interface_section=section,
            site=traj.site,
            iface_id=iface_id,
            min_steps=self.bounds.min_steps,
            max_steps=self.bounds.max_steps,
            implemented=", ".join(implemented) or "(nothing yet)",
            interface_rule=rule,
            instruction=traj.task.instruction,
            steps=steps,
        )

    def propose(self, traj: Trajectory, lib: SkillLibrary, category: str, step: int) -> Proposal | None:
        messages = [{"role": "user", "content": self.prompt(traj, lib, category)}]
        last_error: Exception | None = None
        for _ in range(max(1, self.client.config.retries)):
            try:
                reply = self.client.complete(messages)
                return self._parse(reply, traj.site, category, step, lib)
            except (httpx.HTTPError, RemoteError, DSLError, InducerFault) as exc:
                last_error = exc
        raise InducerFault(f"inducer produced no usable proposal: {last_error}")

    def _parse(self, reply: str, site: str, category: str, step: int, lib: SkillLibrary) -> Proposal:
        blocks = re.findall(r"```[a-zA-Z]*\n(.*?)```", reply, re.S) or [reply]
        iface = None
        methods: dict[str, SkillDef] = {}
        for block in blocks:
            node = parse_skill_file(block)
            if isinstance(node, CategoryInterface):
                iface = dataclasses.replace(
                    node, default_methods=tuple(dataclasses.replace(d, created_at=step) for d in node.default_methods)
                )
            else:
                if node.site != site:
                    raise InducerFault(f"implementation targets site {node.site!r}, expected {site!r}")
                methods.update(
                    {n: dataclasses.replace(m, origin="induced", created_at=step) for n, m in node.methods.items()}
                )
        existing = lib.interfaces.get(category)
        if existing is None and iface is None:
            raise InducerFault("no interface exists for this category and none was proposed")
        target = existing or iface
        return Proposal(site, category, target.id, iface if existing is None else None, methods, step=step)  # type: ignore[union-attr]


# ------------------------------------------------------------- induce + verify


def _validate(lib: SkillLibrary, proposal: Proposal, bounds: SizeBounds) -> tuple[SkillLibrary, list[Violation]]:
    if proposal.interface is None and proposal.category not in lib.interfaces:
        return lib, [Violation(f"{proposal.iface_id}@{proposal.site}", "dangling", "implementation before its interface")]
    try:
        tentative = proposal.apply(lib)
    except SkillLibraryError as exc:
        return lib, [Violation(f"{proposal.iface_id}@{proposal.site}", _rule_for(exc), str(exc))]
    baseline = set(validate_library(lib, bounds))
    fresh = [v for v in validate_library(tentative, bounds) if v not in baseline]
    return tentative, fresh


def _rule_for(exc: Exception) -> str:
    name = type(exc).__name__
    return {
        "CyclicReference": "cycle",
        "UnresolvedCall": "ordering",
        "ConformanceViolation": "conformance",
        "DuplicateSkill": "duplicate",
        "DuplicateSite": "duplicate",
        "DuplicateCategory": "duplicate",
    }.get(name, "conformance")


def induce_from_trajectory(
    traj: Trajectory,
    lib: SkillLibrary,
    inducer: InducerBackend,
    category: str,
    step: int,
    bounds: SizeBounds | None = None,
) -> ProposalOutcome:
    """Ask the inducer for a proposal and validate it; raises ValidationFailed on violations."""
    if not traj.success:
        raise InductionError(f"trajectory {traj.id} did not succeed")
    outcome = ProposalOutcome(step, traj.task_id, traj.site, traj.id, True)
    proposal = inducer.propose(traj, lib, category, step)
    outcome.proposal = proposal
    if proposal is None:
        outcome.reason = "nothing new to induce"
        return outcome
    _, violations = _validate(lib, proposal, bounds or SizeBounds())
    if violations:
        outcome.violations = violations
        raise ValidationFailed(violations)
    return outcome


def constrained_statements(traj: Trajectory, proposal: Proposal, tentative: SkillLibrary) -> list[Statement] | None:
    """The original statements with the induced run replaced by its call."""
    original = traj.statements()
    if not proposal.methods:
        return original
    if proposal.span is not None and proposal.call is not None:
        a, b = proposal.span
        return original[:a] + [proposal.call] + original[b:]
    # no span given: find the first run of primitives some new method reproduces
    for a in range(len(original)):
        for b in range(len(original), a, -1):
            run = original[a:b]
            if not all(isinstance(s, Prim) for s in run):
                continue
            for name in proposal.methods:
                call = unify_call(tentative, traj.site, f"{proposal.iface_id}.{name}", tuple(run))  # type: ignore[arg-type]
                if call is not None:
                    return original[:a] + [Call(name, call.args)] + original[b:]
    return None


def verify_and_commit(
    outcome: ProposalOutcome,
    lib: SkillLibrary,
    spec: sim.SiteSpec,
    task: sim.Task,
    source: Trajectory,
    judge: JudgeBackend,
    horizon: int | None = None,
    bounds: SizeBounds | None = None,
) -> SkillLibrary:
    """Re-solve ``task`` with the proposal in place; commit only on a judged success."""
    proposal = outcome.proposal
    if proposal is None:
        return lib
    tentative, violations = _validate(lib, proposal, bounds or SizeBounds())
    if violations:
        outcome.violations = violations
        outcome.reason = "validation failed"
        return lib
    statements = constrained_statements(source, proposal, tentative)
    if statements is None:
        outcome.reason = "proposed skill does not reproduce any part of the trajectory"
        return lib
    policy = ScriptedPolicy({task.id: statements}, id="verify")
    vtraj = execute_task(spec, task, tentative, policy, horizon, traj_id=f"{source.id}.v")
    vtraj.library_size = len(lib)
    vtraj.overlay = tuple(proposal.files())
    outcome.verification = vtraj
    ok, why = judge.verdict(vtraj, task) if vtraj.fault is None else (False, vtraj.fault)
    if not ok:
        outcome.reason = f"verification failed: {why}"
        return lib
    outcome.accepted = True
    outcome.reason = "verified"
    return tentative


# ---------------------------------------------------------- task-defined learning


@dataclass
class LearningRun:
    library: SkillLibrary
    trajectories: list[Trajectory]
    outcomes: list[ProposalOutcome]
    site_counts: dict[str, int] = field(default_factory=dict)

    def __iter__(self):
        return iter((self.library, self.trajectories, self.outcomes))

    def audit_rows(self) -> list[dict]:
        return [o.to_json() for o in self.outcomes]

    def trajectory_rows(self) -> list[dict]:
        return [row for t in self.trajectories for row in t.to_records()]


def _spec_map(specs: Iterable[sim.SiteSpec] | dict[str, sim.SiteSpec]) -> dict[str, sim.SiteSpec]:
    if isinstance(specs, dict):
        return dict(specs)
    return {s.site: s for s in specs}


def learn_step(
    step: int,
    task: sim.Task,
    spec: sim.SiteSpec,
    lib: SkillLibrary,
    policy: PolicyBackend,
    judge: JudgeBackend,
    inducer: InducerBackend,
    bounds: SizeBounds,
    horizon: int | None,
    traj_id: str,
    retries: int = 0,
) -> tuple[SkillLibrary, list[Trajectory], ProposalOutcome]:
    """Execute, judge and (on success) induce and verify for a single task."""
    traj = execute_task(spec, task, lib, policy, horizon, traj_id=traj_id)
    trajs = [traj]
    if traj.fault is not None:
        return lib, trajs, ProposalOutcome(step, task.id, spec.site, traj.id, False, traj.fault, reason="policy fault")
    ok, why = judge.verdict(traj, task)
    if not ok:
        return lib, trajs, ProposalOutcome(step, task.id, spec.site, traj.id, False, why, reason="task failed")
    outcome = ProposalOutcome(step, task.id, spec.site, traj.id, True, why)
    for _attempt in range(retries + 1):
        try:
            outcome = induce_from_trajectory(traj, lib, inducer, spec.category, step, bounds)
            outcome.rationale = why
        except ValidationFailed as exc:
            outcome = ProposalOutcome(step, task.id, spec.site, traj.id, True, why, reason=str(exc), violations=exc.violations)
            continue
        except InductionError as exc:
            outcome = ProposalOutcome(step, task.id, spec.site, traj.id, True, why, reason=str(exc))
            continue
        if outcome.proposal is None:
            break
        lib = verify_and_commit(outcome, lib, spec, task, traj, judge, horizon, bounds)
        if outcome.verification is not None:
            trajs.append(outcome.verification)
        if outcome.accepted:
            break
    return lib, trajs, outcome


def run_task_defined(
    tasks: Sequence[sim.Task],
    lib0: SkillLibrary,
    specs: Iterable[sim.SiteSpec] | dict[str, sim.SiteSpec],
    policy: PolicyBackend,
    judge: JudgeBackend,
    inducer: InducerBackend,
    bounds: SizeBounds | None = None,
    horizon: int | None = None,
    retries: int = 0,
    prefix: str = "t",
    start_step: int = 0,
) -> LearningRun:
    """Curriculum learning: each task sees the library produced by all earlier tasks."""
    if not tasks:
        raise ValueError("task list is empty")
    bounds = bounds or SizeBounds()
    site_map = _spec_map(specs)
    lib = lib0
    run = LearningRun(lib0, [], [])
    for i, task in enumerate(tasks):
        step = start_step + i
        spec = site_map[task.site]
        try:
            lib, trajs, outcome = learn_step(
                step, task, spec, lib, policy, judge, inducer, bounds, horizon, f"{prefix}{step:03d}", retries
            )
        except (InductionError, PolicyFault, SkillLibraryError, DSLError, sim.SimError) as exc:
            log.warning("task %s failed with %s", task.id, exc)
            trajs, outcome = [], ProposalOutcome(step, task.id, task.site, "", False, reason=f"error: {exc}")
        run.trajectories.extend(trajs)
        run.outcomes.append(outcome)
        run.site_counts[task.site] = run.site_counts.get(task.site, 0) + 1
    run.library = lib
    return run


# ------------------------------------------------------------- task-free learning


class ProposerBackend(Protocol):
    id: str

    def propose(self, obs: sim.Observation, lib: SkillLibrary, spec: sim.SiteSpec, task_id: str, step: int) -> sim.Task: ...


# interface signature -> capability whose witness exercises it first
_SIGNATURE_CAPABILITY = {
    "search": "search",
    "add_to_cart": "add_to_cart",
    "checkout": "checkout",
    "apply_filter": "filter",
    "add_to_wishlist": "wishlist",
}


def unimplemented(lib: SkillLibrary, spec: sim.SiteSpec) -> list[str]:
    """Interface signatures the site has no method for, in declared order."""
    iface = lib.interfaces.get(spec.category)
    sigs = iface.abstract_signatures if iface is not None else sim.family(spec.category).signatures
    impl = lib.implementation(spec.site, iface.id) if iface is not None else None
    have = set(impl.methods) if impl else set()
    return [s.name for s in sigs if s.name not in have]


def interface_coverage(lib: SkillLibrary, spec: sim.SiteSpec) -> float:
    iface = lib.interfaces.get(spec.category)
    if iface is None or not iface.abstract_signatures:
        return 0.0
    return 1 - len(unimplemented(lib, spec)) / len(iface.abstract_signatures)


class GapProposer:
    """Proposes tasks for unimplemented signatures, then compositional tasks.

    With no interface at all it falls back to the observation: the first
    capability whose entry element is visible on the current page.
    """

    id = "gap"

    def propose(self, obs: sim.Observation, lib: SkillLibrary, spec: sim.SiteSpec, task_id: str, step: int) -> sim.Task:
        rng = random.Random(f"propose:{spec.site}:{step}")
        fam = sim.family(spec.category)
        iface = lib.interfaces.get(spec.category)
        if iface is None:
            capability = self._affordance(obs, spec, fam)
        else:
            gaps = unimplemented(lib, spec)
            if gaps:
                capability = gaps[0]
            else:
                composites = [d for d in iface.default_methods if d.body]
                if not composites:
                    capability = fam.signatures[step % len(fam.signatures)].name
                else:
                    last = composites[step % len(composites)].body[-1]
                    capability = last.target.split(".")[-1]  # type: ignore[union-attr]
        return sim.make_task(task_id, spec, capability, sim._task_values(spec, capability, rng))

    @staticmethod
    def _affordance(obs: sim.Observation, spec: sim.SiteSpec, fam: sim.Family) -> str:
        visible = {n.id for n in obs.nodes}
        for sig in fam.signatures:
            cap = _SIGNATURE_CAPABILITY.get(sig.name, sig.name)
            witness = spec.witnesses.get(cap)
            if not witness:
                continue
            first = sim.parse_witness(witness[:1])[0]
            if first.args and first.args[0].value in visible:  # type: ignore[union-attr]
                return sig.name
        raise ProposerFault(f"no capability entry point visible on {obs.url}")


def propose_task(obs: sim.Observation, lib: SkillLibrary, proposer: ProposerBackend, spec: sim.SiteSpec, task_id: str = "p000", step: int = 0) -> sim.Task:
    task = proposer.propose(obs, lib, spec, task_id, step)
    if task.site != spec.site:
        raise ProposerFault(f"proposed task targets {task.site}, current site is {spec.site}")
    return task


PROPOSER_PROMPT = """You are exploring the website "{site}" to learn reusable skills.
Operations this website still lacks: {gaps}.
Operations available to choose from: {capabilities}.

Current page:
{page}

Pick the operation to practise next and the values to use. Reply with JSON only:
{{"capability": "<operation>", "values": {{{fields}}}}}"""


class RemoteProposer:
    def __init__(self, client: ChatClient) -> None:
        self.client = client
        self.id = f"remote-proposer:{client.config.model}"

    def propose(self, obs: sim.Observation, lib: SkillLibrary, spec: sim.SiteSpec, task_id: str, step: int) -> sim.Task:
        fam = sim.family(spec.category)
        fields = ", ".join(f'"{n}": "..."' for n in sorted({p for _, _, ps in fam.templates.values() for p in ps}))
        prompt = PROPOSER_PROMPT.format(
            site=spec.site,
            gaps=", ".join(unimplemented(lib, spec)) or "(none)",
            capabilities=", ".join(fam.templates),
            page=obs.render(),
            fields=fields,
        )
        last: Exception | None = None
        for _ in range(max(1, self.client.config.retries)):
            try:
                reply = self.client.complete([{"role": "user", "content": prompt}])
                data = json.loads(re.search(r"\{.*\}", reply, re.S).group(0))  # type: ignore[union-attr]
                return sim.make_task(task_id, spec, data["capability"], {k: str(v) for k, v in data["values"].items()})
            except (httpx.HTTPError, RemoteError, AttributeError, KeyError, ValueError, TypeError) as exc:
                last = exc
        raise ProposerFault(f"proposer produced no usable task: {last}")


def choose_site(specs: Sequence[sim.SiteSpec], lib: SkillLibrary, cursor: int, mode: str = "self-guided") -> int:
    """Index of the next site; ties (and round-robin mode) rotate from ``cursor``."""
    n = len(specs)
    order = [(cursor + k) % n for k in range(n)]
    if mode == "round-robin":
        return order[0]
    if mode != "self-guided":
        raise ValueError(f"unknown site selection mode {mode!r}")
    gaps = {i: len(unimplemented(lib, specs[i])) for i in order}
    top = max(gaps.values())
    return next(i for i in order if gaps[i] == top)


def run_task_free(
    n_steps: int,
    lib0: SkillLibrary,
    specs: Sequence[sim.SiteSpec],
    policy: PolicyBackend,
    judge: JudgeBackend,
    inducer: InducerBackend,
    proposer: ProposerBackend,
    bounds: SizeBounds | None = None,
    horizon: int | None = None,
    selection: str = "self-guided",
    retries: int = 0,
    prefix: str = "x",
) -> LearningRun:
    """Exploration: propose a task, attempt it, learn from it, carry the page forward."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    specs = list(specs)
    if not specs:
        raise ValueError("site pool is empty")
    bounds = bounds or SizeBounds()
    lib = lib0
    run = LearningRun(lib0, [], [], {s.site: 0 for s in specs})
    last_obs = {s.site: sim.observe(sim.initial_state(s)) for s in specs}
    cursor = 0
    for step in range(n_steps):
        idx = choose_site(specs, lib, cursor, selection)
        cursor = (idx + 1) % len(specs)
        spec = specs[idx]
        run.site_counts[spec.site] += 1
        tid = f"{prefix}{step:03d}"
        try:
            task = propose_task(last_obs[spec.site], lib, proposer, spec, tid, step)
            lib, trajs, outcome = learn_step(step, task, spec, lib, policy, judge, inducer, bounds, horizon, tid, retries)
            if trajs[0].final_state is not None:
                last_obs[spec.site] = sim.observe(trajs[0].final_state)
        except (InductionError, PolicyFault, SkillLibraryError, DSLError, sim.SimError) as exc:
            log.warning("exploration step %d failed with %s", step, exc)
            trajs, outcome = [], ProposalOutcome(step, tid, spec.site, "", False, reason=f"error: {exc}")
        run.trajectories.extend(trajs)
        run.outcomes.append(outcome)
    run.library = lib
    return run


def remote_backends(config: EndpointConfig | dict, transport: httpx.BaseTransport | None = None, bounds: SizeBounds | None = None):
    """Judge, inducer and proposer sharing one chat client."""
    if isinstance(config, dict):
        config = EndpointConfig.from_dict(config)
    client = ChatClient(config, transport)
    return RemoteJudge(client), RemoteInducer(client, bounds), RemoteProposer(client)
