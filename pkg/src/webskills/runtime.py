"""Episode execution over primitives plus library skills, with pluggable policies."""

from __future__ import annotations

import hashlib
import json
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Protocol

import httpx

from . import sim
from .dsl import (
    Call,
    DSLError,
    Lit,
    Prim,
    SkillSignature,
    Statement,
    Stop,
    format_statement,
    parse_statement,
)
from .library import (
    SkillLibrary,
    SkillLibraryError,
    expand,
    resolve,
    site_signatures,
)
from .remote import ChatClient, EndpointConfig, RemoteError, strip_fences

log = logging.getLogger(__name__)

TRAJECTORY_SCHEMA = "webskills.trajectory/1"
DEFAULT_WINDOW = 20


class PolicyFault(Exception):
    pass


class MissingScript(PolicyFault):
    pass


class MalformedReply(PolicyFault):
    pass


class TransportError(PolicyFault):
    pass


# ------------------------------------------------------------------ memory


@dataclass
class WorkingMemory:
    instruction: str
    window: int = DEFAULT_WINDOW
    history: deque = field(default_factory=deque)
    notes: list[str] = field(default_factory=list)

    def record(self, obs_digest: str, statement: str) -> None:
        self.history.append((obs_digest, statement))
        while len(self.history) > self.window:
            self.history.popleft()


# -------------------------------------------------------------- trajectory


@dataclass(frozen=True)
class StepRecord:
    index: int
    obs: str
    statement: str
    skill_id: str | None
    primitives: tuple[str, ...]
    events: tuple[str, ...]
    state: str
    chain: str

    @property
    def expansion_length(self) -> int:
        return len(self.primitives)


@dataclass
class Trajectory:
    id: str
    task: sim.Task
    policy: str
    records: list[StepRecord] = field(default_factory=list)
    terminal: str = ""
    success: bool = False
    fault: str | None = None
    library_size: int = 0
    overlay: tuple[str, ...] = ()
    final_state: sim.SiteState | None = field(default=None, repr=False, compare=False)

    @property
    def task_id(self) -> str:
        return self.task.id

    @property
    def site(self) -> str:
        return self.task.site

    def count_steps(self) -> int:
        return len(self.records)

    def statements(self) -> list[Statement]:
        return [parse_statement(r.statement) for r in self.records]

    def primitive_actions(self) -> list[Prim]:
        out: list[Prim] = []
        for r in self.records:
            out.extend(parse_statement(p) for p in r.primitives)  # type: ignore[misc]
        return out

    def skill_ids(self) -> list[str]:
        return [r.skill_id for r in self.records if r.skill_id]

    def uses_skills(self) -> bool:
        return any(r.skill_id for r in self.records)

    def to_records(self) -> list[dict]:
        rows = [
            {
                "schema": TRAJECTORY_SCHEMA,
                "type": "step",
                "traj": self.id,
                "index": r.index,
                "obs": r.obs,
                "statement": r.statement,
                "skill": r.skill_id,
                "primitives": list(r.primitives),
                "events": list(r.events),
                "state": r.state,
                "chain": r.chain,
            }
            for r in self.records
        ]
        rows.append(
            {
                "schema": TRAJECTORY_SCHEMA,
                "type": "end",
                "traj": self.id,
                "task": self.task.to_json(),
                "policy": self.policy,
                "steps": self.count_steps(),
                "success": self.success,
                "fault": self.fault,
                "terminal": self.terminal,
                "skills": self.skill_ids(),
                "library_size": self.library_size,
                "overlay": list(self.overlay),
            }
        )
        return rows


class SchemaMismatch(ValueError):
    pass


def trajectories_from_records(rows: Iterable[dict]) -> list[Trajectory]:
    """Rebuild trajectories from JSONL rows (order preserved by end record)."""
    steps: dict[str, list[StepRecord]] = {}
    out: list[Trajectory] = []
    for row in rows:
        if row.get("schema") != TRAJECTORY_SCHEMA:
            raise SchemaMismatch(f"expected schema {TRAJECTORY_SCHEMA!r}, got {row.get('schema')!r}")
        tid = row["traj"]
        if row["type"] == "step":
            steps.setdefault(tid, []).append(
                StepRecord(
                    row["index"],
                    row["obs"],
                    row["statement"],
                    row["skill"],
                    tuple(row["primitives"]),
                    tuple(row["events"]),
                    row["state"],
                    row["chain"],
                )
            )
        elif row["type"] == "end":
            out.append(
                Trajectory(
                    id=tid,
                    task=sim.Task.from_json(row["task"]),
                    policy=row["policy"],
                    records=steps.pop(tid, []),
                    terminal=row["terminal"],
                    success=row["success"],
                    fault=row["fault"],
                    library_size=row.get("library_size", 0),
                    overlay=tuple(row.get("overlay", ())),
                )
            )
        else:
            raise SchemaMismatch(f"unknown record type {row['type']!r}")
    return out


def write_jsonl(path, rows: Iterable[dict], mode: str = "w") -> None:
    with open(path, mode, encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def chain_digest(prev: str, statement: str, state: str) -> str:
    return hashlib.sha256(f"{prev}\n{statement}\n{state}".encode("utf-8")).hexdigest()[:16]


# ------------------------------------------------------------------ policies


class PolicyBackend(Protocol):
    id: str

    def begin_episode(self, task: sim.Task, spec: sim.SiteSpec, lib: SkillLibrary) -> None: ...

    def propose_action(
        self, q: str, obs: sim.Observation, memory: WorkingMemory, skills: list[SkillSignature]
    ) -> Statement: ...


def _as_statement(s: Statement | str) -> Statement:
    return parse_statement(s) if isinstance(s, str) else s


class ScriptedPolicy:
    """Replays a fixed statement list per task id, then stops."""

    def __init__(self, script: dict[str, Iterable[Statement | str]], id: str = "scripted") -> None:
        self.id = id
        self.script = {k: [_as_statement(s) for s in v] for k, v in script.items()}
        self._queue: deque[Statement] = deque()

    def begin_episode(self, task: sim.Task, spec: sim.SiteSpec, lib: SkillLibrary) -> None:
        if task.id not in self.script:
            raise MissingScript(f"no script for task '{task.id}'")
        self._queue = deque(self.script[task.id])

    def propose_action(self, q, obs, memory, skills) -> Statement:
        return self._queue.popleft() if self._queue else Stop()


def scripted_policy(script: dict[str, Iterable[Statement | str]]) -> ScriptedPolicy:
    return ScriptedPolicy(script)


class NullPolicy:
    """Stops immediately; every task fails."""

    id = "null"

    def begin_episode(self, task, spec, lib) -> None:
        pass

    def propose_action(self, q, obs, memory, skills) -> Statement:
        return Stop()


# -- oracle: shortest plan over witness segments and library skills ------------


def segment_witness(spec: sim.SiteSpec, prims: Iterable[Prim]) -> list[tuple[tuple[Prim, ...], tuple[str, ...]]]:
    """Split a primitive sequence after every action that emits a milestone event."""
    state = sim.initial_state(spec)
    segments: list[tuple[tuple[Prim, ...], tuple[str, ...]]] = []
    current: list[Prim] = []
    for p in prims:
        state, _ = sim.step(state, p)
        current.append(p)
        if state.events:
            segments.append((tuple(current), state.events))
            current = []
    if current:
        segments.append((tuple(current), ()))
    return segments


_HOLE = "\x00"


def unify_call(lib: SkillLibrary, site: str, name: str, target: tuple[Prim, ...]) -> Call | None:
    """A call to ``name`` whose expansion equals ``target`` exactly, if one exists."""
    try:
        resolved = resolve(lib, site, name)
    except SkillLibraryError:
        return None
    params = resolved.skill.signature.params
    holes = tuple(Lit(f"{_HOLE}{p.name}", p.kind) for p in params)
    try:
        shape = expand(lib, site, Call(name, holes))
    except (SkillLibraryError, DSLError):
        return None
    if len(shape) != len(target):
        return None
    binding: dict[str, Lit] = {}
    for pat, got in zip(shape, target):
        if pat.kind != got.kind or len(pat.args) != len(got.args):
            return None
        for a, b in zip(pat.args, got.args):
            if isinstance(a.value, str) and a.value.startswith(_HOLE):  # type: ignore[union-attr]
                pname = a.value[1:]  # type: ignore[union-attr]
                if binding.setdefault(pname, b) != b:  # type: ignore[arg-type]
                    return None
            elif a != b:
                return None
    if any(p.name not in binding for p in params):
        return None
    args = tuple(Lit(binding[p.name].value, p.kind) for p in params)
    if expand(lib, site, Call(name, args)) != target:
        return None
    return Call(name, args)


def plan_statements(spec: sim.SiteSpec, lib: SkillLibrary, prims: tuple[Prim, ...]) -> list[Statement]:
    """Fewest statements whose expansion equals ``prims`` (calls only at segment boundaries)."""
    segments = [s for s, _ in segment_witness(spec, prims)]
    n = len(segments)
    names = site_signatures(lib, spec.site)
    best: list[tuple[int, list[Statement]] | None] = [None] * (n + 1)
    best[0] = (0, [])
    for i in range(n):
        if best[i] is None:
            continue
        cost, plan = best[i]  # type: ignore[misc]
        options: list[tuple[int, list[Statement]]] = [(i + 1, list(segments[i]))]
        run: tuple[Prim, ...] = ()
        for j in range(i, n):
            run = run + segments[j]
            for name in names:
                call = unify_call(lib, spec.site, name, run)
                if call is not None:
                    options.append((j + 1, [call]))
        for end, stmts in options:
            cand = (cost + len(stmts), plan + stmts)
            if best[end] is None or cand[0] < best[end][0]:  # type: ignore[index]
                best[end] = cand
    return best[n][1] if best[n] is not None else list(prims)  # type: ignore[index]


class OraclePolicy:
    """Plans the shortest statement sequence from the task's witness and the library."""

    id = "oracle"

    def __init__(self) -> None:
        self._queue: deque[Statement] = deque()

    def begin_episode(self, task: sim.Task, spec: sim.SiteSpec, lib: SkillLibrary) -> None:
        witness = sim.task_witness(spec, task)
        self._queue = deque(plan_statements(spec, lib, witness) if witness is not None else [])

    def propose_action(self, q, obs, memory, skills) -> Statement:
        return self._queue.popleft() if self._queue else Stop()


# -- remote chat backend --------------------------------------------------------

POLICY_PROMPT = """You operate a web browser through a tiny command language.
Reply with exactly one command per turn and nothing else.

Primitive commands:
  click(#id)  hover(#id)  type(#id, "text")  press("Enter")  scroll("down")
  tab_focus(0)  new_tab()  tab_close()  go_back()  go_forward()  goto("site/page")  noop()
Library skills (one step each, prefer them when they fit):
  call name("arg", ...)
Finish with: stop

Shorter solutions are better: every command costs one step."""


def render_signature(sig: SkillSignature) -> str:
    params = ", ".join(p.name for p in sig.params)
    doc = f"  -- {sig.doc}" if sig.doc else ""
    return f"{sig.name}({params}){doc}"


def parse_reply(text: str) -> Statement:
    """First statement line of a model reply; raises DSLError if none parses."""
    body = strip_fences(text)
    last: DSLError | None = None
    for line in body.splitlines():
        line = line.strip().rstrip(";")
        if not line or line.startswith("//"):
            continue
        try:
            return parse_statement(line)
        except DSLError as exc:
            last = exc
    raise last or DSLError("empty reply")


class RemotePolicy:
    def __init__(self, client: ChatClient, id: str | None = None) -> None:
        self.client = client
        self.id = id or f"remote:{client.config.model}"

    def begin_episode(self, task, spec, lib) -> None:
        pass

    def messages(self, q: str, obs: sim.Observation, memory: WorkingMemory, skills: list[SkillSignature]) -> list[dict]:
        history = "\n".join(f"{i}. {stmt}" for i, (_, stmt) in enumerate(memory.history)) or "(none)"
        skill_text = "\n".join(f"  {render_signature(s)}" for s in skills) or "  (none)"
        user = (
            f"Task: {q}\n\nAvailable skills:\n{skill_text}\n\n"
            f"Commands so far:\n{history}\n\nCurrent page:\n{obs.render()}\n\nNext command:"
        )
        return [{"role": "system", "content": POLICY_PROMPT}, {"role": "user", "content": user}]

    def propose_action(self, q, obs, memory, skills) -> Statement:
        msgs = self.messages(q, obs, memory, skills)
        attempts = max(1, self.client.config.retries)
        bad_reply: str | None = None
        for attempt in range(attempts):
            try:
                reply = self.client.complete(msgs)
            except (httpx.HTTPError, RemoteError) as exc:
                log.warning("policy request failed (attempt %d): %s", attempt + 1, exc)
                if attempt == attempts - 1:
                    raise TransportError(str(exc)) from exc
                continue
            try:
                return parse_reply(reply)
            except DSLError as exc:
                bad_reply = reply
                log.warning("unparseable reply (attempt %d): %s", attempt + 1, exc)
        raise MalformedReply(f"no valid statement after {attempts} attempts; last reply {bad_reply!r}")


def remote_policy(config: EndpointConfig | dict, transport: httpx.BaseTransport | None = None) -> RemotePolicy:
    if isinstance(config, dict):
        config = EndpointConfig.from_dict(config)
    return RemotePolicy(ChatClient(config, transport))


# ------------------------------------------------------------------ execution


def available_skills(lib: SkillLibrary, site: str) -> list[SkillSignature]:
    out = []
    for name in site_signatures(lib, site):
        try:
            out.append(resolve(lib, site, name).skill.signature)
        except SkillLibraryError as exc:  # unusable here; calling it would fault anyway
            log.debug("skipping %s on %s: %s", name, site, exc)
    return out


def _lower(lib: SkillLibrary, site: str, stmt: Statement) -> tuple[tuple[Prim, ...], str | None]:
    """Ground primitives for ``stmt`` plus the skill id for calls; PolicyFault if invalid."""
    try:
        if isinstance(stmt, Prim):
            sim._check_action(stmt)
            return (stmt,), None
        if isinstance(stmt, Call):
            sid = resolve(lib, site, stmt.target).skill_id
            prims = expand(lib, site, stmt)
            for p in prims:
                sim._check_action(p)
            return prims, sid
    except (SkillLibraryError, DSLError, sim.MalformedAction) as exc:
        raise PolicyFault(f"invalid statement {format_statement(stmt)}: {exc}") from exc
    raise PolicyFault(f"not a statement: {stmt!r}")


def execute_task(
    spec: sim.SiteSpec,
    task: sim.Task,
    lib: SkillLibrary,
    policy: PolicyBackend,
    horizon: int | None = None,
    traj_id: str | None = None,
    window: int = DEFAULT_WINDOW,
) -> Trajectory:
    """Run one episode; skill calls expand atomically and count as one step."""
    horizon = task.horizon if horizon is None else horizon
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state, obs = sim.reset(spec, task)
    traj = Trajectory(traj_id or task.id, task, policy.id, library_size=len(lib))
    memory = WorkingMemory(task.instruction, window)
    chain = ""
    prims_so_far: list[Prim] = []
    try:
        policy.begin_episode(task, spec, lib)
        skills = available_skills(lib, spec.site)
        for index in range(horizon):
            try:
                stmt = policy.propose_action(task.instruction, obs, memory, skills)
            except PolicyFault:
                raise
            except Exception as exc:  # a backend bug is still the backend's fault
                raise PolicyFault(f"{type(exc).__name__}: {exc}") from exc
            text = format_statement(stmt)
            prims, sid = ((), None) if isinstance(stmt, Stop) else _lower(lib, spec.site, stmt)
            obs_digest = obs.digest()
            events: list[str] = []
            for p in prims:
                state, obs = sim.step(state, p)
                events.extend(state.events)
            prims_so_far.extend(prims)
            state_digest = state.digest()
            chain = chain_digest(chain, text, state_digest)
            traj.records.append(
                StepRecord(index, obs_digest, text, sid, tuple(format_statement(p) for p in prims), tuple(events), state_digest, chain)
            )
            memory.record(obs_digest, text)
            if isinstance(stmt, Stop) or sim.check_success(task, state, prims_so_far):
                break
    except PolicyFault as exc:
        traj.fault = str(exc)
        log.info("episode %s aborted: %s", traj.id, exc)
    traj.final_state = state
    traj.terminal = state.digest()
    traj.success = traj.fault is None and sim.check_success(task, state, traj)
    return traj
