"""Interactive elicitation sessions.

A session compiles the net once, shows the top-k items under the current
value function, and turns each pick-best answer into k'-1 linear rows (the
chosen item outscores every other displayed item by the unit margin).  The
system is re-solved after every answer; picking the currently top item ends
the loop.

Infeasible feedback (impossible against a consistent base net unless the
answers themselves conflict) is handled by a relaxation ladder that weakens
then drops feedback batches, oldest first.  Base rows are never touched.
"""

from __future__ import annotations

import itertools
import json
import uuid
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import compiler, linear, ranking
from .model import TcpNet, parse_net, serialize_net
from .ranking import GaValueFunction, HardConstraint, ItemTable

ROUND_CAP = 50

ACTIVE = "active"
CONVERGED = "converged"
CAPPED = "capped"


class SessionError(Exception):
    pass


class EmptyItemSet(SessionError):
    pass


class NotActive(SessionError):
    pass


class ChosenNotDisplayed(SessionError):
    pass


class BaseSystemInfeasible(SessionError):
    """The qualitative statements are already inconsistent; the conflict list
    carries provenance hints for resolving them."""

    def __init__(self, conflict: list[tuple]):
        self.conflict = conflict
        super().__init__(
            "the preference statements admit no value function; "
            f"conflicting rows: {conflict[:6]}"
        )


@dataclass
class Round:
    index: int
    displayed: tuple[str, ...]
    chosen: str | None = None
    constraints_added: int = 0
    relaxation_applied: bool = False


@dataclass
class Session:
    session_id: str
    net: TcpNet
    items: ItemTable
    k: int
    system: compiler.LinearSystem
    base_row_count: int
    current_v: GaValueFunction
    rounds: list[Round]
    status: str = ACTIVE
    round_cap: int = ROUND_CAP
    feedback_batches: list[list[linear.Row]] = field(default_factory=list)
    relaxations: int = 0

    @property
    def displayed(self) -> tuple[str, ...]:
        return self.rounds[-1].displayed

    def constraint_count(self) -> int:
        return len(self.system.rows)

    def feedback_rounds(self) -> int:
        """Rounds that added constraints (the convergence metric)."""
        return len(self.rounds) - 1


def _top_ids(vf: GaValueFunction, items: ItemTable, k: int) -> tuple[str, ...]:
    return tuple(item_id for item_id, _ in ranking.top_k(vf, items, k))


def start_session(
    net: TcpNet,
    items: ItemTable,
    hard: Sequence[HardConstraint] | Mapping | None = None,
    k: int = 10,
    round_cap: int = ROUND_CAP,
    session_id: str | None = None,
    system: compiler.LinearSystem | None = None,
) -> Session:
    if k < 2:
        raise ValueError("k must be >= 2: a pick-best round needs alternatives")
    if isinstance(hard, Mapping):
        hard = ranking.constraints_from_mapping(hard)
    filtered = ranking.filter_hard(items, hard or [])
    if not filtered.rows:
        raise EmptyItemSet("no items survive the hard constraints")
    if system is None:
        system = compiler.compile_net(net)  # raises NetNotAcyclic on bad nets
    try:
        current_v = compiler.solve(system)
    except compiler.Infeasible as exc:
        raise BaseSystemInfeasible(exc.conflict) from exc
    session = Session(
        session_id=session_id or uuid.uuid4().hex,
        net=net,
        items=filtered,
        k=k,
        system=system,
        base_row_count=len(system.rows),
        current_v=current_v,
        rounds=[Round(index=0, displayed=_top_ids(current_v, filtered, k))],
        round_cap=round_cap,
    )
    return session


def _score_rows(session: Session, chosen_id: str, round_index: int) -> list[linear.Row]:
    """One row per displayed rival: score(chosen) - score(rival) >= 1,
    expressed over factor entries (shared entries cancel)."""
    by_id = session.items.by_id()
    chosen = by_id[chosen_id]
    index = session.system.entry_index
    rows = []
    for rival_id in session.displayed:
        if rival_id == chosen_id:
            continue
        rival = by_id[rival_id]
        coeff: dict[int, int] = {}
        for factor in session.current_v.factors:
            scope = factor.scope
            e_c = index[compiler.LpVariable(factor.owner, tuple(chosen.attributes[v] for v in scope))]
            e_r = index[compiler.LpVariable(factor.owner, tuple(rival.attributes[v] for v in scope))]
            coeff[e_c] = coeff.get(e_c, 0) + 1
            coeff[e_r] = coeff.get(e_r, 0) - 1
        rows.append(
            linear.Row(
                pos=tuple(sorted(e for e, c in coeff.items() if c > 0)),
                neg=tuple(sorted(e for e, c in coeff.items() if c < 0)),
                rhs=1,
                provenance=("feedback", round_index, chosen_id, rival_id),
            )
        )
    return rows


def _materialize_rows(session: Session) -> None:
    base = session.system.rows[: session.base_row_count]
    session.system.rows = base + list(itertools.chain.from_iterable(session.feedback_batches))


def _ladder_solve(session: Session) -> linear.SolveResult:
    # infeasibility here only steers batch dropping; skip the exact-simplex
    # confirmation and conflict filtering that certified verdicts pay for
    return linear.solve_rows(
        len(session.system.lp_variables),
        session.system.rows,
        exact_confirm=False,
        conflict_hint=False,
    )


def _resolve(session: Session) -> tuple[GaValueFunction, bool]:
    """Solve the base+feedback system, walking the relaxation ladder when the
    feedback turns out inconsistent.  Returns (value function, relaxed?)."""
    _materialize_rows(session)
    result = _ladder_solve(session)
    if result.feasible:
        session.system.status = "feasible"
        session.system.point = result.point
        return compiler.value_function_from_point(session.system, result.point), False

    # ladder step 1: retry the newest batch at zero margin
    newest = session.feedback_batches[-1]
    session.feedback_batches[-1] = [
        linear.Row(r.pos, r.neg, 0, r.soft, r.provenance) for r in newest
    ]
    _materialize_rows(session)
    result = _ladder_solve(session)
    # ladder step 2: drop oldest batches until feasible (the base system is
    # feasible on its own, so this terminates)
    while not result.feasible and session.feedback_batches:
        session.feedback_batches.pop(0)
        _materialize_rows(session)
        result = _ladder_solve(session)
    if not result.feasible:
        raise linear.SolverFailure("base system no longer solvable; should be impossible")
    session.relaxations += 1
    session.system.status = "feasible"
    session.system.point = result.point
    return compiler.value_function_from_point(session.system, result.point), True


def feedback(session: Session, chosen: str) -> Session:
    if session.status != ACTIVE:
        raise NotActive(f"session is {session.status}")
    current = session.rounds[-1]
    if chosen not in current.displayed:
        raise ChosenNotDisplayed(f"{chosen!r} is not among the displayed items")
    current.chosen = chosen
    if chosen == current.displayed[0]:
        session.status = CONVERGED
        return session

    batch = _score_rows(session, chosen, current.index)
    session.feedback_batches.append(batch)
    vf, relaxed = _resolve(session)
    session.current_v = vf
    session.rounds.append(
        Round(
            index=current.index + 1,
            displayed=_top_ids(vf, session.items, session.k),
            constraints_added=len(batch),
            relaxation_applied=relaxed,
        )
    )
    if len(session.rounds) > session.round_cap:
        session.status = CAPPED
    return session


def session_status(session: Session) -> dict:
    """Read-only snapshot of where the loop stands."""
    return {
        "status": session.status,
        "round_count": len(session.rounds),
        "topk": list(session.displayed),
        "history": [
            {
                "index": r.index,
                "displayed": list(r.displayed),
                "chosen": r.chosen,
                "constraints_added": r.constraints_added,
                "relaxation_applied": r.relaxation_applied,
            }
            for r in session.rounds
        ],
    }


def to_snapshot(session: Session) -> dict:
    """Full persistence form; replay_snapshot rebuilds an identical session
    because solving is deterministic."""
    return {
        "session_id": session.session_id,
        "net": serialize_net(session.net),
        "k": session.k,
        "round_cap": session.round_cap,
        "items": ranking.items_to_json(session.items),
        "rounds": session_status(session)["history"],
        "status": session.status,
        "constraint_count": session.constraint_count(),
    }


def replay_snapshot(doc: Mapping) -> Session:
    net = parse_net(doc["net"])
    items = ranking.load_items_json(doc["items"], net, provenance="snapshot")
    session = start_session(
        net,
        items,
        k=doc["k"],
        round_cap=doc.get("round_cap", ROUND_CAP),
        session_id=doc["session_id"],
    )
    for round_doc in doc["rounds"]:
        choice = round_doc.get("chosen")
        if choice is not None:
            feedback(session, choice)
    return session


def save_snapshot(session: Session, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_snapshot(session), fh, indent=1)
