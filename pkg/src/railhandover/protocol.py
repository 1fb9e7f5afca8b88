"""Executable handover procedure for a two-antenna train.

The procedure crosses one cell boundary: the front antenna triggers,
the serving cell requests the handover and starts dual-casting user
data to both cells, the front antenna re-attaches to the target cell,
the rear antenna follows when its own measurements trigger, and the
serving cell stops dual-casting after the rear antenna has attached.

Control messaging is modeled with zero latency (every request/ack pair
completes within one grid step) and admission always accepts. Handover
attempts are radio-limited only: an attempt fails when the sampled
target RSS at the attempt position is below the usable threshold, and
the antenna retries at the next position whose measurement satisfies
the trigger rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from . import channel
from .analytics import PositionGrid
from .scenario import AntennaId, CellId, Scenario, Scheme


class Phase(Enum):
    IDLE = "Idle"
    PREPARATION_FRONT = "PreparationFront"
    EXECUTING_FRONT = "ExecutingFront"
    AWAIT_REAR = "AwaitRear"
    EXECUTING_REAR = "ExecutingRear"
    COMPLETING = "Completing"
    DONE = "Done"


class EventKind(Enum):
    MEASUREMENT_REPORT = "MeasurementReport"
    HO_REQUEST = "HoRequest"
    HO_REQUEST_ACK = "HoRequestAck"
    HO_COMMAND_FRONT = "HoCommandFront"
    FRONT_ATTACHED = "FrontAttached"
    HO_COMMAND_REAR = "HoCommandRear"
    REAR_ATTACHED = "RearAttached"
    DUALCAST_START = "DualcastStart"
    DUALCAST_FINISH = "DualcastFinish"
    DUALCAST_FINISH_ACK = "DualcastFinishAck"


# Events fed into the machine; all other kinds are only ever emitted by it.
_INPUT_KINDS = frozenset({
    EventKind.MEASUREMENT_REPORT,
    EventKind.HO_REQUEST_ACK,
    EventKind.FRONT_ATTACHED,
    EventKind.REAR_ATTACHED,
    EventKind.DUALCAST_FINISH_ACK,
})

# During the handover the target cell powers its boundary RAU.
_HANDOVER_RAU_INDEX = 1


@dataclass(frozen=True)
class ProtocolEvent:
    """One protocol message. Measurement reports carry, per antenna, the
    (serving, target) RSS comparands of the trigger rule in dBm."""

    kind: EventKind
    position: float
    antenna: AntennaId | None = None
    front_rss: tuple[float, float] | None = None
    rear_rss: tuple[float, float] | None = None
    rau_index: int | None = None


@dataclass(frozen=True)
class HandoverState:
    phase: Phase = Phase.IDLE
    front_attached: CellId = CellId.SERVING
    rear_attached: CellId = CellId.SERVING
    dualcast_active: bool = False
    selected_rau_index: int | None = None


class ProtocolViolation(RuntimeError):
    """An event arrived in a phase whose transition table does not allow it."""

    def __init__(self, phase: Phase, kind: EventKind):
        super().__init__(f"event {kind.value} is illegal in phase {phase.value}")
        self.phase = phase
        self.kind = kind


def _triggered(rss: tuple[float, float] | None, hysteresis: float) -> bool:
    if rss is None:
        return False
    serving, target = rss
    return target - serving > hysteresis


def transition(state: HandoverState, event: ProtocolEvent,
               hysteresis: float) -> tuple[HandoverState, list[ProtocolEvent]]:
    """Apply one input event; return the new state and emitted messages.

    Measurement reports are legal in every phase (they are periodic) and
    act only where the transition table reacts to them; every other input
    kind is legal in exactly one phase.
    """
    kind = event.kind
    if kind not in _INPUT_KINDS:
        raise ProtocolViolation(state.phase, kind)
    phase = state.phase

    if kind is EventKind.MEASUREMENT_REPORT:
        if phase is Phase.IDLE and _triggered(event.front_rss, hysteresis):
            emitted = [ProtocolEvent(EventKind.HO_REQUEST, event.position,
                                     AntennaId.FRONT, rau_index=_HANDOVER_RAU_INDEX)]
            return replace(state, phase=Phase.PREPARATION_FRONT,
                           selected_rau_index=_HANDOVER_RAU_INDEX), emitted
        if phase is Phase.EXECUTING_FRONT and _triggered(event.front_rss, hysteresis):
            # retry of a failed front attempt
            return state, [ProtocolEvent(EventKind.HO_COMMAND_FRONT, event.position,
                                         AntennaId.FRONT)]
        if phase is Phase.AWAIT_REAR and _triggered(event.rear_rss, hysteresis):
            return (replace(state, phase=Phase.EXECUTING_REAR),
                    [ProtocolEvent(EventKind.HO_COMMAND_REAR, event.position,
                                   AntennaId.REAR)])
        if phase is Phase.EXECUTING_REAR and _triggered(event.rear_rss, hysteresis):
            # retry of a failed rear attempt
            return state, [ProtocolEvent(EventKind.HO_COMMAND_REAR, event.position,
                                         AntennaId.REAR)]
        return state, []

    if kind is EventKind.HO_REQUEST_ACK:
        if phase is not Phase.PREPARATION_FRONT:
            raise ProtocolViolation(phase, kind)
        emitted = [
            ProtocolEvent(EventKind.HO_COMMAND_FRONT, event.position, AntennaId.FRONT),
            ProtocolEvent(EventKind.DUALCAST_START, event.position),
        ]
        return replace(state, phase=Phase.EXECUTING_FRONT, dualcast_active=True), emitted

    if kind is EventKind.FRONT_ATTACHED:
        if phase is not Phase.EXECUTING_FRONT:
            raise ProtocolViolation(phase, kind)
        return replace(state, phase=Phase.AWAIT_REAR,
                       front_attached=CellId.TARGET), []

    if kind is EventKind.REAR_ATTACHED:
        if phase is not Phase.EXECUTING_REAR:
            raise ProtocolViolation(phase, kind)
        return (replace(state, phase=Phase.COMPLETING, rear_attached=CellId.TARGET),
                [ProtocolEvent(EventKind.DUALCAST_FINISH, event.position)])

    if kind is EventKind.DUALCAST_FINISH_ACK:
        if phase is not Phase.COMPLETING:
            raise ProtocolViolation(phase, kind)
        return replace(state, phase=Phase.DONE, dualcast_active=False,
                       selected_rau_index=None), []

    raise ProtocolViolation(phase, kind)  # unreachable


# === Crossing simulation ===


@dataclass(frozen=True)
class TraceEntry:
    """One trace line: the event plus the phases around it.

    Emitted events do not change the phase themselves, so their before
    and after phases coincide with the state right after the transition
    that produced them.
    """

    position: float
    phase_before: Phase
    event: ProtocolEvent
    phase_after: Phase


@dataclass(frozen=True)
class CrossingOutcome:
    front_ho_position: float | None
    rear_ho_position: float | None
    front_failed: bool
    rear_failed: bool
    interruption_intervals: tuple[tuple[float, float], ...]
    final_state: HandoverState


@dataclass
class _AntennaLinks:
    """Per-position samples for one antenna: cell RSS and trigger comparands."""

    cell_rss: dict[CellId, np.ndarray] = field(default_factory=dict)
    trig_serving: np.ndarray | None = None
    trig_target: np.ndarray | None = None


@lru_cache(maxsize=16)
def _link_table(sc: Scenario, grid: PositionGrid) -> dict:
    """Trial-invariant link statistics, hoisted out of the per-trial path.

    Maps (antenna, cell) to (mu array, sigma array, trigger column); the
    trigger column is the boundary-RAU index under RAU selection and
    None where the cell RSS itself is the comparand.
    """
    table = {}
    for antenna in (AntennaId.FRONT, AntennaId.REAR):
        for cell in (CellId.SERVING, CellId.TARGET):
            dists = [channel.rss_distribution(sc, x, antenna, cell)
                     for x in grid.positions]
            mus = np.array([[c.mu for c in d.components] for d in dists])
            sigmas = np.array([[c.sigma for c in d.components] for d in dists])
            if sc.scheme in (Scheme.PROPOSED, Scheme.DAS_SINGLE):
                column = sc.n_raus - 1 if cell is CellId.SERVING else 0
            else:
                column = None
            table[antenna, cell] = (mus, sigmas, column)
    return table


def _draw_links(sc: Scenario, grid: PositionGrid,
                rng: np.random.Generator) -> dict[AntennaId, _AntennaLinks]:
    """Pre-draw every shadowing realization for one crossing.

    Draw order is fixed (front antenna first, serving cell first, grid
    position outermost in the array layout) so a given generator state
    always produces the same walk. Within a cell, one draw per component
    at each position; the boundary-RAU trigger comparands reuse the same
    realizations as the cell maximum, since they are the same links.
    """
    table = _link_table(sc, grid)
    links: dict[AntennaId, _AntennaLinks] = {}
    for antenna in (AntennaId.FRONT, AntennaId.REAR):
        al = _AntennaLinks()
        for cell in (CellId.SERVING, CellId.TARGET):
            mus, sigmas, column = table[antenna, cell]
            rss = mus + sigmas * rng.standard_normal(mus.shape)
            al.cell_rss[cell] = np.max(rss, axis=1)
            comparand = al.cell_rss[cell] if column is None else rss[:, column]
            if cell is CellId.SERVING:
                al.trig_serving = comparand
            else:
                al.trig_target = comparand
        links[antenna] = al
    return links


def run_crossing(sc: Scenario, grid: PositionGrid,
                 rng: np.random.Generator) -> tuple[CrossingOutcome, list[TraceEntry]]:
    """Walk the grid once and drive the handover procedure to completion.

    The environment responds to emitted messages within the same grid
    step: requests are acked, commands make the named antenna attempt to
    attach to the target cell (success iff the sampled target comparand
    is at or above the threshold; on failure the antenna stays on its
    previous cell and retries at the next triggering position), and the
    dual-cast finish is acked by the core network.

    An interruption interval is open while every antenna's sampled RSS
    from its attached cell is below the threshold; intervals are reported
    as (first, last) grid coordinates of each below-threshold run.
    """
    if len(sc.antennas()) != 2:
        raise ValueError(f"the handover procedure needs two antennas; "
                         f"scheme {sc.scheme.value} has {len(sc.antennas())}")
    links = _draw_links(sc, grid, rng)
    state = HandoverState()
    trace: list[TraceEntry] = []
    attached = {AntennaId.FRONT: CellId.SERVING, AntennaId.REAR: CellId.SERVING}
    ho_position = {AntennaId.FRONT: None, AntennaId.REAR: None}
    failed = {AntennaId.FRONT: False, AntennaId.REAR: False}
    interrupted_runs: list[tuple[float, float]] = []
    run_start: float | None = None

    def feed(event: ProtocolEvent) -> None:
        nonlocal state
        before = state.phase
        state, emitted = transition(state, event, sc.hysteresis)
        after = state.phase
        trace.append(TraceEntry(event.position, before, event, after))
        # record the whole emission batch before reacting, so a trace is a
        # flat input-then-emissions sequence that replay() can verify
        for out in emitted:
            trace.append(TraceEntry(out.position, after, out, after))
        for out in emitted:
            react(out)

    def react(message: ProtocolEvent) -> None:
        # environment side: zero-latency responses within the grid step
        if message.kind is EventKind.HO_REQUEST:
            feed(ProtocolEvent(EventKind.HO_REQUEST_ACK, message.position))
        elif message.kind in (EventKind.HO_COMMAND_FRONT, EventKind.HO_COMMAND_REAR):
            antenna = (AntennaId.FRONT if message.kind is EventKind.HO_COMMAND_FRONT
                       else AntennaId.REAR)
            attempt(antenna, message.position)
        elif message.kind is EventKind.DUALCAST_FINISH:
            feed(ProtocolEvent(EventKind.DUALCAST_FINISH_ACK, message.position))

    def attempt(antenna: AntennaId, position: float) -> None:
        j = position_index[position]
        target_rss = links[antenna].trig_target[j]
        if target_rss >= sc.threshold:
            attached[antenna] = CellId.TARGET
            ho_position[antenna] = position
            done_kind = (EventKind.FRONT_ATTACHED if antenna is AntennaId.FRONT
                         else EventKind.REAR_ATTACHED)
            feed(ProtocolEvent(done_kind, position, antenna))
        else:
            failed[antenna] = True

    position_index = {x: j for j, x in enumerate(grid.positions)}

    for j, x in enumerate(grid.positions):
        front = links[AntennaId.FRONT]
        rear = links[AntennaId.REAR]
        feed(ProtocolEvent(
            EventKind.MEASUREMENT_REPORT, x,
            front_rss=(float(front.trig_serving[j]), float(front.trig_target[j])),
            rear_rss=(float(rear.trig_serving[j]), float(rear.trig_target[j])),
        ))
        # threshold check against each antenna's attached cell
        below = all(links[a].cell_rss[attached[a]][j] < sc.threshold
                    for a in (AntennaId.FRONT, AntennaId.REAR))
        if below:
            run_start = x if run_start is None else run_start
        elif run_start is not None:
            interrupted_runs.append((run_start, grid.positions[j - 1]))
            run_start = None
    if run_start is not None:
        interrupted_runs.append((run_start, grid.positions[-1]))

    outcome = CrossingOutcome(
        front_ho_position=ho_position[AntennaId.FRONT],
        rear_ho_position=ho_position[AntennaId.REAR],
        front_failed=failed[AntennaId.FRONT],
        rear_failed=failed[AntennaId.REAR],
        interruption_intervals=tuple(interrupted_runs),
        final_state=state,
    )
    return outcome, trace


# === Trace serialization and replay ===


def format_trace(trace: list[TraceEntry]) -> str:
    """Tab-separated trace, one event per line, stable field order."""
    lines = ["position_m\tphase_before\tevent_kind\tantenna\tphase_after"]
    for entry in trace:
        antenna = "" if entry.event.antenna is None else entry.event.antenna.name.lower()
        lines.append(f"{entry.position:.6g}\t{entry.phase_before.value}\t"
                     f"{entry.event.kind.value}\t{antenna}\t{entry.phase_after.value}")
    return "\n".join(lines) + "\n"


def replay(trace: list[TraceEntry], hysteresis: float) -> HandoverState:
    """Re-run every input event of a trace through the transition table.

    Verifies that the recorded phases and emitted events match what the
    table produces; raises ProtocolViolation or AssertionError on any
    divergence. Returns the final state.
    """
    state = HandoverState()
    i = 0
    while i < len(trace):
        entry = trace[i]
        if entry.event.kind not in _INPUT_KINDS:
            raise AssertionError(
                f"trace row {i}: emitted event {entry.event.kind.value} "
                f"not preceded by its input transition")
        if entry.phase_before is not state.phase:
            raise AssertionError(
                f"trace row {i}: recorded phase {entry.phase_before.value}, "
                f"machine is in {state.phase.value}")
        state, emitted = transition(state, entry.event, hysteresis)
        if entry.phase_after is not state.phase:
            raise AssertionError(f"trace row {i}: phase_after mismatch")
        i += 1
        # the emission batch follows its input row directly; reactions to
        # the emissions appear later as their own input rows
        for out in emitted:
            if i >= len(trace):
                raise AssertionError("trace ends before all emitted events")
            got = trace[i].event
            if got.kind is not out.kind or got.position != out.position:
                raise AssertionError(
                    f"trace row {i}: expected emission {out.kind.value}, "
                    f"found {got.kind.value}")
            i += 1
    return state
