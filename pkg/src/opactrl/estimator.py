"""The intruder's view of the closed loop: information flows, augmented
strings, the recursive state estimator, and an exhaustive decoration oracle.

Two decision-issuance mechanisms are supported.  Under the observation-
triggered mechanism the supervisor releases a decision after every event it
observes; under the decision-triggered mechanism it releases one only when
the decision actually changes.  The mechanism changes which flow a string
produces and which case split the estimator applies; it must be fixed for a
whole computation.
"""

from __future__ import annotations

import enum
from typing import NamedTuple, Sequence

from .model import PlantModel, iter_bits
from .supervisors import Supervisor


class IssuanceMode(enum.Enum):
    OBSERVATION = "observation"
    DECISION = "decision"


class SupervisionError(ValueError):
    """A string is not executable in the closed loop."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class FlowFormatError(ValueError):
    """An information flow is malformed."""


class EstimatorError(ValueError):
    """An estimator transition precondition is violated."""


class AugmentedEvent(NamedTuple):
    """One step of an augmented string: the plant event (None only in the
    leading element) and the decision in force after it."""

    event: int | None
    decision: int


class ObservationPair(NamedTuple):
    """One element of the intruder's information flow: an observed event or
    None, and a released decision or None.  Never both None."""

    event: int | None
    decision: int | None


class EstimatorState(NamedTuple):
    """True plant state, the intruder's state estimate, and the decision in
    force.  The distinguished initial marker is represented by ``None``."""

    plant_state: int
    estimate: int
    decision: int


def augment(
    model: PlantModel, s: Sequence[int], sup: Supervisor
) -> tuple[AugmentedEvent, ...]:
    """Decorate each event of ``s`` with the decision in force after it,
    preceded by the initial decision.  ``s`` must be executable under
    ``sup``; the first blocked position is reported otherwise."""
    decision = sup.decision(())
    out = [AugmentedEvent(None, decision)]
    x = model.initial
    obs: list[int] = []
    for pos, sigma in enumerate(s):
        if not (decision >> sigma) & 1:
            raise SupervisionError("string disabled by supervisor", pos)
        y = model.step(x, sigma)
        if y is None:
            raise SupervisionError(
                f"event {model.events[sigma]!r} undefined in plant", pos
            )
        if (model.supervisor_observable >> sigma) & 1:
            obs.append(sigma)
            decision = sup.decision(tuple(obs))
        out.append(AugmentedEvent(sigma, decision))
        x = y
    return tuple(out)


def information_flow(
    model: PlantModel, s: Sequence[int], sup: Supervisor, mode: IssuanceMode
) -> tuple[ObservationPair, ...]:
    """The intruder's timeline of (observed event, released decision) pairs
    along ``s``.  Steps invisible to both parties contribute nothing."""
    decision = sup.decision(())
    out = [ObservationPair(None, decision)]
    x = model.initial
    obs: list[int] = []
    for pos, sigma in enumerate(s):
        if not (decision >> sigma) & 1:
            raise SupervisionError("string disabled by supervisor", pos)
        y = model.step(x, sigma)
        if y is None:
            raise SupervisionError(
                f"event {model.events[sigma]!r} undefined in plant", pos
            )
        sup_sees = (model.supervisor_observable >> sigma) & 1
        int_sees = (model.intruder_observable >> sigma) & 1
        if sup_sees:
            obs.append(sigma)
            new_decision = sup.decision(tuple(obs))
        else:
            # The decision in force cannot change on a step the supervisor
            # does not observe; we assert this rather than re-query policies.
            new_decision = decision
        if mode is IssuanceMode.OBSERVATION:
            released = bool(sup_sees)
        else:
            released = new_decision != decision
        if int_sees and released:
            out.append(ObservationPair(sigma, new_decision))
        elif int_sees:
            out.append(ObservationPair(sigma, None))
        elif released:
            out.append(ObservationPair(None, new_decision))
        decision = new_decision
        x = y
    return tuple(out)


def estimator_step(
    model: PlantModel,
    m: EstimatorState | None,
    event: AugmentedEvent,
    mode: IssuanceMode,
) -> EstimatorState:
    """One transition of the intruder state estimator.

    From the initial marker (``m is None``) only ``(None, decision)`` events
    are defined: the supervisor commits a decision before anything runs.
    Otherwise the event must be enabled at the true plant state by the
    decision in force, and the estimate update depends on the issuance
    mechanism:

    * observation-triggered: keyed on whether the intruder and/or the
      supervisor observes the event;
    * decision-triggered: keyed on whether the intruder observes the event
      and whether the decision changed.
    """
    sigma, new_gamma = event
    if m is None:
        if sigma is not None:
            raise EstimatorError("initial estimator transition carries no event")
        x0 = 1 << model.initial
        est = model.unobservable_reach(x0, new_gamma, model.intruder_unobservable)
        return EstimatorState(model.initial, est, new_gamma)

    x, q, gamma = m
    if sigma is None:
        raise EstimatorError("missing event in non-initial estimator transition")
    if not ((model.active(x) >> sigma) & 1 and (gamma >> sigma) & 1):
        raise EstimatorError("event not enabled at estimator state")
    y = model.step(x, sigma)
    assert y is not None
    hidden = model.intruder_unobservable
    int_sees = (model.intruder_observable >> sigma) & 1

    if mode is IssuanceMode.OBSERVATION:
        sup_sees = (model.supervisor_observable >> sigma) & 1
        if int_sees and not sup_sees:
            est = model.unobservable_reach(
                model.observable_reach(q, sigma), gamma, hidden
            )
        elif sup_sees and not int_sees:
            est = model.unobservable_reach(
                model.unobservable_reach_plus(q, gamma), new_gamma, hidden
            )
        elif int_sees:
            est = model.unobservable_reach(
                model.observable_reach(q, sigma), new_gamma, hidden
            )
        else:
            est = q
    else:
        changed = new_gamma != gamma
        if int_sees and not changed:
            est = model.unobservable_reach(
                model.observable_reach(q, sigma), gamma, hidden
            )
        elif changed and not int_sees:
            est = model.unobservable_reach(
                model.unobservable_reach_plus(q, gamma), new_gamma, hidden
            )
        elif int_sees:
            est = model.unobservable_reach(
                model.observable_reach(q, sigma), new_gamma, hidden
            )
        else:
            est = q
    return EstimatorState(y, est, new_gamma)


def estimator_trace(
    model: PlantModel, augmented: Sequence[AugmentedEvent], mode: IssuanceMode
) -> tuple[EstimatorState, ...]:
    """Fold :func:`estimator_step` from the initial marker, returning the
    state visited after each augmented event."""
    if not augmented or augmented[0].event is not None:
        raise EstimatorError("augmented string must start with the initial decision")
    states: list[EstimatorState] = []
    m: EstimatorState | None = None
    for event in augmented:
        m = estimator_step(model, m, event, mode)
        states.append(m)
    return tuple(states)


def run_estimator(
    model: PlantModel, augmented: Sequence[AugmentedEvent], mode: IssuanceMode
) -> EstimatorState:
    """Final estimator state after replaying a whole augmented string."""
    return estimator_trace(model, augmented, mode)[-1]


def estimate_from_flow(
    model: PlantModel, flow: Sequence[ObservationPair], mode: IssuanceMode
) -> int:
    """The intruder's state estimate computed directly from its information
    flow.  Agrees with the estimate component of :func:`run_estimator` on the
    flow induced by the same string."""
    if not flow or flow[0].event is not None or flow[0].decision is None:
        raise FlowFormatError("flow must start with the initial decision release")
    gamma = flow[0].decision
    q = model.unobservable_reach(
        1 << model.initial, gamma, model.intruder_unobservable
    )
    hidden = model.intruder_unobservable
    for pair in flow[1:]:
        sigma, released = pair
        if sigma is None and released is None:
            raise FlowFormatError("empty observation pair in flow")
        if sigma is not None and not (model.intruder_observable >> sigma) & 1:
            raise FlowFormatError(
                f"event {model.events[sigma]!r} is not visible to the intruder"
            )
        if released is not None and mode is IssuanceMode.DECISION and released == gamma:
            raise FlowFormatError(
                "unchanged decision released under the decision-triggered mechanism"
            )
        if released is None:
            q = model.unobservable_reach(
                model.observable_reach(q, sigma), gamma, hidden
            )
        elif sigma is None:
            q = model.unobservable_reach(
                model.unobservable_reach_plus(q, gamma), released, hidden
            )
            gamma = released
        else:
            q = model.unobservable_reach(
                model.observable_reach(q, sigma), released, hidden
            )
            gamma = released
    return q


def oracle_controlled_estimate(
    model: PlantModel,
    flow: Sequence[ObservationPair],
    mode: IssuanceMode,
    bound: int,
    memoize: bool = True,
) -> int:
    """Brute-force reference for the controlled state estimate.

    Enumerates every decorated string of at most ``bound`` plant events: at
    each step the event must be enabled by the decision in force, and the
    step either releases the (new) decision or stays silent keeping the old
    one.  Under the decision-triggered mechanism a release happens exactly
    when the decision changes.  A decoration matches when the observation
    pairs it induces equal ``flow``; the result collects the end plant states
    of all matching decorations.

    The memoized search prunes revisits of (plant state, flow position,
    decision in force, steps used); ``memoize=False`` runs the raw
    exponential enumeration, kept as a cross-check for the memoization.
    """
    if not flow or flow[0].event is not None or flow[0].decision is None:
        raise FlowFormatError("flow must start with the initial decision release")
    if bound < len(flow) - 1:
        raise ValueError("bound smaller than the number of flow steps")
    total = len(flow)
    decision_triggered = mode is IssuanceMode.DECISION
    result = 0
    seen: set[tuple[int, int, int, int]] = set()
    stack = [(model.initial, 1, flow[0].decision, 0)]
    if memoize:
        seen.add(stack[0])
    while stack:
        x, i, d, k = stack.pop()
        if i == total:
            result |= 1 << x
        if k == bound:
            continue
        enabled = model.active(x) & d
        nxt = flow[i] if i < total else None
        for sigma in iter_bits(enabled):
            y = model.step(x, sigma)
            int_sees = (model.intruder_observable >> sigma) & 1
            candidates = []
            # Silent step: the decision in force is kept.
            if int_sees:
                if nxt is not None and nxt.event == sigma and nxt.decision is None:
                    candidates.append((y, i + 1, d, k + 1))
            else:
                candidates.append((y, i, d, k + 1))
            # Releasing step: must produce the next flow pair.
            if nxt is not None and nxt.decision is not None:
                expected = sigma if int_sees else None
                if nxt.event == expected and not (
                    decision_triggered and nxt.decision == d
                ):
                    candidates.append((y, i + 1, nxt.decision, k + 1))
            for node in candidates:
                if memoize:
                    if node in seen:
                        continue
                    seen.add(node)
                stack.append(node)
    return result
