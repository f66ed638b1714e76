"""Augmented strings, information flows, the state estimator, and the
flow-side estimate under both issuance mechanisms."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEC, OBS, closed_loop_strings, pair
from opactrl import (
    AugmentedEvent,
    EstimatorState,
    FlowFormatError,
    ObservationPair,
    SupervisionError,
    augment,
    estimate_from_flow,
    estimator_step,
    estimator_trace,
    information_flow,
    project,
    run_estimator,
)
from opactrl.estimator import EstimatorError
from opactrl.randgen import RandomModelConfig, random_model, random_supervisor


def aug(model, event, decision):
    ev = None if event is None else model.event(event)
    return AugmentedEvent(ev, model.control_decision(decision.split()))


def est(model, x, q, decision):
    return EstimatorState(
        model.state(x),
        model.state_mask(q.split()),
        model.control_decision(decision.split()),
    )


SIGMA = "a u1 u2 u3 b"


def test_augment_running_string(run_model, srun):
    m = run_model
    assert augment(m, m.word("a u1 u2 u2"), srun) == (
        aug(m, None, SIGMA),
        aug(m, "a", SIGMA),
        aug(m, "u1", "a b u2"),
        aug(m, "u2", "a b u2"),
        aug(m, "u2", SIGMA),
    )


def test_augment_base_case(run_model, srun):
    assert augment(run_model, (), srun) == (aug(run_model, None, SIGMA),)


def test_augment_through_intruder_visible_event(run_model, srun):
    m = run_model
    assert augment(m, m.word("a u2 b"), srun) == (
        aug(m, None, SIGMA),
        aug(m, "a", SIGMA),
        aug(m, "u2", "a b u1"),
        aug(m, "b", "a b u1"),
    )


def test_augment_rejects_disabled_string(run_model, srun):
    with pytest.raises(SupervisionError, match="position 2") as exc:
        augment(run_model, run_model.word("a u1 u3"), srun)
    assert exc.value.position == 2
    with pytest.raises(SupervisionError, match="undefined"):
        augment(run_model, run_model.word("b"), srun)


def test_information_flow_observation_mode(run_model, srun):
    m = run_model
    assert information_flow(m, m.word("a u1 u2 u2"), srun, OBS) == (
        pair(m, None, SIGMA),
        pair(m, "a", None),
        pair(m, None, "a b u2"),
        pair(m, None, "a b u2"),
        pair(m, None, SIGMA),
    )


def test_information_flow_decision_mode(run_model, srun):
    m = run_model
    assert information_flow(m, m.word("a u1 u2 u2"), srun, DEC) == (
        pair(m, None, SIGMA),
        pair(m, "a", None),
        pair(m, None, "a b u2"),
        pair(m, None, SIGMA),
    )


def test_information_flow_empty_string(run_model, srun):
    expected = (pair(run_model, None, SIGMA),)
    assert information_flow(run_model, (), srun, OBS) == expected
    assert information_flow(run_model, (), srun, DEC) == expected


def test_estimator_step_supervisor_only_event(run_model):
    m = run_model
    start = est(m, "1", "1 2 3 4 5 6 7", SIGMA)
    assert estimator_step(m, start, aug(m, "u1", "a b u2"), OBS) == est(
        m, "2", "2 3 4 5 6 7", "a b u2"
    )


def test_estimator_step_reveals_secret(run_model):
    m = run_model
    start = est(m, "5", "5 7", "a b u2")
    assert estimator_step(m, start, aug(m, "u2", SIGMA), OBS) == est(m, "7", "7", SIGMA)


def test_estimator_step_silent_cases(run_model):
    m = run_model
    # u3 is invisible to both parties: the estimate is untouched.
    start = est(m, "2", "2 3 4 5 6 7", SIGMA)
    stepped = estimator_step(m, start, aug(m, "u3", SIGMA), OBS)
    assert stepped == est(m, "6", "2 3 4 5 6 7", SIGMA)
    # decision-triggered: a supervisor-visible event with an unchanged
    # decision is just as silent.
    start = est(m, "2", "2 3 4 5 6 7", "a b u2")
    stepped = estimator_step(m, start, aug(m, "u2", "a b u2"), DEC)
    assert stepped == est(m, "5", "2 3 4 5 6 7", "a b u2")


def test_estimator_step_preconditions(run_model):
    m = run_model
    with pytest.raises(EstimatorError, match="not enabled"):
        estimator_step(m, est(m, "0", "0", SIGMA), aug(m, "u1", SIGMA), OBS)
    with pytest.raises(EstimatorError, match="initial"):
        estimator_step(m, None, aug(m, "a", SIGMA), OBS)
    with pytest.raises(EstimatorError, match="missing event"):
        estimator_step(m, est(m, "0", "0", SIGMA), aug(m, None, SIGMA), OBS)


def test_estimator_trace_reproduces_running_example(run_model, srun):
    m = run_model
    trace = estimator_trace(m, augment(m, m.word("a u1 u2 u2"), srun), OBS)
    assert trace == (
        est(m, "0", "0", SIGMA),
        est(m, "1", "1 2 3 4 5 6 7", SIGMA),
        est(m, "2", "2 3 4 5 6 7", "a b u2"),
        est(m, "5", "5 7", "a b u2"),
        est(m, "7", "7", SIGMA),
    )


def test_run_estimator_examples(run_model, srun, sprime):
    m = run_model
    s = m.word("a u1 u2 u2")
    assert run_estimator(m, augment(m, s, srun), OBS) == est(m, "7", "7", SIGMA)
    assert run_estimator(m, augment(m, s, sprime), OBS) == est(m, "7", "6 7", SIGMA)
    assert run_estimator(m, augment(m, s, srun), DEC) == est(m, "7", "5 6 7", SIGMA)


def test_estimate_from_flow_examples(run_model, srun):
    m = run_model
    flow = information_flow(m, m.word("a u1 u2 u2"), srun, OBS)
    assert estimate_from_flow(m, flow, OBS) == m.state_mask(["7"])
    assert estimate_from_flow(m, (pair(m, None, SIGMA),), OBS) == m.state_mask(["0"])
    flow_dec = (
        pair(m, None, SIGMA),
        pair(m, "a", None),
        pair(m, None, "a b u2"),
        pair(m, None, SIGMA),
    )
    assert estimate_from_flow(m, flow_dec, DEC) == m.state_mask(["5", "6", "7"])


def test_estimate_from_flow_rejects_malformed(run_model):
    m = run_model
    with pytest.raises(FlowFormatError, match="initial decision"):
        estimate_from_flow(m, (pair(m, "a", None),), OBS)
    with pytest.raises(FlowFormatError, match="empty observation pair"):
        estimate_from_flow(m, (pair(m, None, SIGMA), ObservationPair(None, None)), OBS)
    with pytest.raises(FlowFormatError, match="not visible"):
        estimate_from_flow(m, (pair(m, None, SIGMA), pair(m, "u1", None)), OBS)
    with pytest.raises(FlowFormatError, match="unchanged decision"):
        estimate_from_flow(m, (pair(m, None, SIGMA), pair(m, None, SIGMA)), DEC)


# Properties over random closed loops ---------------------------------------

model_seeds = st.integers(0, 10**9)


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=60, deadline=None)
def test_estimator_flow_and_policy_agree(seed, mode):
    """The estimator's final state carries exactly (plant state, flow-side
    estimate, decision in force), and the true state is always estimated."""
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig())
    sup = random_supervisor(rng, model)
    for s in closed_loop_strings(model, sup, 5):
        final = run_estimator(model, augment(model, s, sup), mode)
        x = model.initial
        for e in s:
            x = model.step(x, e)
        assert final.plant_state == x
        flow = information_flow(model, s, sup, mode)
        assert final.estimate == estimate_from_flow(model, flow, mode)
        assert final.decision == sup.decision(
            project(s, model.supervisor_observable)
        )
        assert (final.estimate >> final.plant_state) & 1  # membership soundness


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=60, deadline=None)
def test_flow_projection_consistency(seed, mode):
    """Erasing decisions and empty markers from a flow leaves the intruder's
    plain event projection."""
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig())
    sup = random_supervisor(rng, model)
    for s in closed_loop_strings(model, sup, 5):
        flow = information_flow(model, s, sup, mode)
        events = tuple(p.event for p in flow if p.event is not None)
        assert events == project(s, model.intruder_observable)


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=30, deadline=None)
def test_estimator_is_deterministic(seed, mode):
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig())
    sup = random_supervisor(rng, model)
    for s in closed_loop_strings(model, sup, 4):
        augmented = augment(model, s, sup)
        assert estimator_trace(model, augmented, mode) == estimator_trace(
            model, augmented, mode
        )
