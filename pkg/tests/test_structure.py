"""Information-state operators, control structures, decoded supervisors,
closed-loop simulation, and closed-loop opacity verification."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEC, OBS, closed_loop_strings, feasible_observations
from opactrl import (
    ConstantSupervisor,
    EstimatorState,
    PlantModel,
    StructureError,
    SynthesisConfig,
    brute_estimate_set,
    closed_loop_simulate,
    augment,
    estimator_step,
    info_decision,
    info_estimates,
    info_plant_states,
    is_consistent,
    is_safe,
    make_info,
    nx_is,
    run_estimator,
    structure_from_policy,
    supervisor_estimate,
    synthesize,
    ur_is,
    verify_closed_loop_opacity,
)
from opactrl.estimator import AugmentedEvent
from opactrl.randgen import RandomModelConfig, random_model, random_supervisor
from opactrl.supervisors import TabularSupervisor

SIGMA = "a u1 u2 u3 b"


def est(model, x, q, decision):
    return EstimatorState(
        model.state(x),
        model.state_mask(q.split()),
        model.control_decision(decision.split()),
    )


def info(model, *members):
    return make_info([est(model, *m) for m in members])


def test_info_state_accessors(run_model):
    m = run_model
    i = info(m, ("0", "0", SIGMA), ("1", "1 2 3 4 5 6 7", SIGMA))
    assert is_consistent(i)
    assert info_plant_states(i) == m.state_mask(["0", "1"])
    assert info_estimates(i) == {m.state_mask(["0"]), m.state_mask(["1", "2", "3", "4", "5", "6", "7"])}
    assert info_decision(i) == m.all_events_mask
    mixed = info(m, ("0", "0", SIGMA), ("1", "1", "a b u1"))
    assert not is_consistent(mixed)
    with pytest.raises(StructureError, match="inconsistent"):
        info_decision(mixed)


def test_nx_is_examples(run_model):
    m = run_model
    start = info(m, ("0", "0", SIGMA), ("1", "1 2 3 4 5 6 7", SIGMA))
    gamma = m.control_decision("a b u2".split())
    assert nx_is(m, start, m.event("u1"), gamma, OBS) == info(
        m, ("2", "2 3 4 5 6 7", "a b u2")
    )
    # no member enables the event
    assert nx_is(m, info(m, ("0", "0", SIGMA)), m.event("u1"), gamma, OBS) == ()
    gamma1 = m.control_decision("a b u1".split())
    assert nx_is(
        m, info(m, ("1", "1 2 3 4 5 6 7", SIGMA)), m.event("u2"), gamma1, OBS
    ) == info(m, ("3", "2 3 4 5 6 7", "a b u1"))


def test_ur_is_examples(run_model):
    m = run_model
    assert ur_is(m, info(m, ("0", "0", SIGMA)), m.all_events_mask, OBS) == info(
        m, ("0", "0", SIGMA), ("1", "1 2 3 4 5 6 7", SIGMA)
    )
    # nothing supervisor-silent enabled
    frozen = info(m, ("5", "5 7", "a b u2"))
    assert ur_is(m, frozen, m.control_decision("a b u2".split()), OBS) == frozen
    # the closure tracks intruder-visible but supervisor-silent events
    gamma1 = m.control_decision("a b u1".split())
    assert ur_is(m, info(m, ("3", "2 3 4 5 6 7", "a b u1")), gamma1, OBS) == info(
        m, ("3", "2 3 4 5 6 7", "a b u1"), ("5", "5 6", "a b u1")
    )
    with pytest.raises(StructureError, match="shared decision"):
        ur_is(m, frozen, m.all_events_mask, OBS)


def test_is_safe_examples(run_model):
    m = run_model
    assert not is_safe(info(m, ("7", "7", SIGMA)), m.secret_mask)
    assert is_safe(info(m, ("7", "5 6 7", SIGMA)), m.secret_mask)
    assert is_safe(info(m, ("7", "7", SIGMA)), 0)


@pytest.fixture(scope="module")
def fig4(run_model, srun):
    return structure_from_policy(run_model, srun, OBS)


def test_structure_from_policy_shape(run_model, fig4):
    assert len(fig4.decisions) == 6
    assert len(fig4.observations) == 6


def test_run_structure_empty_observation(run_model, fig4):
    m = run_model
    result = fig4.run(())
    assert result.decisions == (m.all_events_mask,)
    assert result.observation_state == info(
        m, ("0", "0", SIGMA), ("1", "1 2 3 4 5 6 7", SIGMA)
    )


def test_run_structure_decodes_decision(run_model, fig4):
    result = fig4.run(run_model.word("u2"))
    assert result.decisions[-1] == run_model.control_decision("a b u1".split())
    decoded = fig4.decoded()
    assert decoded.decision(run_model.word("u2")) == run_model.control_decision(
        "a b u1".split()
    )


def test_run_structure_infeasible_observation(run_model, fig4):
    with pytest.raises(StructureError, match="position 1"):
        fig4.run(run_model.word("u1 u1"))


def self_loop_model():
    return PlantModel.from_dict(
        {
            "states": ["0"],
            "events": ["u"],
            "initial": "0",
            "transitions": [["0", "u", "0"]],
            "observable_supervisor": ["u"],
            "observable_intruder": [],
            "controllable": [],
        }
    )


def test_single_decision_state_loop_decodes_constant_supervisor():
    model = self_loop_model()
    structure = structure_from_policy(
        model, ConstantSupervisor(model.all_events_mask), OBS
    )
    decoded = structure.decoded()
    for n in range(5):
        assert decoded.decision(tuple([model.event("u")] * n)) == model.all_events_mask


def test_structure_from_policy_rejects_history_dependent_policy():
    doc = self_loop_model().to_dict()
    doc["controllable"] = ["u"]
    model = PlantModel.from_dict(doc)
    sup = TabularSupervisor(model, {"": ["u"], "u": ["u"], "u u": []})
    with pytest.raises(StructureError, match="not information-state based"):
        structure_from_policy(model, sup, OBS)


def test_closed_loop_simulate(run_model, srun):
    m = run_model
    ok = closed_loop_simulate(m, srun, m.word("a u1 u2 u2"))
    assert ok.accepted
    assert ok.trace == augment(m, m.word("a u1 u2 u2"), srun)
    bad = closed_loop_simulate(m, srun, m.word("a u1 u3"))
    assert not bad.accepted and bad.rejected_at == 2
    permissive = ConstantSupervisor(m.all_events_mask)
    for s in closed_loop_strings(m, permissive, 6):
        assert closed_loop_simulate(m, permissive, s).accepted


def test_supervisor_estimate_examples(run_model, srun):
    m = run_model
    assert supervisor_estimate(m, srun, m.word("u1")) == m.state_mask(["2"])
    assert supervisor_estimate(m, srun, ()) == m.state_mask(["0", "1"])
    doc = m.to_dict()
    doc["observable_supervisor"] = list(m.events)
    full_obs = PlantModel.from_dict(doc)
    assert supervisor_estimate(
        full_obs, ConstantSupervisor(full_obs.all_events_mask), ()
    ) == 1 << full_obs.initial
    with pytest.raises(StructureError, match="infeasible"):
        supervisor_estimate(m, srun, m.word("u1 u1"))


def test_brute_estimate_set_bounded_matches_exact(run_model, srun):
    # the plant is acyclic, so a bound covering the longest string is exact
    m = run_model
    for alpha in (() , m.word("u1"), m.word("u1 u2"), m.word("u2")):
        for mode in (OBS, DEC):
            exact = brute_estimate_set(m, srun, alpha, mode)
            assert brute_estimate_set(m, srun, alpha, mode, bound=8) == exact
            # tighter bounds only lose estimates, never invent them
            assert brute_estimate_set(m, srun, alpha, mode, bound=len(alpha)) <= exact


def test_verify_closed_loop_examples(run_model, srun, sprime):
    m = run_model
    v = verify_closed_loop_opacity(m, srun, OBS)
    assert not v.opaque and v.counterexample == ("a", "u1", "u2", "u2")
    assert verify_closed_loop_opacity(m, sprime, OBS).opaque
    assert verify_closed_loop_opacity(m, srun, DEC).opaque


def test_decision_mode_structure_of_baseline_policy(run_model, srun):
    """Under decision-triggered issuance the same policy induces a structure
    whose estimates are strictly coarser, and every state is safe."""
    m = run_model
    structure = structure_from_policy(m, srun, DEC)
    assert set(structure.observations) == {
        info(m, ("0", "0", SIGMA), ("1", "1 2 3 4 5 6 7", SIGMA)),
        info(m, ("2", "2 3 4 5 6 7", "a b u2")),
        info(m, ("3", "2 3 4 5 6 7", "a b u1"), ("5", "5 6", "a b u1")),
        info(m, ("5", "2 3 4 5 6 7", "a b u2")),
        info(m, ("7", "5 6 7", SIGMA)),
        info(m, ("6", "5 6", "a b u1")),
    }
    assert all(is_safe(i, m.secret_mask) for i in structure.observations)


def test_verify_structure_route_matches_string_route(run_model, fig4, sprime):
    v = verify_closed_loop_opacity(run_model, fig4, OBS)
    assert not v.opaque and v.counterexample == ("a", "u1", "u2", "u2")
    assert verify_closed_loop_opacity(run_model, fig4, DEC).opaque
    sprime_structure = structure_from_policy(run_model, sprime, OBS)
    assert verify_closed_loop_opacity(run_model, sprime_structure.decoded(), OBS).opaque


def test_verify_bounded_verdict_on_infinite_memory_policy():
    model = self_loop_model()

    class CountingPolicy(TabularSupervisor):
        # decision depends on the whole history length: no finite signature
        def __init__(self, model):
            super().__init__(model, {})

        def decision(self, obs):
            return model.all_events_mask

        def observation_signature(self, obs):
            return obs

    verdict = verify_closed_loop_opacity(model, CountingPolicy(model), OBS, depth_bound=5)
    assert verdict.opaque and not verdict.complete and verdict.bound == 5


def test_verify_terminates_on_cyclic_model_with_tabular_policy():
    model = self_loop_model()
    sup = TabularSupervisor(model, {"u": ["u"]})
    verdict = verify_closed_loop_opacity(model, sup, OBS)
    assert verdict.opaque and verdict.complete


# Properties ---------------------------------------------------------------

model_seeds = st.integers(0, 10**9)


def _sample_info_states(rng, model, sup, mode, max_len=4):
    """Observation states arising from a random policy, plus sub-infos."""
    out = []
    for alpha in sorted(feasible_observations(model, sup, max_len)):
        members = []
        m0 = estimator_step(
            model, None, AugmentedEvent(None, sup.decision(())), mode
        )
        stack = [(m0, 0)]
        seen = {(m0, 0)}
        while stack:
            m, i = stack.pop()
            if i == len(alpha):
                members.append(m)
            # interleave plant exploration to sample reachable members
            gamma = m.decision
            for e in range(len(model.events)):
                if model.step(m.plant_state, e) is None or not (gamma >> e) & 1:
                    continue
                if (model.supervisor_observable >> e) & 1:
                    if i == len(alpha) or alpha[i] != e:
                        continue
                    nxt = (
                        estimator_step(
                            model,
                            m,
                            AugmentedEvent(e, sup.decision(alpha[: i + 1])),
                            mode,
                        ),
                        i + 1,
                    )
                else:
                    nxt = (
                        estimator_step(model, m, AugmentedEvent(e, gamma), mode),
                        i,
                    )
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        if members:
            out.append(make_info(members))
    return out


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=40, deadline=None)
def test_ur_is_is_a_closure_operator(seed, mode):
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig(max_states=4, max_events=3))
    sup = random_supervisor(rng, model)
    for state in _sample_info_states(rng, model, sup, mode, max_len=2):
        gamma = info_decision(state)
        closed = ur_is(model, state, gamma, mode)
        assert set(state) <= set(closed)  # extensive
        assert ur_is(model, closed, gamma, mode) == closed  # idempotent
        sub = state[: max(1, len(state) - 1)]
        assert set(ur_is(model, sub, gamma, mode)) <= set(closed)  # monotone
        assert is_consistent(closed) and info_decision(closed) == gamma


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=40, deadline=None)
def test_nx_is_preserves_consistency(seed, mode):
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig(max_states=4, max_events=3))
    sup = random_supervisor(rng, model)
    for state in _sample_info_states(rng, model, sup, mode, max_len=2):
        gamma_new = model.uncontrollable | (rng.getrandbits(8) & model.controllable)
        for sigma in range(len(model.events)):
            image = nx_is(model, state, sigma, gamma_new, mode)
            if image:
                assert is_consistent(image)
                assert info_decision(image) == gamma_new


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=25, deadline=None)
def test_decoded_supervisor_states_match_string_side(seed, mode):
    """Both claims about what an observation state holds: the plant states
    are the supervisor's own estimate, the estimate sets are exactly the
    intruder's possible estimates."""
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig(max_states=4, max_events=3))
    out = synthesize(model, SynthesisConfig(mode=mode, size_guard=20_000))
    if not out.solved:
        return
    structure = out.structure
    decoded = structure.decoded()
    for alpha in sorted(feasible_observations(model, decoded, 3)):
        state = structure.run(alpha).observation_state
        assert info_plant_states(state) == supervisor_estimate(model, decoded, alpha)
        assert info_estimates(state) == brute_estimate_set(model, decoded, alpha, mode)
        again = structure.run(alpha)
        assert again.observation_state == state and again.decisions == structure.run(alpha).decisions


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=25, deadline=None)
def test_safe_structures_verify_opaque(seed, mode):
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig(max_states=4, max_events=3))
    out = synthesize(model, SynthesisConfig(mode=mode, size_guard=20_000))
    if not out.solved:
        return
    structure = out.structure
    assert all(is_safe(i, model.secret_mask) for i in structure.observations)
    assert verify_closed_loop_opacity(model, structure, mode).opaque


@given(model_seeds, st.sampled_from([OBS, DEC]))
@settings(max_examples=25, deadline=None)
def test_estimator_matches_brute_set_membership(seed, mode):
    """The estimate reached along any one string is among the estimates the
    string side enumerates for its observation."""
    rng = random.Random(seed)
    model = random_model(rng, RandomModelConfig(max_states=4, max_events=3))
    sup = random_supervisor(rng, model)
    for s in closed_loop_strings(model, sup, 4):
        final = run_estimator(model, augment(model, s, sup), mode)
        alpha = tuple(
            e for e in s if (model.supervisor_observable >> e) & 1
        )
        assert final.estimate in brute_estimate_set(model, sup, alpha, mode)
