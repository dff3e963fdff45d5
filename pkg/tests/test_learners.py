"""Queue updates, schedules, step functions, doubling wrapper, baselines."""

import math

import numpy as np
import pytest

from helpers import queue_property_slack, random_tracking_instance
from vqoco import (
    Box,
    ConfigurationError,
    ConstraintOracle,
    LossOracle,
    SaddleLearner,
    SlaterLearner,
    SolverConfig,
    VqbLearner,
    alpha_schedule,
    doubling_run,
    epoch_lengths,
    gamma_schedule,
    preset_params,
    rollout,
    saddle_step,
    slater_dual_update,
    slater_params,
    slater_queue_cap,
    slater_step,
    vqb_dual_update,
    vqb_init,
    vqb_step,
)
from vqoco.learners import SaddleState, saddle_init, slater_init


# ---------------------------------------------------------------------------
# dual updates


def test_vqb_dual_update_zero_start():
    np.testing.assert_array_equal(
        vqb_dual_update(np.zeros(2), 0.7, np.zeros(2)), np.zeros(2)
    )


def test_vqb_dual_update_componentwise_max():
    got = vqb_dual_update(np.array([1.0, 0.0]), 0.5, np.array([2.0, -1.0]))
    np.testing.assert_allclose(got, [2.0, 0.5])


def test_vqb_dual_update_negative_branch():
    got = vqb_dual_update(np.array([0.2]), 1.0, np.array([-3.0]))
    np.testing.assert_allclose(got, [3.0])


def test_slater_dual_update_same_arithmetic():
    np.testing.assert_array_equal(slater_dual_update(np.zeros(1), 0.3, np.zeros(1)), [0.0])
    np.testing.assert_allclose(
        slater_dual_update(np.array([1.0, 0.0]), 0.5, np.array([2.0, -1.0])), [2.0, 0.5]
    )
    np.testing.assert_allclose(slater_dual_update(np.array([5.0]), 1.0, np.array([-2.0])), [3.0])


# ---------------------------------------------------------------------------
# schedules and parameter bundles


def test_alpha_schedule_values():
    assert alpha_schedule(1, 100, 2.0, 0.0) == pytest.approx(math.sqrt(50.0))
    assert alpha_schedule(5, 100, 2.0, 2.0) == pytest.approx(5.0)
    assert alpha_schedule(1, 7, 7.0, 0.0) == pytest.approx(1.0)


def test_alpha_schedule_nonincreasing_in_path():
    vals = [alpha_schedule(1, 1000, 3.0, p) for p in (0.0, 0.5, 2.0, 10.0)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_gamma_schedule_case1():
    g = gamma_schedule("case1", 0, 1.0, 2.0)
    assert g**2 == pytest.approx(0.25)
    assert gamma_schedule("case1", 99, 1.0, 2.0) == pytest.approx(g)


def test_gamma_schedule_case2_decay_and_convexity():
    g3 = gamma_schedule("case2", 3, 1.0, 2.0)
    assert g3**2 == pytest.approx(0.25 / 2.0)
    seq = [gamma_schedule("case2", t, 1.0, 2.0) for t in range(0, 200)]
    assert all(a > b for a, b in zip(seq, seq[1:]))  # strictly decreasing
    for t in range(1, 199):
        assert 2.0 * seq[t] <= seq[t - 1] + seq[t + 1] + 1e-15
    assert gamma_schedule("case2", 10**8, 1.0, 2.0) < 1e-2  # vanishes in the limit


def test_slater_params_values():
    assert slater_params(0.5, 100, 1.0) == pytest.approx((10.0, math.sqrt(5.0)))
    assert slater_params(0.5, 1, 1.0) == pytest.approx((1.0, 1.0 / math.sqrt(2.0)))
    alpha, gamma = slater_params(0.25, 16, 2.0)
    assert (alpha, gamma**2) == pytest.approx((2.0, 0.25))
    with pytest.raises(ConfigurationError):
        slater_params(1.0, 10, 1.0)


def test_preset_params_table_values():
    p = preset_params("cao2018", 400, 5, 7.0)
    assert p["delta"] == pytest.approx(1961.0)
    assert p["eta"] == pytest.approx(0.1)
    p = preset_params("chen2017", 8, 5, 7.0)
    assert p["alpha"] == pytest.approx(2.0)
    assert p["mu"] == pytest.approx(2.0)
    p = preset_params("chen2018", 256, 5, 7.0)
    assert p["lambda1"] == pytest.approx(4.0 * math.sqrt(2.0) * 2.0)
    p = preset_params("chen2019", 400, 5, 7.0)
    assert p["mu"] == pytest.approx(0.05)
    assert p["alpha"] == pytest.approx(0.1)
    assert preset_params("vqb_case1", 10, 5, 7.0)["schedule"] == "case1"
    with pytest.raises(ConfigurationError):
        preset_params("unknown", 10, 5, 7.0)


# ---------------------------------------------------------------------------
# step functions


def _still_instance(n=1):
    box = Box(-np.ones(n), np.ones(n))
    loss = LossOracle(eval=lambda x: 0.0, grad=lambda x: np.zeros(n))
    cons = ConstraintOracle(eval=lambda x: np.zeros(1), jac=lambda x: np.zeros((1, n)))
    return box, loss, cons


def test_vqb_step_no_forces_keeps_action():
    box, loss, cons = _still_instance(2)
    from vqoco import AssumptionConstants

    constants = AssumptionConstants(F=1.0, G=1.0, R=box.diameter(), beta=1.0)
    state = vqb_init(constants, 10, box, "case1", x0=np.array([0.3, -0.2]))
    new_state, rec = vqb_step(state, loss, cons, box, np.zeros(2))
    np.testing.assert_allclose(rec.x_next, [0.3, -0.2], atol=1e-10)
    np.testing.assert_array_equal(rec.lam, np.zeros(1))


def test_vqb_step_single_round_closed_form():
    # T=4, R=2, beta=1, case1: gamma_0 = gamma_1 = 0.5, alpha_1 = sqrt(2);
    # with a zero queue the update is one projected gradient step.
    box = Box(np.array([-1.0]), np.array([1.0]))
    loss = LossOracle(eval=lambda x: float(x[0]), grad=lambda x: np.array([1.0]))
    cons = ConstraintOracle(eval=lambda x: np.array([x[0] - 2.0]), jac=lambda x: np.array([[1.0]]))
    from vqoco import AssumptionConstants

    constants = AssumptionConstants(F=3.0, G=1.0, R=2.0, beta=1.0)
    state = vqb_init(constants, 4, box, "case1", x0=np.zeros(1))
    assert state.gamma_prev == pytest.approx(0.5)
    new_state, rec = vqb_step(state, loss, cons, box, np.zeros(1))
    assert rec.alpha == pytest.approx(math.sqrt(2.0))
    assert rec.gamma == pytest.approx(0.5)
    np.testing.assert_array_equal(rec.lam, [0.0])
    np.testing.assert_allclose(rec.x_next, [-1.0 / (2.0 * math.sqrt(2.0))], atol=1e-8)


def test_vqb_step_composes_with_dual_update():
    # a step whose stored queue inputs equal the documented example reproduces
    # the documented update inside the new state
    box, loss, cons_zero = _still_instance(2)

    def cons_eval(x):
        return np.array([2.0, -1.0])

    cons = ConstraintOracle(eval=cons_eval, jac=lambda x: np.zeros((2, 2)))
    from vqoco import AssumptionConstants
    from vqoco.learners import VqbState

    constants = AssumptionConstants(F=3.0, G=1.0, R=box.diameter(), beta=1.0)
    state = VqbState(
        t=5,
        x=np.zeros(2),
        lam=np.array([1.0, 0.0]),
        lam_prev=np.zeros(2),
        g_prev_at_x=np.array([2.0, -1.0]),
        gamma_prev=0.5,
        path_len=0.0,
        x_star_prev=np.zeros(2),
        case="case1",
        constants=constants,
        horizon=10,
    )
    _, rec = vqb_step(state, loss, cons, box, np.zeros(2))
    np.testing.assert_allclose(rec.lam, [2.0, 0.5])
    assert queue_property_slack(rec) <= 1e-12


def test_vqb_queue_properties_on_tracking_run():
    inst = random_tracking_instance(3, n=3, n_constraints=2, horizon=120)
    learner = VqbLearner(inst.constants, 120, inst.set_at(1), "case2", n_constraints=2)
    traj, records = rollout(learner, inst, "vqb_case2", seed=3)
    assert max(queue_property_slack(r) for r in records) <= 1e-12
    assert traj.max_residual <= 1e-6
    # emitted actions always belong to the round's feasible set
    for t in range(1, 121):
        assert inst.set_at(t).contains(traj.actions[t - 1], tol=0.0)


def test_slater_step_arithmetic_and_properties():
    # queue update with the current round's constraint at the current action
    box = Box(np.array([-2.0]), np.array([2.0]))
    loss = LossOracle(eval=lambda x: 0.0, grad=lambda x: np.zeros(1))
    cons = ConstraintOracle(eval=lambda x: np.array([x[0] - 0.5]), jac=lambda x: np.array([[1.0]]))
    from vqoco import AssumptionConstants
    from vqoco.learners import SlaterState

    constants = AssumptionConstants(F=3.0, G=1.0, R=4.0, beta=1.0)
    state = SlaterState(
        t=1, x=np.array([1.0]), lam=np.zeros(1), lam_prev=np.zeros(1),
        alpha=1.0, gamma=1.0, constants=constants,
    )
    new_state, rec = slater_step(state, loss, cons, box)
    np.testing.assert_allclose(rec.lam, [0.5])  # max(0 + 0.5, -0.5)
    np.testing.assert_allclose(rec.lam + rec.dual_gamma * rec.dual_g, [1.0])
    assert queue_property_slack(rec) <= 1e-12


def test_slater_queue_properties_and_telescoping_on_tracking_run():
    inst = random_tracking_instance(11, n=2, n_constraints=2, horizon=150)
    learner = SlaterLearner(inst.constants, 150, inst.set_at(1), a=0.5, n_constraints=2)
    traj, records = rollout(learner, inst, "slater", seed=11)
    assert max(queue_property_slack(r) for r in records) <= 1e-12
    gamma = learner.params[1]
    vio = np.sum(traj.gvals, axis=0)
    assert np.all(vio <= traj.lam_final / gamma + 1e-9)


def test_slater_queue_cap_formula():
    from vqoco import AssumptionConstants

    c = AssumptionConstants(F=2.0, G=3.0, R=1.5, beta=1.0, epsilon=0.4, vbar_g=0.1)
    cap = slater_queue_cap(c, alpha=4.0, gamma=2.0)
    expected = 2.0 * 2.0 + (3.0 * 1.5 + 4.0 * 0.4 * 2.0 + 2.0 * 4.0 * 4.0 + 4.0 * 2.25) / (
        2.0 * (0.4 - 0.1)
    )
    assert cap == pytest.approx(expected)
    with pytest.raises(ConfigurationError):
        slater_queue_cap(AssumptionConstants(F=1, G=1, R=1, beta=1), 1.0, 1.0)


# ---------------------------------------------------------------------------
# saddle baseline


def test_saddle_step_plain_ogd_when_queue_zero():
    box = Box(np.array([-1.0]), np.array([1.0]))
    loss = LossOracle(eval=lambda x: float(x[0]), grad=lambda x: np.array([1.0]))
    cons = ConstraintOracle(eval=lambda x: np.array([-5.0]), jac=lambda x: np.zeros((1, 1)))
    state = SaddleState(t=1, x=np.zeros(1), lam=np.zeros(1), eta=0.1, mu=1.0, preset="x")
    new_state, rec = saddle_step(state, loss, cons, box)
    np.testing.assert_allclose(rec.x_next, [-0.1])


def test_saddle_step_documented_arithmetic():
    box = Box(np.array([-1.0]), np.array([1.0]))
    loss = LossOracle(eval=lambda x: float(x[0]), grad=lambda x: np.array([1.0]))
    cons = ConstraintOracle(eval=lambda x: np.array([x[0]]), jac=lambda x: np.array([[1.0]]))
    state = SaddleState(t=1, x=np.zeros(1), lam=np.array([2.0]), eta=0.1, mu=1.0, preset="x")
    new_state, rec = saddle_step(state, loss, cons, box)
    np.testing.assert_allclose(rec.x_next, [-0.3])
    np.testing.assert_allclose(new_state.lam, [1.7])


def test_saddle_negative_queue_clamped():
    box = Box(np.array([-1.0]), np.array([1.0]))
    loss = LossOracle(eval=lambda x: 0.0, grad=lambda x: np.zeros(1))
    cons = ConstraintOracle(eval=lambda x: np.array([-1.0]), jac=lambda x: np.zeros((1, 1)))
    state = SaddleState(t=1, x=np.zeros(1), lam=np.array([0.1]), eta=0.1, mu=1.0, preset="x")
    new_state, _ = saddle_step(state, loss, cons, box)
    np.testing.assert_array_equal(new_state.lam, [0.0])


def test_saddle_init_uses_preset_lambda():
    bundle = preset_params("chen2018", 256, 5, 7.0)
    st = saddle_init(bundle, Box(-np.ones(2), np.ones(2)), n_constraints=3)
    np.testing.assert_allclose(st.lam, np.full(3, bundle["lambda1"]))


# ---------------------------------------------------------------------------
# doubling trick


def test_epoch_lengths_enumeration():
    assert epoch_lengths(2) == [2]
    assert epoch_lengths(10) == [2, 4, 4]
    assert epoch_lengths(14) == [2, 4, 8]
    assert epoch_lengths(1500) == [2, 4, 8, 16, 32, 64, 128, 256, 512, 478]


def test_doubling_resets_queue_and_schedules_per_epoch():
    inst = random_tracking_instance(5, n=2, n_constraints=1, horizon=14)

    def factory(h, chi):
        return VqbLearner(inst.constants, h, chi, "case2", n_constraints=1)

    traj, records = doubling_run(factory, inst, "doubling_vqb_case2", seed=5)
    # epoch starts at rounds 1, 3, 7: freshly-initialized queues are zero
    # (records carry the queue after the first in-epoch update, fed by g_0=0)
    for t0 in (1, 3, 7):
        np.testing.assert_array_equal(records[t0 - 1].lam, np.zeros(1))
    # case-2 gamma restarts at each epoch boundary: local round index resets
    base = records[0].gamma  # gamma at local t=1 of a fresh epoch
    assert records[2].gamma == pytest.approx(base)
    assert records[6].gamma == pytest.approx(base)
    assert records[1].gamma < records[0].gamma  # decays within an epoch


def test_doubling_deterministic_across_runs():
    inst = random_tracking_instance(6, n=2, n_constraints=1, horizon=20)

    def factory(h, chi):
        return VqbLearner(inst.constants, h, chi, "case1", n_constraints=1)

    t1, _ = doubling_run(factory, inst, "d", seed=6)
    t2, _ = doubling_run(factory, inst, "d", seed=6)
    np.testing.assert_array_equal(t1.actions, t2.actions)
    np.testing.assert_array_equal(t1.lambda_norm, t2.lambda_norm)
