import json
import math

import numpy as np
import pytest

from nlgates import analytics as an
from nlgates import verify as vf
from nlgates.protocol import GateSpec, Label, ResourceSpec, run_protocol
from nlgates.qsim import (
    AXIS_Z,
    StateVector,
    apply_joint_exponential,
    binary_entropy,
    entanglement_entropy,
    random_state,
)

Q = math.pi / 4
PLUSPLUS = StateVector(2, np.full(4, 0.5))


def test_report_passed_follows_residual():
    assert vf.VerificationReport("x", 1, 0.5, 0.5, 0).passed
    assert not vf.VerificationReport("x", 1, 0.6, 0.5, 0).passed


def test_report_json_is_stable():
    r = vf.VerificationReport("x", 3, 1e-13, 1e-12, 9, detail={"b": 1, "a": 2})
    line = r.to_json()
    assert line == r.to_json()
    data = json.loads(line)
    assert data["passed"] is True and data["seed"] == 9 and data["samples"] == 3


def test_job_seed_order_independent():
    assert vf.job_seed(7, 3) == vf.job_seed(7, 3)
    assert len({vf.job_seed(7, k) for k in range(50)}) == 50


# identity checks

def test_branch_identity_spot():
    assert vf.branch_identity_residual(GateSpec(0.2), ResourceSpec(0.1)) < 1e-12


def test_branch_identity_random():
    report = vf.check_branch_identity(1000, seed=1)
    assert report.passed and report.max_residual < 1e-10 and report.samples == 1000


def test_branch_identity_full_grid():
    worst = max(vf.branch_identity_residual(GateSpec(xi), ResourceSpec.from_sin2(s))
                for xi in np.arange(0.01, 0.785, 0.01)
                for s in np.arange(0.001, 0.5001, 0.005))
    assert worst < 1e-10


def test_pull_through():
    report = vf.check_pull_through(100, seed=2)
    assert report.passed and report.max_residual < 1e-12
    assert vf.branch_identity_residual(GateSpec(0.7), ResourceSpec(Q)) < 1e-12


# closed form vs simulation

def test_closed_form_small_grid():
    report = vf.check_simulation_vs_closed_form(xis=[0.2, 0.5], s_values=[math.sin(0.1) ** 2, 0.5])
    assert report.passed and report.max_residual < 1e-12


@pytest.mark.parametrize("xi", [0.01, 0.4, 1.3])
def test_maximal_resource_gives_half(xi):
    result = run_protocol(ResourceSpec(Q), GateSpec(xi), StateVector.from_bits("01"))
    assert result.branch(Label.SUCCESS).probability == pytest.approx(0.5, abs=1e-12)


def test_vanishing_gate_limit():
    # as xi -> 0, theta -> 0 and p -> 1 - s = cos^2 alpha
    alpha = 0.3
    p = an.success_probability(1e-9, alpha)
    assert p == pytest.approx(math.cos(alpha) ** 2, abs=1e-9)
    assert run_protocol(ResourceSpec(alpha), GateSpec(1e-9), PLUSPLUS).branch(
        Label.SUCCESS).probability == pytest.approx(p, abs=1e-12)


def test_input_independence():
    report = vf.check_input_independence(0.3, 0.2, 100, seed=4)
    assert report.passed and report.samples >= 100
    assert report.max_residual < 1e-12


def test_input_independence_fidelity():
    rng = np.random.default_rng(5)
    for psi in (StateVector.from_bits("00"), random_state(2, rng)):
        result = run_protocol(ResourceSpec(0.2), GateSpec(0.3), psi)
        assert all(b.fidelity >= 1 - 1e-12 for b in result.branches)


# tightness

@pytest.mark.parametrize("xi", [0.05, 0.1, 0.2])
def test_bound_tightness(xi):
    report = vf.check_bound_tightness(xi)
    assert report.passed
    assert report.detail["monotone"] and report.detail["bounded"]


def test_tightness_ratio_examples():
    s = 1e-8
    ratio = an.success_probability_s(0.014, s) * math.sin(0.014) ** 2 / s
    assert 1 - ratio == pytest.approx(5.1e-5, rel=0.02)
    s = math.sin(0.2) ** 2 / 100
    ratio = an.success_probability_s(0.2, s) * math.sin(0.2) ** 2 / s
    assert 0.98 <= ratio <= 1.0


# capability

def test_gain_matches_schmidt_path():
    rng = np.random.default_rng(6)
    for _ in range(10):
        xi = rng.uniform(0.01, 1.5)
        psi = random_state(2, rng)
        after = apply_joint_exponential(psi, 0, 1, xi, AXIS_Z, AXIS_Z)
        direct = entanglement_entropy(after, [0]) - entanglement_entropy(psi, [0])
        assert vf.entanglement_gain(xi, psi) == pytest.approx(direct, abs=1e-10)


def test_capability_zero_gate():
    assert vf.estimate_capability(0.0, restarts=3).delta_e_max == pytest.approx(0.0, abs=1e-12)


def test_capability_full_gate():
    est = vf.estimate_capability(Q, restarts=5)
    assert est.delta_e_max == pytest.approx(1.0, abs=1e-9)
    assert 0.0 <= est.delta_e_max <= 1.0 + 1e-12
    assert len(est.argmax_state_record) == 4


def test_capability_linear_at_small_angle():
    xis = np.array([0.01, 0.02, 0.03, 0.04, 0.05])
    est = np.array([vf.estimate_capability(x, restarts=10, seed=1).delta_e_max for x in xis])
    slope = float(xis @ est / (xis @ xis))
    assert np.all(np.abs(est - slope * xis) <= 0.2 * slope * xis)


def test_capability_monotone_in_restarts():
    values = [vf.estimate_capability(0.1, restarts=r, seed=3).delta_e_max for r in (1, 3, 8)]
    assert values[0] <= values[1] <= values[2]


def test_capability_is_reproducible():
    a = vf.estimate_capability(0.2, restarts=4, seed=11)
    b = vf.estimate_capability(0.2, restarts=4, seed=11)
    assert a == b


def test_convex_sum_boundary():
    report = vf.check_capability_convex_sum(Q, Q, restarts=5)
    assert abs(report.detail["margin"]) < 1e-6
    assert report.hard is False


def test_convex_sum_at_optimum():
    s_opt, _ = an.maximize_success(0.05)
    report = vf.check_capability_convex_sum(0.05, an.alpha_from_s(s_opt), restarts=10)
    assert report.detail["margin"] > 0


def test_average_gain_on_fixed_input_never_exceeds_resource():
    # entanglement cannot grow on average under LOCC: for one input state the
    # branch-averaged gain stays below the resource entropy
    rng = np.random.default_rng(8)
    for _ in range(10):
        xi, alpha = rng.uniform(0.01, 1.5), rng.uniform(0.01, Q)
        psi = random_state(2, rng)
        result = run_protocol(ResourceSpec(alpha), GateSpec(xi), psi)
        gain = sum(b.probability * (entanglement_entropy(b.post_state, [0]) -
                                    entanglement_entropy(psi, [0]))
                   for b in result.branches if b.post_state is not None)
        assert gain <= binary_entropy(math.sin(alpha) ** 2) + 1e-12


def test_suite_is_deterministic():
    a = [r.to_json() for r in vf.run_suite("identity", seed=3, samples=50)]
    b = [r.to_json() for r in vf.run_suite("identity", seed=3, samples=50)]
    assert a == b


def test_unknown_suite():
    with pytest.raises(ValueError):
        vf.run_suite("nope")


def test_gain_gradient_matches_finite_differences():
    from scipy.optimize import approx_fprime
    rng = np.random.default_rng(9)
    for _ in range(10):
        x = rng.standard_normal(8)
        phases = tuple(np.exp(1j * rng.uniform(0, 1.5) * np.array([1, -1, -1, 1])))
        _, grad = vf._gain_and_grad(x, phases)
        numeric = approx_fprime(x, lambda y: vf._gain(y, phases), 1e-7)
        assert np.max(np.abs(grad - numeric)) < 1e-5
