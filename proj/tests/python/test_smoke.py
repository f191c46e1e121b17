import math

import numpy as np
import pytest

import dynsmpc


def test_scalar_dare():
    K, P, S = dynsmpc.solve_dare(np.eye(1), np.eye(1), np.eye(1), np.eye(1))
    phi = (1 + math.sqrt(5)) / 2
    assert P[0, 0] == pytest.approx(phi, abs=1e-9)
    assert K[0, 0] == pytest.approx(-phi / (1 + phi), abs=1e-9)


def test_chi2_quantile():
    assert dynsmpc.chi2_quantile(0.6, 2) == pytest.approx(-2 * math.log(0.4), abs=1e-8)


def test_case_study_pipeline():
    inst = dynsmpc.dc_dc_converter_instance()
    assert inst.horizon == 15
    ctx = dynsmpc.synthesize(inst)
    res = dynsmpc.solve_safety(ctx, inst)
    support = [k for k, a in enumerate(res.schedule.alpha) if a > 1e-6]
    assert support == [0, 14]
    opts = dynsmpc.ClosedLoopOptions()
    opts.zero_noise = True
    traj = dynsmpc.run_closed_loop(inst, ctx, res.schedule, 20, 1, opts)
    assert np.allclose(traj.states, traj.nominal_states, atol=1e-9)


def test_monte_carlo_report():
    inst = dynsmpc.dc_dc_converter_instance()
    ctx = dynsmpc.synthesize(inst)
    res = dynsmpc.solve_safety(ctx, inst)
    rep = dynsmpc.monte_carlo(inst, ctx, res.schedule, 10, 20, 3)
    assert rep.feasibility_failures == 0
    assert len(rep.rate) == 11
    assert all(0.0 <= r <= 1.0 for r in rep.rate)


def test_config_errors():
    with pytest.raises(dynsmpc.ConfigError):
        dynsmpc.parse_config('{"horizon": 15}')


def test_infeasible_initial_state():
    inst = dynsmpc.dc_dc_converter_instance()
    ctx = dynsmpc.synthesize(inst)
    inst.x0 = np.array([2.5, 0.0])
    with pytest.raises(dynsmpc.InfeasibleError):
        dynsmpc.solve_safety(ctx, inst)
