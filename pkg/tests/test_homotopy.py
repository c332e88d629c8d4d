import numpy as np
import pytest

import mlmfg.homotopy as homotopy
from conftest import DECOUPLED_X
from mlmfg.errors import LineSearchFailure, SolverFailureAt
from mlmfg.homotopy import HomotopyTrajectory, Schedule, run_homotopy, stationarity_report
from mlmfg.leader import solve_leader_ncp

X3 = np.full(4, 3.0)


def test_schedule_values():
    s = Schedule()
    vals = s.values()
    assert len(vals) == 75 and vals[0] == 1.0
    assert vals[-1] == pytest.approx(0.9 ** 74)
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("kw", [{"eps0": 0.0}, {"ratio": 1.0}, {"ratio": 0.0}, {"steps": 0}, {"steps": 2.5}])
def test_schedule_rejects(kw):
    with pytest.raises(ValueError):
        Schedule(**kw)


def test_single_step_equals_direct_solve(hf_model):
    traj = run_homotopy(hf_model, Schedule(steps=1), X3)
    direct = solve_leader_ncp(hf_model, 1.0, np.concatenate([X3, np.zeros(4)]))
    assert len(traj) == 1
    np.testing.assert_array_equal(traj.records[0].x, direct.x)
    np.testing.assert_array_equal(traj.records[0].mu, direct.mu)


def test_decoupled_path_is_constant(decoupled_model):
    traj = run_homotopy(decoupled_model, Schedule(steps=20), np.zeros(4))
    for r in traj.records:
        np.testing.assert_allclose(r.x, DECOUPLED_X, atol=1e-6)
    assert np.max(traj.steps_inf()) <= 1e-6
    rep = stationarity_report(decoupled_model, traj)
    assert rep.projection_residual <= 1e-10


def test_builtin_trajectory(hf_model, hf_trajectory):
    traj = hf_trajectory
    assert len(traj) == 75
    assert np.all(np.diff(traj.eps) < 0)
    assert np.max(traj.steps_inf()[-10:]) <= 1e-4
    for r in traj.records:
        assert r.follower_comp_error <= 1e-8 * max(1.0, r.eps ** 2)
        assert (r.x >= 0).all() and (r.mu >= 0).all()


def test_builtin_report(hf_model, hf_trajectory):
    rep = stationarity_report(hf_model, hf_trajectory)
    assert rep.eps_final == pytest.approx(0.9 ** 74)
    assert rep.projection_residual <= 1e-4
    assert rep.comp_product_error <= 1e-8 * max(1.0, rep.eps_final ** 2)
    assert rep.cauchy_tail <= 1e-4
    assert rep.strict_complementarity
    assert rep.label.startswith("approximate B-stationary")
    d = rep.to_dict()
    assert d["degeneracy"]["J_00"] == []


def test_single_record_tail_not_applicable(hf_model):
    traj = run_homotopy(hf_model, Schedule(steps=1), X3)
    assert stationarity_report(hf_model, traj).cauchy_tail is None
    assert "cauchy_tail" in stationarity_report(hf_model, traj).to_dict()


def test_empty_trajectory_rejected(hf_model):
    with pytest.raises(ValueError):
        stationarity_report(hf_model, HomotopyTrajectory())


def test_bad_start_rejected(hf_model):
    with pytest.raises(ValueError):
        run_homotopy(hf_model, Schedule(steps=1), np.array([np.nan, 0, 0, 0]))
    with pytest.raises(ValueError):
        run_homotopy(hf_model, Schedule(steps=1), np.zeros(3))


def test_csv_round_trip(tmp_path, hf_model):
    traj = run_homotopy(hf_model, Schedule(steps=4), X3)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    back = HomotopyTrajectory.from_csv(path)
    assert len(back) == 4
    for a, b in zip(traj.records, back.records):
        np.testing.assert_array_equal(a.x, b.x)
        np.testing.assert_array_equal(a.lam, b.lam)
        assert a.eps == b.eps and a.ncp_residual == b.ncp_residual
    assert back.header()[:6] == ["k", "eps", "x_1", "x_2", "x_3", "x_4"]


def _failing_once(monkeypatch, fail_k_eps):
    real = homotopy._solve_step
    calls = []

    def fake(model, eps, v, w):
        calls.append(eps)
        if eps == fail_k_eps and calls.count(eps) == 1:
            raise LineSearchFailure("injected")
        return real(model, eps, v, w)

    monkeypatch.setattr(homotopy, "_solve_step", fake)
    return calls


def test_failure_carries_partial_trajectory(monkeypatch, hf_model):
    sched = Schedule(steps=3)
    _failing_once(monkeypatch, sched.eps(2))
    with pytest.raises(SolverFailureAt) as exc:
        run_homotopy(hf_model, sched, X3)
    assert exc.value.k == 2 and len(exc.value.trajectory) == 2


def test_retry_halve_recovers(monkeypatch, hf_model):
    sched = Schedule(steps=3)
    calls = _failing_once(monkeypatch, sched.eps(2))
    traj = run_homotopy(hf_model, sched, X3, retry_halve=True)
    assert len(traj) == 3
    assert calls[3] == pytest.approx(np.sqrt(sched.eps(1) * sched.eps(2)))
