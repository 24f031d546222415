import json

import numpy as np
import pytest

from fdgame.core import Receiver
from fdgame.errors import InvalidParameterError, InvalidRoleError
from fdgame.game import CostPolicy, MixedStrategy, mne_strategy
from fdgame.montecarlo import (CHUNK, LinkBudget, SimConfig, _uniforms, analytic_counterpart,
                               comparison_report, estimate_success_probability, profile_battery,
                               simulate, simulate_slots)


def _fixed(model, s1, s2, n=1_000_000, seed=20180101):
    return simulate(SimConfig.fixed(model, s1, s2, n, seed))


def test_silent_network_never_succeeds(nominal_params):
    est = _fixed(nominal_params, "w", "w", n=10_000)
    assert est.aggregate.mean == 0.0 and est.aggregate.se == 0.0
    assert not est.success


def test_fd_against_silence(nominal_params, nominal):
    est = _fixed(nominal_params, "t_fd", "w")
    assert 2 * nominal.beta * nominal.phi == pytest.approx(0.938448, abs=5e-7)
    assert est.aggregate.within(2 * nominal.beta * nominal.phi, 3.0)


def test_fd_against_hd(nominal_params, nominal):
    c = nominal
    est = _fixed(nominal_params, "t_fd", "t_A")
    assert est.aggregate.within(c.phi * (c.beta * (c.iota_c + c.iota_f) + c.iota_c * c.iota_f))


def test_reproducible_and_seed_sensitive(nominal_params):
    cfg = SimConfig(nominal_params, MixedStrategy(0.2, 0.3, 0.3, 0.2),
                    MixedStrategy(0.25, 0.25, 0.25, 0.25), 50_000, seed=5)
    a = json.dumps(simulate(cfg).to_dict(), sort_keys=True)
    b = json.dumps(simulate(cfg).to_dict(), sort_keys=True)
    assert a == b
    other = SimConfig(cfg.model, cfg.pi1, cfg.pi2, cfg.n_slots, seed=6)
    assert json.dumps(simulate(other).to_dict(), sort_keys=True) != a


def test_partition_reproduces_sequential_run(nominal_params):
    cfg = SimConfig(nominal_params, MixedStrategy(0.1, 0.4, 0.2, 0.3),
                    MixedStrategy(0.3, 0.2, 0.4, 0.1), 5000, seed=9)
    whole = simulate_slots(cfg, 0, 5000)
    parts = [simulate_slots(cfg, a, b) for a, b in ((0, 1), (1, 1234), (1234, 5000))]
    for name in ("actions", "addressed", "success"):
        np.testing.assert_array_equal(getattr(whole, name),
                                      np.concatenate([getattr(p, name) for p in parts]))


def test_workers_do_not_change_results(nominal_params):
    cfg = SimConfig(nominal_params, MixedStrategy(0.2, 0.3, 0.3, 0.2),
                    MixedStrategy(0.2, 0.3, 0.3, 0.2), 3 * CHUNK + 17, seed=3)
    assert simulate(cfg, workers=1).to_dict() == simulate(cfg, workers=4).to_dict()


def test_uniform_streams_are_uncorrelated():
    u = _uniforms(123, 0, 200_000)
    corr = np.corrcoef(u, rowvar=False)
    off = corr[~np.eye(corr.shape[0], dtype=bool)]
    assert np.max(np.abs(off)) < 5 / np.sqrt(len(u))
    assert np.abs(u.mean(axis=0) - 0.5).max() < 5 * np.sqrt(1 / 12 / len(u))


def test_equilibrium_utilities_vanish_in_simulation(nominal_params, nominal):
    pi = mne_strategy(nominal, 0.3, 0.3)
    costs = CostPolicy.proportional(nominal, 0.3)
    cfg = SimConfig(nominal_params, pi, pi, 1_000_000, seed=77)
    est = simulate(cfg, costs)
    rep = comparison_report(cfg, est)
    for side in rep["action_utility"]:
        for action, row in side.items():
            assert row["analytic"] == pytest.approx(0.0, abs=1e-9)
            assert abs(row["z"]) <= 3.0, (action, row)
    assert abs(rep["aggregate_throughput"]["z"]) <= 3.0


def test_analytic_counterpart_for_asymmetric_play(nominal):
    cfg = SimConfig(nominal, MixedStrategy(0.1, 0.2, 0.3, 0.4), MixedStrategy.pure("t_A"), 10)
    ref = analytic_counterpart(cfg)
    assert ref["aggregate"] == pytest.approx(sum(ref["pair_throughput"]))


def test_constants_budget_matches_geometry(nominal_params, nominal):
    a, b = LinkBudget.from_params(nominal_params), LinkBudget.from_constants(nominal)
    assert a.noise == pytest.approx(b.noise)
    assert a.si == pytest.approx(b.si)
    # 1 / iota - 1 recovers theta d^-a exactly, so the two routes coincide
    np.testing.assert_allclose(a.coef, b.coef, rtol=1e-12)


@pytest.mark.parametrize("receiver,own,opp", [("B", "t_fd", "w"), ("B", "t_A", "t_B"),
                                              ("A", "t_fd", "t_fd")])
def test_success_rates_with_constants_model(nominal, receiver, own, opp):
    from fdgame.core import success_probability
    est = estimate_success_probability(nominal, receiver, own, opp, 200_000, seed=2)
    assert est.within(success_probability(nominal, receiver, own, opp))


def test_success_rate_requires_addressee(nominal):
    with pytest.raises(InvalidRoleError):
        estimate_success_probability(nominal, Receiver.A, "t_A", "w", 10)


def test_config_validation(nominal):
    pi = MixedStrategy.pure("w")
    with pytest.raises(InvalidParameterError):
        SimConfig(nominal, pi, pi, 0)
    with pytest.raises(InvalidParameterError):
        SimConfig(nominal, pi, pi, 10, seed=-1)
    with pytest.raises(InvalidParameterError):
        SimConfig(nominal, pi, pi, 10, mode="other")


# a second seed as a smoke check; 4 se keeps the family-wise false alarm rate negligible
@pytest.mark.slow
def test_battery_with_independent_seed(nominal_params):
    checks = profile_battery(nominal_params, 200_000, seed=99)
    assert len(checks) == 32
    assert all(ch.passed(4.0) for ch in checks)
