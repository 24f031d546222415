import math

import numpy as np
import pytest

from conftest import random_constants
from fdgame.core import DerivedConstants
from fdgame.game import design_costs, mne_strategy
from fdgame.poa import min_mne_throughput, poa_sweep, price_of_anarchy
from fdgame.throughput import SymmetricAccessProfile, aggregate_throughput, maximize_throughput

LOW = DerivedConstants(beta=0.7, phi=1.0, iota_c=0.6, iota_f=0.7)
HIGH = DerivedConstants(beta=0.7, phi=1.0, iota_c=0.1, iota_f=0.2)


def _sweep_min(c, x, step=1e-4):
    """Oracle: scan the price interval on a fine grid, endpoints included."""
    iv = design_costs(c, x)
    prices = np.append(np.arange(iv.c_hd_min, iv.c_hd_max, step), iv.c_hd_max)
    vals = [aggregate_throughput(c, SymmetricAccessProfile.from_mixed(mne_strategy(c, ch, x)))
            for ch in prices]
    return min(vals)


def test_zero_full_duplex_gives_silent_equilibrium():
    for c in (LOW, HIGH):
        assert min_mne_throughput(c, 0.0) == 0.0
        pt = price_of_anarchy(c, 0.0)
        assert pt.diverges and math.isinf(pt.poa)


def test_all_full_duplex_is_a_single_equilibrium():
    for c in (LOW, HIGH):
        assert min_mne_throughput(c, 1.0) == pytest.approx(4 * c.beta * c.phi * c.p_cf)


@pytest.mark.parametrize("c", [LOW, HIGH], ids=["low", "high"])
@pytest.mark.parametrize("x", [0.05, 0.2, 0.5, 0.8, 0.95])
def test_minimum_against_price_scan(c, x):
    assert min_mne_throughput(c, x) == pytest.approx(_sweep_min(c, x), abs=1e-8)


def test_minimum_against_scan_on_random_constants():
    rng = np.random.default_rng(21)
    for _ in range(40):
        c = random_constants(rng)
        x = rng.uniform(0.01, 0.99)
        got, ref = min_mne_throughput(c, x), _sweep_min(c, x, step=1e-3)
        # the coarser scan can only sit above the true minimum
        assert got <= ref + 1e-12
        assert ref - got <= 1e-5


def test_poa_at_least_one_and_continuous():
    xs = [i / 200 for i in range(201)]
    for c in (LOW, HIGH, DerivedConstants(beta=0.9, phi=0.5, iota_c=0.6, iota_f=0.7)):
        pts = poa_sweep(c, xs)
        finite = [p.poa for p in pts[1:]]
        assert all(v >= 1 - 1e-12 for v in finite)
        t_min = np.array([p.t_min for p in pts])
        assert np.max(np.abs(np.diff(t_min))) < 0.05
        assert pts[0].t_star == maximize_throughput(c).t_star


def test_better_cancellation_lowers_poa():
    b07 = poa_sweep(LOW, [i / 100 for i in range(50, 101)])
    b09 = poa_sweep(LOW.with_beta(0.9), [i / 100 for i in range(50, 101)])
    for p7, p9 in zip(b07, b09):
        assert p9.poa <= p7.poa
    assert b09[0].poa == pytest.approx(1.2142, abs=1e-4)
    assert b07[0].poa == pytest.approx(1.3128, abs=1e-4)


def test_low_interference_curve_is_flatter():
    xs = [i / 100 for i in range(50, 101)]
    low = [p.poa for p in poa_sweep(LOW, xs)]
    high = [p.poa for p in poa_sweep(HIGH, xs)]
    assert all(lo <= hi for lo, hi in zip(low, high))


def test_poa_is_scale_free():
    a = price_of_anarchy(LOW, 0.4)
    b = price_of_anarchy(DerivedConstants(beta=0.7, phi=0.3, iota_c=0.6, iota_f=0.7), 0.4)
    assert a.poa == pytest.approx(b.poa)
