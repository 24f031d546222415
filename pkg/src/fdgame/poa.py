"""Price of anarchy across the equilibrium family."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .core import DerivedConstants
from .game import design_costs, mne_strategy
from .throughput import SymmetricAccessProfile, aggregate_throughput, maximize_throughput


@dataclass(frozen=True)
class PoaPoint:
    pi_tfd: float
    t_min: float
    t_star: float
    poa: float  # math.inf when the worst equilibrium delivers nothing

    @property
    def diverges(self) -> bool:
        return math.isinf(self.poa)


def _throughput_at(c: DerivedConstants, c_hd: float, pi_tfd: float) -> float:
    pi = mne_strategy(c, c_hd, pi_tfd)
    return aggregate_throughput(c, SymmetricAccessProfile.from_mixed(pi))


def min_mne_throughput(c: DerivedConstants, pi_tfd: float) -> float:
    """Worst aggregate throughput among equilibria sharing ``pi_tfd``.

    The equilibria are indexed by the half-duplex price in
    ``design_costs(pi_tfd)``; along that slice ``pi_thd`` is affine in the
    price and the throughput is a quadratic in ``pi_thd``.  The minimum is
    taken over both ends and any stationary point inside.
    """
    band = design_costs(c, pi_tfd)
    x = band.target_pi_tfd
    cands = [band.c_hd_min, band.c_hd_max]
    # dT/dy = 0 at y = (1 - (1 - p) x) / (2 (2 - s)) - beta x / 2, mapped back to a price
    a, b = 2.0 - c.s_cf, 1.0 - c.p_cf
    if a > 1e-15:
        y0 = (1.0 - b * x) / (2.0 * a) - 0.5 * c.beta * x
        c0 = c.phi * (1.0 - a * y0 - b * x)
        if band.c_hd_min < c0 < band.c_hd_max:
            cands.append(c0)
    return min(_throughput_at(c, ch, x) for ch in cands)


def price_of_anarchy(c: DerivedConstants, pi_tfd: float, t_star: float | None = None) -> PoaPoint:
    if t_star is None:
        t_star = maximize_throughput(c).t_star
    t_min = min_mne_throughput(c, pi_tfd)
    # t_min is exactly 0.0 at pi_tfd = 0 (the all-wait equilibrium)
    poa = math.inf if t_min <= 0.0 else t_star / t_min
    return PoaPoint(float(pi_tfd), t_min, t_star, poa)


def poa_sweep(c: DerivedConstants, values: Iterable[float]) -> list[PoaPoint]:
    t_star = maximize_throughput(c).t_star
    return [price_of_anarchy(c, x, t_star) for x in values]
