"""Utilities, dominance screening and the symmetric mixed-equilibrium family.

Every pair maximises ``U(s) = tau(s) - c(s)`` where ``tau`` is the expected
number of packets exchanged within the pair and the opponent plays a mixed
strategy.  Equilibria without strictly dominated actions make all four
utilities vanish; they exist only when ``c_fd = 2 * beta * c_hd`` and
``phi * iota_c * iota_f <= c_hd <= phi``, and then form a one-parameter
family indexed by the full-duplex probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .core import STRATEGIES, DerivedConstants, Strategy, parse_strategy
from .errors import InvalidParameterError, NoEquilibriumError, OutOfBandError

CLAMP_TOL = 1e-12
EQUILIBRIUM_TOL = 1e-9
_DEGENERATE = 1e-15


@dataclass(frozen=True)
class MixedStrategy:
    """Probability mass function over ``(w, t_A, t_B, t_fd)``."""

    pi_w: float
    pi_tA: float
    pi_tB: float
    pi_tfd: float

    def __post_init__(self) -> None:
        vals = []
        for name in ("pi_w", "pi_tA", "pi_tB", "pi_tfd"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < -CLAMP_TOL or v > 1.0 + CLAMP_TOL:
                raise InvalidParameterError(f"{name} = {v!r} is not a probability")
            v = min(max(v, 0.0), 1.0)
            object.__setattr__(self, name, v)
            vals.append(v)
        total = math.fsum(vals)
        if abs(total - 1.0) > CLAMP_TOL:
            raise InvalidParameterError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "MixedStrategy":
        w, a, b, fd = (float(v) for v in values)
        return cls(w, a, b, fd)

    @classmethod
    def pure(cls, s: Strategy | str) -> "MixedStrategy":
        s = parse_strategy(s)
        return cls.from_array([1.0 if t is s else 0.0 for t in STRATEGIES])

    @classmethod
    def symmetric(cls, pi_thd: float, pi_tfd: float) -> "MixedStrategy":
        """Fair profile with ``pi_tA = pi_tB = pi_thd``."""
        return cls(1.0 - 2.0 * pi_thd - pi_tfd, pi_thd, pi_thd, pi_tfd)

    @classmethod
    def from_mapping(cls, data: Mapping[str, float]) -> "MixedStrategy":
        keys = ("pi_w", "pi_tA", "pi_tB", "pi_tfd")
        if set(data) != set(keys):
            raise InvalidParameterError(f"mixed strategy needs exactly the keys {keys}")
        return cls(*(float(data[k]) for k in keys))

    def as_array(self) -> np.ndarray:
        return np.array([self.pi_w, self.pi_tA, self.pi_tB, self.pi_tfd])

    def prob(self, s: Strategy) -> float:
        return float(self.as_array()[STRATEGIES.index(s)])

    def to_dict(self) -> dict[str, float]:
        return {"pi_w": self.pi_w, "pi_tA": self.pi_tA, "pi_tB": self.pi_tB,
                "pi_tfd": self.pi_tfd}


@dataclass(frozen=True)
class CostPolicy:
    """Price of a half-duplex transmission and of a full-duplex link."""

    c_hd: float
    c_fd: float

    def __post_init__(self) -> None:
        for name in ("c_hd", "c_fd"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0):
                raise InvalidParameterError(f"{name} must be a finite non-negative cost")
            object.__setattr__(self, name, v)

    @classmethod
    def proportional(cls, c: DerivedConstants, c_hd: float) -> "CostPolicy":
        """The only pricing admitting equilibria: ``c_fd = 2 beta c_hd``."""
        return cls(c_hd=c_hd, c_fd=2.0 * c.beta * c_hd)

    def cost(self, s: Strategy) -> float:
        if s is Strategy.W:
            return 0.0
        return self.c_fd if s is Strategy.T_FD else self.c_hd

    def as_array(self) -> np.ndarray:
        return np.array([0.0, self.c_hd, self.c_hd, self.c_fd])

    def to_dict(self) -> dict[str, float]:
        return {"c_hd": self.c_hd, "c_fd": self.c_fd}


def throughput_matrix(c: DerivedConstants) -> np.ndarray:
    """``M[s, t]``: expected packets for a pair playing ``s`` against pure ``t``.

    Rows and columns follow ``STRATEGIES`` order.  The rows for ``t_A``,
    ``t_B`` and ``t_fd`` are, up to the 1/beta factor on the last, the
    rows of the indifference system.
    """
    phi, ic, jf, b = c.phi, c.iota_c, c.iota_f, c.beta
    return np.array([
        [0.0, 0.0, 0.0, 0.0],
        [phi, phi * jf, phi * ic, phi * ic * jf],
        [phi, phi * ic, phi * jf, phi * ic * jf],
        [2 * b * phi, b * phi * (ic + jf), b * phi * (ic + jf), 2 * b * phi * ic * jf],
    ])


def action_throughput(c: DerivedConstants, opp: MixedStrategy, s: Strategy | str) -> float:
    """Expected packets delivered within a pair playing ``s`` against ``opp``."""
    s = parse_strategy(s)
    w, ta, tb, fd = opp.pi_w, opp.pi_tA, opp.pi_tB, opp.pi_tfd
    phi, ic, jf = c.phi, c.iota_c, c.iota_f
    if s is Strategy.W:
        return 0.0
    if s is Strategy.T_A:
        return phi * (w + jf * ta + ic * tb + ic * jf * fd)
    if s is Strategy.T_B:
        return phi * (w + ic * ta + jf * tb + ic * jf * fd)
    return c.beta * phi * (2 * w + (ic + jf) * (ta + tb) + 2 * ic * jf * fd)


def utility(c: DerivedConstants, opp: MixedStrategy, s: Strategy | str,
            costs: CostPolicy) -> float:
    s = parse_strategy(s)
    return action_throughput(c, opp, s) - costs.cost(s)


def utilities(c: DerivedConstants, opp: MixedStrategy, costs: CostPolicy) -> np.ndarray:
    """Utilities of ``(w, t_A, t_B, t_fd)`` against ``opp``."""
    return np.array([utility(c, opp, s, costs) for s in STRATEGIES])


@dataclass(frozen=True)
class DominanceReport:
    """For each action, the first action strictly dominating it (or ``None``)."""

    dominated_by: dict[Strategy, Strategy | None]

    def is_dominated(self, s: Strategy | str) -> bool:
        return self.dominated_by[parse_strategy(s)] is not None

    @property
    def any_dominated(self) -> bool:
        return any(v is not None for v in self.dominated_by.values())

    def to_dict(self) -> dict[str, str | None]:
        return {str(k): (None if v is None else str(v)) for k, v in self.dominated_by.items()}


def dominance_report(c: DerivedConstants, costs: CostPolicy) -> DominanceReport:
    """Screen the four actions for strict dominance.

    Utilities are linear in the opponent p.m.f., so ``x`` is strictly
    dominated by ``y`` over every opponent mixture exactly when it is so
    against each of the four pure opponent actions.  For ``t_A`` against
    ``w`` this reduces to ``c_hd > phi``; for ``w`` against ``t_A`` to
    ``c_hd < phi * iota_c * iota_f``.
    """
    payoff = throughput_matrix(c) - costs.as_array()[:, None]
    out: dict[Strategy, Strategy | None] = {}
    for i, s in enumerate(STRATEGIES):
        out[s] = None
        for j, t in enumerate(STRATEGIES):
            if i != j and np.all(payoff[j] > payoff[i]):
                out[s] = t
                break
    return DominanceReport(out)


def cost_band(c: DerivedConstants) -> tuple[float, float]:
    """Closed interval of ``c_hd`` values that can support an equilibrium."""
    return c.phi * c.p_cf, c.phi


def _check_band(c: DerivedConstants, c_hd: float) -> float:
    lo, hi = cost_band(c)
    c_hd = float(c_hd)
    slack = CLAMP_TOL * max(1.0, hi)
    if not lo - slack <= c_hd <= hi + slack:
        raise NoEquilibriumError(
            f"c_hd = {c_hd:.12g} outside the equilibrium band [{lo:.12g}, {hi:.12g}]")
    return min(max(c_hd, lo), hi)


def _tfd_bounds(c: DerivedConstants, c_hd: float) -> tuple[float, float]:
    # pi_w >= 0  <=>  x (s - 2p) >= s - 2 c_hd / phi
    # pi_tA >= 0 <=>  x (1 - p) <= 1 - c_hd / phi
    s, p, phi = c.s_cf, c.p_cf, c.phi
    lo_coef, lo_rhs = s - 2 * p, s - 2 * c_hd / phi
    hi_coef, hi_rhs = 1 - p, 1 - c_hd / phi
    if lo_coef > _DEGENERATE:
        lower = lo_rhs / lo_coef
    else:
        lower = 0.0 if lo_rhs <= CLAMP_TOL else math.inf
    if hi_coef > _DEGENERATE:
        upper = hi_rhs / hi_coef
    else:
        upper = 1.0 if hi_rhs >= -CLAMP_TOL else -math.inf
    lower, upper = max(0.0, lower), min(1.0, upper)
    if lower > upper and lower - upper <= 1e-10:
        lower = upper = 0.5 * (lower + upper)
    return lower, upper


@dataclass(frozen=True)
class EquilibriumFamily:
    """All symmetric equilibria sustained by a given half-duplex price.

    Call the family (or :meth:`strategy`) with a full-duplex probability in
    ``[pi_tfd_min, pi_tfd_max]`` to obtain the matching equilibrium p.m.f.
    """

    constants: DerivedConstants = field(repr=False)
    c_hd: float
    c_fd: float
    pi_tfd_min: float
    pi_tfd_max: float

    @property
    def costs(self) -> CostPolicy:
        return CostPolicy(self.c_hd, self.c_fd)

    @property
    def is_point(self) -> bool:
        return self.pi_tfd_max - self.pi_tfd_min <= CLAMP_TOL

    def strategy(self, pi_tfd: float) -> MixedStrategy:
        return mne_strategy(self.constants, self.c_hd, pi_tfd)

    __call__ = strategy

    def to_dict(self) -> dict[str, float]:
        return {"c_hd": self.c_hd, "c_fd": self.c_fd,
                "pi_tfd_min": self.pi_tfd_min, "pi_tfd_max": self.pi_tfd_max}


def mne_family(c: DerivedConstants, c_hd: float) -> EquilibriumFamily:
    """Feasible full-duplex interval of the equilibria at price ``c_hd``.

    Raises :class:`NoEquilibriumError` when ``c_hd`` lies outside
    ``[phi iota_c iota_f, phi]``.
    """
    c_hd = _check_band(c, c_hd)
    lower, upper = _tfd_bounds(c, c_hd)
    if lower > upper:
        raise NoEquilibriumError(f"empty full-duplex interval at c_hd = {c_hd:.12g}")
    return EquilibriumFamily(c, c_hd, 2.0 * c.beta * c_hd, lower, upper)


def mne_strategy(c: DerivedConstants, c_hd: float, pi_tfd: float) -> MixedStrategy:
    """Equilibrium p.m.f. with the requested full-duplex probability."""
    fam = mne_family(c, c_hd)
    x = float(pi_tfd)
    if not fam.pi_tfd_min - CLAMP_TOL <= x <= fam.pi_tfd_max + CLAMP_TOL:
        raise OutOfBandError(
            f"pi_tfd = {x:.12g} outside [{fam.pi_tfd_min:.12g}, {fam.pi_tfd_max:.12g}]"
            f" at c_hd = {fam.c_hd:.12g}")
    x = min(max(x, 0.0), 1.0)
    s, p, phi, c_hd = c.s_cf, c.p_cf, c.phi, fam.c_hd
    denom = 2.0 - s
    if denom <= _DEGENERATE:
        raise InvalidParameterError("iota_c = iota_f = 1: half-duplex probabilities undetermined")
    pi_w = x * (s - 2 * p) / denom + (2 * c_hd - phi * s) / (phi * denom)
    pi_hd = -x * (1 - p) / denom + (phi - c_hd) / (phi * denom)
    pi_w, pi_hd = _snap(pi_w), _snap(pi_hd)
    return MixedStrategy(pi_w, pi_hd, pi_hd, x)


def _snap(v: float) -> float:
    if abs(v) <= CLAMP_TOL:
        return 0.0
    if abs(v - 1.0) <= CLAMP_TOL:
        return 1.0
    return v


@dataclass(frozen=True)
class Verification:
    """Outcome of an equilibrium check under symmetric play."""

    utilities: np.ndarray
    proportional_costs: bool

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.utilities)))

    def is_equilibrium(self, tol: float = EQUILIBRIUM_TOL) -> bool:
        return self.proportional_costs and self.max_residual <= tol

    def to_dict(self) -> dict:
        return {"residuals": {str(s): float(u) for s, u in zip(STRATEGIES, self.utilities)},
                "max_abs_residual": self.max_residual,
                "proportional_costs": self.proportional_costs}


def verify_mne(c: DerivedConstants, pi: MixedStrategy, costs: CostPolicy) -> Verification:
    """Utilities of all four actions when the opponent also plays ``pi``."""
    proportional = math.isclose(costs.c_fd, 2.0 * c.beta * costs.c_hd,
                                rel_tol=1e-12, abs_tol=1e-15)
    return Verification(utilities(c, pi, costs), proportional)


def indifference_system(c: DerivedConstants, costs: CostPolicy) -> tuple[np.ndarray, np.ndarray]:
    """``(A, b)`` with ``A pi = b`` encoding ``U(t_A) = U(t_B) = U(t_fd) = 0``, ``sum pi = 1``."""
    m = throughput_matrix(c)
    a = np.vstack([m[1], m[2], m[3], np.ones(4)])
    b = np.array([costs.c_hd, costs.c_hd, costs.c_fd, 1.0])
    return a, b


def indifference_ranks(c: DerivedConstants, costs: CostPolicy,
                       tol: float = 1e-9) -> tuple[int, int]:
    """Numerical ranks of ``A`` and of the augmented matrix ``[A | b]``.

    The throughput and cost rows are divided by ``phi`` first, so ``tol``
    applies to an O(1) matrix however weak the links are.
    """
    a, b = indifference_system(c, costs)
    scale = np.array([1.0 / c.phi] * 3 + [1.0])
    a, b = a * scale[:, None], b * scale
    rank_a = int(np.linalg.matrix_rank(a, tol=tol))
    rank_ab = int(np.linalg.matrix_rank(np.column_stack([a, b]), tol=tol))
    return rank_a, rank_ab


def solve_equilibria(c: DerivedConstants, costs: CostPolicy) -> EquilibriumFamily:
    """Equilibrium family for an arbitrary cost pair.

    The indifference system is consistent only for proportional costs; any
    other pair, or a price outside the band, raises :class:`NoEquilibriumError`.
    """
    rank_a, rank_ab = indifference_ranks(c, costs)
    if rank_ab > rank_a:
        raise NoEquilibriumError(
            f"inconsistent indifference system (rank A = {rank_a}, rank [A|b] = {rank_ab});"
            f" c_fd = {costs.c_fd:.12g} but 2 beta c_hd = {2 * c.beta * costs.c_hd:.12g}")
    fam = mne_family(c, costs.c_hd)
    return EquilibriumFamily(c, fam.c_hd, costs.c_fd, fam.pi_tfd_min, fam.pi_tfd_max)


@dataclass(frozen=True)
class CostInterval:
    """Half-duplex prices placing an equilibrium at a target full-duplex probability."""

    target_pi_tfd: float
    c_hd_min: float
    c_hd_max: float
    beta: float

    @property
    def is_point(self) -> bool:
        return self.c_hd_max - self.c_hd_min <= CLAMP_TOL

    @property
    def c_fd_min(self) -> float:
        return 2.0 * self.beta * self.c_hd_min

    @property
    def c_fd_max(self) -> float:
        return 2.0 * self.beta * self.c_hd_max

    def to_dict(self) -> dict[str, float | bool]:
        return {"pi_tfd": self.target_pi_tfd, "c_hd_min": self.c_hd_min,
                "c_hd_max": self.c_hd_max, "c_fd_min": self.c_fd_min,
                "c_fd_max": self.c_fd_max, "degenerate": self.is_point}


def design_costs(c: DerivedConstants, target_pi_tfd: float) -> CostInterval:
    """Invert the feasibility bounds: prices whose family contains ``target_pi_tfd``."""
    x = float(target_pi_tfd)
    if not 0.0 <= x <= 1.0:
        raise InvalidParameterError(f"target pi_tfd must lie in [0, 1], got {x!r}")
    s, p, phi = c.s_cf, c.p_cf, c.phi
    band_lo, band_hi = cost_band(c)
    lo = max(band_lo, 0.5 * phi * (s - x * (s - 2 * p)))
    hi = min(band_hi, phi * (1.0 - x * (1.0 - p)))
    if lo > hi:
        # the two bounds meet at x = 1; only rounding can cross them
        lo = hi = 0.5 * (lo + hi)
    return CostInterval(x, lo, hi, c.beta)
