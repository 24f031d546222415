"""Network-wide throughput and its maximisation over fair access profiles.

A fair profile has ``pi_tA = pi_tB = pi_thd``; the feasible set is the
triangle ``R = {pi_thd in [0, 1/2], pi_tfd in [0, 1], 2 pi_thd + pi_tfd <= 1}``
with edges

* ``dR1``: no full duplex (``pi_tfd = 0``),
* ``dR2``: no half duplex (``pi_thd = 0``),
* ``dR3``: never wait (``pi_w = 0``).

The aggregate throughput is a concave-or-saddle quadratic whose only
critical point lies outside ``R``, so the maximum sits on one of the edges.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import STRATEGIES, DerivedConstants, Receiver, Strategy, parse_strategy, success_probability
from .errors import InfeasibleBetaError, InvalidParameterError
from .game import CLAMP_TOL, CostPolicy, MixedStrategy, Verification, verify_mne

log = logging.getLogger(__name__)

BOUNDARIES = ("dR1", "dR2", "dR3")
REGIMES = {"dR1": "wait/HD", "dR2": "wait/FD", "dR3": "HD/FD"}


@dataclass(frozen=True)
class SymmetricAccessProfile:
    pi_thd: float
    pi_tfd: float

    def __post_init__(self) -> None:
        y, x = float(self.pi_thd), float(self.pi_tfd)
        if not (-CLAMP_TOL <= y <= 0.5 + CLAMP_TOL and -CLAMP_TOL <= x <= 1 + CLAMP_TOL
                and 2 * y + x <= 1 + CLAMP_TOL):
            raise InvalidParameterError(f"({y!r}, {x!r}) is outside the fair-profile region")
        y, x = min(max(y, 0.0), 0.5), min(max(x, 0.0), 1.0)
        if 2 * y + x > 1.0:
            x = 1.0 - 2 * y
        object.__setattr__(self, "pi_thd", y)
        object.__setattr__(self, "pi_tfd", x)

    @property
    def pi_w(self) -> float:
        v = 1.0 - 2 * self.pi_thd - self.pi_tfd
        return 0.0 if v <= CLAMP_TOL else v

    def to_mixed(self) -> MixedStrategy:
        return MixedStrategy(self.pi_w, self.pi_thd, self.pi_thd, self.pi_tfd)

    @classmethod
    def from_mixed(cls, pi: MixedStrategy) -> "SymmetricAccessProfile":
        if abs(pi.pi_tA - pi.pi_tB) > CLAMP_TOL:
            raise InvalidParameterError("profile is not symmetric (pi_tA != pi_tB)")
        return cls(0.5 * (pi.pi_tA + pi.pi_tB), pi.pi_tfd)


def _delivered(c: DerivedConstants, own: Strategy, opp: Strategy) -> float:
    total = 0.0
    if own.a_transmits:
        total += success_probability(c, Receiver.B, own, opp)
    if own.b_transmits:
        total += success_probability(c, Receiver.A, own, opp)
    return total


def profile_throughput(c: DerivedConstants, s1: Strategy | str, s2: Strategy | str) -> float:
    """Expected packets delivered network-wide in a slot with actions ``(s1, s2)``.

    Each addressed receiver decodes independently (distinct fades), so the
    expectation is the sum of the per-receiver success probabilities.
    """
    s1, s2 = parse_strategy(s1), parse_strategy(s2)
    return _delivered(c, s1, s2) + _delivered(c, s2, s1)


def profile_table(c: DerivedConstants) -> np.ndarray:
    """4x4 table of :func:`profile_throughput` in ``STRATEGIES`` order."""
    return np.array([[profile_throughput(c, a, b) for b in STRATEGIES] for a in STRATEGIES])


def aggregate_throughput(c: DerivedConstants, profile: SymmetricAccessProfile) -> float:
    """Closed-form aggregate throughput of a fair profile."""
    y, x = profile.pi_thd, profile.pi_tfd
    return (4.0 * c.phi * (y + c.beta * x)
            * (1.0 - y * (2.0 - c.s_cf) - x * (1.0 - c.p_cf)))


def aggregate_from_profiles(c: DerivedConstants, pi: MixedStrategy,
                            pi2: MixedStrategy | None = None) -> float:
    """Expectation of :func:`profile_throughput` over independent draws.

    ``pi2`` defaults to ``pi`` (both pairs play the same p.m.f.).
    """
    pi2 = pi if pi2 is None else pi2
    p1, p2 = pi.as_array(), pi2.as_array()
    table = profile_table(c)
    return math.fsum(p1[i] * p2[j] * table[i, j] for i in range(4) for j in range(4))


def _require_beta(c: DerivedConstants) -> None:
    if not c.beta > 0.5:
        raise InfeasibleBetaError(f"beta = {c.beta!r} must exceed 1/2")


def stationary_point(c: DerivedConstants) -> tuple[float, float] | None:
    """Critical point ``(pi_thd, pi_tfd)`` of the aggregate throughput.

    Setting both partial derivatives to zero forces ``pi_thd = -beta pi_tfd``,
    which is why the point can never be inside ``R``.  Returns ``None`` in
    the degenerate case ``beta (2 - iota_c - iota_f) = 1 - iota_c iota_f``
    where the critical set is a whole line.
    """
    a, b = 2.0 - c.s_cf, 1.0 - c.p_cf
    det = b - a * c.beta
    if abs(det) < 1e-14:
        return None
    x = 1.0 / det
    return -c.beta * x, x


def in_region(pi_thd: float, pi_tfd: float, tol: float = 0.0) -> bool:
    return (-tol <= pi_thd <= 0.5 + tol and -tol <= pi_tfd <= 1 + tol
            and 2 * pi_thd + pi_tfd <= 1 + tol)


@dataclass(frozen=True)
class SegmentMax:
    boundary: str
    profile: SymmetricAccessProfile
    value: float


def _best(c: DerivedConstants, boundary: str, points: Iterable[tuple[float, float]]) -> SegmentMax:
    best = None
    for y, x in points:
        prof = SymmetricAccessProfile(y, x)
        val = aggregate_throughput(c, prof)
        if best is None or val > best.value:
            best = SegmentMax(boundary, prof, val)
    return best


def _clip(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def segment_maxima(c: DerivedConstants) -> tuple[SegmentMax, SegmentMax, SegmentMax]:
    """Maximum of the aggregate throughput on each edge of ``R``.

    On every edge the objective is a quadratic in one variable; the
    clipped stationary point and both endpoints are compared.
    """
    _require_beta(c)
    s, p, beta = c.s_cf, c.p_cf, c.beta

    # dR1: T = 4 phi y (1 - (2 - s) y)
    y1 = _clip(1.0 / (2.0 * (2.0 - s)), 0.0, 0.5) if s < 2.0 else 0.5
    r1 = _best(c, "dR1", [(y1, 0.0), (0.0, 0.0), (0.5, 0.0)])

    # dR2: T = 4 phi beta x (1 - (1 - p) x)
    x2 = _clip(1.0 / (2.0 * (1.0 - p)), 0.0, 1.0) if p < 1.0 else 1.0
    r2 = _best(c, "dR2", [(0.0, x2), (0.0, 0.0), (0.0, 1.0)])

    # dR3: T = phi (1 + (2 beta - 1) x) (s + (2 p - s) x), pi_thd = (1 - x) / 2
    den = (2.0 * beta - 1.0) * (2.0 * p - s)
    cands = [0.0, 1.0]
    if abs(den) > 1e-15:
        cands.append(_clip(((1.0 - beta) * s - p) / den, 0.0, 1.0))
    r3 = _best(c, "dR3", [((1.0 - x) / 2.0, x) for x in cands])
    return r1, r2, r3


@dataclass(frozen=True)
class ThroughputOptimum:
    """Throughput-maximising fair profile and the price turning it into an equilibrium."""

    constants: DerivedConstants = field(repr=False)
    profile: SymmetricAccessProfile
    t_star: float
    boundary: str
    ties: tuple[str, ...] = ()
    enabling_c_hd: float | None = None
    verification: Verification | None = field(default=None, repr=False)

    @property
    def strategy(self) -> MixedStrategy:
        return self.profile.to_mixed()

    @property
    def regime(self) -> str:
        return REGIMES[self.boundary]

    @property
    def at_vertex(self) -> bool:
        y, x = self.profile.pi_thd, self.profile.pi_tfd
        return sum(v <= CLAMP_TOL for v in (y, x, self.profile.pi_w)) >= 2

    @property
    def enabling_costs(self) -> CostPolicy | None:
        if self.enabling_c_hd is None:
            return None
        return CostPolicy.proportional(self.constants, self.enabling_c_hd)

    def to_dict(self) -> dict:
        out = {"boundary": self.boundary, "ties": list(self.ties), "regime": self.regime,
               "pi_w": self.profile.pi_w, "pi_thd": self.profile.pi_thd,
               "pi_tfd": self.profile.pi_tfd, "t_star": self.t_star}
        if self.enabling_c_hd is not None:
            out["enabling_c_hd"] = self.enabling_c_hd
            out["enabling_c_fd"] = 2.0 * self.constants.beta * self.enabling_c_hd
        if self.verification is not None:
            out["verification"] = self.verification.to_dict()
        return out


def maximize_throughput(c: DerivedConstants) -> ThroughputOptimum:
    """Maximum aggregate throughput over fair profiles.

    Ties between edges (for instance at a shared vertex) resolve to the
    first label in ``dR1, dR2, dR3``; all tied labels are kept in ``ties``.
    """
    maxima = segment_maxima(c)
    top = max(m.value for m in maxima)
    tol = 1e-12 * max(1.0, abs(top))
    tied = tuple(m.boundary for m in maxima if top - m.value <= tol)
    win = next(m for m in maxima if m.boundary == tied[0])
    return ThroughputOptimum(c, win.profile, win.value, win.boundary, tied)


def enabling_cost(c: DerivedConstants, profile: SymmetricAccessProfile) -> float:
    """Half-duplex price for which ``profile`` is an equilibrium.

    Inverts the ``pi_tA`` line of the equilibrium map.  On ``dR2`` this gives
    ``phi - pi_tfd phi (1 - iota_c iota_f)``, on ``dR3`` the ``pi_w = 0``
    expression, and at the ``dR1`` optimum ``phi / 2`` or
    ``phi (iota_c + iota_f) / 2``.  The value equals ``tau(t_A)`` against the
    profile itself, hence always lies in ``[phi iota_c iota_f, phi]``.
    """
    y, x = profile.pi_thd, profile.pi_tfd
    return c.phi * (1.0 - (2.0 - c.s_cf) * y - (1.0 - c.p_cf) * x)


def optimal_mne(c: DerivedConstants) -> ThroughputOptimum:
    """Throughput optimum together with its enabling price, certified by residuals."""
    opt = maximize_throughput(c)
    c_hd = enabling_cost(c, opt.profile)
    ver = verify_mne(c, opt.strategy, CostPolicy.proportional(c, c_hd))
    return ThroughputOptimum(c, opt.profile, opt.t_star, opt.boundary, opt.ties, c_hd, ver)


class _Grid:
    """Integer lattice on ``R`` with step ``1 / n`` in ``pi_tfd`` and ``pi_thd``."""

    _cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @classmethod
    def points(cls, n: int) -> tuple[np.ndarray, np.ndarray]:
        if n not in cls._cache:
            k = np.arange(n // 2 + 1)
            j = np.arange(n + 1)
            kk, jj = np.meshgrid(k, j, indexing="ij")
            mask = 2 * kk + jj <= n
            cls._cache[n] = (kk[mask] / n, jj[mask] / n)
        return cls._cache[n]


def grid_search_max(c: DerivedConstants, step: float = 1e-3) -> tuple[float, SymmetricAccessProfile]:
    """Brute-force maximum of the aggregate throughput on a lattice over ``R``.

    Evaluates the closed form at every lattice point; used as an oracle for
    :func:`maximize_throughput`.
    """
    n = int(round(1.0 / step))
    if n < 2 or n % 2:
        raise InvalidParameterError("grid step must be 1/n for an even n >= 2")
    y, x = _Grid.points(n)
    vals = 4.0 * c.phi * (y + c.beta * x) * (1.0 - y * (2.0 - c.s_cf) - x * (1.0 - c.p_cf))
    i = int(np.argmax(vals))
    return float(vals[i]), SymmetricAccessProfile(float(y[i]), float(x[i]))


@dataclass(frozen=True)
class RegimeMap:
    rows: list[tuple[float, float, ThroughputOptimum]]
    skipped: list[tuple[float, float, str]]


def regime_map(points: Sequence[tuple[float, float]], beta: float,
               phi: float = 1.0) -> RegimeMap:
    """Throughput-optimal regime over a grid of ``(iota_c, iota_f)`` values.

    Points violating ``0 < iota_c < iota_f < 1`` are skipped and recorded.
    With the default ``phi = 1`` all throughputs and prices come out
    normalised by ``phi``.
    """
    rows, skipped = [], []
    for ic, jf in points:
        ic, jf = float(ic), float(jf)
        if not 0.0 < ic < jf < 1.0:
            msg = f"need 0 < iota_c < iota_f < 1, got ({ic:g}, {jf:g})"
            log.warning("regime_map: skipping point: %s", msg)
            skipped.append((ic, jf, msg))
            continue
        c = DerivedConstants(beta=beta, phi=phi, iota_c=ic, iota_f=jf)
        rows.append((ic, jf, optimal_mne(c)))
    return RegimeMap(rows, skipped)
