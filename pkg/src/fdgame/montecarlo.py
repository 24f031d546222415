"""Slot-level simulation of the two-pair grid.

Every slot each pair draws an action, every directed transmitter-receiver
link draws an independent unit-mean exponential fade, and a packet is
decoded iff its SNIR exceeds the threshold.  In units where the wanted
signal has path gain 1, decoding succeeds iff

    fade > noise + si + sum_k coef[k, rx] * fade[k -> rx]

with ``noise = theta N r^a / P``, ``coef = theta (dist / r)^-a`` for nodes of
the other pair, and ``si = -ln(beta)`` when the receiver is itself
transmitting.  The interference coefficients come from node coordinates,
not from the closed-form factors, so the simulator checks them.

Random numbers come from a Philox stream keyed by the seed: slot ``i``
consumes the 16 doubles at counter ``4 i``.  Any partition of the slot
range therefore reproduces the sequential run bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import STRATEGIES, DerivedConstants, NetworkParams, Receiver, Strategy, derive_constants, parse_strategy, success_probability
from .errors import InvalidParameterError, InvalidRoleError
from .game import CostPolicy, MixedStrategy, action_throughput, utility
from .throughput import aggregate_from_profiles, profile_throughput

Model = Union[NetworkParams, DerivedConstants]

CHUNK = 1 << 16
UNIFORMS_PER_SLOT = 16
# node order A1, B1, A2, B2; pair i owns nodes 2i (A) and 2i + 1 (B)
N_NODES = 4
LINKS = [(tx, rx) for tx in range(N_NODES) for rx in range(N_NODES) if tx != rx]
LINK_INDEX = {link: i for i, link in enumerate(LINKS)}


def _mate(node: int) -> int:
    return node ^ 1


@dataclass(frozen=True)
class LinkBudget:
    """Normalised decoding thresholds.

    ``coef[k, rx]`` weighs the fade of interferer ``k`` at receiver ``rx``
    (zero inside a pair).
    """

    noise: float
    si: float
    coef: np.ndarray

    @classmethod
    def from_params(cls, params: NetworkParams) -> "LinkBudget":
        a, th, k = params.alpha, params.theta, params.kappa
        # r = 1; pairs are vertical edges of the grid, separated by kappa
        pos = np.array([[0.0, 0.0], [0.0, 1.0], [k, 0.0], [k, 1.0]])
        dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
        coef = np.zeros((N_NODES, N_NODES))
        for tx in range(N_NODES):
            for rx in range(N_NODES):
                if tx // 2 != rx // 2:
                    coef[tx, rx] = th * dist[tx, rx] ** (-a)
        noise = th * k ** (-a) / params.snr_ref
        return cls(noise, -math.log(params.resolved_beta), coef)

    @classmethod
    def from_constants(cls, c: DerivedConstants) -> "LinkBudget":
        # E[exp(-g * fade)] = 1 / (1 + g), so g = 1 / iota - 1 reproduces iota
        g_close, g_far = 1.0 / c.iota_c - 1.0, 1.0 / c.iota_f - 1.0
        coef = np.zeros((N_NODES, N_NODES))
        for tx in range(N_NODES):
            for rx in range(N_NODES):
                if tx // 2 != rx // 2:
                    same_role = tx % 2 == rx % 2
                    coef[tx, rx] = g_close if same_role else g_far
        return cls(-math.log(c.phi), -math.log(c.beta), coef)

    @classmethod
    def of(cls, model: Model) -> "LinkBudget":
        if isinstance(model, NetworkParams):
            return cls.from_params(model)
        return cls.from_constants(model)


def constants_of(model: Model) -> DerivedConstants:
    return derive_constants(model) if isinstance(model, NetworkParams) else model


@dataclass(frozen=True)
class SimConfig:
    model: Model
    pi1: MixedStrategy
    pi2: MixedStrategy
    n_slots: int
    seed: int = 0
    mode: str = "joint"

    def __post_init__(self) -> None:
        if int(self.n_slots) < 1:
            raise InvalidParameterError("n_slots must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")
        if self.mode not in ("joint", "fixed"):
            raise InvalidParameterError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "n_slots", int(self.n_slots))
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def fixed(cls, model: Model, s1: Strategy | str, s2: Strategy | str, n_slots: int,
              seed: int = 0) -> "SimConfig":
        """Both pairs hold ``(s1, s2)`` in every slot."""
        return cls(model, MixedStrategy.pure(s1), MixedStrategy.pure(s2), n_slots, seed, "fixed")

    @property
    def profile(self) -> tuple[Strategy, Strategy] | None:
        if self.mode != "fixed":
            return None
        return (STRATEGIES[int(np.argmax(self.pi1.as_array()))],
                STRATEGIES[int(np.argmax(self.pi2.as_array()))])


@dataclass
class SlotBlock:
    """Per-slot outcomes for a contiguous slot range."""

    actions: np.ndarray     # (n, 2) strategy indices
    addressed: np.ndarray   # (n, 4) receiver has an incoming packet
    success: np.ndarray     # (n, 4) that packet was decoded


def _uniforms(seed: int, start: int, n: int) -> np.ndarray:
    bitgen = np.random.Philox(key=seed, counter=start * (UNIFORMS_PER_SLOT // 4))
    return np.random.Generator(bitgen).random((n, UNIFORMS_PER_SLOT))


def simulate_slots(config: SimConfig, start: int, stop: int,
                   budget: LinkBudget | None = None) -> SlotBlock:
    """Simulate slots ``start .. stop - 1`` of the run described by ``config``."""
    budget = LinkBudget.of(config.model) if budget is None else budget
    n = stop - start
    u = _uniforms(config.seed, start, n)
    cdfs = [np.cumsum(p.as_array())[:-1] for p in (config.pi1, config.pi2)]
    actions = np.stack([np.searchsorted(cdf, u[:, i], side="right")
                        for i, cdf in enumerate(cdfs)], axis=1).astype(np.int8)

    a_tx = np.isin(actions, (1, 3))
    b_tx = np.isin(actions, (2, 3))
    tx = np.empty((n, N_NODES), dtype=bool)
    tx[:, 0::2], tx[:, 1::2] = a_tx, b_tx

    fades = -np.log1p(-u[:, 2:2 + len(LINKS)])
    addressed = np.empty_like(tx)
    success = np.zeros_like(tx)
    for rx in range(N_NODES):
        mate = _mate(rx)
        addressed[:, rx] = tx[:, mate]
        threshold = budget.noise + budget.si * tx[:, rx]
        for k in range(N_NODES):
            if budget.coef[k, rx] > 0.0:
                threshold = threshold + budget.coef[k, rx] * tx[:, k] * fades[:, LINK_INDEX[(k, rx)]]
        signal = fades[:, LINK_INDEX[(mate, rx)]]
        success[:, rx] = addressed[:, rx] & (signal > threshold)
    return SlotBlock(actions, addressed, success)


@dataclass
class _Tally:
    """Integer sufficient statistics; merging is exact and order-free."""

    n: int = 0
    pair_sum: np.ndarray = field(default_factory=lambda: np.zeros(2, np.int64))
    pair_sq: np.ndarray = field(default_factory=lambda: np.zeros(2, np.int64))
    agg_sum: int = 0
    agg_sq: int = 0
    act_n: np.ndarray = field(default_factory=lambda: np.zeros((2, 4), np.int64))
    act_sum: np.ndarray = field(default_factory=lambda: np.zeros((2, 4), np.int64))
    act_sq: np.ndarray = field(default_factory=lambda: np.zeros((2, 4), np.int64))
    # [role (A=0, B=1), own, opp]
    rx_n: np.ndarray = field(default_factory=lambda: np.zeros((2, 4, 4), np.int64))
    rx_ok: np.ndarray = field(default_factory=lambda: np.zeros((2, 4, 4), np.int64))

    @classmethod
    def of(cls, blk: SlotBlock) -> "_Tally":
        t = cls()
        t.n = len(blk.actions)
        ok = blk.success.astype(np.int64)
        per_pair = np.stack([ok[:, 0] + ok[:, 1], ok[:, 2] + ok[:, 3]], axis=1)
        agg = per_pair.sum(axis=1)
        t.pair_sum, t.pair_sq = per_pair.sum(axis=0), (per_pair ** 2).sum(axis=0)
        t.agg_sum, t.agg_sq = int(agg.sum()), int((agg ** 2).sum())
        act = blk.actions.astype(np.int64)
        for i in range(2):
            t.act_n[i] = np.bincount(act[:, i], minlength=4)
            t.act_sum[i] = np.bincount(act[:, i], weights=per_pair[:, i], minlength=4).astype(np.int64)
            t.act_sq[i] = np.bincount(act[:, i], weights=per_pair[:, i] ** 2, minlength=4).astype(np.int64)
        for node in range(N_NODES):
            pair, role = divmod(node, 2)
            own, opp = act[:, pair], act[:, 1 - pair]
            cell = own * 4 + opp
            mask = blk.addressed[:, node]
            t.rx_n[role] += np.bincount(cell[mask], minlength=16).reshape(4, 4)
            t.rx_ok[role] += np.bincount(cell[blk.success[:, node]], minlength=16).reshape(4, 4)
        return t

    def merge(self, other: "_Tally") -> "_Tally":
        out = _Tally()
        for name in ("n", "agg_sum", "agg_sq"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        for name in ("pair_sum", "pair_sq", "act_n", "act_sum", "act_sq", "rx_n", "rx_ok"):
            setattr(out, name, getattr(self, name) + getattr(other, name))
        return out


def _mean_se(total: float, sq: float, n: int) -> tuple[float, float]:
    if n == 0:
        return math.nan, math.nan
    mean = total / n
    if n == 1:
        return mean, math.nan
    var = max(0.0, (sq - n * mean * mean) / (n - 1))
    return mean, math.sqrt(var / n)


@dataclass(frozen=True)
class Estimate:
    mean: float
    se: float
    n: int

    def z(self, expected: float) -> float:
        diff = self.mean - expected
        if self.se == 0.0 or math.isnan(self.se):
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.se

    def within(self, expected: float, k: float = 3.0) -> bool:
        return abs(self.z(expected)) <= k

    def to_dict(self) -> dict:
        return {"mean": self.mean, "se": self.se, "n": self.n}


@dataclass(frozen=True)
class SimEstimate:
    n_slots: int
    pair_throughput: tuple[Estimate, Estimate]
    aggregate: Estimate
    # utility[pair][action]; NaN mean when the action was never played
    action_utility: tuple[dict[Strategy, Estimate], dict[Strategy, Estimate]]
    # success[(receiver, own, opp)]; only addressable combinations
    success: dict[tuple[Receiver, Strategy, Strategy], Estimate]
    costs: CostPolicy

    def to_dict(self) -> dict:
        return {
            "n_slots": self.n_slots,
            "costs": self.costs.to_dict(),
            "pair_throughput": [e.to_dict() for e in self.pair_throughput],
            "aggregate_throughput": self.aggregate.to_dict(),
            "action_utility": [{str(s): e.to_dict() for s, e in d.items()}
                               for d in self.action_utility],
            "success_rates": [{"receiver": str(r), "own": str(o), "opp": str(p), **e.to_dict()}
                              for (r, o, p), e in self.success.items()],
        }


def _tally(config: SimConfig, workers: int) -> _Tally:
    budget = LinkBudget.of(config.model)
    bounds = [(a, min(a + CHUNK, config.n_slots)) for a in range(0, config.n_slots, CHUNK)]

    def run(b: tuple[int, int]) -> _Tally:
        return _Tally.of(simulate_slots(config, b[0], b[1], budget))

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, bounds))
    else:
        parts = [run(b) for b in bounds]
    total = parts[0]
    for p in parts[1:]:
        total = total.merge(p)
    return total


def simulate(config: SimConfig, costs: CostPolicy | None = None, workers: int = 1) -> SimEstimate:
    """Run the simulation and return estimates with standard errors.

    ``costs`` only shifts the per-action utilities; without it they equal
    the conditional throughputs.
    """
    costs = CostPolicy(0.0, 0.0) if costs is None else costs
    t = _tally(config, workers)
    pair = tuple(Estimate(*_mean_se(t.pair_sum[i], t.pair_sq[i], t.n), t.n) for i in range(2))
    agg = Estimate(*_mean_se(t.agg_sum, t.agg_sq, t.n), t.n)
    act = []
    for i in range(2):
        row = {}
        for j, s in enumerate(STRATEGIES):
            n = int(t.act_n[i, j])
            mean, se = _mean_se(t.act_sum[i, j], t.act_sq[i, j], n)
            row[s] = Estimate(mean - costs.cost(s), se, n)
        act.append(row)
    succ = {}
    for role, receiver in enumerate((Receiver.A, Receiver.B)):
        for o, own in enumerate(STRATEGIES):
            addressed = own.b_transmits if receiver is Receiver.A else own.a_transmits
            if not addressed:
                continue
            for p, opp in enumerate(STRATEGIES):
                n = int(t.rx_n[role, o, p])
                if n == 0:
                    continue
                rate = t.rx_ok[role, o, p] / n
                se = math.sqrt(rate * (1.0 - rate) / n)
                succ[(receiver, own, opp)] = Estimate(rate, se, n)
    return SimEstimate(t.n, pair, agg, (act[0], act[1]), succ, costs)


def estimate_success_probability(model: Model, receiver: Receiver | str, own: Strategy | str,
                                 opp: Strategy | str, n_slots: int, seed: int = 0) -> Estimate:
    """Empirical decoding rate at ``receiver`` of pair 1 under the fixed profile ``(own, opp)``."""
    receiver, own, opp = Receiver(receiver), parse_strategy(own), parse_strategy(opp)
    addressed = own.a_transmits if receiver is Receiver.B else own.b_transmits
    if not addressed:
        raise InvalidRoleError(f"receiver {receiver} is not addressed under {own}")
    cfg = SimConfig.fixed(model, own, opp, n_slots, seed)
    budget = LinkBudget.of(model)
    node = 0 if receiver is Receiver.A else 1
    hits = 0
    for a in range(0, n_slots, CHUNK):
        blk = simulate_slots(cfg, a, min(a + CHUNK, n_slots), budget)
        hits += int(blk.success[:, node].sum())
    rate = hits / n_slots
    return Estimate(rate, math.sqrt(rate * (1.0 - rate) / n_slots), n_slots)


def analytic_counterpart(config: SimConfig, costs: CostPolicy | None = None) -> dict:
    """Closed-form values matching the entries of :func:`simulate`."""
    costs = CostPolicy(0.0, 0.0) if costs is None else costs
    c = constants_of(config.model)
    pis = (config.pi1, config.pi2)
    pair = [math.fsum(pis[i].prob(s) * action_throughput(c, pis[1 - i], s) for s in STRATEGIES)
            for i in range(2)]
    util = [{s: utility(c, pis[1 - i], s, costs) for s in STRATEGIES} for i in range(2)]
    succ = {}
    for receiver in (Receiver.A, Receiver.B):
        for own in STRATEGIES:
            for opp in STRATEGIES:
                try:
                    succ[(receiver, own, opp)] = success_probability(c, receiver, own, opp)
                except InvalidRoleError:
                    pass
    return {"pair_throughput": pair, "aggregate": aggregate_from_profiles(c, *pis),
            "action_utility": util, "success": succ}


def comparison_report(config: SimConfig, est: SimEstimate) -> dict:
    """Estimates next to closed forms, with z-scores."""
    ref = analytic_counterpart(config, est.costs)

    def row(e: Estimate, x: float) -> dict:
        return {**e.to_dict(), "analytic": x, "z": e.z(x)}

    return {
        "n_slots": est.n_slots,
        "seed": config.seed,
        "mode": config.mode,
        "pi1": config.pi1.to_dict(),
        "pi2": config.pi2.to_dict(),
        "costs": est.costs.to_dict(),
        "pair_throughput": [row(e, x) for e, x in zip(est.pair_throughput, ref["pair_throughput"])],
        "aggregate_throughput": row(est.aggregate, ref["aggregate"]),
        "action_utility": [
            {str(s): row(e, ref["action_utility"][i][s]) for s, e in est.action_utility[i].items()
             if e.n > 0}
            for i in range(2)],
        "success_rates": [
            {"receiver": str(r), "own": str(o), "opp": str(p), **row(e, ref["success"][(r, o, p)])}
            for (r, o, p), e in est.success.items()],
    }


@dataclass(frozen=True)
class BatteryCheck:
    kind: str  # "profile" or "success"
    label: str
    estimate: Estimate
    analytic: float

    @property
    def z(self) -> float:
        return self.estimate.z(self.analytic)

    def passed(self, k: float = 3.0) -> bool:
        return self.estimate.within(self.analytic, k)


def profile_battery(model: Model, n_slots: int, seed: int = 0,
                    workers: int = 1) -> list[BatteryCheck]:
    """Compare every fixed profile and every conditional decoding rate to its closed form.

    Each of the 16 profiles runs on its own sub-seed derived from ``seed``;
    the rate for ``(receiver, own, opp)`` is read off the ``(own, opp)`` run.
    """
    c = constants_of(model)
    checks = []
    for i, s1 in enumerate(STRATEGIES):
        for j, s2 in enumerate(STRATEGIES):
            sub = int(np.random.SeedSequence([seed, 4 * i + j]).generate_state(1, np.uint64)[0])
            est = simulate(SimConfig.fixed(model, s1, s2, n_slots, sub), workers=workers)
            checks.append(BatteryCheck("profile", f"({s1}, {s2})", est.aggregate,
                                       profile_throughput(c, s1, s2)))
            for receiver in (Receiver.A, Receiver.B):
                key = (receiver, s1, s2)
                if key in est.success:
                    checks.append(BatteryCheck(
                        "success", f"p({receiver} | own={s1}, opp={s2})", est.success[key],
                        success_probability(c, receiver, s1, s2)))
    return checks
