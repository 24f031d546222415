"""Invariant suite behind ``fdgame verify``.

Each check returns ``pass``, ``fail`` or ``infeasible``.  ``infeasible``
is a finding about the scenario's prices (no equilibrium can exist), not a
defect of the library, and does not fail the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DerivedConstants
from .errors import NoEquilibriumError
from .game import (EQUILIBRIUM_TOL, CostPolicy, MixedStrategy, cost_band, indifference_ranks,
                   mne_family, mne_strategy, solve_equilibria, verify_mne)
from .montecarlo import Model, profile_battery
from .poa import min_mne_throughput, poa_sweep
from .scenario import Scenario
from .throughput import (SymmetricAccessProfile, aggregate_from_profiles, aggregate_throughput,
                         grid_search_max, in_region, maximize_throughput, optimal_mne,
                         stationary_point)


@dataclass
class CheckResult:
    name: str
    status: str
    message: str
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class Report:
    scenario: str
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "ok": self.ok,
                "checks": [{"name": c.name, "status": c.status, "message": c.message,
                            "details": c.details} for c in self.checks]}

    def lines(self) -> list[str]:
        out = [f"[{c.status.upper():>10}] {c.name}: {c.message}" for c in self.checks]
        out.append(f"overall: {'PASS' if self.ok else 'FAIL'}")
        return out


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def check_constants(c: DerivedConstants) -> CheckResult:
    ok = 0 < c.iota_c < c.iota_f < 1 and c.s_cf - 2 * c.p_cf > 0 and 0.5 < c.beta <= 1
    return CheckResult("constants", _status(ok),
                       f"beta={c.beta:.6g} phi={c.phi:.6g} iota_c={c.iota_c:.6g} "
                       f"iota_f={c.iota_f:.6g}", c.to_dict())


def check_indifference(c: DerivedConstants, rng: np.random.Generator, n: int) -> CheckResult:
    lo, hi = cost_band(c)
    worst = 0.0
    for _ in range(n):
        fam = mne_family(c, rng.uniform(lo, hi))
        x = rng.uniform(fam.pi_tfd_min, fam.pi_tfd_max)
        ver = verify_mne(c, fam(x), fam.costs)
        worst = max(worst, ver.max_residual if ver.proportional_costs else math.inf)
    return CheckResult("indifference", _status(worst <= EQUILIBRIUM_TOL),
                       f"max |U| over {n} sampled equilibria = {worst:.3e}",
                       {"max_residual": worst, "samples": n})


def check_profile_identity(c: DerivedConstants, rng: np.random.Generator, n: int) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        y = rng.uniform(0, 0.5)
        x = rng.uniform(0, 1 - 2 * y)
        prof = SymmetricAccessProfile(y, x)
        worst = max(worst, abs(aggregate_throughput(c, prof) - aggregate_from_profiles(c, prof.to_mixed())))
    return CheckResult("throughput-identity", _status(worst <= 1e-12),
                       f"max |closed form - 16-profile sum| over {n} profiles = {worst:.3e}",
                       {"max_abs_diff": worst, "samples": n})


def check_rank(c: DerivedConstants) -> CheckResult:
    lo, hi = cost_band(c)
    mid = 0.5 * (lo + hi)
    good = indifference_ranks(c, CostPolicy.proportional(c, mid))
    bad = indifference_ranks(c, CostPolicy(mid, 2 * c.beta * mid + 1e-3))
    ok = good == (3, 3) and bad == (3, 4)
    return CheckResult("rank", _status(ok),
                       f"proportional costs: rank(A), rank([A|b]) = {good}; perturbed: {bad}",
                       {"proportional": list(good), "perturbed": list(bad)})


def check_costs(c: DerivedConstants, costs: CostPolicy, rng: np.random.Generator,
                n: int) -> CheckResult:
    ranks = indifference_ranks(c, costs)
    try:
        fam = solve_equilibria(c, costs)
    except NoEquilibriumError as exc:
        # confirm by sampling: no interior symmetric p.m.f. may be certified
        certified = 0
        for _ in range(n):
            pi = MixedStrategy.from_array(rng.dirichlet(np.ones(4)))
            if verify_mne(c, pi, costs).is_equilibrium(1e-6):
                certified += 1
        ok = certified == 0
        return CheckResult("cost-consistency", "infeasible" if ok else "fail",
                           f"no equilibrium for these prices ({exc}); sampled certified: {certified}",
                           {"ranks": list(ranks), "equilibrium": "infeasible"})
    mid = 0.5 * (fam.pi_tfd_min + fam.pi_tfd_max)
    ver = verify_mne(c, fam(mid), fam.costs)
    ok = ver.is_equilibrium() and ranks == (3, 3)
    return CheckResult("cost-consistency", _status(ok),
                       f"pi_tfd in [{fam.pi_tfd_min:.6g}, {fam.pi_tfd_max:.6g}], "
                       f"midpoint residual {ver.max_residual:.3e}",
                       {"ranks": list(ranks), **fam.to_dict()})


def check_optimizer(c: DerivedConstants) -> CheckResult:
    opt = maximize_throughput(c)
    grid, _ = grid_search_max(c, 1e-3)
    crit = stationary_point(c)
    outside = crit is None or not in_region(*crit)
    gap = opt.t_star - grid
    ok = -1e-12 <= gap <= 1e-5 * c.phi and outside
    return CheckResult("optimizer-vs-grid", _status(ok),
                       f"T* = {opt.t_star:.9g} on {opt.boundary}, grid max = {grid:.9g}, "
                       f"critical point {'outside R' if outside else 'INSIDE R'}",
                       {"t_star": opt.t_star, "grid": grid, "boundary": opt.boundary,
                        "critical_point": None if crit is None else list(crit)})


def check_optimal_mne(c: DerivedConstants) -> CheckResult:
    opt = optimal_mne(c)
    res = opt.verification.max_residual
    # the enabling price must also reproduce the optimum through the equilibrium map
    pi = mne_strategy(c, opt.enabling_c_hd, opt.profile.pi_tfd)
    same = np.allclose(pi.as_array(), opt.strategy.as_array(), atol=1e-9)
    ok = opt.verification.is_equilibrium() and same
    return CheckResult("optimal-equilibrium", _status(ok),
                       f"enabling c_hd = {opt.enabling_c_hd:.9g}, max |U| = {res:.3e}",
                       opt.to_dict())


def check_poa(c: DerivedConstants) -> CheckResult:
    pts = poa_sweep(c, [i / 100 for i in range(101)])
    finite = [p for p in pts if not math.isinf(p.poa)]
    zero = min_mne_throughput(c, 0.0)
    ok = zero == 0.0 and math.isinf(pts[0].poa) and all(p.poa >= 1 - 1e-12 for p in finite)
    return CheckResult("price-of-anarchy", _status(ok),
                       f"t_min(0) = {zero}, min finite PoA = {min(p.poa for p in finite):.6g}",
                       {"t_min_at_zero": zero})


def check_montecarlo(model: Model, n_slots: int, seed: int, workers: int) -> CheckResult:
    checks = profile_battery(model, n_slots, seed, workers)
    bad = [ch for ch in checks if not ch.passed(3.0)]
    worst = max(abs(ch.z) for ch in checks)
    return CheckResult("monte-carlo", _status(not bad),
                       f"{len(checks) - len(bad)}/{len(checks)} within 3 se "
                       f"({n_slots} slots each), max |z| = {worst:.2f}",
                       {"failures": [ch.label for ch in bad], "max_abs_z": worst,
                        "n_slots": n_slots, "seed": seed})


def run_verification(scenario: Scenario, samples: int = 1000, n_slots: int = 100_000,
                     seed: int = 0, montecarlo: bool = True, workers: int = 1) -> Report:
    c = scenario.constants
    rng = np.random.default_rng(seed)
    checks = [check_constants(c),
              check_indifference(c, rng, samples),
              check_profile_identity(c, rng, samples),
              check_rank(c)]
    if scenario.costs is not None:
        checks.append(check_costs(c, scenario.costs, rng, samples))
    checks += [check_optimizer(c), check_optimal_mne(c), check_poa(c)]
    if montecarlo:
        checks.append(check_montecarlo(scenario.model, n_slots, seed, workers))
    return Report(scenario.name, checks)
