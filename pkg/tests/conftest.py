import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from fdgame.core import DerivedConstants, NetworkParams, derive_constants

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"

NOMINAL = NetworkParams(alpha=3.5, theta=4.0, kappa=1.0, snr_ref=10.0, beta=0.7)


@pytest.fixture
def nominal_params():
    return NOMINAL


@pytest.fixture
def nominal():
    return derive_constants(NOMINAL)


@pytest.fixture
def low_interference():
    return DerivedConstants(beta=0.7, phi=1.0, iota_c=0.6, iota_f=0.7)


@pytest.fixture
def high_interference():
    return DerivedConstants(beta=0.7, phi=1.0, iota_c=0.1, iota_f=0.2)


@st.composite
def network_params(draw):
    alpha = draw(st.floats(2.0, 6.0))
    theta = draw(st.floats(0.05, 20.0))
    kappa = draw(st.floats(0.2, 5.0))
    # keep the noise-only success probability above exp(-50)
    floor = theta * kappa ** (-alpha) / 50.0
    snr_ref = draw(st.floats(max(0.5, floor), max(1000.0, 2 * floor)))
    return NetworkParams(alpha=alpha, theta=theta, kappa=kappa, snr_ref=snr_ref,
                         beta=draw(st.floats(0.51, 1.0)))


@st.composite
def constants(draw):
    """Valid derived constants, sampled directly (no geometry)."""
    ic = draw(st.floats(0.01, 0.97))
    jf = draw(st.floats(ic + 0.01, 0.99))
    return DerivedConstants(beta=draw(st.floats(0.51, 1.0)), phi=draw(st.floats(0.05, 1.0)),
                            iota_c=ic, iota_f=jf)


def random_constants(rng: np.random.Generator) -> DerivedConstants:
    ic, jf = np.sort(rng.uniform(0.01, 0.99, size=2))
    if jf - ic < 1e-6:
        jf = min(0.995, ic + 1e-3)
    return DerivedConstants(beta=float(rng.uniform(0.51, 1.0)), phi=float(rng.uniform(0.05, 1.0)),
                            iota_c=float(ic), iota_f=float(jf))


def close(a, b, tol):
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)


def geometric_pair_throughput(params: NetworkParams, own: str, opp: str) -> float:
    """Packets delivered in pair 1, recomputed from node coordinates.

    Independent of the library: the Rayleigh success probability
    ``exp(-theta N d^a / P) * prod 1 / (1 + theta (d / d_i)^a)`` is evaluated
    directly on the grid with unit link length.
    """
    k, a, th = params.kappa, params.alpha, params.theta
    pos = {"A1": (0.0, 0.0), "B1": (0.0, 1.0), "A2": (k, 0.0), "B2": (k, 1.0)}
    tx_of = {"w": (), "t_A": ("A",), "t_B": ("B",), "t_fd": ("A", "B")}
    mate = {"A": "B", "B": "A"}
    noise = th * k ** (-a) / params.snr_ref
    total = 0.0
    for node in tx_of[own]:
        rx = mate[node] + "1"
        p = math.exp(-noise)
        if len(tx_of[own]) == 2:
            p *= params.resolved_beta
        for intr in tx_of[opp]:
            d = math.dist(pos[intr + "2"], pos[rx])
            p /= 1.0 + th * d ** (-a)
        total += p
    return total


ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
