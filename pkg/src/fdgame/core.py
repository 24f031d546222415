"""Physical parameters, channel constants and conditional success probabilities.

The topology is a 2x2 grid: two pairs ``(A_i, B_i)`` whose members sit ``r``
apart, the pairs being separated by ``d = kappa * r``.  ``A_1``-``A_2`` and
``B_1``-``B_2`` are the close cross-pair neighbours (distance ``d``), while
``A_i``-``B_j`` sit on the diagonal (distance ``sqrt(d**2 + r**2)``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import InfeasibleBetaError, InvalidParameterError, InvalidRoleError


class Strategy(str, enum.Enum):
    """Per-slot action of a pair."""

    W = "w"
    T_A = "t_A"
    T_B = "t_B"
    T_FD = "t_fd"

    def __str__(self) -> str:
        return self.value

    @property
    def a_transmits(self) -> bool:
        return self in (Strategy.T_A, Strategy.T_FD)

    @property
    def b_transmits(self) -> bool:
        return self in (Strategy.T_B, Strategy.T_FD)


STRATEGIES: tuple[Strategy, ...] = (Strategy.W, Strategy.T_A, Strategy.T_B, Strategy.T_FD)


class Receiver(str, enum.Enum):
    """Role of the receiving node inside its pair."""

    A = "A"
    B = "B"

    def __str__(self) -> str:
        return self.value


def parse_strategy(value: str | Strategy) -> Strategy:
    if isinstance(value, Strategy):
        return value
    key = str(value).strip()
    aliases = {"w": "w", "ta": "t_A", "t_a": "t_A", "tb": "t_B", "t_b": "t_B",
               "tfd": "t_fd", "t_fd": "t_fd", "fd": "t_fd"}
    try:
        return Strategy(aliases[key.lower()])
    except KeyError:
        raise InvalidParameterError(f"unknown strategy {value!r}") from None


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameterError(f"{name} must be a finite positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class NetworkParams:
    """Raw model inputs.

    Exactly one self-interference description must be given: ``beta``
    directly, or ``eta`` together with the absolute ``power``, ``noise`` and
    intra-pair distance ``r`` (in which case ``snr_ref`` is derived from them).
    """

    alpha: float
    theta: float
    kappa: float
    snr_ref: float | None = None
    beta: float | None = None
    eta: float | None = None
    power: float | None = None
    noise: float | None = None
    r: float | None = None

    def __post_init__(self) -> None:
        _positive("alpha", self.alpha)
        _positive("theta", self.theta)
        _positive("kappa", self.kappa)
        if (self.beta is None) == (self.eta is None):
            raise InvalidParameterError("specify exactly one of beta or eta")
        absolute = (self.power, self.noise, self.r)
        if self.eta is not None:
            if any(v is None for v in absolute):
                raise InvalidParameterError("eta requires absolute power, noise and r")
            if not 0.0 <= float(self.eta) < 1.0:
                raise InvalidParameterError(f"eta must lie in [0, 1), got {self.eta!r}")
            for name, v in zip(("power", "noise", "r"), absolute):
                _positive(name, v)
            if self.snr_ref is not None:
                raise InvalidParameterError("snr_ref is derived when power, noise and r are given")
            ref = self.power * (self.kappa * self.r) ** (-self.alpha) / self.noise
            object.__setattr__(self, "snr_ref", ref)
        else:
            if self.snr_ref is None:
                raise InvalidParameterError("snr_ref is required when beta is given")
            beta = float(self.beta)
            if not 0.5 < beta <= 1.0:
                raise InfeasibleBetaError(f"beta must lie in (1/2, 1], got {beta!r}")
        _positive("snr_ref", self.snr_ref)

    @property
    def resolved_beta(self) -> float:
        if self.beta is not None:
            return float(self.beta)
        return math.exp(-self.theta * self.eta * self.r ** self.alpha)

    def to_dict(self) -> dict[str, float]:
        out = {"alpha": self.alpha, "theta": self.theta, "kappa": self.kappa}
        if self.eta is None:
            out.update(snr_ref=self.snr_ref, beta=self.beta)
        else:
            out.update(eta=self.eta, power=self.power, noise=self.noise, r=self.r)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "NetworkParams":
        allowed = {"alpha", "theta", "kappa", "snr_ref", "beta", "eta", "power", "noise", "r"}
        unknown = set(data) - allowed
        if unknown:
            raise InvalidParameterError(f"unknown network parameter(s): {sorted(unknown)}")
        missing = {"alpha", "theta", "kappa"} - set(data)
        if missing:
            raise InvalidParameterError(f"missing network parameter(s): {sorted(missing)}")
        return cls(**{k: (None if v is None else float(v)) for k, v in data.items()})


@dataclass(frozen=True)
class DerivedConstants:
    """The four closed-form factors every throughput formula is built from.

    ``beta`` scales the success probability of a receiver that is itself
    transmitting, ``phi`` is the noise-only success probability, and
    ``iota_c`` / ``iota_f`` are the penalties caused by the closest and the
    farthest node of the competing pair.
    """

    beta: float
    phi: float
    iota_c: float
    iota_f: float

    def __post_init__(self) -> None:
        b, phi, ic, jf = (float(v) for v in (self.beta, self.phi, self.iota_c, self.iota_f))
        if not all(math.isfinite(v) for v in (b, phi, ic, jf)):
            raise InvalidParameterError("derived constants must be finite")
        if not 0.5 < b <= 1.0:
            raise InfeasibleBetaError(f"beta must lie in (1/2, 1], got {b!r}")
        if not 0.0 < phi <= 1.0:
            raise InvalidParameterError(f"phi must lie in (0, 1], got {phi!r}")
        # equality is tolerated only for the theta -> 0 limit where rounding hits 1
        if not 0.0 < ic <= jf <= 1.0:
            raise InvalidParameterError(
                f"need 0 < iota_c <= iota_f <= 1, got iota_c={ic!r}, iota_f={jf!r}")

    @property
    def p_cf(self) -> float:
        """``iota_c * iota_f``, the penalty of a full-duplex opponent."""
        return self.iota_c * self.iota_f

    @property
    def s_cf(self) -> float:
        """``iota_c + iota_f``."""
        return self.iota_c + self.iota_f

    def with_beta(self, beta: float) -> "DerivedConstants":
        return DerivedConstants(beta=beta, phi=self.phi, iota_c=self.iota_c, iota_f=self.iota_f)

    def to_dict(self) -> dict[str, float]:
        return {"beta": self.beta, "phi": self.phi, "iota_c": self.iota_c, "iota_f": self.iota_f}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DerivedConstants":
        required = {"beta", "iota_c", "iota_f"}
        missing = required - set(data)
        if missing:
            raise InvalidParameterError(f"missing constant(s): {sorted(missing)}")
        unknown = set(data) - (required | {"phi"})
        if unknown:
            raise InvalidParameterError(f"unknown constant(s): {sorted(unknown)}")
        return cls(beta=float(data["beta"]), phi=float(data.get("phi", 1.0)),
                   iota_c=float(data["iota_c"]), iota_f=float(data["iota_f"]))


def derive_constants(params: NetworkParams) -> DerivedConstants:
    """Evaluate ``beta``, ``phi``, ``iota_c`` and ``iota_f`` for a parameter set."""
    a, th, k = params.alpha, params.theta, params.kappa
    # N r^a / P = kappa^-a / snr_ref since snr_ref = P d^-a / N and d = kappa r
    phi = math.exp(-th * k ** (-a) / params.snr_ref)
    if phi == 0.0:
        raise InvalidParameterError(
            "noise-only success probability underflows to zero; the link is unusable "
            f"at snr_ref={params.snr_ref!r}, theta={th!r}, kappa={k!r}")
    iota_c = 1.0 / (1.0 + th * k ** (-a))
    iota_f = 1.0 / (1.0 + th * (1.0 + k * k) ** (-a / 2.0))
    beta = params.resolved_beta
    if not beta > 0.5:
        raise InfeasibleBetaError(f"derived beta = {beta:.6g} does not exceed 1/2")
    return DerivedConstants(beta=beta, phi=phi, iota_c=iota_c, iota_f=iota_f)


def interference_factor(c: DerivedConstants, receiver: Receiver, opp: Strategy) -> float:
    """Multiplicative penalty at ``receiver`` due to the other pair playing ``opp``.

    A receiving ``B_i`` has ``B_j`` as close neighbour and ``A_j`` on the
    diagonal; for a receiving ``A_i`` the roles swap.
    """
    if opp is Strategy.W:
        return 1.0
    if opp is Strategy.T_FD:
        return c.iota_c * c.iota_f
    same_role = (opp is Strategy.T_A) == (receiver is Receiver.A)
    return c.iota_c if same_role else c.iota_f


def success_probability(c: DerivedConstants, receiver: Receiver | str, own: Strategy | str,
                        opp: Strategy | str) -> float:
    """Probability that the packet addressed to ``receiver`` is decoded."""
    receiver = Receiver(receiver)
    own, opp = parse_strategy(own), parse_strategy(opp)
    addressed = own.a_transmits if receiver is Receiver.B else own.b_transmits
    if not addressed:
        raise InvalidRoleError(f"receiver {receiver} is not addressed under {own}")
    si = c.beta if own is Strategy.T_FD else 1.0
    return si * c.phi * interference_factor(c, receiver, opp)
