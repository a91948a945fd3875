"""Scenario configuration: geometry, slot structure, channel kinds, jammer
strategy, and the constructive recipes that pick a covert transmit power.

All values are per-complex-sample energies/variances in consistent (arbitrary)
units.  A scenario is an immutable value object; derived quantities such as
the jam power density at the warden (``zeta``) and the transmitter's received
power at the warden (``sigma_a2``) are recomputed from the primary fields so
they can never drift out of sync.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional

AWGN = "awgn"
FADING = "fading"
_CHANNEL_KINDS = (AWGN, FADING)

UNIFORM_PER_SLOT = "uniform_per_slot"
CONSTANT_POWER = "constant_power"
_JAMMER_KINDS = (UNIFORM_PER_SLOT, CONSTANT_POWER)

LINKS = ("aw", "ab", "jw", "jb")


class ConfigError(ValueError):
    """Raised when a scenario or config file violates an invariant."""


def path_gain(d, alpha):
    """Power gain d**(-alpha) of a distance-d link.

    Amplitude gain is the square root of this value.
    """
    if d <= 0:
        raise ConfigError(f"distance must be positive, got {d}")
    if alpha < 2:
        raise ConfigError(f"path-loss exponent must be >= 2, got {alpha}")
    return float(d) ** (-float(alpha))


@dataclass(frozen=True)
class Geometry:
    """Node distances and the common path-loss exponent."""

    d_aw: float = 1.0
    d_ab: float = 1.0
    d_jw: float = 1.0
    d_jb: float = 1.0
    alpha: float = 2.0

    def __post_init__(self):
        for name in ("d_aw", "d_ab", "d_jw", "d_jb"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.alpha < 2:
            raise ConfigError("alpha must be >= 2")


@dataclass(frozen=True)
class SlotStructure:
    """Samples per slot, fading blocks per slot, slot count, transmit prior."""

    n: int = 1000
    M: int = 1
    T: int = 2
    p: float = 0.5

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError("n must be a positive integer")
        if self.M < 1 or self.n % self.M != 0:
            raise ConfigError(f"M={self.M} must divide n={self.n}")
        if self.T < 2 or self.T % 2 != 0:
            raise ConfigError("T must be a positive even integer >= 2")
        if not 0.0 < self.p < 1.0:
            raise ConfigError("p must lie strictly inside (0, 1)")


@dataclass(frozen=True)
class Channels:
    """Channel kind per link: transmitter->warden/receiver, jammer->warden/receiver."""

    aw: str = AWGN
    ab: str = AWGN
    jw: str = AWGN
    jb: str = AWGN

    def __post_init__(self):
        for link in LINKS:
            kind = getattr(self, link)
            if kind not in _CHANNEL_KINDS:
                raise ConfigError(f"channel kind for {link} must be one of {_CHANNEL_KINDS}")

    def kind(self, link):
        return getattr(self, link)


@dataclass(frozen=True)
class JammerStrategy:
    """Either a fresh Uniform[0, power] variance per slot, or a constant variance.

    Zero power is permitted so jammer-free baselines can be synthesized; the
    covert constructions and detector configs require positive power and
    check it where they need it.
    """

    kind: str = UNIFORM_PER_SLOT
    power: float = 1.0

    def __post_init__(self):
        if self.kind not in _JAMMER_KINDS:
            raise ConfigError(f"jammer kind must be one of {_JAMMER_KINDS}")
        if self.power < 0:
            raise ConfigError("jammer power must be nonnegative")


@dataclass(frozen=True)
class NoiseLevels:
    sigma_w2: float = 1.0
    sigma_b2: float = 1.0

    def __post_init__(self):
        if self.sigma_w2 <= 0 or self.sigma_b2 <= 0:
            raise ConfigError("noise variances must be positive")


@dataclass(frozen=True)
class Scenario:
    """Complete experiment description; immutable and safe to share."""

    geometry: Geometry = Geometry()
    slots: SlotStructure = SlotStructure()
    channels: Channels = Channels()
    jammer: JammerStrategy = JammerStrategy()
    noise: NoiseLevels = NoiseLevels()
    P_f: float = 0.0

    def __post_init__(self):
        if self.P_f < 0:
            raise ConfigError("P_f must be nonnegative")

    @property
    def zeta(self):
        """Jam power density at the warden: jam power / d_jw**alpha."""
        return self.jammer.power * path_gain(self.geometry.d_jw, self.geometry.alpha)

    @property
    def sigma_a2(self):
        """Transmit power received at the warden: P_f / d_aw**alpha."""
        return self.P_f * path_gain(self.geometry.d_aw, self.geometry.alpha)

    def to_dict(self):
        g, s, c, j, nz = self.geometry, self.slots, self.channels, self.jammer, self.noise
        return {
            "d_aw": g.d_aw, "d_ab": g.d_ab, "d_jw": g.d_jw, "d_jb": g.d_jb,
            "alpha": g.alpha,
            "n": s.n, "M": s.M, "T": s.T, "p": s.p,
            "sigma_w2": nz.sigma_w2, "sigma_b2": nz.sigma_b2,
            "jammer": {"kind": j.kind, "power": j.power},
            "channels": {"aw": c.aw, "ab": c.ab, "jw": c.jw, "jb": c.jb},
            "P_f": self.P_f,
        }

    @staticmethod
    def from_dict(data):
        try:
            geometry = Geometry(
                d_aw=float(data["d_aw"]), d_ab=float(data["d_ab"]),
                d_jw=float(data["d_jw"]), d_jb=float(data["d_jb"]),
                alpha=float(data["alpha"]),
            )
            slots = SlotStructure(
                n=int(data["n"]), M=int(data["M"]), T=int(data["T"]), p=float(data["p"]),
            )
            noise = NoiseLevels(sigma_w2=float(data["sigma_w2"]), sigma_b2=float(data["sigma_b2"]))
            jam = data["jammer"]
            jammer = JammerStrategy(kind=str(jam["kind"]), power=float(jam["power"]))
            ch = data["channels"]
            channels = Channels(aw=str(ch["aw"]), ab=str(ch["ab"]), jw=str(ch["jw"]), jb=str(ch["jb"]))
            return Scenario(
                geometry=geometry, slots=slots, channels=channels,
                jammer=jammer, noise=noise, P_f=float(data["P_f"]),
            )
        except KeyError as exc:
            raise ConfigError(f"missing scenario field: {exc.args[0]}") from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed scenario value: {exc}") from exc

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent)

    @staticmethod
    def from_json(text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("scenario config must be a JSON object")
        return Scenario.from_dict(data)


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return Scenario.from_json(fh.read())


def save_scenario(scenario, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario.to_json() + "\n")


@dataclass(frozen=True)
class CovertParams:
    """Output of a covert-power selection recipe.

    ``delta`` is the concentration half-width used in the covertness argument,
    ``sigma_a2`` the received-power budget at the warden, ``P_f`` the transmit
    power realizing that budget, and ``c`` the jam-power tail cutoff (only
    meaningful when the jam power at the warden is exponentially distributed).
    """

    epsilon: float
    delta: float
    sigma_a2: float
    P_f: float
    c: Optional[float] = None

    def __post_init__(self):
        if self.epsilon > 0 and self.delta <= 0:
            raise ConfigError("delta must be positive for a positive covertness target")


def _check_recipe_args(epsilon, zeta, d_aw, alpha):
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon must lie in (0, 1), got {epsilon}")
    if zeta <= 0:
        raise ConfigError("zeta must be positive")
    if d_aw <= 0:
        raise ConfigError("d_aw must be positive")
    if alpha < 2:
        raise ConfigError("alpha must be >= 2")


def select_covert_params_awgn(epsilon, zeta, d_aw, alpha):
    """Covert power selection for the uniform-jam-power construction.

    Picks delta = zeta*epsilon/8 and sigma_a2 = zeta*epsilon/4, so the
    probability that the detection threshold lands in the ambiguous power
    band is at most (sigma_a2 + 2*delta)/zeta = epsilon/2.
    """
    _check_recipe_args(epsilon, zeta, d_aw, alpha)
    sigma_a2 = zeta * epsilon / 4.0
    return CovertParams(
        epsilon=epsilon,
        delta=zeta * epsilon / 8.0,
        sigma_a2=sigma_a2,
        P_f=sigma_a2 * d_aw ** alpha,
    )


def select_covert_params_fading(epsilon, zeta, d_aw, alpha):
    """Covert power selection for the constant-power jammer over a faded link.

    The jam power at the warden is exponential with mean zeta, so the recipe
    halves the budgets (delta = zeta*epsilon/16, sigma_a2 = zeta*epsilon/8)
    and adds a tail cutoff c with P(jam power > c) = epsilon/4, i.e.
    c = zeta*ln(4/epsilon).
    """
    _check_recipe_args(epsilon, zeta, d_aw, alpha)
    sigma_a2 = zeta * epsilon / 8.0
    return CovertParams(
        epsilon=epsilon,
        delta=zeta * epsilon / 16.0,
        sigma_a2=sigma_a2,
        P_f=sigma_a2 * d_aw ** alpha,
        c=zeta * math.log(4.0 / epsilon),
    )


def select_covert_params(scenario, epsilon):
    """Dispatch on the scenario's jammer strategy and warden-side channels."""
    g = scenario.geometry
    if scenario.jammer.kind == UNIFORM_PER_SLOT and scenario.channels.jw == AWGN:
        return select_covert_params_awgn(epsilon, scenario.zeta, g.d_aw, g.alpha)
    return select_covert_params_fading(epsilon, scenario.zeta, g.d_aw, g.alpha)


def with_updates(scenario, n=None, M=None, P_f=None):
    """Return a copy of the scenario with slot size / block count / power replaced."""
    slots = scenario.slots
    if n is not None or M is not None:
        slots = SlotStructure(
            n=slots.n if n is None else int(n),
            M=slots.M if M is None else int(M),
            T=slots.T, p=slots.p,
        )
    return replace(
        scenario,
        slots=slots,
        P_f=scenario.P_f if P_f is None else float(P_f),
    )
