"""Parametric environment laws, environment sampling and regime quantities.

Three families are supported:

* :class:`TwoPointKnown` -- ``p δ_{a1} + (1-p) δ_{a2}`` with known support,
  parameter ``p``;
* :class:`TwoPointFree` -- same law, parameter ``(p, a1, a2)``;
* :class:`BetaEnv` -- Beta(α, β), parameter ``(α, β)``.

The odds ratio of a left step at a site is ``rho = (1 - ω) / ω``.
"""

from __future__ import annotations

import abc
import enum
import math
from dataclasses import dataclass, field, replace
from typing import ClassVar, Mapping, Sequence

import numpy as np
from scipy.special import digamma

from .errors import ConfigError, DomainError, RegimeError

RECURRENCE_TOL = 1e-12
DEFAULT_X_MIN = -10_000
# ω is kept strictly inside (0, 1)
OMEGA_EPS = 1e-15


@dataclass(frozen=True)
class ThetaBox:
    """Axis-aligned compact parameter box."""

    names: tuple[str, ...]
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.lower) == len(self.upper)):
            raise ConfigError("box names/lower/upper lengths differ")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= hi):
                raise ConfigError(f"invalid interval for {name}: [{lo}, {hi}]")

    @classmethod
    def from_dict(cls, names: Sequence[str], bounds: Mapping[str, Sequence[float]]):
        unknown = set(bounds) - set(names)
        if unknown:
            raise ConfigError(f"unknown box coordinates: {sorted(unknown)}")
        missing = set(names) - set(bounds)
        if missing:
            raise ConfigError(f"box is missing coordinates: {sorted(missing)}")
        lower = tuple(float(bounds[k][0]) for k in names)
        upper = tuple(float(bounds[k][1]) for k in names)
        return cls(tuple(names), lower, upper)

    def to_dict(self) -> dict[str, list[float]]:
        return {k: [lo, hi] for k, lo, hi in zip(self.names, self.lower, self.upper)}

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.lower, dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.upper, dtype=float)

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, theta, tol: float = 0.0) -> bool:
        t = np.asarray(theta, dtype=float)
        return bool(np.all(t >= self.lo - tol) and np.all(t <= self.hi + tol))

    def clip(self, theta) -> np.ndarray:
        return np.clip(np.asarray(theta, dtype=float), self.lo, self.hi)


class RegimeTag(str, enum.Enum):
    TRANSIENT_RIGHT_BALLISTIC = "TransientRightBallistic"
    TRANSIENT_RIGHT_SUBBALLISTIC = "TransientRightSubballistic"
    RECURRENT = "Recurrent"
    TRANSIENT_LEFT = "TransientLeft"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    e_log_rho: float
    e_rho: float

    @property
    def ballistic(self) -> bool:
        return self.tag is RegimeTag.TRANSIENT_RIGHT_BALLISTIC

    @property
    def transient_right(self) -> bool:
        return self.tag in (RegimeTag.TRANSIENT_RIGHT_BALLISTIC,
                            RegimeTag.TRANSIENT_RIGHT_SUBBALLISTIC)


class EnvFamily(abc.ABC):
    """A parametric law ν_θ on (0, 1) together with its parameter box."""

    name: ClassVar[str]
    param_names: ClassVar[tuple[str, ...]]
    default_box: ClassVar[ThetaBox]

    box: ThetaBox

    @property
    def theta(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in self.param_names], dtype=float)

    def with_theta(self, theta) -> "EnvFamily":
        values = dict(zip(self.param_names, (float(v) for v in np.ravel(theta))))
        return replace(self, **values)

    def feasible(self, theta) -> bool:
        """Extra (non-box) constraint on θ; always true unless overridden."""
        return True

    @abc.abstractmethod
    def sample(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``size`` i.i.d. site probabilities."""

    @abc.abstractmethod
    def log_rho_mean(self) -> float: ...

    @abc.abstractmethod
    def rho_mean(self) -> float: ...

    @abc.abstractmethod
    def support_bounds(self) -> tuple[float, float]:
        """Closed interval containing the support of ν_θ."""

    @abc.abstractmethod
    def to_config(self) -> dict: ...

    def _check_in_box(self):
        if self.box.names != self.param_names:
            raise ConfigError(f"box coordinates {self.box.names} != {self.param_names}")
        if not self.box.contains(self.theta, tol=1e-12):
            raise ConfigError(f"theta {self.theta.tolist()} outside box {self.box.to_dict()}")


def _check_prob(name, v, closed=True):
    ok = (0.0 <= v <= 1.0) if closed else (0.0 < v < 1.0)
    if not ok:
        raise DomainError(f"{name}={v} outside {'[0,1]' if closed else '(0,1)'}")


def _two_point_sample(p, a1, a2, size, rng):
    u = rng.random(size)
    return np.where(u < p, a1, a2)


def _two_point_log_rho_mean(p, a1, a2):
    out = 0.0
    for w, a in ((p, a1), (1.0 - p, a2)):
        if w > 0.0:
            out += w * math.log((1.0 - a) / a)
    return out


def _two_point_rho_mean(p, a1, a2):
    return p * (1.0 - a1) / a1 + (1.0 - p) * (1.0 - a2) / a2


@dataclass(frozen=True)
class TwoPointKnown(EnvFamily):
    """Two-point law with known support ``a1 <= a2``; parameter ``p``."""

    a1: float
    a2: float
    p: float
    box: ThetaBox = field(default=None)

    name: ClassVar[str] = "two_point_known"
    param_names: ClassVar[tuple[str, ...]] = ("p",)
    default_box: ClassVar[ThetaBox] = ThetaBox(("p",), (1e-3,), (1 - 1e-3,))

    def __post_init__(self):
        _check_prob("a1", self.a1, closed=False)
        _check_prob("a2", self.a2, closed=False)
        _check_prob("p", self.p)
        if self.a1 > self.a2:
            raise DomainError("two-point support requires a1 <= a2")
        if self.box is None:
            object.__setattr__(self, "box", self.default_box)
        self._check_in_box()

    def sample(self, size, rng):
        return _two_point_sample(self.p, self.a1, self.a2, size, rng)

    def log_rho_mean(self):
        return _two_point_log_rho_mean(self.p, self.a1, self.a2)

    def rho_mean(self):
        return _two_point_rho_mean(self.p, self.a1, self.a2)

    def support_bounds(self):
        return self.a1, self.a2

    def to_config(self):
        return {"family": self.name, "a1": self.a1, "a2": self.a2, "p": self.p,
                "theta_box": self.box.to_dict()}


@dataclass(frozen=True)
class TwoPointFree(EnvFamily):
    """Two-point law with unknown support; parameter ``(p, a1, a2)``."""

    p: float
    a1: float
    a2: float
    box: ThetaBox = field(default=None)

    name: ClassVar[str] = "two_point_free"
    param_names: ClassVar[tuple[str, ...]] = ("p", "a1", "a2")
    default_box: ClassVar[ThetaBox] = ThetaBox(
        ("p", "a1", "a2"), (1e-3, 0.05, 0.55 + 1e-3), (1 - 1e-3, 0.55, 0.95))

    def __post_init__(self):
        _check_prob("a1", self.a1, closed=False)
        _check_prob("a2", self.a2, closed=False)
        _check_prob("p", self.p)
        if self.a1 > self.a2:
            raise DomainError("two-point support requires a1 <= a2")
        if self.box is None:
            object.__setattr__(self, "box", self.default_box)
        self._check_in_box()

    def feasible(self, theta):
        return bool(theta[1] < theta[2])

    def sample(self, size, rng):
        return _two_point_sample(self.p, self.a1, self.a2, size, rng)

    def log_rho_mean(self):
        return _two_point_log_rho_mean(self.p, self.a1, self.a2)

    def rho_mean(self):
        return _two_point_rho_mean(self.p, self.a1, self.a2)

    def support_bounds(self):
        return self.a1, self.a2

    def to_config(self):
        return {"family": self.name, "p": self.p, "a1": self.a1, "a2": self.a2,
                "theta_box": self.box.to_dict()}


BETA_MARGIN = 1e-3


@dataclass(frozen=True)
class BetaEnv(EnvFamily):
    """Beta(α, β) law; the box must lie in ``α >= β + 1 + 1e-3``."""

    alpha: float
    beta: float
    box: ThetaBox = field(default=None)

    name: ClassVar[str] = "beta"
    param_names: ClassVar[tuple[str, ...]] = ("alpha", "beta")
    default_box: ClassVar[ThetaBox] = ThetaBox(("alpha", "beta"), (1.2, 0.05), (12.0, 3.0))

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise DomainError(f"Beta parameters must be positive, got {self.alpha}, {self.beta}")
        if self.box is None:
            object.__setattr__(self, "box", self.default_box)
        self._check_in_box()

    def feasible(self, theta):
        return bool(theta[0] >= theta[1] + 1.0 + BETA_MARGIN)

    def sample(self, size, rng):
        # Generator.beta draws Ga/(Ga+Gb) per element for these shapes
        w = rng.beta(self.alpha, self.beta, size)
        return np.clip(w, OMEGA_EPS, 1.0 - OMEGA_EPS)

    def log_rho_mean(self):
        return float(digamma(self.beta) - digamma(self.alpha))

    def rho_mean(self):
        if self.alpha <= 1.0:
            return math.inf
        return self.beta / (self.alpha - 1.0)

    def support_bounds(self):
        return 0.0, 1.0

    def to_config(self):
        return {"family": self.name, "alpha": self.alpha, "beta": self.beta,
                "theta_box": self.box.to_dict()}


FAMILIES = {cls.name: cls for cls in (TwoPointKnown, TwoPointFree, BetaEnv)}


def family_from_config(cfg: Mapping) -> EnvFamily:
    """Build a family from a JSON-style mapping; unknown keys are rejected."""
    cfg = dict(cfg)
    try:
        cls = FAMILIES[cfg.pop("family")]
    except KeyError as exc:
        raise ConfigError(f"unknown or missing family: {exc}") from None
    box_bounds = cfg.pop("theta_box", None)
    fixed = {"two_point_known": ("a1", "a2", "p"),
             "two_point_free": ("p", "a1", "a2"),
             "beta": ("alpha", "beta")}[cls.name]
    unknown = set(cfg) - set(fixed)
    if unknown:
        raise ConfigError(f"unknown family fields: {sorted(unknown)}")
    missing = set(fixed) - set(cfg)
    if missing:
        raise ConfigError(f"missing family fields: {sorted(missing)}")
    kwargs = {k: float(cfg[k]) for k in fixed}
    if box_bounds is not None:
        merged = cls.default_box.to_dict()
        merged.update(box_bounds)
        kwargs["box"] = ThetaBox.from_dict(cls.param_names, merged)
    return cls(**kwargs)


def log_rho_mean(family: EnvFamily) -> float:
    """E[log ρ_0] in closed form."""
    return family.log_rho_mean()


def rho_mean(family: EnvFamily) -> float:
    """E[ρ_0]; ``inf`` when the moment does not exist."""
    return family.rho_mean()


def classify_regime(family: EnvFamily, tol: float = RECURRENCE_TOL) -> Regime:
    elr = family.log_rho_mean()
    er = family.rho_mean()
    if abs(elr) < tol:
        tag = RegimeTag.RECURRENT
    elif elr > 0:
        tag = RegimeTag.TRANSIENT_LEFT
    elif er < 1.0:
        tag = RegimeTag.TRANSIENT_RIGHT_BALLISTIC
    else:
        tag = RegimeTag.TRANSIENT_RIGHT_SUBBALLISTIC
    return Regime(tag, elr, er)


def hitting_time_limit(family: EnvFamily) -> float:
    """Almost-sure limit of T_n / n in the ballistic regime."""
    regime = classify_regime(family)
    if not regime.ballistic:
        raise RegimeError(f"hitting-time limit needs a ballistic family, got {regime.tag.value}")
    er = regime.e_rho
    return (1.0 + er) / (1.0 - er)


@dataclass(frozen=True)
class Environment:
    """Site probabilities ω_x for x in [x_min, x_max]."""

    x_min: int
    omega: np.ndarray

    def __post_init__(self):
        om = np.ascontiguousarray(self.omega, dtype=np.float64)
        if om.ndim != 1 or om.size == 0:
            raise ValueError("omega must be a non-empty vector")
        if not np.all((om > 0.0) & (om < 1.0)):
            raise DomainError("every ω_x must lie strictly inside (0, 1)")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def x_max(self) -> int:
        return self.x_min + self.omega.size - 1

    @property
    def offset(self) -> int:
        return -self.x_min

    def at(self, x: int) -> float:
        return float(self.omega[x - self.x_min])

    @property
    def rho(self) -> np.ndarray:
        return (1.0 - self.omega) / self.omega

    @classmethod
    def constant(cls, value: float, x_min: int, x_max: int) -> "Environment":
        v = min(max(value, OMEGA_EPS), 1.0 - OMEGA_EPS)
        return cls(x_min, np.full(x_max - x_min + 1, v))


def sample_env(family: EnvFamily, sites: tuple[int, int], rng: np.random.Generator) -> Environment:
    """Draw ω_x i.i.d. from ν_θ for x_min <= x <= x_max, in increasing site order."""
    x_min, x_max = int(sites[0]), int(sites[1])
    if x_max < x_min:
        raise ValueError(f"empty site interval [{x_min}, {x_max}]")
    return Environment(x_min, family.sample(x_max - x_min + 1, rng))


def default_sites(n: int) -> tuple[int, int]:
    return DEFAULT_X_MIN, int(n)
