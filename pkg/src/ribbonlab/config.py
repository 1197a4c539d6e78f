"""Run configuration: JSON documents validated into nested dataclasses.

Symmetric 3x3 bilayer slopes are packed as six components in the order
(11, 22, 33, 23, 13, 12). Angles are radians, or degrees with a ``deg:``
prefix (``"deg:45"``).
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .material import Bilayer, ConstantDirector, MaterialParams, SplayBend, Twist

TEXTURES = ("twist", "splaybend", "director", "bilayer")
DEFAULT_H = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)


def parse_angle(value) -> float:
    if isinstance(value, str):
        text = value.strip()
        try:
            if text.startswith("deg:"):
                return math.radians(float(text[4:]))
            return float(text)
        except ValueError:
            raise ConfigError(f"cannot parse angle {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"angle must be a number or string, got {value!r}")
    return float(value)


def unpack_sym(pack) -> np.ndarray:
    v = [float(x) for x in pack]
    if len(v) != 6:
        raise ConfigError("symmetric packs need six components (11, 22, 33, 23, 13, 12)")
    a11, a22, a33, a23, a13, a12 = v
    return np.array([[a11, a12, a13], [a12, a22, a23], [a13, a23, a33]])


def pack_sym(M) -> list:
    M = np.asarray(M, dtype=float)
    return [M[0, 0], M[1, 1], M[2, 2], M[1, 2], M[0, 2], M[0, 1]]


@dataclass
class MaterialConfig:
    mu: float = 1.0
    gamma: Optional[float] = 0.3
    wvol2: Optional[float] = None
    alpha0: float = 1.0
    h0: float = 1.0

    def validate(self):
        if not self.mu > 0:
            raise ConfigError("mu must be positive")
        if self.wvol2 is not None and self.gamma is not None:
            g = self.wvol2 / (2 * self.mu + self.wvol2)
            if abs(g - self.gamma) > 1e-12:
                raise ConfigError("gamma and wvol2 disagree; give one of them")
        if self.wvol2 is None:
            if self.gamma is None or not 0.0 < self.gamma < 1.0:
                raise ConfigError("gamma must lie in (0, 1)")
        elif not self.wvol2 > 0:
            raise ConfigError("wvol2 must be positive")
        if self.alpha0 < 0 or not self.h0 > 0:
            raise ConfigError("need alpha0 >= 0 and h0 > 0")

    def params(self) -> MaterialParams:
        if self.wvol2 is not None:
            return MaterialParams(mu=self.mu, wvol2=self.wvol2, alpha0=self.alpha0, h0=self.h0)
        return MaterialParams.from_gamma(self.gamma, mu=self.mu, alpha0=self.alpha0, h0=self.h0)


@dataclass
class TextureConfig:
    kind: str = "twist"
    axis: list = field(default_factory=lambda: [0.0, 0.0, 1.0])
    M1: list = field(default_factory=lambda: [0.1, 0.0, 0.0, 0.0, 0.0, 0.0])
    M2: list = field(default_factory=lambda: [0.0] * 6)

    def validate(self):
        if self.kind not in TEXTURES:
            raise ConfigError(f"texture must be one of {TEXTURES}, got {self.kind!r}")
        self.build()

    def build(self):
        try:
            if self.kind == "twist":
                return Twist()
            if self.kind == "splaybend":
                return SplayBend()
            if self.kind == "director":
                return ConstantDirector(np.asarray(self.axis, dtype=float))
            return Bilayer(unpack_sym(self.M1), unpack_sym(self.M2))
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid {self.kind} texture: {exc}") from None


@dataclass
class DomainConfig:
    length: float = 2.0
    width: float = 0.5
    theta: float = 0.0

    def validate(self):
        self.theta = parse_angle(self.theta)
        if not self.length > self.width > 0:
            raise ConfigError("need length > width > 0")


@dataclass
class NumericsConfig:
    quad: int = 8
    thickness_quad: int = 16
    relax_quad: int = 24
    n_phi: int = 2000
    grid: str = "-3k:3k:601"
    h: list = field(default_factory=lambda: list(DEFAULT_H))
    n_samples: int = 401
    n_across: int = 9
    slope_threshold: float = 0.8

    def validate(self):
        for name in ("quad", "thickness_quad", "relax_quad", "n_phi", "n_samples", "n_across"):
            if int(getattr(self, name)) < 2:
                raise ConfigError(f"{name} must be at least 2")
        self.h = [float(x) for x in self.h]
        if not self.h or any(x <= 0 for x in self.h):
            raise ConfigError("h values must be positive")
        if any(b >= a for a, b in zip(self.h, self.h[1:])):
            raise ConfigError("h values must be strictly decreasing")


@dataclass
class RunConfig:
    material: MaterialConfig = field(default_factory=MaterialConfig)
    texture: TextureConfig = field(default_factory=TextureConfig)
    domain: DomainConfig = field(default_factory=DomainConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    out: Optional[str] = None

    def validate(self) -> "RunConfig":
        self.material.validate()
        self.texture.validate()
        self.domain.validate()
        self.numerics.validate()
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        _reject_unknown(data, cls, "config")
        kw = {}
        for f in dataclasses.fields(cls):
            if f.name not in data:
                continue
            value = data[f.name]
            sub = _SECTIONS.get(f.name)
            if sub is not None:
                if not isinstance(value, dict):
                    raise ConfigError(f"section {f.name!r} must be an object")
                _reject_unknown(value, sub, f.name)
                value = dict(value)
                if sub is MaterialConfig and "wvol2" in value and "gamma" not in value:
                    value["gamma"] = None
                value = sub(**value)
            kw[f.name] = value
        return cls(**kw).validate()

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(data)


_SECTIONS = {"material": MaterialConfig, "texture": TextureConfig, "domain": DomainConfig,
             "numerics": NumericsConfig}


def _reject_unknown(data: dict, cls, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def parse_grid(spec: str, k: float) -> list[np.ndarray]:
    """``MIN:MAX:N[,MIN:MAX:N]``; a trailing ``k`` on MIN/MAX multiplies by k."""

    def number(tok: str) -> float:
        tok = tok.strip()
        try:
            if tok.endswith("k"):
                head = tok[:-1]
                return k * (float(head) if head not in ("", "+", "-") else float(head + "1"))
            return float(tok)
        except ValueError:
            raise ConfigError(f"bad grid bound {tok!r}") from None

    axes = []
    for part in spec.split(","):
        bits = part.split(":")
        if len(bits) != 3:
            raise ConfigError(f"grid axis {part!r} must read MIN:MAX:N")
        lo, hi = number(bits[0]), number(bits[1])
        try:
            n = int(bits[2])
        except ValueError:
            raise ConfigError(f"bad grid count {bits[2]!r}") from None
        if n < 2 or not hi > lo:
            raise ConfigError(f"grid axis {part!r} needs MAX > MIN and N >= 2")
        axes.append(np.linspace(lo, hi, n))
    if len(axes) == 1:
        axes.append(axes[0])
    if len(axes) != 2:
        raise ConfigError("grid takes one or two axes")
    return axes
