"""3D constitutive layer: director textures, spontaneous strains, energy densities.

Coordinates: ``x3`` is the rescaled through-thickness coordinate in
[-1/2, 1/2]; the physical coordinate is ``z3 = h * x3``. Unless noted, the
default unit system has ``mu = 1`` and ``h0 = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .errors import DegenerateActivationError, UnsupportedTextureError

INFINITE_ENERGY = math.inf
"""Value returned by the energy densities when ``det F <= 0``."""

EXPANSION_K = 1.0
"""Bound ``|C - (I - 2hB)|_F <= EXPANSION_K * (alpha0 h / h0)**2`` on the remainder."""

_I3 = np.eye(3)


def is_infinite_energy(value) -> np.ndarray:
    return np.isposinf(value)


@dataclass(frozen=True)
class MaterialParams:
    """Material constants.

    ``wvol2`` is W''_vol(1). ``c_vol`` is the coefficient of the default
    volumetric law ``c_vol (t^2 - 1 - 2 log t)`` and defaults to ``wvol2 / 4``
    so that the law and ``wvol2`` agree. A custom law ``wvol`` may be passed
    instead, in which case the caller is responsible for ``wvol2``.
    """

    mu: float = 1.0
    wvol2: float = 6.0 / 7.0
    alpha0: float = 1.0
    h0: float = 1.0
    c_vol: Optional[float] = None
    wvol: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("mu", "wvol2", "h0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.alpha0 < 0:
            raise ValueError(f"alpha0 must be nonnegative, got {self.alpha0}")
        if self.c_vol is None:
            object.__setattr__(self, "c_vol", self.wvol2 / 4.0)
        elif self.wvol is None and not math.isclose(4.0 * self.c_vol, self.wvol2, rel_tol=1e-9):
            raise ValueError("c_vol inconsistent with wvol2: the default law has W''_vol(1) = 4 c_vol")

    @classmethod
    def from_gamma(cls, gamma: float, mu: float = 1.0, alpha0: float = 1.0, h0: float = 1.0) -> "MaterialParams":
        if not 0.0 < gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
        return cls(mu=mu, wvol2=2.0 * mu * gamma / (1.0 - gamma), alpha0=alpha0, h0=h0)

    def gamma(self) -> float:
        return self.wvol2 / (2.0 * self.mu + self.wvol2)

    @property
    def activation(self) -> float:
        """alpha0 / h0, the activation per unit thickness."""
        return self.alpha0 / self.h0

    def volumetric(self, t):
        t = np.asarray(t, dtype=float)
        if self.wvol is not None:
            return self.wvol(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.c_vol * (t * t - 1.0 - 2.0 * np.log(t))

    def units(self) -> dict:
        return {"mu": "energy/volume", "wvol2": "energy/volume", "c_vol": "energy/volume",
                "alpha0": "1", "h0": "length"}


# --- textures -------------------------------------------------------------

def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Twist:
    tag = "twist"


@dataclass(frozen=True)
class SplayBend:
    tag = "splaybend"


@dataclass(frozen=True, eq=False)
class ConstantDirector:
    n: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    tag = "director"

    def __post_init__(self):
        n = _readonly(self.n)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-12:
            raise ValueError(f"director must be a unit 3-vector, got {n}")
        object.__setattr__(self, "n", n)


@dataclass(frozen=True, eq=False)
class Bilayer:
    """Piecewise-constant activation slope: ``M1`` on the top half, ``M2`` on the bottom."""

    M1: np.ndarray
    M2: np.ndarray
    tag = "bilayer"

    def __post_init__(self):
        for name in ("M1", "M2"):
            m = _readonly(getattr(self, name))
            if m.shape != (3, 3) or np.max(np.abs(m - m.T)) > 1e-12:
                raise ValueError(f"{name} must be a symmetric 3x3 matrix")
            object.__setattr__(self, name, m)


Texture = Union[Twist, SplayBend, ConstantDirector, Bilayer]


def _check_x3(x3):
    x3 = np.asarray(x3, dtype=float)
    if np.any(np.abs(x3) > 0.5 + 1e-12):
        raise ValueError("x3 must lie in [-1/2, 1/2]")
    return x3


# --- operations -----------------------------------------------------------

def step_tensor(n, a) -> np.ndarray:
    """``a^(2/3) n(x)n + a^(-1/3) (I - n(x)n)``; unimodular and positive definite."""
    n = np.asarray(n, dtype=float)
    a = np.asarray(a, dtype=float)
    if n.shape[-1] != 3 or np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-12):
        raise ValueError("n must be a unit vector")
    if np.any(a <= 0):
        raise ValueError("a must be positive")
    nn = n[..., :, None] * n[..., None, :]
    a = a[..., None, None]
    return a ** (2.0 / 3.0) * nn + a ** (-1.0 / 3.0) * (_I3 - nn)


def director(texture: Texture, x3) -> np.ndarray:
    """Rescaled director field n(x3); vectorized over x3."""
    x3 = _check_x3(x3)
    ang = np.pi / 4.0 + np.pi / 2.0 * x3
    zero = np.zeros_like(ang)
    if isinstance(texture, Twist):
        return np.stack([np.cos(ang), np.sin(ang), zero], axis=-1)
    if isinstance(texture, SplayBend):
        return np.stack([np.cos(ang), zero, np.sin(ang)], axis=-1)
    if isinstance(texture, ConstantDirector):
        return np.broadcast_to(texture.n, ang.shape + (3,)).copy()
    raise UnsupportedTextureError(f"{type(texture).__name__} has no director field")


def activation_slope(texture: Texture, params: MaterialParams, x3) -> np.ndarray:
    """Linear-order activation slope B(x3), units 1/length."""
    x3 = _check_x3(x3)
    if isinstance(texture, Bilayer):
        return np.where((x3 >= 0)[..., None, None], texture.M1, texture.M2)
    n = director(texture, x3)
    dev = _I3 / 3.0 - n[..., :, None] * n[..., None, :]
    scale = 0.5 * params.activation
    if isinstance(texture, ConstantDirector):
        scale = scale * x3[..., None, None]
    return scale * dev


@dataclass(frozen=True)
class SpontaneousStrain:
    """Exact spontaneous metric C and its slope B, with ``C = I - 2hB + R``."""

    C: np.ndarray
    B: np.ndarray
    h: float

    @property
    def remainder(self) -> np.ndarray:
        return self.C - (_I3 - 2.0 * self.h * self.B)

    @property
    def U(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.C)
        return (v * np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)

    @property
    def U_inv(self) -> np.ndarray:
        w, v = np.linalg.eigh(self.C)
        return (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)

    @property
    def lambda_min(self) -> np.ndarray:
        """Minimum eigenvalue of U (diagnostic only)."""
        return np.sqrt(np.linalg.eigvalsh(self.C)[..., 0])


def _stretch(texture: Texture, params: MaterialParams, x3, h):
    if isinstance(texture, ConstantDirector):
        return 1.0 + params.activation * h * x3
    return np.full_like(x3, 1.0 + params.activation * h)


def spontaneous_strain(texture: Texture, params: MaterialParams, x3, h: float) -> SpontaneousStrain:
    """Rescaled spontaneous strain at thickness h, vectorized over x3."""
    if not h > 0:
        raise ValueError("h must be positive")
    x3 = _check_x3(x3)
    B = activation_slope(texture, params, x3)
    if isinstance(texture, Bilayer):
        C = _I3 - 2.0 * h * B
    else:
        a = _stretch(texture, params, x3, h)
        if np.any(a <= 0):
            raise DegenerateActivationError(f"stretch parameter {np.min(a)} <= 0 at h={h}")
        C = step_tensor(director(texture, x3), a)
    if np.any(np.linalg.eigvalsh(C)[..., 0] <= 0):
        raise DegenerateActivationError(f"spontaneous strain not positive definite at h={h}")
    s = SpontaneousStrain(C=C, B=B, h=h)
    eps = params.activation * h
    if not isinstance(texture, Bilayer):
        r = np.linalg.norm(s.remainder, axis=(-2, -1))
        if np.any(r > EXPANSION_K * eps * eps + 1e-14):
            raise DegenerateActivationError(
                f"remainder {np.max(r):.3e} exceeds K h^2 bound; h={h} too large for the expansion")
    return s


def spontaneous_strain_physical(texture: Texture, params: MaterialParams, z3, h: float) -> np.ndarray:
    """Physical spontaneous metric C_h(z3) for z3 in [-h/2, h/2].

    Built from the physical director ``n_h(z3)`` and stretch directly, without
    passing through the rescaled x3 variable.
    """
    z3 = np.asarray(z3, dtype=float)
    if isinstance(texture, Bilayer):
        B = np.where((z3 >= 0)[..., None, None], texture.M1, texture.M2)
        return _I3 - 2.0 * h * B
    ang = np.pi / 4.0 + np.pi / 2.0 * z3 / h
    zero = np.zeros_like(ang)
    if isinstance(texture, Twist):
        n = np.stack([np.cos(ang), np.sin(ang), zero], axis=-1)
        a = np.full_like(z3, 1.0 + params.activation * h)
    elif isinstance(texture, SplayBend):
        n = np.stack([np.cos(ang), zero, np.sin(ang)], axis=-1)
        a = np.full_like(z3, 1.0 + params.activation * h)
    elif isinstance(texture, ConstantDirector):
        n = np.broadcast_to(texture.n, z3.shape + (3,))
        a = 1.0 + params.activation * z3
    else:
        raise UnsupportedTextureError(type(texture).__name__)
    return step_tensor(n, a)


def w0(F, params: MaterialParams):
    """Isotropic reference density; +inf where det F <= 0. Vectorized over leading axes."""
    F = np.asarray(F, dtype=float)
    det = np.linalg.det(F)
    ok = det > 0
    safe = np.where(ok, det, 1.0)
    val = 0.5 * params.mu * (np.sum(F * F, axis=(-2, -1)) - 3.0 - 2.0 * np.log(safe))
    val = val + params.volumetric(safe)
    val = np.where(ok, val, INFINITE_ENERGY)
    return val[()] if val.ndim == 0 else val


def wh(x3, F, texture: Texture, params: MaterialParams, h: float):
    """Rescaled energy density W_h(x3, F) = W0(F U^-1)."""
    s = spontaneous_strain(texture, params, x3, h)
    return w0(np.asarray(F, dtype=float) @ s.U_inv, params)


def q3(M, params: MaterialParams):
    """Second differential of W0 at the identity: 2 mu |sym M|^2 + W''_vol(1) tr^2 M."""
    M = np.asarray(M, dtype=float)
    S = 0.5 * (M + np.swapaxes(M, -1, -2))
    tr = np.trace(M, axis1=-2, axis2=-1)
    return 2.0 * params.mu * np.sum(S * S, axis=(-2, -1)) + params.wvol2 * tr * tr


# --- compatibility --------------------------------------------------------

def _d1_4th(f: np.ndarray, dz: float) -> np.ndarray:
    """Fourth-order central first derivative along axis 0; valid on [2:-2]."""
    return (f[:-4] - 8.0 * f[1:-3] + 8.0 * f[3:-1] - f[4:]) / (12.0 * dz)


def riemann_tensor(metric: Callable[[np.ndarray], np.ndarray], z_lo: float, z_hi: float,
                   n: int) -> tuple[np.ndarray, np.ndarray]:
    """Riemann tensor R_{abcd} of a metric depending on z3 only.

    ``metric`` maps an array of z3 values to (..., 3, 3). Returns the interior
    z3 nodes and the covariant Riemann tensor at those nodes. Derivatives in
    z1, z2 vanish identically and are skipped.
    """
    if n < 9:
        raise ValueError("need at least 9 grid points")
    z = np.linspace(z_lo, z_hi, n)
    dz = z[1] - z[0]
    g = metric(z)
    dg = np.zeros((n - 4, 3, 3, 3))  # dg[k, c, a, b] = d_c g_ab
    dg[:, 2] = _d1_4th(g, dz)
    gi = np.linalg.inv(g[2:-2])
    # Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij)
    t = dg.transpose(0, 2, 1, 3) + dg.transpose(0, 2, 3, 1) - dg
    Gam = 0.5 * np.einsum("nkl,nlij->nkij", gi, t)
    dGam = np.zeros((n - 8, 3, 3, 3, 3))  # dGam[k, m, r, i, j] = d_m Gamma^r_ij
    dGam[:, 2] = _d1_4th(Gam, dz)
    G = Gam[2:-2]
    # R^r_{s m v} = d_m Gamma^r_{v s} - d_v Gamma^r_{m s} + Gamma^r_{m l} Gamma^l_{v s} - Gamma^r_{v l} Gamma^l_{m s}
    Rup = (np.einsum("nmrvs->nrsmv", dGam) - np.einsum("nvrms->nrsmv", dGam)
           + np.einsum("nrml,nlvs->nrsmv", G, G) - np.einsum("nrvl,nlms->nrsmv", G, G))
    Rdown = np.einsum("nar,nrsmv->nasmv", g[4:-4], Rup)
    return z[4:-4], Rdown


def riemann_flatness_defect(texture: Texture, params: MaterialParams, h: float, grid: int = 201) -> float:
    """Max |R_abcd| of the physical spontaneous metric over the slab thickness."""
    if isinstance(texture, Bilayer):
        raise UnsupportedTextureError("bilayer metric is discontinuous; Riemann tensor undefined")
    _, R = riemann_tensor(lambda z: spontaneous_strain_physical(texture, params, z, h), -h / 2, h / 2, grid)
    return float(np.max(np.abs(R)))
