"""Narrow-ribbon limit: rotated target curvature, piecewise rod density, minimum set.

The density is a function of the flexure ``alpha = d1'.d3`` and the torsion
``beta = d2'.d3`` of an orthonormal frame along the centerline. The plane is
split into three regions D (affine branch), U (parabola in beta) and V.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainSingularityError, InvalidFrameError
from .material import MaterialParams, Twist
from .relaxation import plate_model


class RodRegion(str, enum.Enum):
    D = "D"
    U = "U"
    V = "V"


def rotation2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class RodDensity:
    """Parameters of the rod density at cut angle theta.

    ``d_branch_ratio`` is the coefficient multiplying ``a_theta**2`` inside
    the D-branch constant. ``None`` selects ``1/(1+gamma)``, the value that
    makes the density continuous; other values exist only as a test hook.
    """

    theta: float
    k: float
    gamma: float
    mu: float
    beta_T: float
    d_branch_ratio: Optional[float] = None

    @classmethod
    def from_params(cls, theta: float, params: MaterialParams, d_branch_ratio=None) -> "RodDensity":
        model = plate_model(Twist(), params)
        k = 6.0 / math.pi**2 * params.activation
        return cls(theta=theta % math.pi, k=k, gamma=params.gamma(), mu=params.mu,
                   beta_T=model.residual, d_branch_ratio=d_branch_ratio)

    @property
    def a_theta(self) -> float:
        return math.cos(2.0 * self.theta)

    @property
    def b_theta(self) -> float:
        return math.sin(2.0 * self.theta)

    @property
    def ratio(self) -> float:
        return 1.0 / (1.0 + self.gamma) if self.d_branch_ratio is None else self.d_branch_ratio

    @property
    def scale(self) -> float:
        """Energy scale mu k^2 used for relative tolerances."""
        return self.mu * self.k * self.k

    def rotated_target(self) -> np.ndarray:
        """R_theta^T A_T R_theta with A_T = k diag(-1, 1)."""
        R = rotation2(self.theta)
        return R.T @ (self.k * np.diag([-1.0, 1.0])) @ R

    def printed_target(self) -> np.ndarray:
        a, b = self.a_theta, self.b_theta
        return self.k * np.array([[-a, b], [b, a]])

    def with_theta(self, theta: float) -> "RodDensity":
        return RodDensity(theta % math.pi, self.k, self.gamma, self.mu, self.beta_T, self.d_branch_ratio)


def _region_codes(alpha, beta, density: RodDensity):
    c = density.k * density.a_theta / (1.0 + density.gamma)
    lhs = c * alpha
    in_d = lhs > beta * beta + alpha * alpha
    in_u = ~in_d & (lhs <= beta * beta - alpha * alpha)
    return in_d, in_u


def classify(alpha, beta, density: RodDensity):
    """Region of (alpha, beta): a RodRegion for scalars, an array of "D"/"U"/"V" otherwise."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    in_d, in_u = _region_codes(alpha, beta, density)
    out = np.where(in_d, "D", np.where(in_u, "U", "V"))
    return RodRegion(str(out)) if out.ndim == 0 else out


def d_branch(alpha, beta, density: RodDensity):
    a, b, k, mu = density.a_theta, density.b_theta, density.k, density.mu
    return mu / 3.0 * k * (a * alpha - b * beta) + mu / 12.0 * k * k * (2.0 - density.ratio * a * a) \
        + 0.5 * density.beta_T


def u_branch(alpha, beta, density: RodDensity):
    a, b, k, mu, g = density.a_theta, density.b_theta, density.k, density.mu, density.gamma
    beta = np.asarray(beta, dtype=float)
    val = mu / 3.0 * ((1.0 + g) * beta * beta - k * b * beta) + mu / 12.0 * k * k * (2.0 - a * a / (1.0 + g)) \
        + 0.5 * density.beta_T
    return val + 0.0 * np.asarray(alpha)


def v_branch(alpha, beta, density: RodDensity):
    a, b, k, mu, g = density.a_theta, density.b_theta, density.k, density.mu, density.gamma
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = alpha * alpha + beta * beta
        return mu / 12.0 * (1.0 + g) * s * s / (alpha * alpha) \
            + mu / 6.0 * k * (a * (alpha * alpha - beta * beta) / alpha - 2.0 * b * beta) \
            + mu / 6.0 * k * k + 0.5 * density.beta_T


def rod_density(alpha, beta, density: RodDensity):
    """Piecewise rod density, vectorized over (alpha, beta).

    Points with alpha = 0 always satisfy the U inequality, so the V-branch
    is never evaluated there; a V point at alpha = 0 signals a broken
    classification and raises.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    alpha, beta = np.broadcast_arrays(alpha, beta)
    in_d, in_u = _region_codes(alpha, beta, density)
    in_v = ~in_d & ~in_u
    if np.any(in_v & (alpha == 0.0)):
        raise DomainSingularityError("(0, beta) classified into V; the V-branch is singular at alpha = 0")
    safe_alpha = np.where(in_v, alpha, 1.0)
    val = np.where(in_d, d_branch(alpha, beta, density),
                   np.where(in_u, u_branch(alpha, beta, density), v_branch(safe_alpha, beta, density)))
    return val[()] if val.ndim == 0 else val


@dataclass(frozen=True)
class RodMinimum:
    alpha_interval: tuple[float, float]
    beta: float
    value: float

    def point(self, fraction: float) -> tuple[float, float]:
        """Point of the minimum set: 0 left endpoint, 1 right endpoint."""
        lo, hi = self.alpha_interval
        return lo + fraction * (hi - lo), self.beta


def rod_min_set(density: RodDensity) -> RodMinimum:
    k, g, th = density.k, density.gamma, density.theta
    c2, s2 = math.cos(2 * th), math.sin(2 * th)
    lo = -0.5 * k * (1.0 + c2) / (1.0 + g)
    hi = 0.5 * k * (1.0 - c2) / (1.0 + g)
    beta = 0.5 * k * s2 / (1.0 + g)
    value = density.mu / 12.0 * k * k * (1.0 + 2.0 * g) / (1.0 + g) + 0.5 * density.beta_T
    return RodMinimum((lo, hi), beta, value)


@dataclass(frozen=True)
class BruteMinimum:
    alpha_grid: np.ndarray
    argmin_alpha: np.ndarray
    argmin_beta: np.ndarray
    value: float
    step: float

    def coverage(self, interval: tuple[float, float]) -> float:
        """Fraction of ``interval`` covered by near-minimal grid columns."""
        lo, hi = interval
        length = hi - lo
        if length <= 0:
            return 1.0
        inside = self.argmin_alpha[(self.argmin_alpha >= lo - self.step) & (self.argmin_alpha <= hi + self.step)]
        return min(1.0, len(np.unique(inside)) * self.step / length)


def rod_min_brute(density: RodDensity, window: Optional[tuple[float, float, float, float]] = None,
                  grid: int = 601, tol: float = 1e-9) -> BruteMinimum:
    """Grid search of the density with per-column refinement in beta.

    Each alpha column is minimized in beta by a bounded scalar search seeded
    from its best grid cell; all columns within ``tol`` of the global minimum
    form the returned argmin set. Ties resolve to the smallest (alpha, beta).
    """
    k = density.k
    a0, a1, b0, b1 = window if window is not None else (-3 * k, 3 * k, -3 * k, 3 * k)
    al = np.linspace(a0, a1, grid)
    be = np.linspace(b0, b1, grid)
    A, Bt = np.meshgrid(al, be, indexing="ij")
    vals = rod_density(A, Bt, density)
    db = be[1] - be[0]
    col_best = np.argmin(vals, axis=1)
    col_val = vals[np.arange(grid), col_best]
    col_beta = be[col_best]
    # refine columns whose coarse value is close enough to possibly be minimal
    coarse_min = float(np.min(col_val))
    bar = coarse_min + (density.mu * (1.0 + density.gamma) * db * db + 1e-12) * 4
    cand = np.nonzero(col_val <= bar)[0]
    for i in cand:
        j = col_best[i]
        lo, hi = be[max(j - 1, 0)], be[min(j + 1, grid - 1)]
        res = minimize_scalar(lambda b: float(rod_density(al[i], b, density)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-12, "maxiter": 500})
        if res.fun < col_val[i]:
            col_val[i], col_beta[i] = res.fun, res.x
    vmin = float(np.min(col_val))
    keep = col_val <= vmin + tol
    return BruteMinimum(alpha_grid=al, argmin_alpha=al[keep], argmin_beta=col_beta[keep], value=vmin,
                        step=al[1] - al[0])


# --- frames ---------------------------------------------------------------

def _log_rotation(E: np.ndarray) -> np.ndarray:
    """Axial vectors of log(E) for rotations with angle below pi."""
    tr = np.clip((np.trace(E, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    th = np.arccos(tr)
    v = 0.5 * np.stack([E[:, 2, 1] - E[:, 1, 2], E[:, 0, 2] - E[:, 2, 0], E[:, 1, 0] - E[:, 0, 1]], axis=-1)
    sin = np.sin(th)
    scale = np.where(th < 1e-6, 1.0 + th**2 / 6.0, th / np.where(th < 1e-6, 1.0, sin))
    return scale[:, None] * v


def frame_strains(s: np.ndarray, R: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(d1'.d3, d2'.d3, d1'.d2) at every sample of a frame field.

    Uses the rotation logarithm of consecutive relative frames, averaged
    symmetrically in the interior and extrapolated linearly at the ends, so
    constant rates are recovered exactly and varying ones to second order.
    """
    if len(s) < 3:
        raise ValueError("need at least 3 samples")
    ds = np.diff(s)
    rel = np.swapaxes(R[:-1], -1, -2) @ R[1:]
    w = _log_rotation(rel) / ds[:, None]
    node = np.empty((len(s), 3))
    node[1:-1] = 0.5 * (w[:-1] + w[1:])
    node[0] = 1.5 * w[0] - 0.5 * w[1]
    node[-1] = 1.5 * w[-1] - 0.5 * w[-2]
    # Omega = skew(w): d1'.d3 = Omega31 = -w2, d2'.d3 = Omega32 = w1, d1'.d2 = Omega21 = w3
    return -node[:, 1], node[:, 0], node[:, 2]


@dataclass(frozen=True)
class FrameField:
    """Sampled orthonormal frames (d1|d2|d3) along the arc coordinate s."""

    s: np.ndarray
    R: np.ndarray  # (n, 3, 3), columns d1, d2, d3

    def __post_init__(self):
        if self.R.shape != (len(self.s), 3, 3) or len(self.s) < 3:
            raise InvalidFrameError("need at least three frames of shape (n, 3, 3)")
        err = np.max(np.abs(np.swapaxes(self.R, 1, 2) @ self.R - np.eye(3)))
        if err > 1e-10 or np.any(np.linalg.det(self.R) < 0):
            raise InvalidFrameError(f"frames are not rotations (error {err:.2e})")

    def strains(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(d1'.d3, d2'.d3, d1'.d2); see ``frame_strains``."""
        return frame_strains(self.s, self.R)


def rod_energy(frame: FrameField, density: RodDensity, tol: float = 1e-8) -> float:
    """Trapezoid quadrature of the rod density along the frame."""
    alpha, beta, inplane = frame.strains()
    if np.max(np.abs(inplane)) > tol:
        raise InvalidFrameError(f"in-plane flexure d1'.d2 = {np.max(np.abs(inplane)):.2e} exceeds {tol}")
    return float(np.trapezoid(rod_density(alpha, beta, density), frame.s))


def boundary_points(density: RodDensity, n: int, rng: np.random.Generator, which: str):
    """Random points on the D or U boundary with unit normals, shapes (n, 2)."""
    k = density.k
    c = k * density.a_theta / (1.0 + density.gamma)
    if which == "D":
        if c == 0.0:
            return np.zeros((0, 2)), np.zeros((0, 2))
        t = rng.uniform(0.0, 2.0 * np.pi, n)
        r = abs(c) / 2.0
        nrm = np.stack([np.cos(t), np.sin(t)], axis=1)
        return np.stack([c / 2.0, 0.0]) + r * nrm, nrm
    if which == "U":
        alpha = rng.uniform(-3.0 * k, 3.0 * k, 4 * n)
        disc = alpha * alpha + c * alpha
        alpha, disc = alpha[disc > 0][:n], disc[disc > 0][:n]
        beta = np.sqrt(disc) * rng.choice([-1.0, 1.0], len(alpha))
        grad = np.stack([-2.0 * alpha - c, 2.0 * beta], axis=1)
        return np.stack([alpha, beta], axis=1), grad / np.linalg.norm(grad, axis=1, keepdims=True)
    raise ValueError(which)


def continuity_jump(density: RodDensity, n: int = 10_000, offset: float = 1e-7, seed: int = 0) -> float:
    """Max |Q(p + offset n) - Q(p - offset n)| over random boundary points, relative to mu k^2."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for which in ("D", "U"):
        p, nrm = boundary_points(density, n, rng, which)
        if len(p) == 0:
            continue
        plus = p + offset * nrm
        minus = p - offset * nrm
        jump = np.abs(rod_density(plus[:, 0], plus[:, 1], density) - rod_density(minus[:, 0], minus[:, 1], density))
        worst = max(worst, float(np.max(jump)))
    return worst / density.scale
