"""2D limit functional on cylindrical isometries and the 3D energy-scaling harness.

Sign convention: the second fundamental form is ``A = (grad y)^T grad nu``
with ``nu = d1 y x d2 y``. A cylinder bent with curvature ``kappa`` along
the in-plane direction ``e(phi)`` has ``A = kappa e(phi) (x) e(phi)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from . import material
from .errors import AnsatzDegenerateError, InternalConsistencyError, InvalidConfigurationError, QuadratureError
from .material import Bilayer, MaterialParams, Texture
from .relaxation import PlateModel, Quadratic2, gauss_nodes, plate_model, q2, qbar2, sym

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PlateDomain:
    """Rectangle of length ``length`` and width ``width`` cut at angle ``theta``."""

    length: float = 2.0
    width: float = 0.5
    theta: float = 0.0

    def __post_init__(self):
        if not self.length > self.width > 0:
            raise ValueError(f"need length > width > 0, got {self.length}, {self.width}")

    @property
    def area(self) -> float:
        return self.length * self.width

    def frame(self) -> np.ndarray:
        """Columns f1^theta, f2^theta."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def to_plane(self, z1, z2) -> np.ndarray:
        z = np.stack([np.asarray(z1, dtype=float), np.asarray(z2, dtype=float)], axis=-1)
        return z @ self.frame().T

    def quadrature(self, n: int = 8) -> tuple[np.ndarray, np.ndarray]:
        """Tensor Gauss nodes (N, 2) in plane coordinates and weights summing to the area."""
        x, w = np.polynomial.legendre.leggauss(n)
        z1 = 0.5 * self.length * x
        z2 = 0.5 * self.width * x
        Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
        W = np.outer(0.5 * self.length * w, 0.5 * self.width * w)
        return self.to_plane(Z1.ravel(), Z2.ravel()), W.ravel()


@dataclass(frozen=True, eq=False)
class CylindricalIsometry:
    """Sheet rolled along ``e(phi)`` with curvature profile ``kappa(s)``, s = x'.e(phi).

    ``rotation`` and ``translation`` superpose a rigid motion.
    """

    phi: float
    kappa: Union[float, Callable[[float], float]]
    domain: PlateDomain = field(default_factory=PlateDomain)
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def constant(self) -> bool:
        return not callable(self.kappa)

    def directions(self):
        c, s = math.cos(self.phi), math.sin(self.phi)
        return np.array([c, s]), np.array([-s, c]), np.array([c, s, 0.0]), np.array([-s, c, 0.0])

    @cached_property
    def _profile(self):
        # psi' = kappa, c' = (cos psi, -sin psi) in the (E, e3) plane
        half = 0.5 * math.hypot(self.domain.length, self.domain.width) * 1.5 + 1.0

        def rhs(s, y):
            return [self.kappa(s), math.cos(y[0]), -math.sin(y[0])]

        fwd = solve_ivp(rhs, (0.0, half), [0.0, 0.0, 0.0], dense_output=True, rtol=1e-12, atol=1e-14)
        bwd = solve_ivp(rhs, (0.0, -half), [0.0, 0.0, 0.0], dense_output=True, rtol=1e-12, atol=1e-14)
        return fwd.sol, bwd.sol

    def _psi_curve(self, s: np.ndarray):
        if self.constant:
            k = float(self.kappa)
            psi = k * s
            if k == 0.0:
                return psi, s, np.zeros_like(s), np.zeros_like(s)
            return psi, np.sin(psi) / k, -(1.0 - np.cos(psi)) / k, np.full_like(s, k)
        fwd, bwd = self._profile
        out = np.where(s[None, :] >= 0, fwd(np.maximum(s, 0.0)), bwd(np.minimum(s, 0.0)))
        kap = np.array([self.kappa(v) for v in s])
        return out[0], out[1], out[2], kap

    def local(self, x) -> dict:
        """Map, gradient, normal and normal gradient at plane points x (N, 2)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        e, ep, E, Ep = self.directions()
        s = x @ e
        u = x @ ep
        psi, cx, cz, kap = self._psi_curve(s)
        T = np.cos(psi)[:, None] * E - np.sin(psi)[:, None] * _E3
        nu = np.sin(psi)[:, None] * E + np.cos(psi)[:, None] * _E3
        y = cx[:, None] * E + cz[:, None] * _E3 + u[:, None] * Ep
        grad = T[:, :, None] * e[None, None, :] + Ep[None, :, None] * ep[None, None, :]
        dnu = (kap[:, None] * T)[:, :, None] * e[None, None, :]
        Q = np.asarray(self.rotation, dtype=float)
        return {
            "y": y @ Q.T + self.translation,
            "grad": np.einsum("ij,njk->nik", Q, grad),
            "normal": nu @ Q.T,
            "grad_normal": np.einsum("ij,njk->nik", Q, dnu),
            "s": s,
            "kappa": kap,
        }

    def second_fundamental_form(self, x) -> np.ndarray:
        loc = self.local(x)
        return np.einsum("nki,nkj->nij", loc["grad"], loc["grad_normal"])

    def isometry_defect(self, x) -> float:
        g = self.local(x)["grad"]
        return float(np.max(np.abs(np.einsum("nki,nkj->nij", g, g) - np.eye(2))))

    def moved(self, rotation, translation) -> "CylindricalIsometry":
        """Same immersion followed by a rigid motion."""
        Q = np.asarray(rotation, dtype=float) @ self.rotation
        c = np.asarray(rotation, dtype=float) @ self.translation + np.asarray(translation, dtype=float)
        return CylindricalIsometry(self.phi, self.kappa, self.domain, Q, c)


def plate_energy(y: CylindricalIsometry, model: PlateModel, form: Quadratic2, n_quad: int = 8) -> float:
    """(1/2) integral of the relaxed density of A_y over the sheet."""
    x, w = y.domain.quadrature(n_quad)
    defect = y.isometry_defect(x)
    if defect > 1e-8:
        raise InvalidConfigurationError(f"not an isometric immersion (defect {defect:.2e})")
    A = y.second_fundamental_form(x)
    return 0.5 * float(np.dot(w, qbar2(A, model, form)))


@dataclass(frozen=True)
class CylinderMinimum:
    minimizers: list  # [(phi, kappa)]
    energy_per_area: float
    degenerate: bool
    phi_interval: Optional[tuple[float, float]] = None
    total_energy: Optional[float] = None


def cylinder_density(phi, model: PlateModel, form: Quadratic2):
    """Optimal curvature and energy per area for a cylinder along e(phi)."""
    phi = np.asarray(phi, dtype=float)
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    P = e[..., :, None] * e[..., None, :]
    kappa = form.bilinear(P, model.target_curvature) / q2(P, form)
    A = kappa[..., None, None] * P
    return kappa, 0.5 * qbar2(A, model, form)


def minimize_over_cylinders(model: PlateModel, form: Quadratic2, domain: Optional[PlateDomain] = None,
                            n_phi: int = 2000, tie_rtol: float = 1e-9) -> CylinderMinimum:
    """Minimize the plate density over constant cylindrical curvatures.

    The curvature is optimal in closed form for each direction; directions
    are scanned on [0, pi) and refined locally. Minimizers whose energy
    lies within ``tie_rtol`` of the energy scale are all returned. With a
    ``domain`` the total energy of the sheet is reported as well.
    """
    result = _scan_cylinders(model, form, n_phi, tie_rtol)
    if domain is None:
        return result
    return dataclasses.replace(result, total_energy=result.energy_per_area * domain.area)


def _scan_cylinders(model: PlateModel, form: Quadratic2, n_phi: int, tie_rtol: float) -> CylinderMinimum:
    phis = np.arange(n_phi) * (math.pi / n_phi)
    _, vals = cylinder_density(phis, model, form)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    tie = tie_rtol * scale
    if float(np.max(vals) - np.min(vals)) <= tie:
        kappa, e = cylinder_density(0.0, model, form)
        return CylinderMinimum([(0.0, float(kappa))], float(e), True, (0.0, math.pi))

    def f(p):
        return float(cylinder_density(p, model, form)[1])

    step = math.pi / n_phi
    local = [i for i in range(n_phi) if vals[i] <= vals[i - 1] and vals[i] <= vals[(i + 1) % n_phi]]
    cands = []
    for i in local:
        res = minimize_scalar(f, bounds=(phis[i] - step, phis[i] + step), method="bounded",
                              options={"xatol": 1e-12})
        # keep the scan node when refinement only moves it by roundoff
        moved = abs(res.x - phis[i]) > 1e-9 and res.fun < vals[i]
        p, v = (res.x, res.fun) if moved else (phis[i], vals[i])
        cands.append((float(p) % math.pi, float(v)))
    best = min(v for _, v in cands)
    out: list = []
    for p, v in sorted(cands):
        if v > best + tie:
            continue
        if any(min(abs(p - q), math.pi - abs(p - q)) < 1e-6 for q, _ in out):
            continue
        p = float(p)
        if p < 1e-9 or math.pi - p < 1e-9:
            p = 0.0
        kappa, _ = cylinder_density(p, model, form)
        out.append((p, float(kappa)))
    out.sort()
    return CylinderMinimum(out, best, False)


# --- 3D harness -----------------------------------------------------------

@dataclass(frozen=True)
class AnsatzDeformation:
    """Upper-bound ansatz ``y + h x3 nu + h^2 (corrector)`` around a cylinder.

    corrector_order 0: Kirchhoff. 1: adds the normal stretch that relaxes
    pure bending (affine in x3). 2: adds the membrane strain D and the
    thickness profile realizing the pointwise relaxed strain.
    """

    base: CylindricalIsometry
    corrector_order: int
    h: float

    def __post_init__(self):
        if self.corrector_order not in (0, 1, 2):
            raise ValueError("corrector_order must be 0, 1 or 2")
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.corrector_order > 0 and not self.base.constant:
            raise ValueError("correctors are implemented for constant curvature only")


def _third_column(ansatz: AnsatzDeformation, texture: Texture, params: MaterialParams,
                  A: np.ndarray, D: np.ndarray, x3: np.ndarray) -> np.ndarray:
    """Optimal third-column strain (b1, b2, a) at thickness points x3."""
    g = params.gamma()
    out = np.zeros(x3.shape + (3,))
    if ansatz.corrector_order == 1:
        out[..., 2] = -g * np.trace(A) * x3
    elif ansatz.corrector_order == 2:
        B = material.activation_slope(texture, params, x3)
        plane = x3[..., None, None] * A + D + B[..., :2, :2]
        out[..., :2] = -2.0 * B[..., :2, 2]
        out[..., 2] = -g * np.trace(plane, axis1=-2, axis2=-1) - B[..., 2, 2]
    return out


def _corrector_integral(ansatz, texture, params, A, D, x3, n: int = 16) -> np.ndarray:
    """q(x3) = integral_0^x3 of the third-column strain, by Gauss on [0, x3]."""
    xi, w = np.polynomial.legendre.leggauss(n)
    pts = 0.5 * x3[:, None] * (1.0 + xi[None, :])
    c = _third_column(ansatz, texture, params, A, D, pts)
    return 0.5 * x3[:, None] * np.einsum("k,mkc->mc", w, c)


def membrane_correction(texture: Texture, params: MaterialParams) -> np.ndarray:
    """Optimal constant membrane strain D = -mean of the in-plane activation slope."""
    t, w = gauss_nodes(24, isinstance(texture, Bilayer))
    Bc = material.activation_slope(texture, params, t)[:, :2, :2]
    return -sym(np.einsum("k,kij->ij", w, Bc))


def ansatz_gradient(ansatz: AnsatzDeformation, texture: Texture, params: MaterialParams,
                    x: np.ndarray, x3: np.ndarray) -> np.ndarray:
    """Rescaled gradient (d1 y | d2 y | d3 y / h) at all pairs of plane nodes x and thickness nodes x3."""
    h = ansatz.h
    base = ansatz.base
    D = membrane_correction(texture, params) if ansatz.corrector_order == 2 else np.zeros((2, 2))
    xi = x + h * x @ D.T
    loc = base.local(xi)
    P, nu = loc["grad"], loc["normal"]
    A = np.einsum("nki,nkj->nij", P, loc["grad_normal"])
    if ansatz.corrector_order > 0:
        A0 = A[0]
        c = _third_column(ansatz, texture, params, A0, D, x3)
        q = _corrector_integral(ansatz, texture, params, A0, D, x3)
    else:
        c = np.zeros((len(x3), 3))
        q = np.zeros((len(x3), 3))
    PA = np.einsum("nij,njk->nik", P, A)
    Aq = np.einsum("nij,mj->nmi", A, q[:, :2])
    inplane = (P[:, None] + h * x3[None, :, None, None] * PA[:, None]
               + h * h * (-nu[:, None, :, None] * Aq[:, :, None, :] + q[None, :, 2, None, None] * PA[:, None]))
    inplane = inplane @ (np.eye(2) + h * D)
    third = nu[:, None, :] + h * (np.einsum("nij,mj->nmi", P, c[:, :2]) + c[None, :, 2, None] * nu[:, None, :])
    return np.concatenate([inplane, third[..., None]], axis=-1)


def _nodes(ansatz: AnsatzDeformation, texture: Texture, quad: Sequence[int]):
    n_plane, n_thick = quad[0], quad[-1]
    x, wx = ansatz.base.domain.quadrature(n_plane)
    x3, w3 = gauss_nodes(n_thick, isinstance(texture, Bilayer))
    return x, wx, x3, w3


def _rescaled_energy(ansatz, texture, params, quad) -> float:
    x, wx, x3, w3 = _nodes(ansatz, texture, quad)
    F = ansatz_gradient(ansatz, texture, params, x, x3)
    det = np.linalg.det(F)
    if np.any(det <= 0):
        raise AnsatzDegenerateError(f"det grad_h y <= 0 at {int(np.sum(det <= 0))} nodes (h={ansatz.h})")
    s = material.spontaneous_strain(texture, params, x3, ansatz.h)
    W = material.w0(F @ s.U_inv[None], params)
    return float(np.einsum("n,m,nm->", wx, w3, W))


def rescaled_3d_energy(ansatz: AnsatzDeformation, texture: Texture, params: MaterialParams,
                       quad: Sequence[int] = (8, 8, 16), check_physical: bool = False,
                       check_convergence: bool = False, rtol: float = 1e-6) -> float:
    """F_h(y) = integral of W_h(x3, grad_h y) over the rescaled slab.

    ``check_physical`` re-evaluates the energy on the physical slab and
    requires it to equal h * F_h; ``check_convergence`` repeats the
    quadrature with doubled orders.
    """
    energy = _rescaled_energy(ansatz, texture, params, quad)
    scale = max(abs(energy), ansatz.h**2 * params.mu * params.activation**2, 1e-300)
    if check_physical:
        phys = physical_3d_energy(ansatz, texture, params, quad)
        # W0 loses ~1e-16 absolute to cancellation, so allow a roundoff floor per unit area
        floor = 1e-13 * params.mu * ansatz.base.domain.area
        if abs(phys - ansatz.h * energy) > ansatz.h * (1e-9 * abs(energy) + floor):
            raise InternalConsistencyError(
                f"physical energy {phys:.12e} != h * rescaled {ansatz.h * energy:.12e}")
    if check_convergence:
        fine = _rescaled_energy(ansatz, texture, params, [2 * q for q in quad])
        if abs(fine - energy) > rtol * scale:
            raise QuadratureError(f"3D quadrature not converged: {energy:.12e} vs {fine:.12e}")
    return energy


def wh_physical(z3, F, texture: Texture, params: MaterialParams, h: float):
    """Physical density: trace formula with C_h(z3)^-1 for nematic textures."""
    C = material.spontaneous_strain_physical(texture, params, z3, h)
    F = np.asarray(F, dtype=float)
    if isinstance(texture, Bilayer):
        w, v = np.linalg.eigh(C)
        Uinv = (v / np.sqrt(w)[..., None, :]) @ np.swapaxes(v, -1, -2)
        return material.w0(F @ Uinv, params)
    det = np.linalg.det(F)
    ok = det > 0
    safe = np.where(ok, det, 1.0)
    FtF = np.swapaxes(F, -1, -2) @ F
    val = 0.5 * params.mu * (np.sum(FtF * np.linalg.inv(C), axis=(-2, -1)) - 3.0 - 2.0 * np.log(safe)) \
        + params.volumetric(safe)
    return np.where(ok, val, material.INFINITE_ENERGY)


def physical_3d_energy(ansatz: AnsatzDeformation, texture: Texture, params: MaterialParams,
                       quad: Sequence[int] = (8, 8, 16)) -> float:
    """Energy of v(z) = y(z', z3/h) over the physical slab; equals h * F_h."""
    x, wx, x3, w3 = _nodes(ansatz, texture, quad)
    h = ansatz.h
    F = ansatz_gradient(ansatz, texture, params, x, x3)
    W = wh_physical((h * x3)[None, :], F, texture, params, h)
    return float(np.einsum("n,m,nm->", wx, h * w3, W))


@dataclass
class SweepRow:
    h: float
    energy_rescaled: float
    gap: float
    slope_running: float
    signed_gap: float = math.nan
    error: Optional[str] = None


@dataclass
class SweepResult:
    rows: list
    limit: float
    slope: float

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows if r.error is None])

    def monotone(self) -> bool:
        g = self.gaps()
        return len(g) > 1 and bool(np.all(np.diff(g) < 0))


def gamma_scaling_sweep(texture: Texture, params: MaterialParams, base: CylindricalIsometry,
                        h_list: Sequence[float], quad: Sequence[int] = (8, 8, 16),
                        corrector_order: int = 2, record_errors: bool = False) -> SweepResult:
    """F_h/h^2 along decreasing h against the plate energy of ``base``.

    ``gap`` is the distance |F_h/h^2 - F_lim|; the ansatz may approach the
    limit from below at finite h, so the signed value is kept separately.
    """
    h_list = [float(h) for h in h_list]
    if any(b >= a for a, b in zip(h_list, h_list[1:])):
        raise ValueError("h_list must be strictly decreasing")
    form = Quadratic2.from_params(params)
    limit = plate_energy(base, plate_model(texture, params), form, quad[0])
    rows = []
    prev = None
    for h in h_list:
        try:
            e = rescaled_3d_energy(AnsatzDeformation(base, corrector_order, h), texture, params, quad) / h**2
        except AnsatzDegenerateError as exc:
            if not record_errors:
                raise
            rows.append(SweepRow(h, math.nan, math.nan, math.nan, error=str(exc)))
            continue
        gap = abs(e - limit)
        slope = math.nan
        if prev is not None and gap > 0 and prev[1] > 0:
            slope = math.log(prev[1] / gap) / math.log(prev[0] / h)
        rows.append(SweepRow(h, e, gap, slope, e - limit))
        prev = (h, gap)
    ok = [(r.h, r.gap) for r in rows if r.error is None and r.gap > 0]
    if len(ok) >= 2:
        lh, lg = np.log([p[0] for p in ok]), np.log([p[1] for p in ok])
        slope = float(np.polyfit(lh, lg, 1)[0])
    else:
        slope = math.nan
    return SweepResult(rows, limit, slope)
