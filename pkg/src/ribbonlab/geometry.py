"""Kinematic reconstruction of ribbon shapes from flexure/torsion rates, and mesh export."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .plate import CylindricalIsometry, PlateDomain
from .rod import frame_strains

Rate = Union[float, Callable[[np.ndarray], np.ndarray]]


def skew(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    z = np.zeros(w.shape[:-1])
    return np.stack([
        np.stack([z, -w[..., 2], w[..., 1]], axis=-1),
        np.stack([w[..., 2], z, -w[..., 0]], axis=-1),
        np.stack([-w[..., 1], w[..., 0], z], axis=-1),
    ], axis=-2)


def rate_matrix(flexure, torsion) -> np.ndarray:
    """Skew Omega with Omega13 = -flexure, Omega23 = -torsion, Omega12 = 0."""
    flexure = np.asarray(flexure, dtype=float)
    torsion = np.asarray(torsion, dtype=float)
    return skew(np.stack([torsion, -flexure, np.zeros_like(flexure)], axis=-1))


def _exp_and_flow(w: np.ndarray, ds: float):
    """exp(ds K) and its integral over [0, ds] for K = skew(w), per row of w."""
    K = skew(w)
    K2 = K @ K
    r = np.linalg.norm(w, axis=-1)
    th = r * ds
    small = th < 1e-4
    rs = np.where(small, 1.0, r)
    ths = np.where(small, 1.0, th)
    # series for small angles keep the coefficients accurate to roundoff
    a = np.where(small, ds * (1 - th**2 / 6 + th**4 / 120), np.sin(ths) / rs)
    b = np.where(small, ds**2 * (0.5 - th**2 / 24 + th**4 / 720), (1 - np.cos(ths)) / rs**2)
    c = np.where(small, ds**3 * (1 / 6 - th**2 / 120 + th**4 / 5040), (ths - np.sin(ths)) / rs**3)
    eye = np.eye(3)
    E = eye + a[:, None, None] * K + b[:, None, None] * K2
    V = ds * eye + b[:, None, None] * K + c[:, None, None] * K2
    return E, V


def _polish(R: np.ndarray) -> np.ndarray:
    """One Newton step toward the polar factor; removes roundoff drift from SO(3)."""
    return 1.5 * R - 0.5 * R @ R.T @ R


def _eval_rate(rate: Rate, s: np.ndarray) -> np.ndarray:
    if callable(rate):
        return np.broadcast_to(np.asarray(rate(s), dtype=float), s.shape).astype(float)
    return np.full_like(s, float(rate))


@dataclass(frozen=True)
class FrameTrajectory:
    """Samples (s, R, x): arc length, frame with columns d1|d2|d3, centerline point."""

    s: np.ndarray
    R: np.ndarray
    x: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.s)
        if self.R.shape != (n, 3, 3) or self.x.shape != (n, 3):
            raise ValueError("inconsistent trajectory shapes")

    @property
    def d1(self):
        return self.R[:, :, 0]

    @property
    def d2(self):
        return self.R[:, :, 1]

    @property
    def d3(self):
        return self.R[:, :, 2]

    def orthogonality_defect(self) -> float:
        G = np.swapaxes(self.R, -1, -2) @ self.R
        return float(np.max(np.linalg.norm(G - np.eye(3), axis=(-2, -1))))

    def to_frame_field(self):
        from .rod import FrameField

        return FrameField(self.s, self.R)


def integrate_frame(flexure: Rate, torsion: Rate, R0: Optional[np.ndarray] = None, length: float = 2.0,
                    n_samples: int = 401, x0: Optional[np.ndarray] = None) -> FrameTrajectory:
    """Solve R' = R Omega(s) on [-length/2, length/2] and integrate x' = d1.

    Rates may be constants or vectorized callables of s; callables are
    sampled at step midpoints, so the result is exact for piecewise-constant
    rates and second order otherwise.
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if not length > 0:
        raise ValueError("length must be positive")
    R0 = np.eye(3) if R0 is None else np.asarray(R0, dtype=float)
    if np.linalg.norm(R0.T @ R0 - np.eye(3)) > 1e-10 or np.linalg.det(R0) <= 0:
        raise ValueError("R0 must be a rotation")
    s = np.linspace(-0.5 * length, 0.5 * length, n_samples)
    ds = s[1] - s[0]
    mid = s[:-1] + 0.5 * ds
    fa, tb = _eval_rate(flexure, mid), _eval_rate(torsion, mid)
    w = np.stack([tb, -fa, np.zeros_like(fa)], axis=-1)
    E, V = _exp_and_flow(w, ds)
    R = np.empty((n_samples, 3, 3))
    x = np.empty((n_samples, 3))
    R[0] = _polish(R0)
    x[0] = np.zeros(3) if x0 is None else np.asarray(x0, dtype=float)
    for j in range(n_samples - 1):
        x[j + 1] = x[j] + R[j] @ V[j][:, 0]
        R[j + 1] = _polish(R[j] @ E[j])
    meta = {"length": length, "n_samples": n_samples}
    if not callable(flexure):
        meta["flexure"] = float(flexure)
    if not callable(torsion):
        meta["torsion"] = float(torsion)
    return FrameTrajectory(s, R, x, meta)


def recover_rates(traj: FrameTrajectory) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Estimates of (d1'.d3, d2'.d3, d1'.d2) at every sample; see ``rod.frame_strains``."""
    return frame_strains(traj.s, traj.R)


# --- meshes ---------------------------------------------------------------

@dataclass(frozen=True)
class RibbonMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    n_along: int
    n_across: int
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.vertices) != self.n_along * self.n_across:
            raise ValueError("vertex count must equal n_along * n_across")
        areas = self.triangle_areas()
        if np.any(areas <= 1e-14):
            raise ValueError("degenerate triangle in mesh")

    def triangle_normals(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def triangle_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.triangle_normals(), axis=-1)

    def area(self) -> float:
        return float(np.sum(self.triangle_areas()))

    def edges(self) -> np.ndarray:
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def angle_defects(self) -> np.ndarray:
        """2 pi minus the angle sum at each interior vertex (boundary vertices get nan)."""
        p = self.vertices[self.triangles]
        total = np.zeros(len(self.vertices))
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            ang = np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))
            np.add.at(total, self.triangles[:, k], ang)
        out = 2.0 * math.pi - total
        i, j = np.divmod(np.arange(len(self.vertices)), self.n_across)
        boundary = (i == 0) | (i == self.n_along - 1) | (j == 0) | (j == self.n_across - 1)
        out[boundary] = np.nan
        return out


def _grid_triangles(n_along: int, n_across: int) -> np.ndarray:
    """Two triangles per grid cell, counter-clockwise in the (along, across) parameters."""
    i, j = np.meshgrid(np.arange(n_along - 1), np.arange(n_across - 1), indexing="ij")
    v00 = (i * n_across + j).ravel()
    v10 = v00 + n_across
    v11 = v10 + 1
    v01 = v00 + 1
    return np.concatenate([np.stack([v00, v10, v11], axis=1), np.stack([v00, v11, v01], axis=1)])


def ribbon_mesh(traj: FrameTrajectory, width: float, n_across: int = 9,
                metadata: Optional[dict] = None) -> RibbonMesh:
    """Strip x(s) + t d2(s), t in [-width/2, width/2]; self-intersection is not checked."""
    if not width > 0:
        raise ValueError("width must be positive")
    if n_across < 2:
        raise ValueError("n_across must be at least 2")
    t = np.linspace(-0.5 * width, 0.5 * width, n_across)
    verts = traj.x[:, None, :] + t[None, :, None] * traj.d2[:, None, :]
    meta = dict(traj.metadata)
    meta.update(metadata or {})
    meta["width"] = width
    return RibbonMesh(verts.reshape(-1, 3), _grid_triangles(len(traj.s), n_across),
                      len(traj.s), n_across, meta)


def cylinder_mesh(phi: float, kappa: float, domain: PlateDomain = PlateDomain(),
                  resolution: tuple[int, int] = (81, 21)) -> RibbonMesh:
    """Sheet rolled at curvature kappa along e(phi), meshed on its own (z1, z2) grid."""
    n_along, n_across = resolution
    y = CylindricalIsometry(phi, kappa, domain)
    z1 = np.linspace(-0.5 * domain.length, 0.5 * domain.length, n_along)
    z2 = np.linspace(-0.5 * domain.width, 0.5 * domain.width, n_across)
    Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
    flat = domain.to_plane(Z1.ravel(), Z2.ravel())
    verts = y.local(flat)["y"]
    meta = {"phi": phi, "kappa": kappa, "length": domain.length, "width": domain.width,
            "theta": domain.theta}
    mesh = RibbonMesh(verts, _grid_triangles(n_along, n_across), n_along, n_across, meta)
    object.__setattr__(mesh, "flat_vertices", flat)
    return mesh


# --- export ---------------------------------------------------------------

def _fmt(v) -> str:
    return f"{float(v):.12g}"


def write_obj(mesh: RibbonMesh, path, header: Optional[dict] = None) -> None:
    """ASCII OBJ with '# ribbonlab' provenance comments and 1-based faces."""
    meta = dict(mesh.metadata)
    meta.update(header or {})
    with open(path, "w") as fh:
        fh.write("# ribbonlab mesh\n")
        for key in sorted(meta):
            fh.write(f"# {key}: {meta[key]}\n")
        for v in mesh.vertices:
            fh.write("v " + " ".join(_fmt(c) for c in v) + "\n")
        for t in mesh.triangles:
            fh.write("f " + " ".join(str(int(i) + 1) for i in t) + "\n")


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return np.array(verts), np.array(faces, dtype=int)


TRAJECTORY_COLUMNS = ["s", "x1", "x2", "x3"] + [f"d{i}_{k}" for i in (1, 2, 3) for k in (1, 2, 3)]


def write_trajectory_csv(traj: FrameTrajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        frames = np.swapaxes(traj.R, -1, -2).reshape(len(traj.s), 9)
        for s, x, f in zip(traj.s, traj.x, frames):
            w.writerow([_fmt(s)] + [_fmt(c) for c in x] + [_fmt(c) for c in f])
