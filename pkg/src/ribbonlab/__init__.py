"""Thin nematic-elastomer sheets: plate and rod limits, shapes, and energy-scaling checks."""

__version__ = "0.1.0"

from .material import (Bilayer, ConstantDirector, MaterialParams, SplayBend, Twist,  # noqa: E402
                       spontaneous_strain, w0, wh)
from .relaxation import PlateModel, Quadratic2, plate_model, qbar2  # noqa: E402
from .rod import RodDensity, rod_density, rod_min_set  # noqa: E402
from .plate import CylindricalIsometry, PlateDomain, minimize_over_cylinders, plate_energy  # noqa: E402
from .geometry import integrate_frame, recover_rates, ribbon_mesh, cylinder_mesh  # noqa: E402

__all__ = [
    "Bilayer", "ConstantDirector", "MaterialParams", "SplayBend", "Twist", "spontaneous_strain", "w0", "wh",
    "PlateModel", "Quadratic2", "plate_model", "qbar2", "RodDensity", "rod_density", "rod_min_set",
    "CylindricalIsometry", "PlateDomain", "minimize_over_cylinders", "plate_energy",
    "integrate_frame", "recover_rates", "ribbon_mesh", "cylinder_mesh",
]
