"""Radial sound-speed disks: ray tracing, travel times, Herglotz-Wiechert
inversion, geodesic and mixing ray transforms, Randers distances."""
from .herglotz import HerglotzResult, herglotz_invert, ray_parameter_spline
from .profile import RadialProfile, herglotz_check
from .randers import (OneForm, TrigInterpolant, gaussian_potential, line_integral, randers_boundary_map,
                      zermelo_first_order)
from .tracing import (BoundaryDistanceMap, GeodesicPath, angular_travel, boundary_distance_map,
                      inward_direction, reference_paths, shoot, trace_geodesic, travel_time)
from .transforms import (Mixing2, TensorField2, geodesic_fan, geodesic_ray_transform, line_fan,
                         mixing_ray_transform, symmetrize_A, transverse_mixing)

__all__ = [
    "BoundaryDistanceMap", "GeodesicPath", "HerglotzResult", "Mixing2", "OneForm", "RadialProfile",
    "TensorField2", "TrigInterpolant", "angular_travel", "boundary_distance_map", "gaussian_potential",
    "geodesic_fan", "geodesic_ray_transform", "herglotz_check", "herglotz_invert", "inward_direction",
    "line_fan", "line_integral", "mixing_ray_transform", "randers_boundary_map", "ray_parameter_spline",
    "reference_paths", "shoot", "symmetrize_A", "trace_geodesic", "transverse_mixing", "travel_time",
    "zermelo_first_order",
]
