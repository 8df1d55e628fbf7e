"""casivox: Casimir interaction energies between voxelized dielectric
bodies via scattering determinants, with built-in certification of the
attraction bounds (hbar = c = 1)."""

from .cylinder import CylinderSpec, TransverseModeSet, piston_energy, rectangle_modes
from .dielectric import DielectricModel, chi_at, constant, dirichlet_limit_schedule, drude, lorentz
from .energy import (EigenvalueBoundError, EnergyResult, ForceResult, QuadratureSpec,
                     casimir_energy, eigen_spectrum, energy_at, force,
                     free_energy_finite_T, integrand)
from .geometry import (Ball, Box, Hemisphere, PointSet, ReflectionOperator, ReflectionPlane,
                       VoxelBody, min_separation, random_blob, reflect_body,
                       reflection_matrix, voxelize)
from .greens import KernelMatrix, assemble_block, g0_cylinder, g0_em_dyadic, g0_scalar, g0_self
from .scattering import (ScatteringOperator, coupling_general, coupling_mirror,
                         coupling_mirror_plane, sqrt_psd, t_operator)
from .scenario import Scenario, before_mirror, mirror_pair, two_body
from .theorem import (CheckReport, check_eigenvalue_bounds, check_gabj_decreasing,
                      check_gabj_positive, check_mirror_plane_attraction,
                      check_monotonic_attraction, check_quadratic_form_Ia,
                      run_all_checks, write_reports)

__version__ = "0.1.0"
