"""Transverse eigenmodes for waveguide-confined (piston) geometries.

Inside an infinite cylinder of rectangular cross section the transverse
momentum integral collapses to a sum over the cross-section eigenmodes
phi_j with eigenvalues E_j, and the axial propagator per mode is the 1D
kernel with decay rate kappa_j = sqrt(xi**2 + E_j).  This module owns the
mode bookkeeping; the kernel assembly lives in ``greens``.

Cross-section coordinates are the two non-axial axes in ascending index
order, mapped to side lengths (Lx, Ly); the walls sit at 0 and Lx (resp.
Ly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BC_KINDS = ("dirichlet", "neumann")


class CylinderError(ValueError):
    pass


@dataclass(frozen=True)
class CylinderSpec:
    """Rectangular confinement: walls at x=0,Lx and y=0,Ly.

    mode_cutoff = None selects adaptive truncation during assembly;
    an explicit count forces a fixed mode set everywhere (useful for
    narrow-guide single-mode reductions).
    """

    Lx: float
    Ly: float
    bc: str = "dirichlet"
    mode_cutoff: int | None = None

    def __post_init__(self):
        if not (self.Lx > 0 and self.Ly > 0):
            raise CylinderError("cross_section: side lengths must be positive")
        if self.bc not in BC_KINDS:
            raise CylinderError(f"wall_bc: expected one of {BC_KINDS}, got {self.bc!r}")
        if self.mode_cutoff is not None and self.mode_cutoff < 1:
            raise CylinderError("mode_cutoff: need at least one retained mode")


@dataclass(frozen=True)
class TransverseModeSet:
    """Product modes phi_{mn}(x,y) = phi_m(x; Lx) phi_n(y; Ly).

    dirichlet: phi_m = sqrt(2/L) sin(m pi x / L), m >= 1, E_m = (m pi/L)**2
    neumann:   phi_0 = sqrt(1/L); phi_m = sqrt(2/L) cos(m pi x / L), m >= 1

    Modes are stored sorted by (E, m, n) so truncation is deterministic.
    """

    energies: np.ndarray
    m: np.ndarray
    n: np.ndarray
    Lx: float
    Ly: float
    bc: str

    @property
    def count(self):
        return self.energies.size

    def evaluate(self, points):
        """Mode values at transverse points.

        Parameters
        ----------
        points : (p, 2) array
            (x, y) coordinates inside the cross section.

        Returns
        -------
        (count, p) array with row j holding phi_j at every point.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        fx = _mode_1d(self.m[:, None], pts[None, :, 0], self.Lx, self.bc)
        fy = _mode_1d(self.n[:, None], pts[None, :, 1], self.Ly, self.bc)
        return fx * fy


def _mode_1d(m, x, L, bc):
    if bc == "dirichlet":
        return np.sqrt(2.0 / L) * np.sin(m * np.pi * x / L)
    amp = np.where(m == 0, np.sqrt(1.0 / L), np.sqrt(2.0 / L))
    return amp * np.cos(m * np.pi * x / L)


def _enumerate_below(Lx, Ly, bc, e_max):
    lo = 1 if bc == "dirichlet" else 0
    m_hi = int(np.floor(Lx * np.sqrt(e_max) / np.pi))
    n_hi = int(np.floor(Ly * np.sqrt(e_max) / np.pi))
    if bc == "dirichlet" and (m_hi < 1 or n_hi < 1):
        return (np.empty(0), np.empty(0, int), np.empty(0, int))
    ms = np.arange(lo, m_hi + 1)
    ns = np.arange(lo, n_hi + 1)
    mg, ng = np.meshgrid(ms, ns, indexing="ij")
    mg, ng = mg.ravel(), ng.ravel()
    e = (mg * np.pi / Lx) ** 2 + (ng * np.pi / Ly) ** 2
    keep = e <= e_max
    mg, ng, e = mg[keep], ng[keep], e[keep]
    order = np.lexsort((ng, mg, e))
    return e[order], mg[order], ng[order]


def modes_below(Lx, Ly, bc, e_max):
    """All modes with E_j <= e_max, sorted ascending."""
    if e_max < 0:
        raise CylinderError("e_max: must be nonnegative")
    e, m, n = _enumerate_below(Lx, Ly, bc, e_max)
    if e.size == 0:
        raise CylinderError("e_max: no transverse mode below the threshold")
    return TransverseModeSet(energies=e, m=m, n=n, Lx=Lx, Ly=Ly, bc=bc)


def rectangle_modes(Lx, Ly, bc, cutoff):
    """Lowest ``cutoff`` modes of the rectangle.

    The enumeration threshold starts at the Weyl estimate
    E ~ 4 pi cutoff / (Lx Ly) and grows until enough modes are found.
    """
    if cutoff < 1:
        raise CylinderError("cutoff: need at least one mode")
    e_max = 4.0 * np.pi * cutoff / (Lx * Ly) + (np.pi / min(Lx, Ly)) ** 2 * 4.0
    for _ in range(64):
        e, m, n = _enumerate_below(Lx, Ly, bc, e_max)
        if e.size >= cutoff:
            return TransverseModeSet(energies=e[:cutoff], m=m[:cutoff], n=n[:cutoff],
                                     Lx=Lx, Ly=Ly, bc=bc)
        e_max *= 1.6
    raise CylinderError("cutoff: mode enumeration failed to converge")  # pragma: no cover


def contains(spec, points_perp):
    """True when every transverse point lies strictly inside the walls."""
    pts = np.atleast_2d(np.asarray(points_perp, dtype=float))
    return bool(np.all(pts[:, 0] > 0) and np.all(pts[:, 0] < spec.Lx)
                and np.all(pts[:, 1] > 0) and np.all(pts[:, 1] < spec.Ly))


def piston_energy(scenario, a, quad=None):
    """Casimir energy of a confined mirror pair at separation ``a``.

    Thin wrapper over ``energy.casimir_energy`` that first validates the
    confinement geometry: the scenario must carry a CylinderSpec and both
    bodies (voxel surfaces included) must sit strictly inside the walls.
    """
    from . import energy as _energy

    if scenario.cylinder is None:
        raise CylinderError("cylinder: scenario has no confinement spec")
    spec = scenario.cylinder
    body_a, body_b, _ = scenario.bodies_at(a)
    half = scenario.body.h / 2
    for b in (body_a, body_b):
        if b is None:
            continue
        perp = b.centers[:, scenario.perp_axes]
        # cell surfaces, not just centers, must clear the walls
        ok = (np.all(perp[:, 0] - half > 0) and np.all(perp[:, 0] + half < spec.Lx)
              and np.all(perp[:, 1] - half > 0) and np.all(perp[:, 1] + half < spec.Ly))
        if not ok:
            raise CylinderError(f"bodies: '{b.label}' is not strictly inside the cylinder walls")
    return _energy.casimir_energy(scenario, a, quad)
