"""Voxelized bodies and reflection geometry.

A body is a finite union of cubic grid cells (voxels) of edge ``h`` in
``d`` dimensions, represented by the cell centers.  Each cell carries the
quadrature weight ``h**d`` when kernels are discretized on it.

Mirror pairs are related by the reflection through the plane
``x_n = offset`` along a distinguished axis ``n``,

    J(x_perp, x_n) = (x_perp, 2*offset - x_n),

which maps a body on the negative side of the plane onto its image on the
positive side.  For vector fields the induced operator flips the normal
component: ``(J psi)(Jx) = (psi_perp(x), -psi_n(x))``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

# pairing tolerance for mirror matching, relative to voxel edge
PAIR_TOL = 1e-12
# relative slack when testing grid spacing / plane clearance
GEOM_TOL = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class VoxelBody:
    """A rigid body given by voxel centers on a regular grid.

    Parameters
    ----------
    centers : (n, d) array
        Cell center coordinates.  All cells share the same edge length.
    h : float
        Voxel edge length.
    label : str
        Name used in reports.
    """

    centers: np.ndarray
    h: float
    label: str = "body"

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.ndim != 2 or c.shape[0] < 1:
            raise GeometryError("centers: need a nonempty (n, d) array")
        if not np.all(np.isfinite(c)):
            raise GeometryError("centers: non-finite coordinate")
        if not (self.h > 0):
            raise GeometryError("h: voxel edge must be positive")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "centers", c)
        if c.shape[0] > 1:
            dmin = cKDTree(c).query(c, k=2)[0][:, 1].min()
            if dmin < self.h * (1 - GEOM_TOL):
                raise GeometryError(
                    f"centers: nearest spacing {dmin:.3e} below voxel edge {self.h:.3e}"
                )

    @property
    def n_voxels(self):
        return self.centers.shape[0]

    @property
    def dimension(self):
        return self.centers.shape[1]

    @property
    def voxel_volume(self):
        return self.h ** self.dimension

    @property
    def volume(self):
        return self.n_voxels * self.voxel_volume

    def translated(self, shift):
        """Return a copy rigidly translated by the vector ``shift``."""
        shift = np.asarray(shift, dtype=float)
        if shift.shape != (self.dimension,):
            raise GeometryError(f"shift: expected shape ({self.dimension},)")
        return VoxelBody(self.centers + shift, self.h, self.label)

    def extent(self, axis):
        """(min, max) of the voxel *surfaces* along ``axis``."""
        x = self.centers[:, axis]
        return x.min() - self.h / 2, x.max() + self.h / 2


@dataclass(frozen=True)
class ReflectionPlane:
    """Mirror plane ``x_axis = offset``; for a pair at separation ``a`` the
    plane sits at ``offset = a/2``."""

    axis: int
    offset: float

    def reflect(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float)).copy()
        pts[:, self.axis] = 2.0 * self.offset - pts[:, self.axis]
        return pts


@dataclass(frozen=True)
class ReflectionOperator:
    """Discrete reflection between two mirror-paired bodies.

    ``pairing[i]`` is the index of the voxel of body B matching the image of
    voxel ``i`` of body A.  For vector (EM) kernels each voxel carries
    ``n_components`` components and the normal one flips sign.
    """

    pairing: np.ndarray
    axis: int
    n_components: int = 1
    sign: np.ndarray = field(init=False)

    def __post_init__(self):
        p = np.asarray(self.pairing, dtype=int)
        object.__setattr__(self, "pairing", p)
        s = np.ones(self.n_components)
        if self.n_components > 1:
            s[self.axis] = -1.0
        object.__setattr__(self, "sign", s)

    @property
    def size(self):
        return self.pairing.size * self.n_components

    def matrix(self):
        """Dense matrix of the operator mapping functions on A to functions
        on B (permutation tensor component signs)."""
        n = self.pairing.size
        nc = self.n_components
        m = np.zeros((n * nc, n * nc))
        for i, b in enumerate(self.pairing):
            for c in range(nc):
                m[b * nc + c, i * nc + c] = self.sign[c]
        return m

    def apply_right(self, block):
        """Return ``block @ J`` without forming J.

        ``block`` has shape (m, n*nc) with columns indexed by voxels of B
        (voxel-major, component-minor); the result is indexed by voxels of A.
        """
        nc = self.n_components
        n = self.pairing.size
        cols = (self.pairing[:, None] * nc + np.arange(nc)[None, :]).ravel()
        out = block[:, cols] * np.tile(self.sign, n)[None, :]
        return out


# ---------------------------------------------------------------------------
# shapes and voxelization


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


@dataclass(frozen=True)
class Hemisphere:
    """Half-ball of radius ``radius``: flat face on the plane
    ``x_axis = face``, dome extending toward ``side`` (+1 or -1)."""

    radius: float
    axis: int = -1
    face: float = 0.0
    side: int = -1
    center_perp: tuple = ()
    dimension: int = 3


@dataclass(frozen=True)
class PointSet:
    centers: tuple


def voxelize(shape, h, label="body"):
    """Voxelize a shape on a regular grid of edge ``h``.

    A cell belongs to the body when its center satisfies the shape's
    inclusion test.  Grids are anchored so that symmetric shapes voxelize
    symmetrically: boxes anchor at the low corner, balls at their center,
    hemispheres at the flat face.

    Returns
    -------
    VoxelBody
    """
    if isinstance(shape, Box):
        return _voxelize_box(shape, h, label)
    if isinstance(shape, Ball):
        return _voxelize_ball(shape, h, label)
    if isinstance(shape, Hemisphere):
        return _voxelize_hemisphere(shape, h, label)
    if isinstance(shape, PointSet):
        return VoxelBody(np.asarray(shape.centers, dtype=float), h, label)
    raise GeometryError(f"shape: unsupported {type(shape).__name__}")


def _voxelize_box(shape, h, label):
    lo = np.asarray(shape.lo, dtype=float)
    hi = np.asarray(shape.hi, dtype=float)
    if lo.shape != hi.shape or lo.ndim != 1:
        raise GeometryError("box: lo and hi must be vectors of equal length")
    if np.any(hi <= lo):
        raise GeometryError("box: hi must exceed lo on every axis")
    counts = np.maximum(1, np.floor((hi - lo) / h + GEOM_TOL).astype(int))
    axes = [lo[k] + (np.arange(counts[k]) + 0.5) * h for k in range(lo.size)]
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=-1)
    return VoxelBody(centers, h, label)


def _voxelize_ball(shape, h, label):
    c = np.asarray(shape.center, dtype=float)
    r = float(shape.radius)
    if r <= 0:
        raise GeometryError("ball: radius must be positive")
    m = int(np.ceil(r / h))
    axes = [c[k] + np.arange(-m, m + 1) * h for k in range(c.size)]
    grids = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([g.ravel() for g in grids], axis=-1)
    keep = np.sum((centers - c) ** 2, axis=-1) <= r * r * (1 + GEOM_TOL)
    return VoxelBody(centers[keep], h, label)


def _voxelize_hemisphere(shape, h, label):
    d = shape.dimension
    axis = shape.axis % d
    r = float(shape.radius)
    if r <= 0:
        raise GeometryError("hemisphere: radius must be positive")
    if shape.side not in (-1, 1):
        raise GeometryError("hemisphere: side must be +1 or -1")
    cp = np.asarray(shape.center_perp if shape.center_perp else np.zeros(d - 1), dtype=float)
    if cp.shape != (d - 1,):
        raise GeometryError(f"hemisphere: center_perp must have length {d - 1}")
    m = int(np.ceil(r / h))
    # axis coordinate anchored at the flat face, perp axes at the dome center
    ax_coords = shape.face + shape.side * (np.arange(m) + 0.5) * h
    perp_axes = [cp[k] + np.arange(-m, m + 1) * h for k in range(d - 1)]
    grids = np.meshgrid(*perp_axes, ax_coords, indexing="ij")
    flat = [g.ravel() for g in grids]
    centers = np.empty((flat[0].size, d))
    perp_ix = [k for k in range(d) if k != axis]
    for k, col in zip(perp_ix, flat[:-1]):
        centers[:, k] = col
    centers[:, axis] = flat[-1]
    apex = np.zeros(d)
    for k, v in zip(perp_ix, cp):
        apex[k] = v
    apex[axis] = shape.face
    keep = np.sum((centers - apex) ** 2, axis=-1) <= r * r * (1 + GEOM_TOL)
    return VoxelBody(centers[keep], h, label)


def random_blob(n_cells, h, seed, dimension=3, axis=-1, halfwidth=3, depth=4, label="blob"):
    """Seeded random voxel cluster on the negative side of ``x_axis = 0``.

    Cells are drawn without replacement from the grid block with perp
    indices in ``[-halfwidth, halfwidth]`` and ``depth`` layers below the
    plane, so the blob always qualifies as the A body of a mirror pair.
    """
    axis = axis % dimension
    rng = np.random.default_rng(seed)
    per_perp = 2 * halfwidth + 1
    total = per_perp ** (dimension - 1) * depth
    if n_cells > total:
        raise GeometryError(f"n_cells: at most {total} cells available in the block")
    flat = np.sort(rng.choice(total, size=n_cells, replace=False))
    centers = np.empty((n_cells, dimension))
    perp_axes = [q for q in range(dimension) if q != axis]
    rem = flat
    for k in range(dimension - 1):
        rem, ix = np.divmod(rem, per_perp)
        centers[:, perp_axes[k]] = (ix - halfwidth) * h
    centers[:, axis] = -(rem + 0.5) * h
    return VoxelBody(centers, h, label)


# ---------------------------------------------------------------------------
# reflection


def reflect_body(body, plane):
    """Mirror image of ``body`` through ``plane``.

    The body must lie strictly on one side of the plane (voxel surfaces
    included); the image then lies strictly on the other.  On a grid
    commensurate with the plane the map is an exact involution on the
    coordinates.
    """
    lo, hi = body.extent(plane.axis)
    tol = GEOM_TOL * body.h
    if not (hi < plane.offset - tol or lo > plane.offset + tol):
        raise GeometryError(
            f"plane: body '{body.label}' touches or crosses the mirror plane "
            f"(surface span [{lo:.6g}, {hi:.6g}], plane at {plane.offset:.6g})"
        )
    label = body.label[:-1] if body.label.endswith("*") else body.label + "*"
    return VoxelBody(plane.reflect(body.centers), body.h, label)


def reflection_matrix(body_a, body_b, plane, field="scalar"):
    """Build the discrete reflection pairing A -> B.

    Matches every image ``J(x_i)`` of a voxel of A to a voxel of B within
    ``1e-12 * h`` and errors out unless the match is a bijection.  For
    ``field="em"`` the operator carries the component sign rule
    (+1, ..., +1, -1) with the -1 on the plane normal.

    Returns
    -------
    ReflectionOperator
    """
    if body_a.n_voxels != body_b.n_voxels:
        raise GeometryError("bodies: mirror pair must have equal voxel counts")
    if body_a.h != body_b.h:
        raise GeometryError("bodies: mirror pair must share the voxel edge")
    images = plane.reflect(body_a.centers)
    d2 = np.sum((images[:, None, :] - body_b.centers[None, :, :]) ** 2, axis=-1)
    nearest = np.argmin(d2, axis=1)
    dist = np.sqrt(d2[np.arange(images.shape[0]), nearest])
    tol = PAIR_TOL * body_a.h
    if np.any(dist > tol):
        worst = int(np.argmax(dist))
        raise GeometryError(
            f"bodies: voxel {worst} of '{body_a.label}' has no mirror partner "
            f"within {tol:.1e} (closest at {dist[worst]:.3e})"
        )
    if np.unique(nearest).size != nearest.size:
        raise GeometryError("bodies: mirror pairing is not one-to-one")
    nc = 3 if field == "em" else 1
    return ReflectionOperator(pairing=nearest, axis=plane.axis % body_a.dimension, n_components=nc)


def min_separation(body_a, body_b):
    """Surface separation, by the convention: minimum center distance minus
    one voxel edge.  Nonpositive values mean the bodies touch or overlap."""
    if body_a.h != body_b.h:
        raise GeometryError("bodies: voxel edges differ")
    dmin = cKDTree(body_b.centers).query(body_a.centers, k=1)[0].min()
    return float(dmin - body_a.h)
