"""Free and confined propagators at imaginary frequency.

All kernels are the Euclidean (Wick-rotated) Green's functions of
``-laplacian + xi**2``:

    d=1: e^(-xi r) / (2 xi)
    d=2: K0(xi r) / (2 pi)
    d=3: e^(-xi r) / (4 pi r)

and the 3D vector (EM) dyadic

    D_ij(r) = g(r) [ A(u) delta_ij - B(u) rhat_i rhat_j ],   u = xi r,
    A = 1 + 1/u + 1/u**2,   B = 1 + 3/u + 3/u**2,

which is the closed-form transform of (delta_ij + k_i k_j / xi**2) /
(k**2 + xi**2).

Assembled blocks follow the collocation convention: entry (i, j) equals
kernel(center_i, center_j) times the voxel volume.  Same-body diagonals
are regularized by the equal-volume cell average (scalar) or the
point-polarizability rule delta_ij / (3 V xi**2) (EM), which keeps the
same-body blocks positive definite.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import k0, k1

from .cylinder import CylinderError, CylinderSpec, modes_below, rectangle_modes

# truncation threshold exp(-LOG_CUT) ~ 1e-12 for mode and image sums
LOG_CUT = 27.63102111592855
# image-lattice shell cap; beyond it the xi**2 prefactor of the T operator
# suppresses the residual same-body correction faster than it can matter
IMG_SHELL_CAP = 48
MODE_CHUNK = 128


class GreensError(ValueError):
    pass


class ModeTruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class KernelMatrix:
    """Dense kernel block over the voxel basis.

    block rows run over target voxels (times 3 components for EM), columns
    over source voxels; entries already carry one factor of voxel volume.
    """

    block: np.ndarray
    frequency: float
    kind: str
    voxel_volume: float
    flagged: bool = False

    @property
    def unweighted(self):
        return self.block / self.voxel_volume


def g0_scalar(d, xi, r):
    """Free scalar kernel at distance r > 0.

    Parameters
    ----------
    d : int
        Spatial dimension, 1, 2 or 3.
    xi : float
        Imaginary frequency, > 0.
    r : float or array
        Point separation, strictly positive.
    """
    if xi <= 0:
        raise GreensError("xi: kernel requires xi > 0")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise GreensError("r: off-diagonal kernel requires r > 0 (use g0_self on the diagonal)")
    if d == 1:
        out = np.exp(-xi * r) / (2 * xi)
    elif d == 2:
        out = k0(xi * r) / (2 * np.pi)
    elif d == 3:
        out = np.exp(-xi * r) / (4 * np.pi * r)
    else:
        raise GreensError(f"d: expected 1, 2 or 3, got {d}")
    if out.ndim == 0:
        return float(out)
    return out


def g0_self(d, xi, h):
    """Regularized diagonal value: cell average of g0 over an equal-volume
    ball (d=3), disc (d=2) or interval (d=1) centered on the singularity.

    All three reduce to (1 - edge term) / (xi**2 h**d); the d=3 and d=1
    forms use expm1 so the xi h -> 0 limit stays accurate.
    """
    if xi <= 0 or h <= 0:
        raise GreensError("xi, h: self term requires positive arguments")
    if d == 1:
        return -np.expm1(-xi * h / 2) / (xi ** 2 * h)
    if d == 2:
        z = xi * h / np.sqrt(np.pi)
        return (1.0 - z * k1(z)) / (xi ** 2 * h ** 2)
    if d == 3:
        z = xi * h * (3.0 / (4.0 * np.pi)) ** (1.0 / 3.0)
        # 1 - (1+z)e^(-z), grouped so neither factor overflows at large z
        return (-np.expm1(-z) - z * np.exp(-z)) / (xi ** 2 * h ** 3)
    raise GreensError(f"d: expected 1, 2 or 3, got {d}")


def _em_coeffs(u):
    a = 1.0 + 1.0 / u + 1.0 / u ** 2
    b = 1.0 + 3.0 / u + 3.0 / u ** 2
    return a, b


def g0_em_dyadic(xi, x, x_prime):
    """EM dyadic kernel block between two distinct points.

    Returns
    -------
    (3, 3) symmetric array; equals its transpose and is even in
    x - x_prime.
    """
    if xi <= 0:
        raise GreensError("xi: kernel requires xi > 0")
    diff = np.asarray(x, dtype=float) - np.asarray(x_prime, dtype=float)
    r = float(np.linalg.norm(diff))
    if r <= 0:
        raise GreensError("x, x_prime: coincident points route through the self rule")
    u = xi * r
    g = np.exp(-u) / (4 * np.pi * r)
    a, b = _em_coeffs(u)
    rhat = diff / r
    return g * (a * np.eye(3) - b * np.outer(rhat, rhat))


def em_self_value(xi, h):
    """Per-component diagonal of the unweighted same-body EM block.

    The delta-function part of the dyadic averages to delta_ij/(3 V xi**2)
    over a cell; folded into the T operator this reproduces the
    Clausius-Mossotti point polarizability 3 V chi / (3 + chi) exactly.
    """
    if xi <= 0 or h <= 0:
        raise GreensError("xi, h: self term requires positive arguments")
    return 1.0 / (3.0 * h ** 3 * xi ** 2)


def _pair_diff(centers_s, centers_t):
    return centers_s[:, None, :] - centers_t[None, :, :]


def _scalar_matrix(d, xi, body_s, body_t, same):
    diff = _pair_diff(body_s.centers, body_t.centers)
    r = np.sqrt(np.sum(diff ** 2, axis=-1))
    if same:
        np.fill_diagonal(r, 1.0)
        m = g0_scalar(d, xi, r)
        np.fill_diagonal(m, g0_self(d, xi, body_s.h))
    else:
        if r.min() <= 0:
            raise GreensError("bodies: coincident voxel centers across bodies (overlap)")
        m = g0_scalar(d, xi, r)
    return m


def _em_matrix(xi, body_s, body_t, same):
    diff = _pair_diff(body_s.centers, body_t.centers)
    r = np.sqrt(np.sum(diff ** 2, axis=-1))
    if same:
        np.fill_diagonal(r, 1.0)
    elif r.min() <= 0:
        raise GreensError("bodies: coincident voxel centers across bodies (overlap)")
    u = xi * r
    g = np.exp(-u) / (4 * np.pi * r)
    a, b = _em_coeffs(u)
    rhat = diff / r[..., None]
    ns, nt = r.shape
    blocks = (g * a)[..., None, None] * np.eye(3) \
        - (g * b)[..., None, None] * (rhat[..., :, None] * rhat[..., None, :])
    if same:
        idx = np.arange(ns)
        blocks[idx, idx] = em_self_value(xi, body_s.h) * np.eye(3)
    return blocks.transpose(0, 2, 1, 3).reshape(3 * ns, 3 * nt)


# ---------------------------------------------------------------------------
# cylinder-confined kernel


def _axial_split(centers, axis):
    d = centers.shape[1]
    perp = [k for k in range(d) if k != axis]
    return centers[:, perp], centers[:, axis]


def _mode_sum_block(spec, xi, perp_s, n_s, perp_t, n_t, modes, h_diag=None):
    """Truncated mode sum; h_diag (voxel edge) replaces the i==j diagonal
    with the per-mode 1D cell average when set."""
    dn = np.abs(n_s[:, None] - n_t[None, :])
    phi_s = modes.evaluate(perp_s)
    phi_t = phi_s if perp_t is perp_s else modes.evaluate(perp_t)
    kappa = np.sqrt(xi ** 2 + modes.energies)
    out = np.zeros((n_s.size, n_t.size))
    for lo in range(0, modes.count, MODE_CHUNK):
        hi = min(lo + MODE_CHUNK, modes.count)
        k = kappa[lo:hi]
        prof = np.exp(-k[:, None, None] * dn[None, :, :]) / (2 * k)[:, None, None]
        out += np.einsum("mi,mj,mij->ij", phi_s[lo:hi], phi_t[lo:hi], prof)
    if h_diag is not None:
        s1 = -np.expm1(-kappa * h_diag / 2) / (kappa ** 2 * h_diag)
        np.fill_diagonal(out, (phi_s ** 2 * s1[:, None]).sum(axis=0))
    return out


def _adaptive_modes(spec, xi, gap):
    if gap <= 0:
        raise CylinderError(
            "mode_cutoff: adaptive truncation needs a positive axial gap; "
            "set an explicit mode_cutoff for coincident axial coordinates")
    e1 = 0.0 if spec.bc == "neumann" else (np.pi / spec.Lx) ** 2 + (np.pi / spec.Ly) ** 2
    kappa_max = np.sqrt(xi ** 2 + e1) + LOG_CUT / gap
    return modes_below(spec.Lx, spec.Ly, spec.bc, kappa_max ** 2 - xi ** 2)


def _image_corrected_same_block(spec, xi, body, axis):
    """Same-body confined block: free-space part (with regularized
    diagonal) plus the wall-image lattice, summed shell by shell.

    The shell count is capped; at frequencies small enough for the cap to
    bind, the T operator's xi**2 prefactor suppresses the whole block's
    contribution to the energy, so the truncated tail is harmless.
    """
    base = _scalar_matrix(3, xi, body, body, same=True)
    perp, n = _axial_split(body.centers, axis)
    lmin = min(spec.Lx, spec.Ly)
    shells = int(np.ceil(LOG_CUT / (2 * lmin * xi))) + 1
    shells = min(IMG_SHELL_CAP, shells)
    ms = np.arange(-shells, shells + 1)
    mx, sx, my, sy = [q.ravel() for q in np.meshgrid(ms, (1, -1), ms, (1, -1), indexing="ij")]
    keep = ~((mx == 0) & (sx == 1) & (my == 0) & (sy == 1))
    mx, sx, my, sy = mx[keep], sx[keep], my[keep], sy[keep]
    if spec.bc == "dirichlet":
        signs = (sx * sy).astype(float)
    else:
        signs = np.ones(mx.size)
    corr = np.zeros((n.size, n.size))
    targets = np.concatenate([perp, n[:, None]], axis=1)
    batch = max(1, int(2.0e6 // max(1, n.size ** 2)))
    for lo in range(0, mx.size, batch):
        hi = min(lo + batch, mx.size)
        b = hi - lo
        pos = np.empty((b, n.size, 3))
        pos[..., 0] = 2 * spec.Lx * mx[lo:hi, None] + sx[lo:hi, None] * perp[None, :, 0]
        pos[..., 1] = 2 * spec.Ly * my[lo:hi, None] + sy[lo:hi, None] * perp[None, :, 1]
        pos[..., 2] = n[None, :]
        diff = targets[None, :, None, :] - pos[:, None, :, :]
        r = np.sqrt(np.sum(diff ** 2, axis=-1))
        corr += np.einsum("b,bij->ij", signs[lo:hi], np.exp(-xi * r) / (4 * np.pi * r))
    return base + corr


def _cylinder_matrix(spec, xi, body_s, body_t, axis, same):
    perp_s, n_s = _axial_split(body_s.centers, axis)
    if same:
        if spec.mode_cutoff is not None:
            modes = rectangle_modes(spec.Lx, spec.Ly, spec.bc, spec.mode_cutoff)
            return _mode_sum_block(spec, xi, perp_s, n_s, perp_s, n_s, modes, h_diag=body_s.h)
        return _image_corrected_same_block(spec, xi, body_s, axis)
    perp_t, n_t = _axial_split(body_t.centers, axis)
    if spec.mode_cutoff is not None:
        modes = rectangle_modes(spec.Lx, spec.Ly, spec.bc, spec.mode_cutoff)
    else:
        gap = np.abs(n_s[:, None] - n_t[None, :]).min()
        modes = _adaptive_modes(spec, xi, gap)
    return _mode_sum_block(spec, xi, perp_s, n_s, perp_t, n_t, modes)


def g0_cylinder(spec, xi, x, x_prime, axis=2):
    """Pointwise confined kernel via the transverse mode sum.

    With an explicit ``spec.mode_cutoff`` the truncation is checked and a
    ModeTruncationWarning is issued when the last retained mode still
    contributes more than 1e-10 of the sum; without a cutoff the mode set
    is chosen adaptively, which needs a nonzero axial separation.
    """
    if xi <= 0:
        raise GreensError("xi: kernel requires xi > 0")
    x = np.asarray(x, dtype=float)
    xp = np.asarray(x_prime, dtype=float)
    perp = [k for k in range(3) if k != axis]
    dn = abs(x[axis] - xp[axis])
    if spec.mode_cutoff is not None:
        modes = rectangle_modes(spec.Lx, spec.Ly, spec.bc, spec.mode_cutoff)
    else:
        modes = _adaptive_modes(spec, xi, dn)
    kappa = np.sqrt(xi ** 2 + modes.energies)
    terms = (modes.evaluate(x[perp])[:, 0] * modes.evaluate(xp[perp])[:, 0]
             * np.exp(-kappa * dn) / (2 * kappa))
    total = terms.sum()
    if spec.mode_cutoff is not None and abs(terms[-1]) > 1e-10 * max(abs(total), 1e-300):
        warnings.warn("mode sum not converged at the requested cutoff",
                      ModeTruncationWarning, stacklevel=2)
    return float(total)


# ---------------------------------------------------------------------------
# block assembly


def assemble_block(body_s, body_t, xi, kind, spec=None, axis=None):
    """Assemble the dense kernel block between two bodies at frequency xi.

    Parameters
    ----------
    body_s, body_t : VoxelBody
        Row and column bodies; pass the same object for a same-body block,
        which then gets the regularized diagonal.
    kind : str
        "scalar" or "em" (em implies d=3 and no confinement).
    spec : CylinderSpec, optional
        Rectangular confinement; scalar d=3 only, needs ``axis``.
    axis : int, optional
        Axial (unconfined) coordinate when ``spec`` is given.

    Returns
    -------
    KernelMatrix with entries kernel * voxel_volume.
    """
    if body_s.h != body_t.h or body_s.dimension != body_t.dimension:
        raise GreensError("bodies: voxel edge and dimension must match across the pair")
    d = body_s.dimension
    v = body_s.voxel_volume
    same = body_s is body_t or (body_s.n_voxels == body_t.n_voxels
                                and np.array_equal(body_s.centers, body_t.centers))
    if kind == "em":
        if d != 3:
            raise GreensError("kind: em kernels are d=3 only")
        if spec is not None:
            raise GreensError("spec: confinement is implemented for scalar fields only")
        m = _em_matrix(xi, body_s, body_t, same)
        return KernelMatrix(block=m * v, frequency=xi, kind="em", voxel_volume=v)
    if kind != "scalar":
        raise GreensError(f"kind: expected 'scalar' or 'em', got {kind!r}")
    if spec is not None:
        if d != 3:
            raise GreensError("spec: confinement requires d=3 bodies")
        if axis is None:
            raise GreensError("axis: confinement needs the axial coordinate index")
        m = _cylinder_matrix(spec, xi, body_s, body_t, axis, same)
        return KernelMatrix(block=m * v, frequency=xi, kind="cylinder", voxel_volume=v)
    m = _scalar_matrix(d, xi, body_s, body_t, same)
    return KernelMatrix(block=m * v, frequency=xi, kind=f"scalar_d{d}", voxel_volume=v)
