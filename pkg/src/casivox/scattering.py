"""Per-body scattering operators and the coupled determinant matrices.

The body operator is T = xi**2 chi (1 + xi**2 chi G_XX)^(-1) restricted
to the body's support; in the voxel basis, with weighted blocks G from
``greens.assemble_block``, this becomes

    T = xi**2 chi V (I + xi**2 chi G_XX)^(-1),    V = voxel volume,

a symmetric matrix carrying the cell weight.  For EM blocks the same
formula holds componentwise; with the point-polarizability diagonal of
G_XX it reproduces the standard discrete-dipole inverse-polarizability
form exactly.

Coupled matrices divide each cross block by V once, so a single voxel in
d=1 gives N = (T e^(-xi a) / (2 xi))**2 and Y = T e^(-xi a) / (2 xi),
whose Born limit matches the continuum trace term xi**4 chi**2 V**2
g(a)**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dielectric import chi_at

PSD_CLIP = 1e-12


class ScatteringError(ValueError):
    pass


@dataclass(frozen=True)
class ScatteringOperator:
    """Symmetric T matrix of one body at one frequency (voxel weight included)."""

    matrix: np.ndarray
    frequency: float
    body_label: str = "body"
    chi: float = 0.0


def t_operator(body, model, xi, g_xx):
    """Build the body's T operator from its same-body kernel block.

    Parameters
    ----------
    body : VoxelBody
    model : DielectricModel
    xi : float
        Imaginary frequency, > 0.
    g_xx : KernelMatrix
        Same-body block of this body at the same xi (self-regularized).

    Returns
    -------
    ScatteringOperator; positive semi-definite whenever chi > 0.
    """
    if g_xx.frequency != xi:
        raise ScatteringError("g_xx: kernel block was assembled at a different frequency")
    chi = chi_at(model, xi)
    w = xi ** 2 * chi
    n = g_xx.block.shape[0]
    c = w * g_xx.block
    c[np.diag_indices_from(c)] += 1.0
    if chi >= 0:
        try:
            cf = scipy.linalg.cho_factor(c, check_finite=False)
            t = scipy.linalg.cho_solve(cf, np.eye(n) * (w * g_xx.voxel_volume),
                                       check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise ScatteringError(
                "t_operator: 1 + xi^2 chi G_XX is not positive definite; "
                "self-regularization or chi is inconsistent") from exc
    else:
        # hypothesis-violation controls only; no definiteness to exploit
        t = scipy.linalg.solve(c, np.eye(n) * (w * g_xx.voxel_volume),
                               check_finite=False)
    t = (t + t.T) / 2
    return ScatteringOperator(matrix=t, frequency=xi, body_label=body.label, chi=float(chi))


def sqrt_psd(matrix, clip=PSD_CLIP):
    """Symmetric PSD square root by spectral decomposition.

    Eigenvalues in [-clip*max_eig, 0) are treated as floating-point drift
    and clipped to zero; anything lower is rejected.
    """
    m = np.asarray(matrix, dtype=float)
    evals, vecs = np.linalg.eigh((m + m.T) / 2)
    scale = max(evals[-1], 0.0)
    if evals[0] < -clip * max(scale, 1e-300):
        raise ScatteringError(
            f"sqrt_psd: eigenvalue {evals[0]:.3e} below the PSD clip threshold")
    evals = np.clip(evals, 0.0, None)
    return (vecs * np.sqrt(evals)) @ vecs.T


def coupling_general(t_a, g_ab, t_b, g_ba, sqrt_t_a=None):
    """Round-trip coupling N = T_A G_AB T_B G_BA and its symmetric twin.

    Returns
    -------
    (N, S) : S = sqrt(T_A) G_AB T_B G_BA sqrt(T_A) is similar to N,
    symmetric PSD, and is what the spectrum should be read from.
    """
    v = g_ab.voxel_volume
    gab = g_ab.block / v
    gba = g_ba.block / v
    inner = gab @ t_b.matrix @ gba
    n = t_a.matrix @ inner
    if sqrt_t_a is None:
        sqrt_t_a = sqrt_psd(t_a.matrix)
    s = sqrt_t_a @ inner @ sqrt_t_a
    return n, (s + s.T) / 2


def coupling_mirror(t_a, g_ab, refl, sqrt_t_a=None, sym_tol=1e-12):
    """Symmetrized mirror coupling Y = sqrt(T_A) G_AB J sqrt(T_A).

    G_AB J must come out symmetric (that is the reflection-positivity
    structure); asymmetry beyond ``sym_tol`` relative is a geometry bug
    and is rejected.
    """
    gj = refl.apply_right(g_ab.block) / g_ab.voxel_volume
    scale = np.abs(gj).max()
    asym = np.abs(gj - gj.T).max()
    if asym > sym_tol * max(scale, 1e-300):
        raise ScatteringError(
            f"coupling_mirror: G_AB J asymmetry {asym:.3e} exceeds tolerance "
            f"(bodies are not an exact mirror pair)")
    gj = (gj + gj.T) / 2
    if sqrt_t_a is None:
        sqrt_t_a = sqrt_psd(t_a.matrix)
    y = sqrt_t_a @ gj @ sqrt_t_a
    return (y + y.T) / 2


def coupling_mirror_plane(t_a, g_image, refl, sqrt_t_a=None, sym_tol=1e-12):
    """Couplings for a single body facing a flat mirror.

    g_image is the block between the body and its own mirror image.

    Returns
    -------
    (M, H) : M = (G J) T_A drives det(1 - M); H = sqrt(T_A) (G J)
    sqrt(T_A) is the similar symmetric form whose spectrum is read.
    """
    gj = refl.apply_right(g_image.block) / g_image.voxel_volume
    scale = np.abs(gj).max()
    asym = np.abs(gj - gj.T).max()
    if asym > sym_tol * max(scale, 1e-300):
        raise ScatteringError(
            f"coupling_mirror_plane: image kernel asymmetry {asym:.3e} exceeds tolerance")
    gj = (gj + gj.T) / 2
    m = gj @ t_a.matrix
    if sqrt_t_a is None:
        sqrt_t_a = sqrt_psd(t_a.matrix)
    h = sqrt_t_a @ gj @ sqrt_t_a
    return m, (h + h.T) / 2
