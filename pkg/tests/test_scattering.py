"""T operators and determinant couplings."""

import numpy as np
import pytest

from casivox.dielectric import DielectricModel, constant
from casivox.geometry import (
    Box,
    ReflectionPlane,
    reflect_body,
    reflection_matrix,
    voxelize,
)
from casivox.greens import assemble_block, g0_self
from casivox.scattering import (
    ScatteringError,
    coupling_general,
    coupling_mirror,
    coupling_mirror_plane,
    sqrt_psd,
    t_operator,
)


def single_voxel(d):
    lo = tuple(0.0 for _ in range(d - 1)) + (-0.1,)
    hi = tuple(0.1 for _ in range(d - 1)) + (0.0,)
    return voxelize(Box(lo=lo, hi=hi), h=0.1)


def make_pair(d=3, chi=2.0, a=0.6, h=0.25, field="scalar", nx=2):
    lo = tuple(0.0 for _ in range(d - 1)) + (-h * nx,)
    hi = tuple(h * nx for _ in range(d - 1)) + (0.0,)
    body = voxelize(Box(lo=lo, hi=hi), h=h)
    plane = ReflectionPlane(axis=d - 1, offset=a / 2)
    image = reflect_body(body, plane)
    refl = reflection_matrix(body, image, plane, field=field)
    kind = "em" if field == "em" else "scalar"
    model = constant(chi)
    return body, image, refl, kind, model


# ---------------------------------------------------------------------------
# T operator


@pytest.mark.parametrize("d", [1, 2, 3])
def test_single_voxel_scalar_closed_form(d):
    body = single_voxel(d)
    xi, chi, h = 1.3, 4.0, 0.1
    g = assemble_block(body, body, xi, kind="scalar")
    t = t_operator(body, constant(chi), xi, g)
    v = h ** d
    expected = xi ** 2 * chi * v / (1 + xi ** 2 * chi * v * g0_self(d, xi, h))
    assert t.matrix[0, 0] == pytest.approx(expected, rel=1e-12)
    assert t.frequency == xi
    assert t.chi == pytest.approx(chi)


def test_single_voxel_em_clausius_mossotti():
    body = single_voxel(3)
    xi, chi, h = 0.9, 2.5, 0.1
    g = assemble_block(body, body, xi, kind="em")
    t = t_operator(body, constant(chi), xi, g)
    # point polarizability alpha = 3 V chi / (3 + chi); T = xi^2 alpha
    alpha = 3 * h ** 3 * chi / (3 + chi)
    np.testing.assert_allclose(t.matrix, xi ** 2 * alpha * np.eye(3), rtol=1e-12)


def test_t_operator_symmetric_psd():
    body, image, refl, kind, model = make_pair(d=3, chi=3.0)
    for xi in (0.1, 0.7, 2.0, 8.0):
        g = assemble_block(body, body, xi, kind=kind)
        t = t_operator(body, model, xi, g).matrix
        assert np.max(np.abs(t - t.T)) < 1e-12 * np.max(np.abs(t))
        evals = np.linalg.eigvalsh(t)
        assert evals[0] > 0


def test_t_operator_frequency_mismatch():
    body = single_voxel(1)
    g = assemble_block(body, body, 1.0, kind="scalar")
    with pytest.raises(ScatteringError):
        t_operator(body, constant(1.0), 2.0, g)


# ---------------------------------------------------------------------------
# sqrt_psd


def test_sqrt_psd_roundtrip():
    rng = np.random.default_rng(5)
    m = rng.standard_normal((12, 12))
    mat = m @ m.T
    root = sqrt_psd(mat)
    np.testing.assert_allclose(root @ root, mat, atol=1e-10 * np.linalg.norm(mat))
    np.testing.assert_allclose(root, root.T, atol=1e-12)


def test_sqrt_psd_clips_tiny_negatives_and_rejects_indefinite():
    mat = np.diag([1.0, 1e-18, -1e-16])
    root = sqrt_psd(mat)
    assert np.all(np.diag(root) >= 0)
    with pytest.raises(ScatteringError):
        sqrt_psd(np.diag([1.0, -0.5]))


# ---------------------------------------------------------------------------
# couplings


def assemble_coupling(field, chi, a=0.7):
    body, image, refl, kind, model = make_pair(d=3, chi=chi, a=a, field=field)
    xi = 1.1
    g_aa = assemble_block(body, body, xi, kind=kind)
    g_bb = assemble_block(image, image, xi, kind=kind)
    g_ab = assemble_block(body, image, xi, kind=kind)
    g_ba = assemble_block(image, body, xi, kind=kind)
    t_a = t_operator(body, model, xi, g_aa)
    t_b = t_operator(image, model, xi, g_bb)
    return t_a, t_b, g_ab, g_ba, refl


@pytest.mark.parametrize("field", ["scalar", "em"])
def test_mirror_consistency(field):
    t_a, t_b, g_ab, g_ba, refl = assemble_coupling(field, chi=2.0)
    n, s = coupling_general(t_a, g_ab, t_b, g_ba)
    y = coupling_mirror(t_a, g_ab, refl)
    sign, logdet_n = np.linalg.slogdet(np.eye(n.shape[0]) - n)
    assert sign > 0
    lam = np.linalg.eigvalsh(y)
    logdet_y2 = np.sum(np.log1p(-lam ** 2))
    assert abs(logdet_n - logdet_y2) < 1e-8 * abs(logdet_n)


@pytest.mark.parametrize("field", ["scalar", "em"])
def test_born_limit_logdet_equals_trace(field):
    t_a, t_b, g_ab, g_ba, refl = assemble_coupling(field, chi=1e-3)
    n, _ = coupling_general(t_a, g_ab, t_b, g_ba)
    sign, logdet = np.linalg.slogdet(np.eye(n.shape[0]) - n)
    tr = np.trace(n)
    assert sign > 0
    assert abs(logdet + tr) < 5e-3 * abs(tr)


def test_symmetric_twin_is_similar_to_n():
    t_a, t_b, g_ab, g_ba, refl = assemble_coupling("scalar", chi=2.0)
    n, s = coupling_general(t_a, g_ab, t_b, g_ba)
    np.testing.assert_allclose(s, s.T, atol=1e-15)
    sym_eigs = np.sort(np.linalg.eigvalsh(s))
    eigs = np.sort(np.linalg.eigvals(n).real)
    np.testing.assert_allclose(sym_eigs, eigs, rtol=1e-9, atol=1e-13)


def test_spectrum_in_unit_interval():
    for chi in (0.5, 5.0, 500.0):
        t_a, t_b, g_ab, g_ba, refl = assemble_coupling("scalar", chi=chi)
        y = coupling_mirror(t_a, g_ab, refl)
        lam = np.linalg.eigvalsh(y)
        assert lam.min() >= 0.0
        assert lam.max() < 1.0


def test_coupling_mirror_rejects_asymmetric_product():
    t_a, t_b, g_ab, g_ba, refl = assemble_coupling("scalar", chi=2.0)
    bad = g_ab.block.copy()
    bad[0, 1] *= 1.5
    from casivox.greens import KernelMatrix
    bad_km = KernelMatrix(block=bad, frequency=g_ab.frequency, kind=g_ab.kind,
                          voxel_volume=g_ab.voxel_volume)
    with pytest.raises(ScatteringError):
        coupling_mirror(t_a, bad_km, refl)


def test_mirror_plane_coupling_spectrum():
    # body before a flat mirror: H = sqrt(T) (G J) sqrt(T) has spectrum in [0, 1)
    body = voxelize(Box(lo=(-0.1,), hi=(0.0,)), h=0.1)
    a = 0.8
    plane = ReflectionPlane(axis=0, offset=a / 2)
    image = reflect_body(body, plane)
    refl = reflection_matrix(body, image, plane)
    xi = 0.9
    model = constant(50.0)
    g_aa = assemble_block(body, body, xi, kind="scalar")
    g_img = assemble_block(body, image, xi, kind="scalar")
    t_a = t_operator(body, model, xi, g_aa)
    m, h_sym = coupling_mirror_plane(t_a, g_img, refl)
    lam = np.linalg.eigvalsh(h_sym)
    assert lam.min() >= 0
    assert lam.max() < 1.0
    # symmetrized form is similar to the plain product
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(m).real), np.sort(lam),
                               rtol=1e-9, atol=1e-13)


def test_negative_chi_general_path():
    body, image, refl, kind, model = make_pair(d=3, chi=2.0)
    bad_model = DielectricModel(kind="constant", chi0=2.0, strength_scale=-1.0,
                                allow_negative=True)
    xi = 1.1
    g_aa = assemble_block(body, body, xi, kind=kind)
    t_bad = t_operator(body, bad_model, xi, g_aa)
    # the corrupted operator is negative definite: sqrt must refuse it
    with pytest.raises(ScatteringError):
        sqrt_psd(t_bad.matrix)
