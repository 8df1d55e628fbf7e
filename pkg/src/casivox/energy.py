"""Casimir interaction energies, free energies, forces and spectra.

The zero-temperature interaction energy is the frequency integral

    E(a) = (1/2pi) integral_0^inf dxi  log det(1 - N(xi, a)),

with N = T_A G_AB T_B G_BA.  Spectra are always read from hermitian
similar forms: the singular values of sqrt(T_A) G_AB sqrt(T_B) squared
in general, or the eigenvalues of the symmetrized mirror coupling
Y = sqrt(T_A) G_AB J sqrt(T_A), which give the integrand as
sum log(1 - lambda_n**2).  A body facing a flat Dirichlet mirror uses
the single-power determinant det(1 - G J T_A) instead.

Finite temperature replaces the integral by the Matsubara sum
T * [f(0)/2 + sum_{n>=1} f(2 pi n T)]; the n=0 term is evaluated at
xi = 1e-6/a and treated as the limit (every implemented kernel stays
finite there once multiplied by the xi**2 of the T operator).

All energies are reported in units with hbar = c = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import scattering
from .scattering import ScatteringError, sqrt_psd, t_operator

QUAD_RULES = ("gauss-legendre", "gauss-laguerre")
MATSUBARA_XI_MIN_FACTOR = 1e-6
MATSUBARA_REL_CUT = 1e-12
MATSUBARA_MAX_TERMS = 200000


class EnergyError(ValueError):
    pass


class EigenvalueBoundError(EnergyError):
    """An interaction eigenvalue reached 1: the determinant hypothesis is
    violated, which signals a discretization or susceptibility bug."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Semi-infinite frequency quadrature.

    gauss-legendre maps t in (-1, 1) to xi = s (1+t)/(1-t); the scale s
    defaults to 1/a, which concentrates nodes where the e^(-2 a xi) decay
    of the integrand lives.  gauss-laguerre uses xi = s x / 2 against the
    e^(-x) weight.  ``rtol`` is the relative tolerance against which the
    node-halving error estimate is judged.
    """

    rule: str = "gauss-legendre"
    nodes: int = 24
    scale: float | None = None
    rtol: float = 1e-3

    def __post_init__(self):
        if self.rule not in QUAD_RULES:
            raise EnergyError(f"rule: expected one of {QUAD_RULES}, got {self.rule!r}")
        if self.nodes < 4:
            raise EnergyError("nodes: need at least 4 quadrature nodes")
        if self.scale is not None and not (self.scale > 0):
            raise EnergyError("scale: must be positive")

    def frequency_nodes(self, a):
        """Nodes and weights for integral_0^inf dxi at separation ``a``."""
        s = self.scale if self.scale is not None else 1.0 / a
        if self.rule == "gauss-legendre":
            t, wt = np.polynomial.legendre.leggauss(self.nodes)
            xi = s * (1 + t) / (1 - t)
            w = wt * 2 * s / (1 - t) ** 2
        else:
            x, wx = np.polynomial.laguerre.laggauss(self.nodes)
            xi = 0.5 * s * x
            w = 0.5 * s * wx * np.exp(x)
        return xi, w


@dataclass(frozen=True)
class EnergyResult:
    """One energy evaluation.

    value: energy in 1/length units (hbar = c = 1); nonpositive for every
    valid scenario.  per_node: (xi, integrand) pairs actually summed.
    quadrature_error_estimate: |value - value at half the node count| at
    T = 0, or the magnitude of the last Matsubara term kept.
    """

    value: float
    per_node: tuple
    quadrature_error_estimate: float
    flagged: bool
    a: float
    temperature: float = 0.0


@dataclass(frozen=True)
class ForceResult:
    """Central-difference force -dE/da; negative means attraction."""

    value: float
    flagged: bool
    step: float

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# per-frequency operators (cached on the scenario)


def _t_a(scn, xi):
    slot = scn.cache_slot(xi)
    t = slot.get("t_a")
    if t is None:
        g = scn.same_block("A", None, xi)
        t = t_operator(scn.body, scn.model, xi, g)
        slot["t_a"] = t
    return t


def _sqrt_t_a(scn, xi):
    slot = scn.cache_slot(xi)
    s = slot.get("sqrt_t_a")
    if s is None:
        s = sqrt_psd(_t_a(scn, xi).matrix)
        slot["sqrt_t_a"] = s
    return s


def _t_b(scn, xi, a):
    # partner blocks are invariant under the axial shifts that realize
    # different separations, so one build per frequency is reused
    slot = scn.cache_slot(xi)
    t = slot.get("t_b")
    if t is None:
        partner = scn.bodies_at(a)[1]
        g = scn.same_block("B", a, xi)
        t = t_operator(partner, scn.partner_model, xi, g)
        slot["t_b"] = t
    return t


def _sqrt_t_b(scn, xi, a):
    slot = scn.cache_slot(xi)
    s = slot.get("sqrt_t_b")
    if s is None:
        s = sqrt_psd(_t_b(scn, xi, a).matrix)
        slot["sqrt_t_b"] = s
    return s


def _mirror_eigs(scn, a, xi):
    y = scattering.coupling_mirror(_t_a(scn, xi), scn.cross_block(a, xi),
                                   scn.reflection(a), sqrt_t_a=_sqrt_t_a(scn, xi))
    return np.linalg.eigvalsh(y)[::-1]


def _plane_eigs(scn, a, xi):
    _, h = scattering.coupling_mirror_plane(_t_a(scn, xi), scn.cross_block(a, xi),
                                            scn.reflection(a), sqrt_t_a=_sqrt_t_a(scn, xi))
    return np.linalg.eigvalsh(h)[::-1]


def _general_eigs(scn, a, xi):
    """Spectrum of N = T_A G_AB T_B G_BA, descending.

    Uses singular values of sqrt(T_A) G_AB sqrt(T_B) when both operators
    are PSD; otherwise (deliberate negative-chi controls) falls back to
    the raw eigenvalues of N, which must come out real.
    """
    g_ab = scn.cross_block(a, xi)
    gab = g_ab.block / g_ab.voxel_volume
    try:
        x = _sqrt_t_a(scn, xi) @ gab @ _sqrt_t_b(scn, xi, a)
        return np.sort(np.linalg.svd(x, compute_uv=False) ** 2)[::-1]
    except ScatteringError:
        n = _t_a(scn, xi).matrix @ gab @ _t_b(scn, xi, a).matrix @ gab.T
        ev = np.linalg.eigvals(n)
        if np.abs(ev.imag).max() > 1e-8 * (1.0 + np.abs(ev.real).max()):
            raise EnergyError("spectrum: nonreal eigenvalues of the coupling matrix")
        return np.sort(ev.real)[::-1]


def n_spectrum(scn, a, xi):
    """Spectrum of the round-trip coupling N at (a, xi), descending.

    For symmetric mirror pairs this equals the squared spectrum of Y.
    No bound is enforced here; this is what the bound checks inspect.
    """
    if scn.mirror_plane:
        return _plane_eigs(scn, a, xi)
    if scn.symmetric:
        lam = _mirror_eigs(scn, a, xi)
        return np.sort(lam ** 2)[::-1]
    return _general_eigs(scn, a, xi)


def eigen_spectrum(scn, a, xi):
    """Eigenvalues of the symmetrized mirror coupling, sorted descending.

    Valid only on mirror and mirror-plane scenarios; every eigenvalue must
    lie in [-1e-12, 1).
    """
    if scn.mirror_plane:
        lam = _plane_eigs(scn, a, xi)
    elif scn.symmetric:
        lam = _mirror_eigs(scn, a, xi)
    else:
        raise EnergyError("spectrum: defined for mirror and mirror-plane scenarios")
    if lam[0] >= 1.0 or lam[-1] < -1e-12:
        raise EigenvalueBoundError(
            f"spectrum: eigenvalue outside [0, 1) at a={a}, xi={xi} "
            f"(min {lam[-1]:.3e}, max {lam[0]:.3e})")
    return lam


def integrand(scn, a, xi):
    """log det(1 - N) at one frequency; nonpositive for valid scenarios."""
    if xi <= 0:
        raise EnergyError("xi: integrand requires xi > 0")
    if scn.mirror_plane:
        lam = _plane_eigs(scn, a, xi)
        if lam[0] >= 1.0:
            raise EigenvalueBoundError(
                f"integrand: mirror-plane eigenvalue {lam[0]:.6f} >= 1 at xi={xi}")
        return float(np.sum(np.log1p(-lam)))
    if scn.symmetric:
        lam = _mirror_eigs(scn, a, xi)
        if lam[0] >= 1.0 or lam[-1] <= -1.0:
            raise EigenvalueBoundError(
                f"integrand: mirror eigenvalue outside (-1, 1) at xi={xi} "
                f"(min {lam[-1]:.6f}, max {lam[0]:.6f})")
        # det(1 - Y^2): split so log(1 - lam) stays accurate near lam -> 1
        return float(np.sum(np.log1p(-lam) + np.log1p(lam)))
    lam = _general_eigs(scn, a, xi)
    if lam[0] >= 1.0:
        raise EigenvalueBoundError(
            f"integrand: coupling eigenvalue {lam[0]:.6f} >= 1 at xi={xi}")
    return float(np.sum(np.log1p(-lam)))


def casimir_energy(scn, a, quad=None):
    """Zero-temperature interaction energy at separation ``a``.

    The error estimate compares against the same rule at half the node
    count; when it exceeds quad.rtol relative the result is flagged.
    """
    if quad is None:
        quad = QuadratureSpec()
    xi_full, w_full = quad.frequency_nodes(a)
    vals = np.array([integrand(scn, a, float(x)) for x in xi_full])
    value = float(w_full @ vals) / (2 * np.pi)
    half = replace(quad, nodes=max(4, quad.nodes // 2))
    xi_h, w_h = half.frequency_nodes(a)
    value_h = float(w_h @ [integrand(scn, a, float(x)) for x in xi_h]) / (2 * np.pi)
    err = abs(value - value_h)
    flagged = err > quad.rtol * abs(value) if value != 0.0 else err > quad.rtol
    return EnergyResult(value=value, per_node=tuple(zip(xi_full.tolist(), vals.tolist())),
                        quadrature_error_estimate=err, flagged=flagged, a=a,
                        temperature=0.0)


def free_energy_finite_T(scn, a, temperature, rel_cut=MATSUBARA_REL_CUT,
                         max_terms=MATSUBARA_MAX_TERMS):
    """Matsubara free energy T * [f(0)/2 + sum_{n>=1} f(2 pi n T)].

    Terms are added in order until one falls below ``rel_cut`` of the
    partial sum; hitting ``max_terms`` first flags the result.
    """
    if temperature <= 0:
        raise EnergyError("temperature: Matsubara sum requires T > 0")
    xi0 = MATSUBARA_XI_MIN_FACTOR / a
    f0 = integrand(scn, a, xi0)
    total = temperature * 0.5 * f0
    per_node = [(xi0, f0)]
    last = abs(temperature * f0)
    converged = False
    for n in range(1, max_terms + 1):
        f = integrand(scn, a, 2 * np.pi * n * temperature)
        term = temperature * f
        total += term
        per_node.append((2 * np.pi * n * temperature, f))
        last = abs(term)
        if n >= 2 and last <= rel_cut * max(abs(total), 1e-300):
            converged = True
            break
    return EnergyResult(value=total, per_node=tuple(per_node),
                        quadrature_error_estimate=last, flagged=not converged,
                        a=a, temperature=temperature)


def energy_at(scn, a, quad=None):
    """Energy dispatch: Matsubara sum when the scenario carries T > 0."""
    if scn.temperature > 0:
        return free_energy_finite_T(scn, a, scn.temperature)
    return casimir_energy(scn, a, quad)


def force(scn, a, step=None, quad=None):
    """Force -dE/da by a Richardson-refined central difference.

    All four stencil energies share one frequency scale (and therefore
    one set of cached body operators).  The result is flagged when the
    stacked quadrature error estimates are no smaller than the energy
    differences being resolved.
    """
    if quad is None:
        quad = QuadratureSpec()
    if quad.scale is None:
        quad = replace(quad, scale=1.0 / a)
    delta = step if step is not None else a / 50
    if not (0 < delta < a / 10):
        raise EnergyError("step: need 0 < step < a/10")
    e_p = energy_at(scn, a + delta, quad)
    e_m = energy_at(scn, a - delta, quad)
    e_p2 = energy_at(scn, a + delta / 2, quad)
    e_m2 = energy_at(scn, a - delta / 2, quad)
    d1 = (e_p.value - e_m.value) / (2 * delta)
    d2 = (e_p2.value - e_m2.value) / delta
    value = -(4 * d2 - d1) / 3
    results = (e_p, e_m, e_p2, e_m2)
    err = sum(r.quadrature_error_estimate for r in results)
    resolved = min(abs(e_p.value - e_m.value), abs(e_p2.value - e_m2.value))
    flagged = any(r.flagged for r in results) or err >= max(resolved, 1e-300)
    return ForceResult(value=value, flagged=flagged, step=delta)
