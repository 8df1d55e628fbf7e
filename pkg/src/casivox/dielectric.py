"""Dielectric response on the imaginary frequency axis.

Everything downstream evaluates the susceptibility only at imaginary
frequencies ``omega = i*xi`` with ``xi > 0``, where causal passive media
have chi real, nonnegative and non-increasing.  That positivity is the
hypothesis behind every bound certified in ``theorem``, so evaluation
rejects negative values unless a model is explicitly marked as a
deliberate hypothesis-violation control.

Units: ``hbar = c = 1``; frequencies carry units of inverse length.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

KINDS = ("constant", "drude", "lorentz")


class DielectricError(ValueError):
    pass


@dataclass(frozen=True)
class DielectricModel:
    """Susceptibility model chi(i*xi), constant per body.

    kind selects the closed form:

    - constant: chi0
    - drude:    omega_p**2 / (xi*(xi + gamma))
    - lorentz:  omega_p**2 / (omega_0**2 + xi**2 + gamma*xi)

    all multiplied by ``strength_scale`` (the conductor-ladder knob).
    ``allow_negative`` exists only so tests can push a sign-flipped chi
    through the machinery and watch the bound checks fail.
    """

    kind: str
    chi0: float = 0.0
    omega_p: float = 0.0
    omega_0: float = 0.0
    gamma: float = 0.0
    strength_scale: float = 1.0
    allow_negative: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DielectricError(f"kind: expected one of {KINDS}, got {self.kind!r}")
        for name in ("chi0", "omega_p", "omega_0", "gamma", "strength_scale"):
            if not np.isfinite(getattr(self, name)):
                raise DielectricError(f"{name}: must be finite")
        if self.kind == "constant":
            if self.chi0 * self.strength_scale < 0 and not self.allow_negative:
                raise DielectricError("chi0: negative susceptibility violates the positivity hypothesis")
        else:
            if self.gamma < 0:
                raise DielectricError("gamma: damping must be nonnegative")
            if self.omega_0 < 0:
                raise DielectricError("omega_0: resonance frequency must be nonnegative")
            if self.strength_scale < 0 and not self.allow_negative:
                raise DielectricError("strength_scale: negative scale violates the positivity hypothesis")

    def chi(self, xi):
        """Evaluate chi(i*xi).

        Parameters
        ----------
        xi : float or array
            Imaginary frequency, strictly positive.

        Returns
        -------
        float or array, same shape as ``xi``.
        """
        xi = np.asarray(xi, dtype=float)
        if np.any(xi <= 0):
            raise DielectricError("xi: evaluation requires xi > 0")
        if self.kind == "constant":
            out = np.full_like(xi, self.chi0)
        elif self.kind == "drude":
            out = self.omega_p ** 2 / (xi * (xi + self.gamma))
        else:
            out = self.omega_p ** 2 / (self.omega_0 ** 2 + xi ** 2 + self.gamma * xi)
        out = out * self.strength_scale
        if np.any(out < 0) and not self.allow_negative:
            raise DielectricError("chi: negative value violates the positivity hypothesis")
        if out.ndim == 0:
            return float(out)
        return out

    def scaled(self, factor):
        """Same model with strength_scale multiplied by ``factor``."""
        return dataclasses.replace(self, strength_scale=self.strength_scale * factor)


def constant(chi0, strength_scale=1.0, allow_negative=False):
    return DielectricModel(kind="constant", chi0=chi0, strength_scale=strength_scale,
                           allow_negative=allow_negative)


def drude(omega_p, gamma, strength_scale=1.0):
    return DielectricModel(kind="drude", omega_p=omega_p, gamma=gamma,
                           strength_scale=strength_scale)


def lorentz(omega_p, omega_0, gamma, strength_scale=1.0):
    return DielectricModel(kind="lorentz", omega_p=omega_p, omega_0=omega_0,
                           gamma=gamma, strength_scale=strength_scale)


def chi_at(model, xi):
    """Functional form of ``model.chi`` (kept for symmetry with the ops)."""
    return model.chi(xi)


def dirichlet_limit_schedule(base, steps, factor=10.0):
    """Geometric strength ladder toward the conductor limit.

    Parameters
    ----------
    base : DielectricModel
    steps : int
        Number of models returned, ladder starts at ``base`` itself.
    factor : float
        Multiplier per step (default 10).

    Returns
    -------
    list of DielectricModel with strength_scale multiplied by
    factor**k for k = 0 .. steps-1.
    """
    if steps < 2:
        raise DielectricError("steps: ladder needs at least 2 rungs")
    if factor <= 1:
        raise DielectricError("factor: ladder must increase")
    return [base.scaled(factor ** k) for k in range(steps)]
