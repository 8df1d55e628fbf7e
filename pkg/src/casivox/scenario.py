"""Declarative two-body / body-plus-mirror problem descriptions.

Placement convention: body A is a template on the negative side of the
distinguished axis with its near surface at coordinate 0 (templates are
shifted there on construction).  At separation ``a``:

- mirror pairs put the reflection plane at a/2, so body B = J(A) has its
  near surface at ``a`` and the surface-to-surface gap is exactly ``a``;
- mirror-plane scenarios put the Dirichlet wall at a/2, so the image body
  sits at distance ``a`` (twice the wall clearance);
- explicit (non-mirror) partners are templates aligned to start at 0 on
  the positive side and are rigidly shifted by ``a``.

Keeping A fixed while only the partner moves lets per-frequency body
operators be reused across separations, force stencils and ladders.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field, replace

import numpy as np

from . import dielectric
from .cylinder import CylinderError, CylinderSpec
from .geometry import (GeometryError, ReflectionPlane, VoxelBody, min_separation,
                       reflect_body, reflection_matrix)

FIELD_KINDS = ("scalar", "em")

# per-frequency operator cache entries kept per scenario (LRU)
XI_CACHE_CAP = 40


class ScenarioError(ValueError):
    pass


def _unit_shift(dim, axis, value):
    shift = np.zeros(dim)
    shift[axis] = value
    return shift


@dataclass
class Scenario:
    """Immutable-after-construction problem description.

    Exactly one of the three pairings applies: ``mirror`` (B = J(A)),
    ``mirror_plane`` (A facing a Dirichlet wall), or an explicit
    ``body_b``.  ``model_b`` defaults to ``model``; it only matters for
    the explicit pairing and for deliberately corrupted mirror controls.
    """

    body: VoxelBody
    model: dielectric.DielectricModel
    field_kind: str = "scalar"
    mirror: bool = True
    mirror_plane: bool = False
    body_b: VoxelBody | None = None
    model_b: dielectric.DielectricModel | None = None
    axis: int = -1
    cylinder: CylinderSpec | None = None
    temperature: float = 0.0
    separations: tuple = ()
    label: str = "scenario"
    _xi_cache: OrderedDict = field(default_factory=OrderedDict, repr=False, compare=False)
    _refl_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.field_kind not in FIELD_KINDS:
            raise ScenarioError(f"field: expected one of {FIELD_KINDS}, got {self.field_kind!r}")
        d = self.body.dimension
        if self.field_kind == "em" and d != 3:
            raise ScenarioError("field: em requires d=3 bodies")
        self.axis = self.axis % d
        modes = int(self.mirror) + int(self.mirror_plane) + int(self.body_b is not None)
        if modes != 1:
            raise ScenarioError(
                "bodies: exactly one of mirror, mirror_plane, or an explicit body_b is required")
        if self.mirror_plane and self.field_kind != "scalar":
            raise ScenarioError("mirror_plane: implemented for scalar fields only")
        if self.cylinder is not None:
            if self.field_kind != "scalar" or d != 3:
                raise ScenarioError("cylinder: confinement is scalar d=3 only")
        if self.temperature < 0:
            raise ScenarioError("temperature: must be 0 (vacuum) or positive")
        if any(a <= 0 for a in self.separations):
            raise ScenarioError("separations: all must be positive")
        hi = self.body.extent(self.axis)[1]
        self.body = self.body.translated(_unit_shift(d, self.axis, -hi))
        if self.body_b is not None:
            if self.body_b.dimension != d or self.body_b.h != self.body.h:
                raise ScenarioError("body_b: dimension and voxel edge must match body A")
            lo = self.body_b.extent(self.axis)[0]
            self.body_b = self.body_b.translated(_unit_shift(d, self.axis, -lo))
        if self.cylinder is not None:
            half = self.body.h / 2
            for b in (self.body, self.body_b):
                if b is None:
                    continue
                perp = b.centers[:, self.perp_axes]
                ok = (np.all(perp[:, 0] - half > 0) and np.all(perp[:, 0] + half < self.cylinder.Lx)
                      and np.all(perp[:, 1] - half > 0) and np.all(perp[:, 1] + half < self.cylinder.Ly))
                if not ok:
                    raise ScenarioError("cylinder: bodies must sit strictly inside the walls")

    # -- derived structure ---------------------------------------------------

    @property
    def dimension(self):
        return self.body.dimension

    @property
    def perp_axes(self):
        return [k for k in range(self.dimension) if k != self.axis]

    @property
    def partner_model(self):
        return self.model_b if self.model_b is not None else self.model

    @property
    def symmetric(self):
        """True when the mirror partner carries the same response, so the
        symmetrized single-body (Y) path is valid."""
        return self.mirror and (self.model_b is None or self.model_b == self.model)

    def bodies_at(self, a):
        """Bodies and reflection plane at separation ``a``.

        Returns (body_a, partner, plane); the partner is the mirror image,
        the image body (mirror_plane), or the shifted explicit partner.
        """
        if a <= 0:
            raise ScenarioError("a: separation must be positive")
        plane = ReflectionPlane(axis=self.axis, offset=a / 2)
        if self.mirror or self.mirror_plane:
            partner = reflect_body(self.body, plane)
            return self.body, partner, plane
        partner = self.body_b.translated(_unit_shift(self.dimension, self.axis, a))
        if min_separation(self.body, partner) <= 0:
            raise ScenarioError(f"a: bodies overlap at separation {a}")
        return self.body, partner, None

    def reflection(self, a):
        """Discrete reflection operator A -> partner at separation ``a``."""
        if not (self.mirror or self.mirror_plane):
            raise ScenarioError("reflection: scenario has no mirror structure")
        op = self._refl_cache.get(a)
        if op is None:
            body_a, partner, plane = self.bodies_at(a)
            op = reflection_matrix(body_a, partner, plane, field=self.field_kind)
            self._refl_cache[a] = op
        return op

    def cross_block(self, a, xi):
        """Kernel block between A and its partner (or image) at (a, xi)."""
        from . import greens

        body_a, partner, _ = self.bodies_at(a)
        return greens.assemble_block(body_a, partner, xi, self.field_kind,
                                     spec=self.cylinder, axis=self.axis)

    def same_block(self, which, a, xi):
        """Same-body kernel block; which is 'A' or 'B'."""
        from . import greens

        if which == "A":
            body = self.body
        else:
            body = self.bodies_at(a)[1]
        return greens.assemble_block(body, body, xi, self.field_kind,
                                     spec=self.cylinder, axis=self.axis)

    def cache_slot(self, xi):
        """Per-frequency operator store (LRU-capped); energy fills it."""
        slot = self._xi_cache.get(xi)
        if slot is None:
            slot = {}
            self._xi_cache[xi] = slot
            if len(self._xi_cache) > XI_CACHE_CAP:
                self._xi_cache.popitem(last=False)
        else:
            self._xi_cache.move_to_end(xi)
        return slot

    def corrupted_partner(self):
        """Copy with the partner's susceptibility sign-flipped: the standard
        negative control that must fail the eigenvalue bound check."""
        bad = replace(self.partner_model,
                      strength_scale=-self.partner_model.strength_scale,
                      allow_negative=True)
        return Scenario(body=self.body, model=self.model, field_kind=self.field_kind,
                        mirror=self.mirror, mirror_plane=self.mirror_plane,
                        body_b=self.body_b, model_b=bad, axis=self.axis,
                        cylinder=self.cylinder, temperature=self.temperature,
                        separations=self.separations, label=self.label + "+corrupted")


def two_body(body_a, body_b, model_a, model_b=None, field_kind="scalar", axis=-1,
             cylinder=None, temperature=0.0, separations=(), label="pair"):
    """Explicit (not necessarily mirror-symmetric) two-body scenario."""
    return Scenario(body=body_a, model=model_a, field_kind=field_kind, mirror=False,
                    body_b=body_b, model_b=model_b, axis=axis, cylinder=cylinder,
                    temperature=temperature, separations=separations, label=label)


def mirror_pair(body, model, field_kind="scalar", axis=-1, cylinder=None,
                temperature=0.0, separations=(), label="mirror-pair"):
    """Mirror pair: partner is the reflection of ``body``."""
    return Scenario(body=body, model=model, field_kind=field_kind, mirror=True,
                    axis=axis, cylinder=cylinder, temperature=temperature,
                    separations=separations, label=label)


def before_mirror(body, model, axis=-1, temperature=0.0, separations=(),
                  label="before-mirror"):
    """Single scalar body facing a flat Dirichlet mirror."""
    return Scenario(body=body, model=model, field_kind="scalar", mirror=False,
                    mirror_plane=True, axis=axis, temperature=temperature,
                    separations=separations, label=label)
