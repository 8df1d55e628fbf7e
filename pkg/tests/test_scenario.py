"""Scenario construction rules and body placement conventions."""

import numpy as np
import pytest

import casivox
from casivox.scenario import Scenario, ScenarioError


def box1(lo=-0.1, hi=0.0, h=0.1):
    return casivox.voxelize(casivox.Box(lo=(lo,), hi=(hi,)), h=h)


def box3(h=0.25):
    return casivox.voxelize(casivox.Box(lo=(0.0, 0.0, -0.5), hi=(0.5, 0.5, 0.0)), h=h)


def test_exactly_one_pairing_required():
    body, model = box1(), casivox.constant(2.0)
    with pytest.raises(ScenarioError):
        Scenario(body=body, model=model, mirror=True, mirror_plane=True)
    with pytest.raises(ScenarioError):
        Scenario(body=body, model=model, mirror=True, body_b=box1())
    with pytest.raises(ScenarioError):
        Scenario(body=body, model=model, mirror=False)


def test_field_and_dimension_rules():
    model = casivox.constant(2.0)
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box1(), model, field_kind="em")  # em needs d=3
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box3(), model, field_kind="spinor")
    with pytest.raises(ScenarioError):
        Scenario(body=box3(), model=model, mirror=False, mirror_plane=True,
                 field_kind="em")  # the flat-mirror pairing is scalar-only
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box1(), model, temperature=-0.1)
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box1(), model, separations=(0.5, -0.5))
    with pytest.raises(ScenarioError):
        casivox.two_body(box1(), box1(h=0.05), model)  # voxel edge mismatch


def test_template_normalized_to_axis_origin():
    body = casivox.voxelize(casivox.Box(lo=(0.0, 0.0, 3.0), hi=(0.5, 0.5, 3.5)), h=0.25)
    scn = casivox.mirror_pair(body, casivox.constant(2.0))
    assert scn.body.extent(2)[1] == pytest.approx(0.0, abs=1e-12)


def test_bodies_at_places_surface_gap_exactly():
    scn = casivox.mirror_pair(box3(), casivox.constant(2.0))
    a = 0.6
    body_a, partner, plane = scn.bodies_at(a)
    assert plane is not None and plane.offset == a / 2
    assert casivox.min_separation(body_a, partner) == pytest.approx(a, abs=1e-12)

    pair = casivox.two_body(box3(), box3(), casivox.constant(2.0))
    body_a, partner, plane = pair.bodies_at(a)
    assert plane is None
    assert casivox.min_separation(body_a, partner) == pytest.approx(a, abs=1e-12)

    with pytest.raises(ScenarioError):
        scn.bodies_at(0.0)


def test_explicit_pair_valid_at_subvoxel_gap():
    # templates are axis-normalized, so any positive gap is collision-free
    long_box = casivox.voxelize(casivox.Box(lo=(0.0,), hi=(0.5,)), h=0.1)
    pair = casivox.two_body(box1(), long_box, casivox.constant(2.0))
    body_a, partner, _ = pair.bodies_at(0.05)
    assert casivox.min_separation(body_a, partner) == pytest.approx(0.05, abs=1e-12)


def test_cylinder_confinement_rules():
    spec = casivox.CylinderSpec(Lx=1.0, Ly=1.0, bc="dirichlet")
    model = casivox.constant(2.0)
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box1(), model, cylinder=spec)  # d=3 only
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box3(), model, field_kind="em", cylinder=spec)
    with pytest.raises(ScenarioError):
        casivox.mirror_pair(box3(), model, cylinder=spec)  # touches the walls
    centered = casivox.voxelize(casivox.Box(lo=(0.25, 0.25, -0.5), hi=(0.75, 0.75, 0.0)),
                                h=0.25)
    scn = casivox.mirror_pair(centered, model, cylinder=spec)
    assert scn.cylinder is spec


def test_symmetric_property_and_corrupted_partner():
    scn = casivox.mirror_pair(box3(), casivox.constant(2.0))
    assert scn.symmetric
    bad = scn.corrupted_partner()
    assert not bad.symmetric
    assert bad.partner_model.strength_scale == -scn.model.strength_scale
    assert bad.partner_model.chi(1.0) < 0
    assert bad.label.endswith("corrupted")
    # original untouched
    assert scn.model.chi(1.0) > 0


def test_reflection_operator_cached_per_separation():
    scn = casivox.mirror_pair(box3(), casivox.constant(2.0))
    op1 = scn.reflection(0.6)
    op2 = scn.reflection(0.6)
    assert op1 is op2
    assert scn.reflection(0.8) is not op1
    pair = casivox.two_body(box3(), box3(), casivox.constant(2.0))
    with pytest.raises(ScenarioError):
        pair.reflection(0.6)
