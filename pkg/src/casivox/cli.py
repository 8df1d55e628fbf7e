"""Batch front end: config ingestion, presets, sweeps, CSV and report
emission.

A scenario is described by a flat JSON document (units: hbar = c = 1,
lengths in an arbitrary unit L, energies in 1/L).  Outputs per run, in
the chosen directory:

- resolved_config.json : the fully defaulted config (re-parses to itself)
- checks.txt           : one line per certification check
- energies.csv         : a, E, error_estimate, force  (unless --check-only)
- spectrum.csv         : a, xi, n, lambda_n            (with --spectrum)

Exit status: 0 ok; 1 config error; 2 a check failed; 3 a quadrature or
truncation flag was raised.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import os
import sys

import numpy as np
from threadpoolctl import threadpool_limits

from . import dielectric, energy, geometry, theorem
from .cylinder import CylinderSpec
from .scenario import Scenario

SPECTRUM_XI_FACTORS = (0.25, 0.5, 1.0, 2.0, 4.0)
FMT = "%.17g"


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config parsing


def _get(cfg, key, default=None, required=False):
    if key in cfg:
        return cfg[key]
    if required:
        raise ConfigError(f"{key}: required field is missing")
    return default


def _build_model(md, where):
    if not isinstance(md, dict):
        raise ConfigError(f"{where}: model must be an object")
    kind = _get(md, "kind", required=True)
    scale = float(_get(md, "strength_scale", 1.0))
    try:
        if kind == "constant":
            return dielectric.constant(float(_get(md, "chi0", required=True)), scale)
        if kind == "drude":
            return dielectric.drude(float(_get(md, "omega_p", required=True)),
                                    float(_get(md, "gamma", 0.0)), scale)
        if kind == "lorentz":
            return dielectric.lorentz(float(_get(md, "omega_p", required=True)),
                                      float(_get(md, "omega_0", required=True)),
                                      float(_get(md, "gamma", 0.0)), scale)
    except dielectric.DielectricError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown model kind {kind!r}")


def _build_shape(sd, d, h, axis, seed, where):
    if not isinstance(sd, dict):
        raise ConfigError(f"{where}: shape must be an object")
    kind = _get(sd, "kind", required=True)
    try:
        if kind == "box":
            size = np.asarray(_get(sd, "size", required=True), dtype=float)
            center = np.asarray(_get(sd, "center", [0.0] * d), dtype=float)
            if size.shape != (d,) or center.shape != (d,):
                raise ConfigError(f"{where}.size/center: expected {d} components")
            return geometry.voxelize(
                geometry.Box(lo=tuple(center - size / 2), hi=tuple(center + size / 2)), h)
        if kind == "ball":
            center = _get(sd, "center", [0.0] * d)
            return geometry.voxelize(
                geometry.Ball(center=tuple(center), radius=float(_get(sd, "radius", required=True))), h)
        if kind == "hemisphere":
            return geometry.voxelize(
                geometry.Hemisphere(radius=float(_get(sd, "radius", required=True)),
                                    axis=axis, face=0.0, side=-1,
                                    center_perp=tuple(_get(sd, "center_perp", [0.0] * (d - 1))),
                                    dimension=d), h)
        if kind == "point_set":
            return geometry.voxelize(
                geometry.PointSet(centers=tuple(map(tuple, _get(sd, "centers", required=True)))), h)
        if kind == "blob":
            if seed is None:
                raise ConfigError("seed: blob shapes need a seed for reproducibility")
            return geometry.random_blob(int(_get(sd, "cells", required=True)), h, seed,
                                        dimension=d, axis=axis,
                                        halfwidth=int(_get(sd, "halfwidth", 3)),
                                        depth=int(_get(sd, "depth", 4)))
    except geometry.GeometryError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown shape kind {kind!r}")


def build_scenario(cfg):
    """Validate a config dict and build the scenario it describes.

    Returns
    -------
    (scenario, resolved, ladder) : the Scenario, the fully defaulted
    round-trippable config dict, and the strength ladder (list of scale
    factors, possibly just [1.0]).
    """
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    field_kind = _get(cfg, "field", "scalar")
    if field_kind not in ("scalar", "em"):
        raise ConfigError(f"field: expected 'scalar' or 'em', got {field_kind!r}")
    d = int(_get(cfg, "dimension", 3))
    if d not in (1, 2, 3):
        raise ConfigError("dimension: expected 1, 2 or 3")
    if field_kind == "em" and d != 3:
        raise ConfigError("dimension: field 'em' requires dimension 3")
    h = float(_get(cfg, "h", required=True))
    if h <= 0:
        raise ConfigError("h: voxel edge must be positive")
    axis = int(_get(cfg, "axis", d - 1)) % d
    seed = _get(cfg, "seed")
    mirror = bool(_get(cfg, "mirror", True))
    mirror_plane = bool(_get(cfg, "mirror_plane", False))
    if mirror_plane:
        mirror = False
    bodies = _get(cfg, "bodies", required=True)
    if not isinstance(bodies, list) or not bodies:
        raise ConfigError("bodies: expected a nonempty list")
    want = 1 if (mirror or mirror_plane) else 2
    if len(bodies) != want:
        raise ConfigError(f"bodies: this pairing needs exactly {want} entr"
                          f"{'y' if want == 1 else 'ies'}, got {len(bodies)}")
    built = []
    for i, bd in enumerate(bodies):
        if not isinstance(bd, dict):
            raise ConfigError(f"bodies[{i}]: expected an object")
        body = _build_shape(_get(bd, "shape", required=True), d, h, axis, seed,
                            f"bodies[{i}].shape")
        model = _build_model(_get(bd, "model", required=True), f"bodies[{i}].model")
        built.append((body, model))
    separations = [float(a) for a in _get(cfg, "separations", required=True)]
    if not separations or any(a <= 0 for a in separations):
        raise ConfigError("separations: need a nonempty list of positive lengths")
    temperature = float(_get(cfg, "temperature", 0.0))
    if temperature < 0:
        raise ConfigError("temperature: must be 0 or positive")
    qd = _get(cfg, "quadrature", {})
    try:
        quad = energy.QuadratureSpec(rule=_get(qd, "rule", "gauss-legendre"),
                                     nodes=int(_get(qd, "nodes", 24)),
                                     scale=(None if _get(qd, "scale") is None
                                            else float(qd["scale"])),
                                     rtol=float(_get(qd, "rtol", 1e-3)))
    except energy.EnergyError as exc:
        raise ConfigError(f"quadrature: {exc}") from exc
    cyl_d = _get(cfg, "cylinder")
    cyl = None
    if cyl_d is not None:
        try:
            cyl = CylinderSpec(Lx=float(_get(cyl_d, "Lx", required=True)),
                               Ly=float(_get(cyl_d, "Ly", required=True)),
                               bc=_get(cyl_d, "bc", "dirichlet"),
                               mode_cutoff=(None if _get(cyl_d, "mode_cutoff") is None
                                            else int(cyl_d["mode_cutoff"])))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"cylinder: {exc}") from exc
    ladder = _get(cfg, "strength_ladder")
    if ladder is not None:
        ladder = [float(s) for s in ladder]
        if not ladder or any(s <= 0 for s in ladder):
            raise ConfigError("strength_ladder: need positive scale factors")
    label = str(_get(cfg, "label", _get(cfg, "preset", "scenario")))
    try:
        scn = Scenario(body=built[0][0], model=built[0][1], field_kind=field_kind,
                       mirror=mirror, mirror_plane=mirror_plane,
                       body_b=built[1][0] if want == 2 else None,
                       model_b=built[1][1] if want == 2 else None,
                       axis=axis, cylinder=cyl, temperature=temperature,
                       separations=tuple(separations), label=label)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    resolved = _resolve(cfg, field_kind, d, h, axis, seed, mirror, mirror_plane,
                        bodies, separations, temperature, quad, cyl_d, ladder, label)
    return scn, resolved, (ladder if ladder is not None else [1.0])


def _resolve(cfg, field_kind, d, h, axis, seed, mirror, mirror_plane, bodies,
             separations, temperature, quad, cyl_d, ladder, label):
    return {
        "field": field_kind,
        "dimension": d,
        "h": h,
        "axis": axis,
        "seed": seed,
        "mirror": mirror,
        "mirror_plane": mirror_plane,
        "bodies": copy.deepcopy(bodies),
        "separations": separations,
        "temperature": temperature,
        "quadrature": {"rule": quad.rule, "nodes": quad.nodes,
                       "scale": quad.scale, "rtol": quad.rtol},
        "cylinder": copy.deepcopy(cyl_d),
        "strength_ladder": ladder,
        "label": label,
    }


def _rescaled(scn, factor):
    if factor == 1.0:
        return scn
    return Scenario(body=scn.body, model=scn.model.scaled(factor),
                    field_kind=scn.field_kind, mirror=scn.mirror,
                    mirror_plane=scn.mirror_plane, body_b=scn.body_b,
                    model_b=None if scn.model_b is None else scn.model_b.scaled(factor),
                    axis=scn.axis, cylinder=scn.cylinder,
                    temperature=scn.temperature, separations=scn.separations,
                    label=f"{scn.label} x{factor:g}")


# ---------------------------------------------------------------------------
# presets


def presets():
    """Built-in scenario configs keyed by name."""
    return {
        "hemispheres": {
            "label": "hemispheres",
            "field": "scalar", "dimension": 3, "h": 0.2, "mirror": True,
            "bodies": [{"shape": {"kind": "hemisphere", "radius": 1.0},
                        "model": {"kind": "constant", "chi0": 3.0}}],
            "separations": [0.4, 0.6, 0.8, 1.0, 1.2, 1.4],
            "quadrature": {"nodes": 24, "scale": 1.0},
        },
        "em-cubes": {
            "label": "em-cubes",
            "field": "em", "dimension": 3, "h": 0.25, "mirror": True,
            "bodies": [{"shape": {"kind": "box", "size": [1.0, 1.0, 1.0]},
                        "model": {"kind": "constant", "chi0": 2.0}}],
            "separations": [0.5, 0.75, 1.0, 1.25, 1.5, 2.0],
            "quadrature": {"nodes": 24, "scale": 1.0},
        },
        "1d-dirichlet-ladder": {
            "label": "1d-dirichlet-ladder",
            "field": "scalar", "dimension": 1, "h": 0.0625, "mirror": True,
            "bodies": [{"shape": {"kind": "box", "size": [0.0625]},
                        "model": {"kind": "constant", "chi0": 800.0}}],
            "separations": [1.0, 2.0, 4.0],
            "strength_ladder": [1.0, 10.0, 100.0, 1000.0, 10000.0],
            "quadrature": {"nodes": 48, "rtol": 0.01},
        },
        "casimir-polder": {
            "label": "casimir-polder",
            "field": "em", "dimension": 3, "h": 0.5, "mirror": True,
            "bodies": [{"shape": {"kind": "ball", "radius": 0.125},
                        "model": {"kind": "constant", "chi0": 0.1}}],
            "separations": [10.0, 15.0, 22.0, 32.0, 46.0, 68.0, 100.0],
            "quadrature": {"nodes": 32},
        },
        "piston-rect": {
            "label": "piston-rect",
            "field": "scalar", "dimension": 3, "h": 0.25, "mirror": True,
            "cylinder": {"Lx": 2.0, "Ly": 2.0, "bc": "dirichlet"},
            "bodies": [{"shape": {"kind": "box", "size": [0.5, 0.5, 0.5],
                                  "center": [1.0, 1.0, 0.0]},
                        "model": {"kind": "constant", "chi0": 2.0}}],
            "separations": [0.5, 0.75, 1.0, 1.25],
            "quadrature": {"nodes": 24, "scale": 1.25},
        },
        "mirror-plane": {
            "label": "mirror-plane",
            "field": "scalar", "dimension": 1, "h": 0.0078125, "mirror_plane": True,
            "bodies": [{"shape": {"kind": "box", "size": [0.25]},
                        "model": {"kind": "constant", "chi0": 2.0}}],
            "separations": [0.5, 0.75, 1.0, 1.5],
            "quadrature": {"nodes": 48},
        },
        "random-mirror-blob": {
            "label": "random-mirror-blob",
            "field": "scalar", "dimension": 3, "h": 0.25, "mirror": True,
            "seed": 11,
            "bodies": [{"shape": {"kind": "blob", "cells": 32, "halfwidth": 2, "depth": 3},
                        "model": {"kind": "constant", "chi0": 3.0}}],
            "separations": [0.5, 0.7, 0.9, 1.1],
            "quadrature": {"nodes": 24, "scale": 1.25},
        },
    }


def preset(name):
    table = presets()
    if name not in table:
        raise ConfigError(f"preset: unknown name {name!r}; known: {', '.join(sorted(table))}")
    return copy.deepcopy(table[name])


# ---------------------------------------------------------------------------
# run


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def run(cfg, out_dir, check_only=False, spectrum=False):
    """Execute one scenario config; emits output files into ``out_dir``.

    Returns the process exit code (0 ok, 2 failed check, 3 flagged
    convergence).  Config errors raise ConfigError.
    """
    scn, resolved, ladder = build_scenario(cfg)
    if spectrum and not (scn.mirror or scn.mirror_plane):
        raise ConfigError("spectrum: eigenvalue output needs a mirror or mirror-plane scenario")
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "resolved_config.json"), "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, indent=2, sort_keys=True)
        fh.write("\n")
    qd = resolved["quadrature"]
    quad = energy.QuadratureSpec(rule=qd["rule"], nodes=qd["nodes"],
                                 scale=qd["scale"], rtol=qd["rtol"])
    flagged = False
    # certification checks run on the top ladder rung (the strongest,
    # least forgiving coupling)
    top = _rescaled(scn, ladder[-1])
    reports = theorem.run_all_checks(top, quad=quad)
    theorem.write_reports(reports, os.path.join(out_dir, "checks.txt"))
    n_fail = sum(not r.passed for r in reports)
    print(f"checks: {len(reports) - n_fail} passed, {n_fail} failed -> checks.txt")
    if not check_only:
        rows = []
        for scale in ladder:
            rung = _rescaled(scn, scale)
            for a in rung.separations:
                res = energy.energy_at(rung, a, quad)
                frc = energy.force(rung, a, quad=quad)
                flagged = flagged or res.flagged or frc.flagged
                rows.append([FMT % a, FMT % res.value,
                             FMT % res.quadrature_error_estimate, FMT % frc.value])
        _write_csv(os.path.join(out_dir, "energies.csv"),
                   ["a", "E", "error_estimate", "force"], rows)
        print(f"energies: {len(rows)} rows -> energies.csv")
    if spectrum:
        srows = []
        for a in top.separations:
            for f in SPECTRUM_XI_FACTORS:
                xi = f / a
                lam = energy.eigen_spectrum(top, a, xi)
                srows.extend([FMT % a, FMT % xi, str(k), FMT % v]
                             for k, v in enumerate(lam))
        _write_csv(os.path.join(out_dir, "spectrum.csv"),
                   ["a", "xi", "n", "lambda_n"], srows)
        print(f"spectrum: {len(srows)} rows -> spectrum.csv")
    if n_fail:
        return 2
    if flagged:
        print("warning: quadrature/truncation flags were raised")
        return 3
    return 0


def main(argv=None):
    p = argparse.ArgumentParser(
        prog="casivox",
        description="Casimir interaction energies between voxelized bodies, "
                    "with built-in attraction certification (hbar = c = 1).")
    p.add_argument("config", nargs="?", help="path to a JSON scenario config")
    p.add_argument("--preset", metavar="NAME",
                   help="built-in scenario: " + ", ".join(sorted(presets())))
    p.add_argument("--out", metavar="DIR", default="casivox-out",
                   help="output directory (default: casivox-out)")
    p.add_argument("--threads", type=int, metavar="N", default=None,
                   help="BLAS thread cap (default: library choice)")
    p.add_argument("--deterministic", action="store_true",
                   help="bitwise-reproducible mode (forces one thread)")
    p.add_argument("--check-only", action="store_true",
                   help="run the certification suite without the energy sweep")
    p.add_argument("--spectrum", action="store_true",
                   help="also emit the interaction eigenvalue CSV")
    args = p.parse_args(argv)
    try:
        if (args.config is None) == (args.preset is None):
            raise ConfigError("config: pass exactly one of a config path or --preset")
        if args.preset is not None:
            cfg = preset(args.preset)
        else:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    cfg = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config: invalid JSON: {exc}") from exc
        threads = 1 if args.deterministic else args.threads
        with threadpool_limits(limits=threads):
            return run(cfg, args.out, check_only=args.check_only, spectrum=args.spectrum)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
