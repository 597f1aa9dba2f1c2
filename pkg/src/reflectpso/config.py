"""Experiment configuration: TOML documents with dotted sections.

Every key is optional; an empty document yields the 30x30, 3.5 GHz, 2-bit,
two-beam scenario with a 100-particle, 100-iteration full-knowledge swarm.
Unknown keys are rejected.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, replace
from typing import Any, Optional

from .errors import ConfigError, DomainError
from .geometry import AngularGrid, ArrayGeometry, BeamSpec
from .pso import DEFAULT_STAGES, BoundMode, Knowledge, PsoConfig, StageParams, StageSchedule

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS: dict[str, dict[str, Any]] = {
    "geometry": {
        "rows": 30,
        "cols": 30,
        "spacing_mm": 21.0,
        "frequency_ghz": 3.5,
        "amplitude": 0.7,
        "resolution_bits": 2,
    },
    "grid": {
        "theta_min": -90.0,
        "theta_max": 90.0,
        "theta_step": 1.0,
        "phi_min": 0.0,
        "phi_max": 180.0,
        "phi_step": 1.0,
    },
    "pso": {
        "particles": 100,
        "iterations": 100,
        "knowledge": "full",
        "seed": 0,
        "bound_mode": "clamp",
        "stages": None,       # list of [d1, d2, c1, c2, w] rows
        "stage_ends": None,   # last iteration of each stage
    },
}
TOP_LEVEL = {
    "beams": [[45.0, 30.0], [45.0, 110.0]],
    "mask_radius_deg": 10.0,
    "output_dir": None,
}


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: ArrayGeometry
    beams: tuple[BeamSpec, ...]
    grid: AngularGrid
    mask_radius_deg: float
    pso: PsoConfig
    output_dir: Optional[str]
    resolved: dict  # plain-data view of every setting, defaults filled in

    def with_seed(self, seed: int) -> "ExperimentConfig":
        resolved = {**self.resolved, "pso": {**self.resolved["pso"], "seed": int(seed)}}
        return replace(self, pso=replace(self.pso, rng_seed=int(seed)), resolved=resolved)


def _number(section: str, key: str, value, kind=float):
    name = f"{section}.{key}" if section else key
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    return float(value)


def _merge(section: str, given: Any, defaults: dict) -> dict:
    if not isinstance(given, dict):
        raise ConfigError(f"[{section}] must be a table")
    unknown = sorted(set(given) - set(defaults))
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(unknown)}")
    return {**defaults, **given}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises :class:`ConfigError` with the line number on syntax errors and with
    the offending field on validation errors.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from None

    unknown = sorted(set(doc) - set(DEFAULTS) - set(TOP_LEVEL))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")

    geo = _merge("geometry", doc.get("geometry", {}), DEFAULTS["geometry"])
    grd = _merge("grid", doc.get("grid", {}), DEFAULTS["grid"])
    pso = _merge("pso", doc.get("pso", {}), DEFAULTS["pso"])
    top = {k: doc.get(k, v) for k, v in TOP_LEVEL.items()}

    try:
        geometry = ArrayGeometry(
            rows=_number("geometry", "rows", geo["rows"], int),
            cols=_number("geometry", "cols", geo["cols"], int),
            spacing=_number("geometry", "spacing_mm", geo["spacing_mm"]) * 1e-3,
            frequency=_number("geometry", "frequency_ghz", geo["frequency_ghz"]) * 1e9,
            element_amplitude=_number("geometry", "amplitude", geo["amplitude"]),
            resolution_bits=_number("geometry", "resolution_bits", geo["resolution_bits"], int),
        )
    except DomainError as exc:
        raise ConfigError(f"[geometry] {exc}") from None

    beams_raw = top["beams"]
    if not isinstance(beams_raw, list) or not beams_raw:
        raise ConfigError("beams must be a non-empty list of [theta_deg, phi_deg] pairs")
    beams = []
    for i, b in enumerate(beams_raw):
        if not isinstance(b, list) or len(b) != 2:
            raise ConfigError(f"beams[{i}] must be a [theta_deg, phi_deg] pair, got {b!r}")
        try:
            beams.append(BeamSpec(_number("", f"beams[{i}][0]", b[0]), _number("", f"beams[{i}][1]", b[1])))
        except DomainError as exc:
            raise ConfigError(f"beams[{i}]: {exc}") from None

    try:
        grid = AngularGrid.from_ranges(
            **{k: _number("grid", k, v) for k, v in grd.items()})
    except DomainError as exc:
        raise ConfigError(f"[grid] {exc}") from None

    radius = _number("", "mask_radius_deg", top["mask_radius_deg"])
    if not radius > 0:
        raise ConfigError(f"mask_radius_deg must be > 0, got {radius}")

    iterations = _number("pso", "iterations", pso["iterations"], int)
    if iterations < 1:
        raise ConfigError(f"pso.iterations must be >= 1, got {iterations}")
    schedule = _parse_schedule(pso["stages"], pso["stage_ends"], iterations)
    for key, enum_cls in (("knowledge", Knowledge), ("bound_mode", BoundMode)):
        allowed = [m.value for m in enum_cls]
        if pso[key] not in allowed:
            raise ConfigError(f"pso.{key} must be one of {allowed}, got {pso[key]!r}")
    try:
        pso_config = PsoConfig(
            particles=_number("pso", "particles", pso["particles"], int),
            iterations=iterations,
            knowledge=pso["knowledge"],
            schedule=schedule,
            rng_seed=_number("pso", "seed", pso["seed"], int),
            position_bound_mode=pso["bound_mode"],
        )
    except ConfigError as exc:
        raise ConfigError(f"[pso] {exc}") from None

    out = top["output_dir"]
    if out is not None and not isinstance(out, str):
        raise ConfigError(f"output_dir must be a string, got {out!r}")

    resolved = {
        "geometry": dict(geo),
        "grid": dict(grd),
        "beams": [[b.theta_deg, b.phi_deg] for b in beams],
        "mask_radius_deg": radius,
        "output_dir": out,
        "pso": {**pso,
                "stages": [[s.d1, s.d2, s.c1, s.c2, s.w] for s in pso_config.schedule.stages],
                "stage_ends": list(pso_config.schedule.ends)},
    }
    return ExperimentConfig(geometry, tuple(beams), grid, radius, pso_config, out, resolved)


def _parse_schedule(stages, ends, iterations: int) -> StageSchedule:
    rows = None
    if stages is not None:
        if not isinstance(stages, list) or not stages:
            raise ConfigError("pso.stages must be a non-empty list of [d1, d2, c1, c2, w] rows")
        rows = []
        for i, row in enumerate(stages):
            if not isinstance(row, list) or len(row) != 5:
                raise ConfigError(f"pso.stages[{i}] must hold 5 numbers [d1, d2, c1, c2, w]")
            vals = [_number("pso", f"stages[{i}]", v) for v in row]
            try:
                rows.append(StageParams(*vals))
            except ConfigError as exc:
                raise ConfigError(f"pso.stages[{i}]: {exc}") from None
    if ends is None:
        return StageSchedule.equal(iterations, rows) if rows else StageSchedule.equal(iterations)
    if not isinstance(ends, list):
        raise ConfigError("pso.stage_ends must be a list of iteration numbers")
    ends = [_number("pso", "stage_ends", e, int) for e in ends]
    rows = rows or list(DEFAULT_STAGES)
    try:
        schedule = StageSchedule(tuple(rows), tuple(ends))
    except ConfigError as exc:
        raise ConfigError(f"pso.stage_ends: {exc}") from None
    if schedule.iterations != iterations:
        raise ConfigError(
            f"pso.stage_ends must end at pso.iterations={iterations}, got {ends[-1]}")
    return schedule


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
