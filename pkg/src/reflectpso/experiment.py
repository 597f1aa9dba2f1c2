"""Run orchestration, artifact files and the optimization-efficiency metric."""

from __future__ import annotations

import json
import logging
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import ExperimentConfig
from .errors import DomainError
from .farfield import (FarFieldPattern, build_masks, compute_pattern, sll_objective,
                       write_pattern_csv)
from .pso import OptimizationResult, run
from .synthesis import PhaseProfile, superpose_profiles

log = logging.getLogger(__name__)

PRE_PROFILE = "pre_profile.csv"
PRE_PATTERN = "pre_pattern.csv"
POST_PROFILE = "post_profile.csv"
POST_PATTERN = "post_pattern.csv"
CONVERGENCE = "convergence.csv"
SUMMARY = "summary.json"


@dataclass(frozen=True)
class EfficiencyReport:
    elements: int
    individuals: int
    optimization_time_minutes: float
    efficiency: float


def efficiency(elements: int, individuals: int, minutes: float) -> EfficiencyReport:
    """Elements times individuals per minute of optimization."""
    if not minutes > 0:
        raise DomainError(f"optimization time must be > 0 minutes, got {minutes}")
    return EfficiencyReport(int(elements), int(individuals), float(minutes),
                            elements * individuals / minutes)


def write_profile_csv(path, profile: PhaseProfile) -> None:
    """M rows of N comma-separated integer levels, no header."""
    with open(path, "w", newline="") as fh:
        for row in profile.levels:
            fh.write(",".join(str(int(v)) for v in row) + "\n")


def read_profile_csv(path, resolution_bits: int) -> PhaseProfile:
    try:
        levels = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=2)
    except ValueError as exc:
        raise DomainError(f"{path}: not an integer profile matrix ({exc})") from None
    return PhaseProfile(levels, resolution_bits)


def write_convergence_csv(path, result: OptimizationResult) -> None:
    # repr keeps full precision so the last row matches the summary exactly
    with open(path, "w", newline="") as fh:
        fh.write("iteration,global_best_suppression_db,fitness_sum_db\n")
        for t, (s, f) in enumerate(zip(result.suppression_history,
                                       result.fitness_history), start=1):
            fh.write(f"{t},{float(s)!r},{float(f)!r}\n")


def write_heatmap(path, pattern: FarFieldPattern, title: str = "") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    g = pattern.grid
    fig, ax = plt.subplots(figsize=(7, 5))
    extent = [g.phi_samples[0], g.phi_samples[-1], g.theta_samples[0], g.theta_samples[-1]]
    im = ax.imshow(pattern.magnitude_db, origin="lower", aspect="auto", extent=extent,
                   vmin=-40.0, vmax=0.0, cmap="viridis")
    ax.set_xlabel("phi (deg)")
    ax.set_ylabel("theta (deg)")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, label="dB")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)


def run_experiment(config: ExperimentConfig, out_dir=None, workers: int = 1,
                   emit_heatmap: bool = False) -> dict:
    """Optimize one configuration and write its artifact bundle.

    Writes the superposition baseline and the optimized profile with their
    patterns, the convergence trace and ``summary.json``. Returns the summary.
    """
    out = Path(out_dir or config.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")

    geometry, grid = config.geometry, config.grid
    masks = build_masks(grid, config.beams, config.mask_radius_deg)

    baseline = superpose_profiles(geometry, config.beams)
    pre_pattern = compute_pattern(geometry, baseline, grid)
    pre = sll_objective(pre_pattern, masks)
    log.info("superposition baseline suppression %.3f dB", pre)

    def progress(state):
        if state.iteration % 10 == 0:
            log.info("iteration %d: global best %.3f dB", state.iteration,
                     state.global_best_value)

    result = run(config.pso, geometry, config.beams, masks, workers=workers,
                 callback=progress)
    post_pattern = compute_pattern(geometry, result.best_profile, grid)
    post = result.best_value

    write_profile_csv(out / PRE_PROFILE, baseline)
    write_pattern_csv(out / PRE_PATTERN, pre_pattern)
    write_profile_csv(out / POST_PROFILE, result.best_profile)
    write_pattern_csv(out / POST_PATTERN, post_pattern)
    write_convergence_csv(out / CONVERGENCE, result)
    if emit_heatmap:
        write_heatmap(out / "pre_heatmap.png", pre_pattern, f"before: {pre:.2f} dB")
        write_heatmap(out / "post_heatmap.png", post_pattern, f"after: {post:.2f} dB")

    minutes = result.wall_time / 60.0
    report = efficiency(geometry.elements, config.pso.particles, minutes)
    summary = {
        "pre_suppression_db": pre,
        "post_suppression_db": post,
        "improvement_db": pre - post,
        "wall_time_s": result.wall_time,
        "wall_time_min": minutes,
        "evaluations": result.evaluations,
        "efficiency": asdict(report),
        "seed": config.pso.rng_seed,
        "config": config.resolved,
    }
    with open(out / SUMMARY, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    log.info("optimized suppression %.3f dB (%.1f s)", post, result.wall_time)
    return summary


def evaluate_profile(config: ExperimentConfig, profile: PhaseProfile):
    """Pattern and suppression of a saved profile under ``config``'s beams."""
    masks = build_masks(config.grid, config.beams, config.mask_radius_deg)
    pattern = compute_pattern(config.geometry, profile, config.grid)
    return pattern, sll_objective(pattern, masks)


def sweep(config: ExperimentConfig, seeds: Sequence[int], out_dir=None,
          workers: int = 1, emit_heatmap: bool = False) -> dict:
    """Repeat :func:`run_experiment` per seed; median and IQR of the outcomes."""
    if not seeds:
        raise DomainError("sweep needs at least one seed")
    root = Path(out_dir or config.output_dir or "results")
    rows = []
    for seed in seeds:
        s = run_experiment(config.with_seed(seed), root / f"seed_{seed}", workers, emit_heatmap)
        rows.append((seed, s["pre_suppression_db"], s["post_suppression_db"],
                     s["improvement_db"], s["wall_time_s"]))
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "sweep.csv", "w", newline="") as fh:
        fh.write("seed,pre_suppression_db,post_suppression_db,improvement_db,wall_time_s\n")
        for r in rows:
            fh.write(",".join([str(r[0])] + [repr(float(v)) for v in r[1:]]) + "\n")

    def stats(col):
        vals = np.array([r[col] for r in rows])
        q1, med, q3 = np.percentile(vals, [25, 50, 75])
        return {"median": float(med), "iqr": float(q3 - q1)}

    return {"seeds": list(seeds), "pre_suppression_db": stats(1),
            "post_suppression_db": stats(2), "improvement_db": stats(3)}
