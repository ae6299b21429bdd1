"""End-to-end wiring: config -> model -> frames -> images -> detections."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import RunConfig
from .detect import Detection, calibrate_threshold, detect, locate_peak
from .geometry import Link, make_links
from .ingest import Baseline, compute_baseline, shadowing_vector
from .rti_solver import (AttenuationImage, CovarianceMatrix, ProjectionOperator,
                         covariance_matrix, precompute_projection, reconstruct)
from .simulator import RssFrame, simulate_baseline, simulate_walk
from .weight_model import WeightMatrix, build_weight_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RtiModel:
    links: list[Link]
    weights: WeightMatrix
    covariance: CovarianceMatrix
    projection: ProjectionOperator

    @property
    def grid(self):
        return self.weights.grid


def build_model(cfg: RunConfig) -> RtiModel:
    links = make_links(cfg.scene)
    w = build_weight_matrix(cfg.grid, links, cfg.weight)
    c = covariance_matrix(cfg.grid, cfg.rti)
    p = precompute_projection(w, c, cfg.rti.eta)
    log.info("model: %d links x %d cells, %d nonzero weights, projection %s",
             w.q, w.n, w.nnz, p.provenance)
    return RtiModel(links, w, c, p)


def forward_weights(cfg: RunConfig, model: RtiModel | None = None) -> WeightMatrix:
    """Weights used to synthesize walk data (beta scaled by forward_beta_scale)."""
    scale = cfg.sim.forward_beta_scale
    if model is not None and scale == 1.0:
        return model.weights
    links = model.links if model is not None else make_links(cfg.scene)
    return build_weight_matrix(cfg.grid, links, cfg.weight.scaled(scale))


def simulate_baseline_frames(cfg: RunConfig, seed: int | None = None) -> list[RssFrame]:
    s = cfg.sim
    return simulate_baseline(cfg.scene, cfg.rf, s.fading, s.baseline_duration_s,
                             s.frame_rate_hz, s.noise_db_std, s.seed if seed is None else seed,
                             materials=cfg.material, threshold_dbm=cfg.missing_read_dbm)


def simulate_walk_frames(cfg: RunConfig, model: RtiModel | None = None,
                         seed: int | None = None) -> list[RssFrame]:
    s = cfg.sim
    return simulate_walk(cfg.scene, cfg.rf, s.fading, forward_weights(cfg, model), s.path,
                         s.shadow, s.frame_rate_hz, s.noise_db_std,
                         s.seed + 1 if seed is None else seed,
                         duration_s=s.walk_duration_s, materials=cfg.material,
                         threshold_dbm=cfg.missing_read_dbm)


def frame_image(model: RtiModel, frame: RssFrame, baseline: Baseline,
                imputation: str, floor_dbm: float) -> AttenuationImage:
    y = shadowing_vector(frame, baseline, imputation, floor_dbm)
    keep = np.isfinite(y)
    p = model.projection if keep.all() else model.projection.restrict(keep)
    return reconstruct(p, y[keep], frame.timestamp)


def reconstruct_frames(model: RtiModel, frames: Sequence[RssFrame], baseline: Baseline,
                       imputation: str = "floor", floor_dbm: float = -84.0):
    return [frame_image(model, f, baseline, imputation, floor_dbm) for f in frames]


@dataclass(frozen=True, eq=False)
class DetectionRun:
    baseline: Baseline
    threshold: float
    baseline_detections: list[Detection]
    detections: list[Detection]
    images: list[AttenuationImage]


def run_detection(cfg: RunConfig, model: RtiModel, baseline_frames: Sequence[RssFrame],
                  frames: Sequence[RssFrame]) -> DetectionRun:
    """Calibrate on the quiet capture, then detect on ``frames``."""
    baseline = compute_baseline(baseline_frames)
    quiet = reconstruct_frames(model, baseline_frames, baseline, cfg.imputation,
                               cfg.missing_read_dbm)
    threshold = calibrate_threshold([locate_peak(im)[1] for im in quiet], cfg.threshold_n_std)
    images = reconstruct_frames(model, frames, baseline, cfg.imputation, cfg.missing_read_dbm)
    return DetectionRun(baseline, threshold,
                        [detect(im, threshold) for im in quiet],
                        [detect(im, threshold) for im in images], images)
