"""End-to-end detection runs.

Stages of the learned detector, in order: normalize, ensemble CEM
pre-detection, quantile split, k-means sub-categories, pretext training on
center mixtures, N-pair training on pseudo-labelled pixels, embedding and
ensemble similarity. Every stochastic stage draws from a sub-seed derived
from the run seed by a fixed offset.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import classical, embednet, matchdet, partition
from .core import ScoreMap, SpectralCube, TargetPriorSet, normalize_cube, normalize_priors
from .io import PipelineConfig

log = logging.getLogger(__name__)

DETECTORS = ("cem", "ace", "learned")

SEED_OFFSETS = {"kmeans": 0, "init": 100, "pretext": 200, "npair": 300}


class StageError(RuntimeError):
    def __init__(self, stage, cause):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage


@dataclass
class RunResult:
    detector: str
    score_map: ScoreMap
    cem_map: ScoreMap | None = None
    params: embednet.EncoderParams | None = None
    subcategories: partition.SubcategoryCenters | None = None
    split: partition.PartitionResult | None = None
    pretext_trace: embednet.TrainTrace | None = None
    npair_trace: embednet.TrainTrace | None = None
    timings: dict = field(default_factory=dict)


@contextmanager
def _stage(name, timings):
    t0 = time.perf_counter()
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc
    timings[name] = time.perf_counter() - t0
    log.info("stage %s done in %.2fs", name, timings[name])


def run(cube: SpectralCube, priors: TargetPriorSet, config: PipelineConfig,
        detector: str = "learned", threads: int = 1) -> RunResult:
    if detector not in DETECTORS:
        raise ValueError(f"unknown detector {detector!r}")
    if priors.spectra.shape[1] != cube.bands:
        raise StageError("input", f"priors have {priors.spectra.shape[1]} bands, "
                                  f"cube has {cube.bands}")
    timings = {}
    seed = config.seed
    ridge = config.ridge_value()

    with _stage("normalize", timings):
        ncube = normalize_cube(cube, config.normalization)
        npriors = normalize_priors(priors, cube, config.normalization)

    with _stage("autocorrelation", timings):
        acorr = classical.autocorrelation(ncube, ridge)

    if detector == "ace":
        with _stage("ace", timings):
            scores = np.mean([classical.ace_score(ncube, d, acorr=acorr).scores
                              for d in npriors.spectra], axis=0)
            smap = ScoreMap(cube.width, cube.height, scores)
        return RunResult("ace", smap, timings=timings)

    with _stage("cem_ensemble", timings):
        cem_map = classical.cem_ensemble(ncube, npriors, acorr=acorr)
    if detector == "cem":
        return RunResult("cem", cem_map, cem_map=cem_map, timings=timings)

    with _stage("quantile_split", timings):
        split = partition.quantile_split(cem_map, config.fraction)

    with _stage("subcategory_centers", timings):
        sub = partition.subcategory_centers(
            ncube, split, config.k_target, config.k_background,
            seed=seed + SEED_OFFSETS["kmeans"], max_iter=config.kmeans_max_iter,
            restarts=config.kmeans_restarts)

    with _stage("pretext_train", timings):
        params = embednet.init_params(cube.bands, seed=seed + SEED_OFFSETS["init"],
                                      channels=config.conv_channels, kernel=config.kernel,
                                      hidden=config.hidden, embed_dim=config.embed_dim)
        sgd = embednet.SgdConfig(config.learning_rate, config.batch_size,
                                 config.pretext_epochs, seed + SEED_OFFSETS["pretext"])
        params, pre_trace = embednet.pretext_train(
            params, sub.centers, sgd, temperature=config.temperature,
            batches_per_epoch=config.pretext_batches, mix_noise=config.mix_noise)

    with _stage("npair_train", timings):
        sgd = embednet.SgdConfig(config.learning_rate, config.batch_size,
                                 config.npair_epochs, seed + SEED_OFFSETS["npair"])
        params, np_trace = embednet.npair_train(
            params, ncube.data, sub.pixel_labels, sgd,
            n_classes=config.npair_classes or None,
            tuplets_per_step=config.npair_tuplets or None,
            steps_per_epoch=config.npair_steps, hard_mining=config.hard_mining)

    with _stage("embed_cube", timings):
        encoder = params.without_head()
        field_ = matchdet.embed_cube(encoder, ncube, threads=threads)

    with _stage("ensemble_similarity", timings):
        smap = matchdet.ensemble_similarity(field_, npriors, encoder)

    return RunResult("learned", smap, cem_map=cem_map, params=params, subcategories=sub,
                     split=split, pretext_trace=pre_trace, npair_trace=np_trace,
                     timings=timings)
