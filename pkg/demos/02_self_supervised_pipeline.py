"""
The learned detector, stage by stage
====================================

The same synthetic scene is pushed through every stage of the learned
detector by hand: pre-detection, pseudo-labelling, clustering, the mixing
pretext task, N-pair training and feature-space matching.
"""

import numpy as np

from hsmatch import classical, embednet, evaluation, io, matchdet, mixgen, partition
from hsmatch.core import normalize_cube, normalize_priors
from hsmatch.synth import SceneSpec, generate_scene

scene = generate_scene(SceneSpec(seed=0))
cube = normalize_cube(scene.cube)
priors = normalize_priors(scene.priors, scene.cube, "per-band-minmax")
cfg = io.load_config("configs/desk_scale.cfg")

# %%
# Pre-detection and pseudo labels. The top 1% of ensemble CEM scores become
# the pseudo target set; everything else is pseudo background.
cem = classical.cem_ensemble(cube, priors)
split = partition.quantile_split(cem, cfg.fraction)
truth = scene.truth.labels
print("pseudo targets:", len(split.target_indices),
      "of which true targets:", truth[split.target_indices].sum())

# %%
# Sub-categories. Each side is clustered on its own; the centers become the
# ingredients of the pretext task.
sub = partition.subcategory_centers(cube, split, cfg.k_target, cfg.k_background, seed=0)
print("sub-category sizes:", np.bincount(sub.pixel_labels))
print("target-side objective history:", np.round(sub.target_clustering.history, 4))

# %%
# Mixtures. Softmax of uniform noise gives convex weights; low temperature
# makes one center dominate, high temperature blends them evenly.
rng = np.random.default_rng(0)
for T in (0.05, 0.5, 10.0):
    a = mixgen.sample_mix_weights(sub.K, T, rng, size=2000)
    print(f"T={T:5}: mean dominant weight {a.max(axis=1).mean():.3f}")

# %%
# Pretext training: classify which center dominates each mixture.
params = embednet.init_params(cube.bands, seed=100)
sgd = embednet.SgdConfig(cfg.learning_rate, cfg.batch_size, cfg.pretext_epochs, seed=200)
params, pre = embednet.pretext_train(params, sub.centers, sgd, temperature=cfg.temperature)
print("pretext loss %.3f -> %.3f, accuracy %.2f" % (pre.loss[0], pre.loss[-1], pre.accuracy[-1]))

# %%
# N-pair training on pseudo-labelled pixels, with hard mining.
sgd = embednet.SgdConfig(cfg.learning_rate, cfg.batch_size, cfg.npair_epochs, seed=300)
params, npt = embednet.npair_train(params, cube.data, sub.pixel_labels, sgd)
print("N-pair loss %.3f -> %.3f" % (npt.loss[0], npt.loss[-1]))

# %%
# Matching. Each pixel scores minus its mean embedding distance to the
# priors, so larger means more target-like, with 0 the best possible score.
encoder = params.without_head()
field = matchdet.embed_cube(encoder, cube)
score = matchdet.ensemble_similarity(field, priors, encoder)
print("AUC learned %.5f   CEM %.5f" % (evaluation.roc_curve(score, scene.truth).auc,
                                        evaluation.roc_curve(cem, scene.truth).auc))
