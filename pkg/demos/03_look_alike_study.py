"""
Why the look-alike pixels are hard for the learned detector
===========================================================

On linear-mixture scenes the CEM filter whitens with the scene
autocorrelation, which amplifies exactly the small spectral direction that
separates the target from its 0.95-correlated look-alike. The encoder
instead learns to pull the look-alike class close to the priors. This
script measures both effects on the acceptance scene.
"""

import numpy as np

from hsmatch import io, matchdet, pipeline
from hsmatch.core import normalize_cube, normalize_priors
from hsmatch.synth import SceneSpec, generate_scene

spec = SceneSpec(seed=0)
scene = generate_scene(spec)
cfg = io.load_config("configs/desk_scale.cfg")
run = pipeline.run(scene.cube, scene.priors, cfg)

truth = scene.truth.labels.astype(bool)
look_alike = scene.abundances[:, scene.confuser_index] > 0.5
weak = truth & (scene.abundances[:, spec.target_index] < 0.7)

# %%
# CEM margin: the weakest target still clears every look-alike pixel.
c = run.cem_map.scores
print("CEM: weakest target %.3f, strongest look-alike %.3f" % (c[truth].min(), c[look_alike].max()))

# %%
# Embedding distances to the priors. Smaller means more target-like.
cube = normalize_cube(scene.cube)
priors = normalize_priors(scene.priors, scene.cube, cfg.normalization)
enc = run.params.without_head()
D = matchdet.mean_prior_distance(matchdet.embed_spectra(enc, cube.data),
                                 matchdet.embed_spectra(enc, priors.spectra))
print("learned: weak targets %.3f (max %.3f), look-alikes %.3f (min %.3f), background min %.3f"
      % (D[weak].mean(), D[truth].max(), D[look_alike].mean(), D[look_alike].min(),
         D[~truth & ~look_alike].min()))

# %%
# Which sub-categories did the look-alike pixels fall into?
labels = run.subcategories.pixel_labels
print("look-alike sub-categories:", np.bincount(labels[look_alike], minlength=run.subcategories.K))
print("target sub-categories:    ", np.bincount(labels[truth], minlength=run.subcategories.K))
