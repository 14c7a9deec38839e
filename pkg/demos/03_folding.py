"""Isometric dimension reduction.

Four points in R^12 whose last eight coordinates are small. The extra
coordinates can be folded into the first block while keeping every
l_p distance exactly, so the same configuration lives in R^4.
"""
import numpy as np

from lpembed import core, realization

rng = np.random.default_rng(2)
p = 2.5
x = core.Configuration(p, np.hstack([rng.standard_normal((4, 4)), rng.uniform(-0.05, 0.05, (4, 8))]))
print("before:", x.points.shape, core.has_property_K(x))

y = realization.reduce_dimension(x)
print("after:", y.points.shape)
rel = np.abs(core.eval_F_tilde(y).entries / core.eval_F_tilde(x).entries - 1)
print("largest relative change in a distance:", rel.max())

# %% For p = 2 a rotation does the same job without any solve
z = core.gram_schmidt_rotate(core.Configuration(2.0, rng.standard_normal((4, 6))))
print(z.points.round(3))  # four points only need the first four columns
