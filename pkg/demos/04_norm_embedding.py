"""Embedding into a norm that is close to l_p.

The norm is only available as an oracle. A fixed point of the correction
map gives points whose distances in that norm equal the original l_p
distances.
"""
import numpy as np

from lpembed import core, embedding

x = core.Configuration(2.0, np.eye(3))
for kind in (embedding.WEIGHTED_P, embedding.LINEAR_DISTORTION):
    oracle = embedding.make_norm_oracle(kind, 3, 2.0, 0.01, seed=0)
    res = embedding.embed_into_norm(x, oracle)
    print(kind, "delta", oracle.delta)
    print("  rho", res.rho)
    print("  distances in the new norm", res.e_norm_distances)
    print("  target", res.target_distances, "defect", res.max_isometry_defect)
    print("  verified:", embedding.verify_embedding(res, 1e-8))

# %% History of the fixed-point residual
print([f"{r:.1e}" for r in res.history])
