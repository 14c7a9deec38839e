"""Where the pairwise-distance map is a submersion.

Builds a few configurations, checks the rank of the Jacobian of the
p-th-power distance map, and looks for a block of coordinates that
carries full rank on its own (Property K).
"""
import numpy as np

from lpembed import core

# %% The regular simplex: 3 points, 3 coordinates, 3 distances
x = core.Configuration(2.5, np.eye(3))
print(core.eval_F(x))  # p-th powers of the distances, all equal to 2
rep = core.rank_test(core.jacobian_F(x))
print("rank", rep.numeric_rank, "of", rep.rows, "relative gap", rep.relative_gap)

# %% Members of the H family are always in G, whatever the tails
rng = np.random.default_rng(0)
h = core.make_H_configuration(4, rng.uniform(-1, 1, 6), 3.0)
print(h.points.round(3))
print("det of the square block:", np.linalg.det(core.square_jacobian(h)), "vs p^6 =", 3.0 ** 6)

# %% Property K in a wide configuration whose first two coordinates are constant
pts = np.hstack([np.ones((3, 2)), np.eye(3), rng.standard_normal((3, 2))])
ok, witness = core.has_property_K(core.Configuration(2.0, pts))
print("property K:", ok, "witness (0-based):", witness)

# %% Collapsing two points drops the rank
y = core.Configuration(2.0, [[0.0, 1.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 2.0]])
print("in G:", core.in_G(y))
