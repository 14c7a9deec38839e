"""Nudging distances and finding points that realize them.

Near a configuration in G every small change of the distance table is
realized by a nearby configuration. Gauss-Newton finds it in a couple of
steps; the radius estimate says how far one can push.
"""
import numpy as np

from lpembed import core, realization

p = 1.5
base = core.make_H_configuration(3, [0.4, -0.2, 0.7], p)
d = core.eval_F_tilde(base)
print("raw distances", d.entries)

# %% Perturb every distance by up to 1e-3
rng = np.random.default_rng(1)
target = core.UpperTriangularMatrix(3, d.entries + rng.uniform(-1e-3, 1e-3, 3), core.RAW)
res = realization.realize_perturbation(base, target)
print("converged", res.converged, "in", res.iterations_used, "steps, residual", res.residual_inf_norm)
print("moved by", np.abs(res.configuration.points - base.points).max())

for it, r in res.trace:
    print(f"  iteration {it}: residual {r:.3e}")

# %% How large a perturbation still works (empirical, seeded)
eps = realization.estimate_perturbation_radius(base, trials=20, seed=0)
print("estimated radius", eps)
