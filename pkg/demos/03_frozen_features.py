# %% [markdown]
# # Frozen random feature maps
#
# Branch and trunk networks are initialized once and never trained. Their
# parameters are read-only and identified by a digest.

# %%
import numpy as np

from elmdeeponet import features as feat
from elmdeeponet.problems import grid_points, uniform_points

# %% single hidden layer (the branch for 1-D problems)
slfn = feat.init_slfn(in_dim=100, width=1000, seed=0)
u = np.random.default_rng(0).standard_normal((5, 100))
b = slfn.forward(u)
print(b.shape, "fraction active:", (b > 0).mean().round(3))

# %% trunk MLP with three layers and a linear output
trunk = feat.init_trunk_mlp(point_dim=1, p2=100, seed=1)
t = trunk.forward(uniform_points(100))
print("T:", t.shape, "singular values:", np.linalg.svd(t, compute_uv=False)[[0, 10, 50]].round(4))

# %% weights cannot be modified
try:
    slfn.weights[0][0, 0] = 1.0
except ValueError as exc:
    print("write rejected:", exc)
print("digest:", feat.digest(slfn)[:16])

# %% fixed sinusoidal trunk: sin(16 k pi x / p2) on [0, 1]
# the discrete Gram matrix is close to diagonal only when p2 divides 8
for p2 in (8, 100):
    tb = feat.SinusoidalBasis(dimension=1, p2=p2).forward(uniform_points(100))
    gram = tb.T @ tb / 100
    print(f"p2={p2}: largest off-diagonal Gram entry {np.abs(gram - np.diag(np.diag(gram))).max():.3f}")

# %% convolutional branch for 50 x 50 permeability fields
conv = feat.init_convnet(grid=50, out_dim=20, seed=2)
kappa = np.exp(np.random.default_rng(1).standard_normal((3, 2500)))
print("conv features:", conv.forward(kappa).shape, "parameters:", feat.n_parameters(conv))

# %% two-dimensional trunk input
print(feat.init_trunk_mlp(2, 50, seed=3).forward(grid_points(50)).shape)
