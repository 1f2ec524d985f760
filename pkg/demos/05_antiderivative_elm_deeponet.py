# %% [markdown]
# # Learning the antiderivative operator
#
# 2000 GRF inputs, the first 1000 for training. The branch is a random
# single-layer network with p1 = 1000 features and the trunk a random MLP
# with p2 = 100 features. Only the 100 x 1000 matrix W is fit.

# %%
import numpy as np

from elmdeeponet import problems as P
from elmdeeponet.model import assemble

ds = P.gen_antiderivative(n=2000, seed=0)
train, test = ds.split()

model = assemble({"kind": "slfn"}, {"kind": "mlp", "layers": 3}, p1=1000, p2=100, seed=0,
                 in_dim=100, point_dim=1, rel_tol=3e-4)
print("trainable parameters:", model.n_trainable)

# %% fit in closed form
rep = model.fit(train)
print(f"fit time {rep.seconds:.3f} s, rank T {rep.rank_t}, rank B {rep.rank_b}")
print(f"relative test error: {model.evaluate(test).relative_error:.2%}")

# %% with p1 = N the branch matrix is square and badly conditioned.
# Without a cutoff the fit nearly interpolates the training data and generalizes worse.
plain = assemble({"kind": "slfn"}, {"kind": "mlp"}, 1000, 100, 0, 100, 1, rel_tol=1e-10)
plain.fit(train)
print(f"rel_tol 1e-10: test error {plain.evaluate(test).relative_error:.2%}")

# %% sinusoidal trunk
sin_model = assemble({"kind": "slfn"}, {"kind": "sinusoidal"}, 1000, 100, 0, 100, 1, rel_tol=3e-4)
sin_model.fit(train)
print(f"sinusoidal trunk: {sin_model.evaluate(test).relative_error:.2%}")

# %% predictions can be queried anywhere in [0, 1]
y = np.linspace(0, 1, 7)
print(model.predict(test.inputs[:1], y)[:, 0].round(4))
