# %% [markdown]
# # The four benchmark operators
#
# Each generator returns an OperatorDataset: inputs N x m (one row per input
# function), labels M x N (one column per sample), and the sensor and
# collocation points.

# %%
import numpy as np

from elmdeeponet import problems as P

# %% antiderivative s(x) = int_0^x u
ds = P.gen_antiderivative(n=200, seed=0)
print("antiderivative:", ds.inputs.shape, ds.labels.shape)
x = ds.sensor_points[:, 0]
print("check on u = 2x:", np.abs(P.antiderivative_labels((2 * x)[None], x, x)[:, 0] - x**2).max())

# %% nonlinear ODE s' = -0.1 s^2 + u, s(0) = 0, solved with RK4
ds = P.gen_nonlinear_ode(n=200, seed=0)
s = P.ode_labels(np.full((1, 100), 0.1), x, x)[:, 0]
print("constant source vs tanh closed form:", np.abs(s - np.tanh(0.1 * x)).max())

# %% Darcy flow div(kappa grad u) = 1 with zero boundary values
ds = P.gen_darcy(n=10, seed=0)
print("darcy:", ds.inputs.shape, ds.labels.shape, "min kappa:", ds.inputs.min().round(4))
u = P.solve_darcy(np.ones((51, 51)))
print("centre value for kappa = 1:", u[25, 25].round(5), "(series: -0.07367)")

# %% reaction-diffusion u_t = D u_xx + k u^2 + s(x); the inverse problem maps u(1, .) back to s
ds = P.gen_inverse_source(n=50, seed=0)
print("inverse source:", ds.meta["observation"], ds.inputs.shape, ds.labels.shape)
heat = P.solve_reaction_diffusion(np.zeros(100), 0.01, 0.0, np.sin(np.pi * x), 1000, 100)
print("heat equation error:", np.abs(heat[-1] - np.exp(-0.01 * np.pi**2) * np.sin(np.pi * x)).max())

# %% the first half of the samples is used for training
train, test = ds.split()
print(train.n, test.n)
