# %% [markdown]
# # Closed-form fitting of a bilinear model
#
# The only learned object is a matrix W with T W B ~ G. The least-squares
# minimizer is pinv(T) G pinv(B). This script checks that on a small problem.

# %%
import numpy as np

from elmdeeponet.linalg import effective_rank, fit_bilinear, pseudoinverse

rng = np.random.default_rng(0)

# %% a rank-deficient matrix: 6 x 5 of rank 3
a = rng.standard_normal((6, 3)) @ rng.standard_normal((3, 5))
x = pseudoinverse(a)
print("rank:", effective_rank(a))
print("A X A = A       ", np.allclose(a @ x @ a, a))
print("X A X = X       ", np.allclose(x @ a @ x, x))
print("A X symmetric   ", np.allclose(a @ x, (a @ x).T))
print("X A symmetric   ", np.allclose(x @ a, (x @ a).T))

# %% the bilinear least-squares fit
t = rng.standard_normal((40, 6))   # trunk features at 40 points
b = rng.standard_normal((8, 25))   # branch features of 25 inputs
w_true = rng.standard_normal((6, 8))
g = t @ w_true @ b + 1e-3 * rng.standard_normal((40, 25))

w = fit_bilinear(t, b, g)
print("max |W - W_true|:", np.abs(w - w_true).max())
print("gradient at the fit:", np.abs(t.T @ (t @ w @ b - g) @ b.T).max())

# %% a relative singular-value cutoff discards directions that only carry noise
b_bad = b.copy()
b_bad[-1] = b_bad[0] + 1e-9 * rng.standard_normal(25)
for tol in (1e-12, 1e-6):
    w = fit_bilinear(t, b_bad, g, rel_tol=tol)
    print(f"rel_tol={tol:g}: rank(B)={effective_rank(b_bad, tol)}, |W|={np.linalg.norm(w):.3g}")
