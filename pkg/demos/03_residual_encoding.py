# %% [markdown]
# # Residual encoding instead of global pooling
#
# The classifier ends with a layer that softly assigns every spatial feature
# vector to K learned codewords and averages the residuals per codeword. The
# result has K*D numbers however many feature vectors went in, which is what
# lets the same weights classify 64x64 and 99x99 patches.

# %%
import numpy as np

from crackpot.neuralnet import NetworkConfig, assignment_weights, encoding_forward, init_params
from crackpot.neuralnet.network import encode_batch, stack_patches

# %% [markdown]
# ## A case small enough to do by hand
#
# Two scalar features 0 and 1, codewords at 0 and 1, unit smoothing. Each
# feature prefers its own codeword with weight 1/(1+e^-1), about 0.731.

# %%
f = np.array([[0.0], [1.0]])
c = np.array([[0.0], [1.0]])
s = np.array([1.0, 1.0])
a, _ = assignment_weights(f[None], c, s)
print("assignments\n", a[0].round(4))
print("encoding", encoding_forward(f, c, s).round(6), "(residual sums 0.1345 and -0.1345, L2 normalised)")

# %% [markdown]
# ## Fixed length at any patch size

# %%
cfg = NetworkConfig()
params = init_params(cfg, seed=0)
rng = np.random.default_rng(0)
for side in (64, 99, 128):
    patch = rng.integers(0, 256, (side, side, 3)).astype(np.uint8)
    v = encode_batch(params, stack_patches([patch], cfg), cfg)
    print(f"{side}x{side} patch -> encoding length {v.shape[1]}, norm {np.linalg.norm(v):.6f}")

# %% [markdown]
# ## Order does not matter
#
# The residuals are summed over feature vectors, so shuffling them leaves the
# encoding unchanged up to rounding.

# %%
feats = rng.normal(size=(49, 8))
cw = rng.normal(size=(4, 8))
sm = np.ones(4)
perm = rng.permutation(49)
print("max change after shuffling:", np.abs(encoding_forward(feats, cw, sm) - encoding_forward(feats[perm], cw, sm)).max())
