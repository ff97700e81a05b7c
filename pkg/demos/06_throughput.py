# %% [markdown]
# # Where the time goes
#
# The candidate stages run on every frame and must keep up with the camera;
# the classifier cost grows with the number of candidates. `benchmark` times
# both on synthetic 640x480 frames, half of which contain a crack. Frame
# generation is not timed.

# %%
import numpy as np

from crackpot import pipeline
from crackpot.neuralnet import NetworkConfig, init_params

cfg = NetworkConfig()
params = init_params(cfg, seed=0)
summary, pre_us, extra = pipeline.benchmark(30, params, cfg, pipeline.PipelineConfig())
print(summary.timing_csv())

# %%
pre = np.array(pre_us)
print(f"preprocessing: {extra['preprocess_fps']:.1f} fps (median {np.median(pre) / 1000:.1f} ms per frame)")
print(f"classification: {extra['classify_us_per_candidate'] / 1000:.2f} ms per candidate, "
      f"{extra['candidates']} candidates in {summary.frames} frames")
print(f"end to end: {summary.fps:.1f} fps")
