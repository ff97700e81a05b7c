# %% [markdown]
# # Road masks
#
# Edges outside the road (kerbs, cars, vegetation) should not become
# candidates. The detector ANDs the edge map with a road mask. Masks can be
# precomputed files, the whole frame, or a fixed trapezoid that roughly
# matches the road ahead of a forward-facing camera.

# %%
import os

import numpy as np

from crackpot import imgproc, netpbm, synthetic
from crackpot.roadmask import RoadMaskSource, mask_for_frame

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(OUT, exist_ok=True)

# %% [markdown]
# Trapezoid corners are fractions of the frame size, so the same source
# works at any resolution.

# %%
road = RoadMaskSource.trapezoid([(0.35, 0.45), (0.65, 0.45), (1.0, 1.0), (0.0, 1.0)])
for w, h in ((8, 8), (640, 480)):
    m = mask_for_frame(road, 0, w, h)
    print(f"{w}x{h}: {m.mean():.3f} of pixels are road")
print(mask_for_frame(road, 0, 8, 8).astype(int))

# %% [markdown]
# Precomputed masks are read per frame from a pattern with `{index}`; any
# sample of 128 or more counts as road.

# %%
pattern = os.path.join(OUT, "02_mask_{index}.pgm")
netpbm.write_image(pattern.format(index=0), mask_for_frame(road, 0, 640, 480))
from_file = mask_for_frame(RoadMaskSource.from_files(pattern), 0, 640, 480)
print("file mask equals trapezoid:", np.array_equal(from_file, mask_for_frame(road, 0, 640, 480)))

# %% [markdown]
# Gating only removes edge pixels, so every gated candidate falls inside a
# candidate found without the mask.

# %%
frame, _ = synthetic.crack_frame(np.random.default_rng(8))
edges = imgproc.dilate(imgproc.canny_edges(frame), 3)
full = imgproc.extract_boxes(edges)
gated = imgproc.extract_boxes(imgproc.mask_and(edges, from_file))
print(len(full), "candidates on the full frame,", len(gated), "inside the road")
