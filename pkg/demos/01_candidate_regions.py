# %% [markdown]
# # Candidate regions from edges
#
# A crack is a thin dark line on fairly uniform asphalt. The cheap way to find
# places worth classifying is to look for edges, grow them a little so broken
# fragments join up, and box each connected blob.
#
# This script walks one synthetic frame through those steps and writes each
# intermediate image to `demos/output/` as a PGM so it can be opened in any
# image viewer.

# %%
import os

import numpy as np

from crackpot import imgproc, netpbm, synthetic

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")
os.makedirs(OUT, exist_ok=True)

rng = np.random.default_rng(3)
frame, truth = synthetic.crack_frame(rng)
print("frame", frame.shape, frame.dtype, "ground-truth crack box", truth)
netpbm.write_image(os.path.join(OUT, "01_frame.pgm"), frame)

# %% [markdown]
# ## Canny
#
# `canny_stages` exposes every intermediate array. The blur removes most of
# the asphalt grain; the L1 Sobel magnitude is large along the crack borders;
# suppression thins those ridges to one pixel; hysteresis keeps weak ridge
# pixels only when they touch a strong one.

# %%
stages = imgproc.canny_stages(frame, low=50, high=150)
mag = stages["magnitude"]
print("magnitude range", mag.min(), mag.max())
print("pixels above low after suppression", int((stages["suppressed"] >= 50).sum()))
print("edge pixels", int(stages["edges"].sum()))
netpbm.write_image(os.path.join(OUT, "01_magnitude.pgm"), np.clip(mag // 4, 0, 255).astype(np.uint8))
netpbm.write_image(os.path.join(OUT, "01_edges.pgm"), stages["edges"])

# %% [markdown]
# ## Dilation and boxes
#
# Three passes of a 3x3 dilation bridge gaps of a few pixels. Components
# smaller than 80 pixels are discarded as speckle.

# %%
grown = imgproc.dilate(stages["edges"], 3)
netpbm.write_image(os.path.join(OUT, "01_dilated.pgm"), grown)
boxes = imgproc.extract_boxes(grown, min_area=80)
for b in boxes:
    print("box", b, "overlaps truth:", b.overlaps(truth))

# %% [markdown]
# Each box is cut from the original frame and resized to a 64x64 patch, the
# input size of the classifier.

# %%
patches = [imgproc.crop_resize(frame, b, 64) for b in boxes]
for i, p in enumerate(patches):
    netpbm.write_image(os.path.join(OUT, f"01_patch_{i}.pgm"), p.pixels)
print(len(patches), "patches written to", OUT)
