"""Patch extraction and the deterministic toy encoder.

Patches are cut around landmark positions with edge replication, so a window
hanging over the border still comes back at full size. The encoder pools any
patch to an 8x8 grid and projects it with a seeded random matrix, so the same
pixels and seed always give the same feature vector.
"""

import numpy as np

from facegraph import (
    EncoderConfig,
    encode_patch_toy,
    extract_patch,
    features_for_sample,
    read_pgm,
    write_pgm,
)

rng = np.random.default_rng(1)

# a synthetic grayscale image with a bright square in the middle
image = np.full((64, 64), 40, dtype=np.uint8)
image[24:40, 24:40] = 200
write_pgm("demo_image.pgm", image)
image = read_pgm("demo_image.pgm")

center_patch = extract_patch(image, (32, 32), 9, 9)
corner_patch = extract_patch(image, (0, 0), 9, 9)
print("patch at the bright center, mean intensity:", center_patch.mean())
print("patch at the corner (edge replication keeps 9x9):",
      corner_patch.shape, "mean:", corner_patch.mean())

config = EncoderConfig(out_dim=16, projection_seed=1000)
feature = encode_patch_toy(center_patch, config)
print("\nencoded center patch, first 4 dims:", np.round(feature[:4], 4))
print("re-encoding is bit-identical:",
      np.array_equal(feature, encode_patch_toy(center_patch, config)))

landmarks = np.array([[32.0, 32.0], [5.0, 5.0], [60.0, 10.0]])
features = features_for_sample(image, landmarks, 9, 9, config)
print("\nper-landmark features, shape:", features.shape)
print("bright vs dark landmark differ:",
      not np.array_equal(features[0], features[1]))
