"""Shared fixture builders for the test suite."""

import json
import os

import numpy as np
from PIL import Image

from forestdiff import latent
from forestdiff.raster import ChangeMask


def squares_mask(size, blocks):
    """Blocks are (row, col, height, width); overlap is fine."""
    bits = np.zeros((size, size), dtype=np.uint8)
    for r, c, h, w in blocks:
        bits[r:r + h, c:c + w] = 1
    return ChangeMask(bits)


# The three caption fixtures mirror published example sentences; the block
# layouts were searched once so the derived features (and the seeds below)
# reproduce those sentences verbatim.

def many_small_topleft_mask():
    sides = [9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 21]
    anchors = [(r, c) for r in (2, 25, 48, 71) for c in (2, 25, 48, 71)]
    return squares_mask(256, [(r, c, s, s)
                              for (r, c), s in zip(anchors, sides)])


MANY_SMALL_TOPLEFT_SEED = 15
MANY_SMALL_TOPLEFT_SENTENCE = (
    "minor forest loss is visible occurring in many small patches which are "
    "showing some variation in size mainly located in the top-left area")


def scattered_mask():
    big = [(10, 10), (10, 120), (100, 10), (100, 120)]
    tiny = [(10, 230), (60, 180), (120, 230), (180, 10), (180, 100),
            (200, 180), (230, 60), (240, 240)]
    blocks = [(r, c, 15, 15) for r, c in big] + [(r, c, 2, 2) for r, c in tiny]
    return squares_mask(256, blocks)


SCATTERED_SEED = 118
SCATTERED_SENTENCE = (
    "slight forest degradation is noted scattered across multiple regions "
    "occurring in many small patches which are highly varied in size")


def two_cell_mask():
    wide = [(2, 2), (25, 2), (48, 2), (2, 90), (25, 90), (100, 100)]
    small = [(2, 40), (70, 40), (2, 130), (50, 130), (100, 10), (150, 40),
             (100, 200), (160, 200), (200, 10), (220, 120)]
    blocks = ([(r, c, 17, 32) for r, c in wide]
              + [(r, c, 10, 10) for r, c in small])
    return squares_mask(256, blocks)


TWO_CELL_SEED = 1676
TWO_CELL_SENTENCE = (
    "some modest forest loss is detected largely concentrated in the "
    "top-left and top-center sections occurring in many small patches which "
    "are displaying large variations in size")


def solid_pair(size=128, square=(30, 62, 40, 72)):
    """Solid-color pair with one recolored square; returns (a, b, truth)."""
    a = np.full((size, size, 3), 60, dtype=np.uint8)
    b = a.copy()
    r0, r1, c0, c1 = square
    b[r0:r1, c0:c1] = (10, 200, 30)
    truth = np.zeros((size, size), dtype=np.uint8)
    truth[r0:r1, c0:c1] = 1
    return a, b, ChangeMask(truth)


def synth_file(seed):
    """A saved-format proposal bundle plus its planted truth mask."""
    spec = latent.SynthSpec(seed=seed)
    t1, t2, truth = latent.synth_proposals(spec)
    pf = latent.ProposalFile(spec.width, spec.height, spec.embedding_dim,
                             spec.points_per_side, tuple(t1) + tuple(t2))
    return pf, truth


def write_dataset_tree(root, n=10, size=16, splits=("train",), seed=1):
    """A tiny on-disk dataset; even-numbered examples mention trees."""
    rng = np.random.default_rng(seed)
    made = {}
    for split in splits:
        for sub in ("A", "B", "label"):
            os.makedirs(os.path.join(root, split, sub), exist_ok=True)
        records = []
        for i in range(n):
            eid = "%s%03d" % (split[0], i)
            a = rng.integers(0, 255, (size, size, 3), dtype=np.uint8)
            b = rng.integers(0, 255, (size, size, 3), dtype=np.uint8)
            m = (rng.random((size, size)) < 0.15).astype(np.uint8)
            Image.fromarray(a, "RGB").save(os.path.join(root, split, "A", eid + ".png"))
            Image.fromarray(b, "RGB").save(os.path.join(root, split, "B", eid + ".png"))
            Image.fromarray(m * np.uint8(255), "L").save(
                os.path.join(root, split, "label", eid + ".png"))
            caps = (["trees removed near the road", "cleared ground appears"]
                    if i % 2 == 0 else ["a new building appears"])
            records.append({"example_id": eid, "filename": eid + ".png",
                            "captions": caps})
        with open(os.path.join(root, "captions_%s.json" % split), "w") as fh:
            json.dump(records, fh)
        made[split] = records
    return made
