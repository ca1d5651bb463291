"""Dataset plumbing: directory index, tree-keyword subset, splits, statistics.

Expected layout: root/{train,val,test}/{A,B,label}/<id>.png with one captions
JSON per split at the root (captions_<split>.json), each an array of
{example_id, filename, captions}.
"""

import json
import os
import random
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .raster import ChangeMask, change_fraction, read_rgb_png

SPLITS = ("train", "val", "test")

TREE_KEYWORDS = frozenset((
    "tree", "trees", "wood", "woods", "woodland", "wooded",
    "forest", "forests", "jungle", "jungles",
))

_WORD_RE = re.compile(r"[a-z]+")


@dataclass(frozen=True)
class ExampleEntry:
    example_id: str
    split: str
    path_a: str
    path_b: str
    path_mask: str
    captions: tuple


@dataclass(frozen=True)
class DatasetIndex:
    root: str
    examples: dict  # split -> tuple of ExampleEntry, sorted by id

    def split_ids(self, split):
        return [e.example_id for e in self.examples.get(split, ())]

    def all_entries(self):
        return [e for split in SPLITS for e in self.examples.get(split, ())]

    def __len__(self):
        return sum(len(v) for v in self.examples.values())


@dataclass
class LoadedExample:
    example_id: str
    image_a: np.ndarray
    image_b: np.ndarray
    mask: ChangeMask
    captions: tuple


@dataclass(frozen=True)
class NormalizationStats:
    mean: tuple  # per channel, [0,1] units
    std: tuple


def _png_size(path):
    with Image.open(path) as im:
        return im.size  # (w, h)


def load_index(root):
    """Build the index, checking files and dimensions up front."""
    if not os.path.isdir(root):
        raise FileNotFoundError("dataset root %s does not exist" % root)
    examples = {}
    for split in SPLITS:
        a_dir = os.path.join(root, split, "A")
        if not os.path.isdir(a_dir):
            continue
        cap_path = os.path.join(root, "captions_%s.json" % split)
        if not os.path.isfile(cap_path):
            raise FileNotFoundError("missing captions file %s" % cap_path)
        with open(cap_path) as fh:
            try:
                records = json.load(fh)
            except json.JSONDecodeError as err:
                raise ValueError("malformed captions JSON %s: %s" % (cap_path, err))
        captions = {}
        for rec in records:
            captions[rec["example_id"]] = tuple(rec["captions"])
        entries = []
        for name in sorted(os.listdir(a_dir)):
            if not name.endswith(".png"):
                continue
            ex_id = name[:-4]
            paths = {k: os.path.join(root, split, d, name)
                     for k, d in (("a", "A"), ("b", "B"), ("mask", "label"))}
            for kind, p in paths.items():
                if not os.path.isfile(p):
                    raise FileNotFoundError(
                        "%s/%s: missing %s image %s" % (split, ex_id, kind, p))
            size_a = _png_size(paths["a"])
            if _png_size(paths["b"]) != size_a or _png_size(paths["mask"]) != size_a:
                raise ValueError("%s/%s: A/B/mask dimensions differ" % (split, ex_id))
            if ex_id not in captions:
                raise ValueError("%s/%s: no captions record" % (split, ex_id))
            entries.append(ExampleEntry(ex_id, split, paths["a"], paths["b"],
                                        paths["mask"], captions[ex_id]))
        examples[split] = tuple(sorted(entries, key=lambda e: e.example_id))
    return DatasetIndex(root, examples)


def has_tree_keyword(caption):
    return any(w in TREE_KEYWORDS for w in _WORD_RE.findall(caption.lower()))


def filter_tree_examples(index):
    """Keep examples where any caption mentions a tree keyword as a token."""
    kept = {}
    for split, entries in index.examples.items():
        kept[split] = tuple(e for e in entries
                            if any(has_tree_keyword(c) for c in e.captions))
    return DatasetIndex(index.root, kept)


def make_splits(index, ratios=(0.8, 0.1, 0.1), seed=0):
    """Seeded shuffle, floor-sized val/test, remainder to train."""
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    ids = sorted(e.example_id for e in index.all_entries())
    if not ids:
        raise ValueError("empty index")
    rng = random.Random(seed)
    rng.shuffle(ids)
    n = len(ids)
    n_val = int(n * ratios[1])
    n_test = int(n * ratios[2])
    n_train = n - n_val - n_test
    return {
        "train": ids[:n_train],
        "val": ids[n_train:n_train + n_val],
        "test": ids[n_train + n_val:],
    }


def load_example(entry):
    mask = ChangeMask.read_png(entry.path_mask)
    return LoadedExample(entry.example_id, read_rgb_png(entry.path_a),
                         read_rgb_png(entry.path_b), mask, entry.captions)


def mask_stats(index, bins=20):
    """Per-example change fractions with the usual summary numbers."""
    fractions = {}
    for e in index.all_entries():
        fractions[e.example_id] = change_fraction(ChangeMask.read_png(e.path_mask))
    values = np.array(list(fractions.values()), dtype=np.float64)
    counts, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    return {
        "fractions": fractions,
        "mean": float(values.mean()) if len(values) else 0.0,
        "max": float(values.max()) if len(values) else 0.0,
        "histogram": {"counts": counts.tolist(), "edges": edges.tolist()},
    }


def normalization_stats(index, split):
    """Streaming per-channel mean/std (population) over A and B images."""
    entries = index.examples.get(split, ())
    if not entries:
        raise ValueError("split %r is empty" % (split,))
    count = 0
    total = np.zeros(3, dtype=np.float64)
    total_sq = np.zeros(3, dtype=np.float64)
    for e in entries:
        for path in (e.path_a, e.path_b):
            img = read_rgb_png(path).astype(np.float64) / 255.0
            count += img.shape[0] * img.shape[1]
            total += img.sum(axis=(0, 1))
            total_sq += (img * img).sum(axis=(0, 1))
    mean = total / count
    var = total_sq / count - mean * mean
    # one-pass variance leaves O(eps) residue on constant input
    floor = 1e-12 * np.maximum(total_sq / count, 1e-30)
    if np.any(var <= floor):
        raise ValueError("zero per-channel std; split has no intensity variation")
    std = np.sqrt(var)
    return NormalizationStats(tuple(mean.tolist()), tuple(std.tolist()))


def resize_bilinear(img, out_h, out_w):
    """Half-pixel-center bilinear resize; returns float64."""
    src = np.asarray(img, dtype=np.float64)
    h, w = src.shape[:2]
    ys = (np.arange(out_h) + 0.5) * h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * w / out_w - 0.5
    y0f = np.floor(ys)
    x0f = np.floor(xs)
    wy = ys - y0f
    wx = xs - x0f
    y0 = np.clip(y0f.astype(np.int64), 0, h - 1)
    y1 = np.clip(y0f.astype(np.int64) + 1, 0, h - 1)
    x0 = np.clip(x0f.astype(np.int64), 0, w - 1)
    x1 = np.clip(x0f.astype(np.int64) + 1, 0, w - 1)
    if src.ndim == 2:
        src = src[:, :, None]
        squeeze = True
    else:
        squeeze = False
    wy = wy[:, None, None]
    wx = wx[None, :, None]
    out = (src[y0][:, x0] * (1 - wy) * (1 - wx)
           + src[y0][:, x1] * (1 - wy) * wx
           + src[y1][:, x0] * wy * (1 - wx)
           + src[y1][:, x1] * wy * wx)
    return out[:, :, 0] if squeeze else out


def resize_nearest(arr, out_h, out_w):
    src = np.asarray(arr)
    h, w = src.shape[:2]
    ys = np.minimum(((np.arange(out_h) + 0.5) * h / out_h).astype(np.int64), h - 1)
    xs = np.minimum(((np.arange(out_w) + 0.5) * w / out_w).astype(np.int64), w - 1)
    return src[ys][:, xs]


def resize_example(example, size=256):
    """Bilinear for the images, nearest for the mask (keeps it binary)."""
    img_a = np.clip(np.rint(resize_bilinear(example.image_a, size, size)),
                    0, 255).astype(np.uint8)
    img_b = np.clip(np.rint(resize_bilinear(example.image_b, size, size)),
                    0, 255).astype(np.uint8)
    mask = ChangeMask(resize_nearest(example.mask.bits, size, size))
    return LoadedExample(example.example_id, img_a, img_b, mask, example.captions)


def write_example(root, split, example):
    """Lay one example down in the directory convention (test fixtures, CLI)."""
    for d in ("A", "B", "label"):
        os.makedirs(os.path.join(root, split, d), exist_ok=True)
    name = example.example_id + ".png"
    Image.fromarray(example.image_a, mode="RGB").save(
        os.path.join(root, split, "A", name))
    Image.fromarray(example.image_b, mode="RGB").save(
        os.path.join(root, split, "B", name))
    example.mask.write_png(os.path.join(root, split, "label", name))


def write_captions(root, split, records):
    path = os.path.join(root, "captions_%s.json" % split)
    with open(path, "w") as fh:
        json.dump([{"example_id": ex_id, "filename": ex_id + ".png",
                    "captions": list(caps)} for ex_id, caps in records], fh)
