"""Zero-shot change detection by latent matching over mask proposals.

Proposals carry two embeddings of the same footprint, one per temporal image;
the angle between them is the change score. Everything below is plain
geometry, no encoder runs here: proposal files are ingested, the synthetic
generator stands in for the encoder in tests.
"""

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .raster import ChangeMask


def rle_encode(mask):
    """Row-major run lengths, starting with the zero run (possibly 0)."""
    flat = np.asarray(mask, dtype=bool).ravel()
    runs = []
    cur = False
    n = 0
    for v in flat:
        if v == cur:
            n += 1
        else:
            runs.append(n)
            cur = v
            n = 1
    runs.append(n)
    return runs


def rle_decode(runs, width, height):
    if any(r < 0 for r in runs):
        raise ValueError("negative run length")
    if sum(runs) != width * height:
        raise ValueError("run lengths do not cover the image")
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    val = False
    for r in runs:
        if val:
            flat[pos:pos + r] = True
        pos += r
        val = not val
    return flat.reshape(height, width)


def _b64_encode(vec):
    return base64.b64encode(np.asarray(vec, dtype="<f4").tobytes()).decode("ascii")


def _b64_decode(s):
    return np.frombuffer(base64.b64decode(s), dtype="<f4").copy()


@dataclass(eq=False)
class Proposal:
    id: str
    source_time: str  # "t1" or "t2"
    footprint: np.ndarray  # HxW bool
    stability: float
    emb_same: np.ndarray  # embedding of the footprint in its own image
    emb_other: np.ndarray  # same footprint, the other temporal image

    def __post_init__(self):
        if self.source_time not in ("t1", "t2"):
            raise ValueError("source_time must be 't1' or 't2'")
        if not 0.0 <= self.stability <= 1.0:
            raise ValueError("stability outside [0,1]")
        self.footprint = np.asarray(self.footprint, dtype=bool)
        self.emb_same = np.asarray(self.emb_same, dtype=np.float32)
        self.emb_other = np.asarray(self.emb_other, dtype=np.float32)
        if self.emb_same.shape != self.emb_other.shape or self.emb_same.ndim != 1:
            raise ValueError("embedding dimensions differ")
        if not np.linalg.norm(self.emb_same) > 0 or not np.linalg.norm(self.emb_other) > 0:
            raise ValueError("zero-norm embedding")
        if self.pixels == 0:
            raise ValueError("empty footprint")

    @property
    def pixels(self):
        return int(self.footprint.sum())

    @property
    def area_fraction(self):
        return self.pixels / self.footprint.size

    def contains(self, row, col):
        return bool(self.footprint[row, col])

    @property
    def change_angle(self):
        return latent_angle(self.emb_same, self.emb_other)


@dataclass(frozen=True)
class MatchParams:
    change_angle_threshold: float = 145.0
    stability_threshold: float = 0.93
    max_area_fraction: float = 0.9
    min_area_pixels: int = 400
    object_similarity_threshold: float = 60.0
    top_k: int = None
    area_fraction_is_minimum: bool = False  # alternate reading of the area bound

    def __post_init__(self):
        if not 0.0 <= self.change_angle_threshold <= 180.0:
            raise ValueError("change_angle_threshold outside [0,180]")
        if not 0.0 <= self.stability_threshold <= 1.0:
            raise ValueError("stability_threshold outside [0,1]")
        if not 0.0 < self.max_area_fraction <= 1.0:
            raise ValueError("max_area_fraction outside (0,1]")
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be >= 1 when set")


@dataclass(frozen=True)
class MatchResult:
    proposal: Proposal
    change_angle: float


def latent_angle(e1, e2):
    """Angle between embeddings in degrees, on [0, 180]."""
    a = np.asarray(e1, dtype=np.float64)
    b = np.asarray(e2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("zero vector")
    cos = float(np.dot(a, b) / (na * nb))
    return math.degrees(math.acos(max(-1.0, min(1.0, cos))))


def filter_proposals(proposals, params):
    """Stability, absolute-size, and relative-area gates."""
    out = []
    for p in proposals:
        if p.stability < params.stability_threshold:
            continue
        if p.pixels < params.min_area_pixels:
            continue
        if params.area_fraction_is_minimum:
            if p.area_fraction < params.max_area_fraction:
                continue
        elif p.area_fraction > params.max_area_fraction:
            continue
        out.append(p)
    return out


def bitemporal_match(proposals_t1, proposals_t2, params):
    """Change set over both times: angle threshold, or top_k when set.

    Symmetric in its two inputs since each proposal is scored on its own
    embedding pair.
    """
    scored = [MatchResult(p, p.change_angle)
              for p in list(proposals_t1) + list(proposals_t2)]
    if params.top_k is not None:
        scored.sort(key=lambda m: (-m.change_angle, m.proposal.id))
        picked = scored[:params.top_k]
    else:
        picked = [m for m in scored
                  if m.change_angle >= params.change_angle_threshold]
    picked.sort(key=lambda m: m.proposal.id)
    return picked


@dataclass(frozen=True)
class PointQueryResult:
    matches: tuple  # MatchResult, change-filtered
    category: tuple  # proposal ids within the similarity cone
    query_embedding: np.ndarray = field(repr=False, default=None)


def point_query(points, proposals_t1, proposals_t2, params):
    """Category lookup from click points, then change filtering.

    Seeds are same-time proposals containing a point; the query embedding is
    the mean of unit-normalized seed embeddings (so scaling any embedding
    cannot move the decision boundary).
    """
    if not points:
        raise ValueError("need at least one point")
    by_time = {"t1": list(proposals_t1), "t2": list(proposals_t2)}
    seeds = {}
    for row, col, t in points:
        if t not in by_time:
            raise ValueError("point time must be 't1' or 't2'")
        for p in by_time[t]:
            if p.contains(row, col):
                seeds[p.id] = p
    if not seeds:
        raise ValueError("no proposal contains any query point")
    units = [p.emb_same / np.linalg.norm(p.emb_same) for p in seeds.values()]
    query = np.mean(units, axis=0)
    category = []
    for p in by_time["t1"] + by_time["t2"]:
        if latent_angle(query, p.emb_same) <= params.object_similarity_threshold:
            category.append(p)
    category.sort(key=lambda p: p.id)
    matches = [MatchResult(p, p.change_angle) for p in category
               if p.change_angle >= params.change_angle_threshold]
    return PointQueryResult(tuple(matches), tuple(p.id for p in category), query)


def proposals_to_mask(selection, width, height):
    """Union of footprints; accepts proposals or match results."""
    out = np.zeros((height, width), dtype=np.uint8)
    for item in selection:
        p = item.proposal if isinstance(item, MatchResult) else item
        if p.footprint.shape != (height, width):
            raise ValueError("footprint out of bounds for %dx%d" % (width, height))
        out |= p.footprint.astype(np.uint8)
    return ChangeMask(out)


@dataclass
class ProposalFile:
    width: int
    height: int
    embedding_dim: int
    points_per_side: int
    proposals: list

    def by_time(self, t):
        return [p for p in self.proposals if p.source_time == t]


def save_proposals(pf, path):
    body = {
        "width": pf.width, "height": pf.height,
        "embedding_dim": pf.embedding_dim,
        "points_per_side": pf.points_per_side,
        "proposals": [{
            "id": p.id,
            "source_time": p.source_time,
            "stability": p.stability,
            "footprint": rle_encode(p.footprint),
            "emb_same": _b64_encode(p.emb_same),
            "emb_other": _b64_encode(p.emb_other),
        } for p in pf.proposals],
    }
    with open(path, "w") as fh:
        json.dump(body, fh)


def load_proposals(path):
    with open(path) as fh:
        return parse_proposals(json.load(fh))


def parse_proposals(body):
    w, h, dim = body["width"], body["height"], body["embedding_dim"]
    proposals = []
    for rec in body["proposals"]:
        p = Proposal(
            id=rec["id"],
            source_time=rec["source_time"],
            footprint=rle_decode(rec["footprint"], w, h),
            stability=rec["stability"],
            emb_same=_b64_decode(rec["emb_same"]),
            emb_other=_b64_decode(rec["emb_other"]),
        )
        if p.emb_same.shape[0] != dim:
            raise ValueError("embedding dim disagrees with header")
        proposals.append(p)
    return ProposalFile(w, h, dim, body["points_per_side"], proposals)


@dataclass(frozen=True)
class SynthSpec:
    clusters: int = 2
    angle_within: float = 10.0
    angle_between: float = 90.0
    planted_change_angle: float = 150.0
    seed: int = 0
    width: int = 256
    height: int = 256
    embedding_dim: int = 32
    per_cluster: int = 8
    planted_per_cluster: int = 2
    points_per_side: int = 16
    decoys: bool = True


def _unit(v):
    return v / np.linalg.norm(v)


def _perp_unit(v, rng):
    while True:
        g = rng.standard_normal(v.shape[0])
        g -= np.dot(g, v) * v
        n = np.linalg.norm(g)
        if n > 1e-9:
            return g / n


def _rotate(v, degrees, rng):
    """Unit vector at exactly the given angle from unit v."""
    theta = math.radians(degrees)
    return math.cos(theta) * v + math.sin(theta) * _perp_unit(v, rng)


def _cluster_centers(spec, rng):
    k = spec.clusters
    c = math.cos(math.radians(spec.angle_between))
    gram = np.full((k, k), c)
    np.fill_diagonal(gram, 1.0)
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError:
        raise ValueError("cluster separation %.1f infeasible for %d clusters"
                         % (spec.angle_between, k))
    if spec.embedding_dim < k:
        raise ValueError("embedding_dim must be >= clusters")
    centers = np.zeros((k, spec.embedding_dim))
    centers[:, :k] = chol
    q, _ = np.linalg.qr(rng.standard_normal((spec.embedding_dim, spec.embedding_dim)))
    return centers @ q.T


def synth_proposals(spec):
    """Deterministic proposal pairs with planted changes and known truth.

    Each conceptual object holds one tile footprint shared by its t1 and t2
    proposals; planted objects get the t2 appearance rotated by exactly
    planted_change_angle, unchanged ones stay within angle_within. Decoy
    proposals (low stability, undersized, near-full-frame) exercise the
    filters without entering the ground truth.
    """
    if spec.angle_within >= spec.angle_between:
        raise ValueError("angle_within must be below angle_between")
    if spec.clusters >= 3 and spec.angle_within >= 90:
        raise ValueError("angle_within >= 90 cannot keep 3+ clusters separated")
    if spec.planted_per_cluster > spec.per_cluster:
        raise ValueError("more planted changes than cluster members")
    rng = np.random.default_rng(spec.seed)
    centers = _cluster_centers(spec, rng)

    total = spec.clusters * spec.per_cluster
    grid = math.ceil(math.sqrt(total + (1 if spec.decoys else 0)))
    cell_h = spec.height // grid
    cell_w = spec.width // grid
    if cell_h < 23 or cell_w < 23:
        raise ValueError("image too small for the requested proposal count")

    t1, t2 = [], []
    truth = np.zeros((spec.height, spec.width), dtype=np.uint8)
    idx = 0
    for ci in range(spec.clusters):
        for m in range(spec.per_cluster):
            gy, gx = divmod(idx, grid)
            side = int(rng.integers(21, min(cell_h, cell_w) - 1))
            fp = np.zeros((spec.height, spec.width), dtype=bool)
            fp[gy * cell_h + 1:gy * cell_h + 1 + side,
               gx * cell_w + 1:gx * cell_w + 1 + side] = True
            v = _rotate(_unit(centers[ci]), rng.uniform(0, spec.angle_within), rng)
            planted = m < spec.planted_per_cluster
            if planted:
                w_vec = _rotate(v, spec.planted_change_angle, rng)
                truth |= fp.astype(np.uint8)
            else:
                w_vec = _rotate(v, rng.uniform(0, spec.angle_within), rng)
            stab = float(rng.uniform(0.94, 1.0))
            t1.append(Proposal("obj%03d-t1" % idx, "t1", fp, stab,
                               v.astype(np.float32), w_vec.astype(np.float32)))
            t2.append(Proposal("obj%03d-t2" % idx, "t2", fp, stab,
                               w_vec.astype(np.float32), v.astype(np.float32)))
            idx += 1
    if spec.decoys:
        gy, gx = divmod(idx, grid)
        v = _unit(centers[0])
        w_vec = _rotate(v, spec.planted_change_angle, rng)
        # change-like angle but unstable: must fall to the stability gate
        fp = np.zeros((spec.height, spec.width), dtype=bool)
        fp[gy * cell_h + 1:gy * cell_h + 22, gx * cell_w + 1:gx * cell_w + 22] = True
        t1.append(Proposal("decoy-lowstab-t1", "t1", fp,
                           float(rng.uniform(0.4, 0.92)),
                           v.astype(np.float32), w_vec.astype(np.float32)))
        # undersized: below the 400-pixel gate
        fp = np.zeros((spec.height, spec.width), dtype=bool)
        fp[0:10, spec.width - 10:spec.width] = True
        t1.append(Proposal("decoy-small-t1", "t1", fp, 0.99,
                           v.astype(np.float32), w_vec.astype(np.float32)))
        # near-full-frame: above the relative-area gate
        fp = np.ones((spec.height, spec.width), dtype=bool)
        t2.append(Proposal("decoy-frame-t2", "t2", fp, 0.99,
                           v.astype(np.float32), w_vec.astype(np.float32)))
    return t1, t2, ChangeMask(truth)


def zeroshot_detect(proposals_t1, proposals_t2, params, width, height):
    """Filter, match, and rasterize in one call."""
    kept1 = filter_proposals(proposals_t1, params)
    kept2 = filter_proposals(proposals_t2, params)
    matches = bitemporal_match(kept1, kept2, params)
    return matches, proposals_to_mask(matches, width, height)
