"""Release gates for the whole package, one test per gate.

Each test states its tolerance inline; run `pytest -v tests/test_acceptance.py`
for one pass/fail line per gate. The two corpus gates need real data on disk
and skip (with the reason shown) when the corresponding environment variable
is unset.
"""

import json
import os
import random as pyrandom
import re
import time
from collections import deque

import numpy as np
import pytest
from fastapi.testclient import TestClient

from forestdiff import dataset, latent, mtl
from forestdiff.agent import ScriptedBackend, create_app, register_tools
from forestdiff.captions import (NO_CHANGE_VARIANTS, extract_features, lexicon,
                                 render_caption)
from forestdiff.metrics import (CaptionCorpus, ConfusionMatrix, accumulate,
                                bleu, cider_d, meteor_lite, miou, rouge_l)
from forestdiff.raster import (CELL_NAMES, BitemporalPair, ChangeMask,
                               DiffConfig, difference_mask)

import conftest
import oracles

WORDS = ("forest", "loss", "minor", "area", "patch", "trees", "cleared",
         "north", "visible", "small", "large", "region")


def random_corpus(rng, n_items, max_refs=4, max_len=12):
    items = []
    for _ in range(n_items):
        cand = " ".join(rng.choice(WORDS)
                        for _ in range(rng.randint(1, max_len)))
        refs = [" ".join(rng.choice(WORDS)
                         for _ in range(rng.randint(1, max_len)))
                for _ in range(rng.randint(1, max_refs))]
        items.append((cand, refs))
    return items


def test_caption_metrics_match_brute_force_oracles():
    """BLEU-1..4, ROUGE-L, METEOR-lite, CIDEr-D within 1e-9 of naive
    reimplementations on 200 random mini-corpora; identity behavior checked;
    under 10 s."""
    t0 = time.monotonic()
    rng = pyrandom.Random(20260814)
    for _ in range(200):
        items = random_corpus(rng, rng.randint(2, 20))
        corpus = CaptionCorpus(items)
        toks = [(oracles.o_tokenize(c), [oracles.o_tokenize(r) for r in refs])
                for c, refs in items]
        for n in range(1, 5):
            assert abs(bleu(corpus, n) - oracles.o_bleu(toks, n)) < 1e-9
        assert abs(rouge_l(corpus) - oracles.o_rouge_l(toks)) < 1e-9
        assert abs(meteor_lite(corpus) - oracles.o_meteor_lite(toks)) < 1e-9
        assert abs(cider_d(corpus) - oracles.o_cider_d(toks)) < 1e-9

    # identity corpus: candidates equal their single reference
    sentences = ["minor forest loss near the north region",
                 "many small cleared patches are visible",
                 "trees removed across a large area"]
    identity = CaptionCorpus((s, [s]) for s in sentences)
    for n in range(1, 5):
        assert bleu(identity, n) == 1.0
    assert rouge_l(identity) == 1.0
    # meteor keeps its fragmentation penalty even on identical sentences
    want = np.mean([1.0 - 0.5 / len(s.split()) ** 3 for s in sentences])
    assert meteor_lite(identity) == pytest.approx(want, abs=1e-12)
    # degenerate idf: every item shares one reference, so cider-d is 0
    shared = CaptionCorpus((s, ["forest loss everywhere"]) for s in sentences)
    assert cider_d(shared) == 0.0
    assert time.monotonic() - t0 < 10.0


def test_miou_matches_per_pixel_brute_force():
    """Confusion accumulation equals per-pixel tallies exactly on 100 random
    16x16 pairs; perfect prediction scores 1.0; class swap leaves miou put."""
    rng = np.random.default_rng(42)
    cm = ConfusionMatrix()
    tp = fp = fn = tn = 0
    for _ in range(100):
        pred = (rng.random((16, 16)) < rng.uniform(0, 1)).astype(np.uint8)
        gt = (rng.random((16, 16)) < rng.uniform(0, 1)).astype(np.uint8)
        cm = accumulate(cm, ChangeMask(pred), ChangeMask(gt))
        dtp, dfp, dfn, dtn = oracles.o_confusion(pred, gt)
        tp, fp, fn, tn = tp + dtp, fp + dfp, fn + dfn, tn + dtn
    assert (cm.tp, cm.fp, cm.fn, cm.tn) == (tp, fp, fn, tn)
    report = miou(cm)
    want_c, want_nc, want_m = oracles.o_miou(tp, fp, fn, tn)
    assert report.iou_c == pytest.approx(want_c, abs=1e-12)
    assert report.miou == pytest.approx(want_m, abs=1e-12)

    perfect = accumulate(ConfusionMatrix(), ChangeMask(gt), ChangeMask(gt))
    assert miou(perfect).miou == 1.0

    swapped = accumulate(ConfusionMatrix(), ChangeMask(1 - pred),
                         ChangeMask(1 - gt))
    straight = accumulate(ConfusionMatrix(), ChangeMask(pred), ChangeMask(gt))
    assert miou(swapped).iou_c == pytest.approx(miou(straight).iou_nc)
    assert miou(swapped).miou == pytest.approx(miou(straight).miou)


def test_loss_normalization_totals_task_count():
    """normalized_total returns exactly N for 1000 random positive loss
    vectors at each of N in {2, 3, 5}."""
    rng = np.random.default_rng(7)
    for n in (2, 3, 5):
        for _ in range(1000):
            losses = np.exp(rng.uniform(-20, 20, n))
            total, weights = mtl.normalized_total(losses)
            assert total == float(n)
            assert np.array_equal(weights, 1.0 / losses)


def test_gradient_surgery_suite():
    """PCGrad identity/annihilation/worked-vector exact; cagrad(.,0) is the
    mean gradient; CAGrad objective within 1e-4 of a dense grid on 100 random
    two-task instances; graddrop agreement exact and its +-1 Monte-Carlo mean
    within [-0.05, 0.05] over 10^4 draws; under 30 s."""
    t0 = time.monotonic()
    rng = np.random.default_rng(0)

    agreeable = np.array([[1.0, 0.0, 2.0], [2.0, 1.0, 0.0]])
    assert np.array_equal(mtl.pcgrad(agreeable, rng), agreeable.sum(axis=0))
    opposed = np.array([[3.0, -1.0], [-3.0, 1.0]])
    assert np.array_equal(mtl.pcgrad(opposed, rng), np.zeros(2))
    worked = np.array([[1.0, 0.0], [-1.0, 1.0]])
    assert np.array_equal(mtl.pcgrad(worked, rng), np.array([0.5, 1.5]))

    for _ in range(50):
        g = rng.standard_normal((3, 4))
        assert np.array_equal(mtl.cagrad(g, 0.0), g.mean(axis=0))

    # grid oracle: recover the simplex weight implied by the returned
    # direction, then compare objective values on the same dense grid
    w_grid = np.linspace(0.0, 1.0, 200001)
    for _ in range(100):
        g = rng.standard_normal((2, 2))
        c = float(rng.uniform(0.1, 1.0))
        g0 = g.mean(axis=0)
        sphi = c * np.linalg.norm(g0)
        gw = np.outer(w_grid, g[0]) + np.outer(1.0 - w_grid, g[1])
        objective = gw @ g0 + sphi * np.linalg.norm(gw, axis=1)
        d = mtl.cagrad(g, c)
        u = d - g0
        unit_u = u / np.linalg.norm(u)
        norms = np.linalg.norm(gw, axis=1)
        align = (gw @ unit_u) / np.where(norms > 0, norms, 1.0)
        achieved = objective[int(np.argmax(align))]
        assert achieved - objective.min() < 1e-4

    same_sign = np.array([[1.0, -2.0], [3.0, -4.0]])
    assert np.array_equal(mtl.graddrop(same_sign, rng),
                          np.array([4.0, -6.0]))
    draws = [float(mtl.graddrop(np.array([[1.0], [-1.0]]),
                                np.random.default_rng(s))[0])
             for s in range(10 ** 4)]
    assert set(draws) == {1.0, -1.0}
    assert -0.05 <= np.mean(draws) <= 0.05
    assert time.monotonic() - t0 < 30.0


def test_toy_training_every_strategy_combination():
    """All 12 balancing x surgery combinations cut both task losses by at
    least half within 500 steps on the seeded fixture; analytic gradients
    match finite differences within 1e-4 relative; the ablation report groups
    by balancing and by surgery; under 2 minutes."""
    t0 = time.monotonic()

    problem = mtl.ToyProblem(seed=0)
    rng = np.random.default_rng(0)
    eps = 1e-6
    for point in range(100):
        params = {k: rng.standard_normal(v.shape) * 0.5
                  for k, v in problem.init_params(rng).items()}
        _, grads = problem.losses_and_grads(params)
        for task in (0, 1):
            for key in ("W1", "b1") + (("u", "a") if task == 0 else ("v", "b")):
                g = grads[task][key]
                idx = int(rng.integers(g.size))
                pert = {k: v.copy() for k, v in params.items()}
                pert[key].ravel()[idx] += eps
                up = problem.losses_and_grads(pert)[0][task]
                pert[key].ravel()[idx] -= 2 * eps
                dn = problem.losses_and_grads(pert)[0][task]
                assert g.ravel()[idx] == pytest.approx(
                    (up - dn) / (2 * eps), rel=1e-4, abs=1e-7)

    configs = mtl.all_strategy_configs()
    assert len(configs) == 12
    for cfg in configs:
        history = mtl.train_toy(cfg, steps=500, seed=7, lr=0.015)
        first = np.array(history[0]["losses"])
        last = np.array(history[-1]["losses"])
        assert np.all(last <= 0.5 * first), (cfg, first, last)

    report = mtl.ablation_report(configs, 1, steps=60)
    assert set(report["by_balancing"]) == set(mtl.BALANCINGS)
    assert set(report["by_surgery"]) == set(mtl.SURGERIES)
    assert len(report["runs"]) == 12
    assert time.monotonic() - t0 < 120.0


def planted_ids(spec):
    out = set()
    idx = 0
    for _ in range(spec.clusters):
        for m in range(spec.per_cluster):
            if m < spec.planted_per_cluster:
                out |= {"obj%03d-t1" % idx, "obj%03d-t2" % idx}
            idx += 1
    return out


def test_zeroshot_synthetic_benchmark():
    """Training-free matching at the default thresholds (angle 145, stability
    0.93, area 0.9, size 400, similarity 60) scores precision = recall = 1.0
    on 50 seeded instances; swapping times and rescaling embeddings change
    nothing; a point query isolates the clicked cluster."""
    params = latent.MatchParams()
    assert (params.change_angle_threshold, params.stability_threshold,
            params.max_area_fraction, params.min_area_pixels,
            params.object_similarity_threshold) == (145.0, 0.93, 0.9, 400, 60.0)
    for seed in range(50):
        spec = latent.SynthSpec(seed=seed)
        t1, t2, truth = latent.synth_proposals(spec)
        matches, mask = latent.zeroshot_detect(t1, t2, params,
                                               spec.width, spec.height)
        got = {m.proposal.id for m in matches}
        want = planted_ids(spec)
        assert got == want, seed  # precision = recall = 1.0
        assert mask == truth

        flipped, _ = latent.zeroshot_detect(t2, t1, params,
                                            spec.width, spec.height)
        assert {m.proposal.id for m in flipped} == want

        def scaled(ps):
            return [latent.Proposal(p.id, p.source_time, p.footprint,
                                    p.stability, p.emb_same * 4.0,
                                    p.emb_other * 4.0) for p in ps]
        rescaled, _ = latent.zeroshot_detect(scaled(t1), scaled(t2), params,
                                             spec.width, spec.height)
        assert {m.proposal.id for m in rescaled} == want

        kept1 = latent.filter_proposals(t1, params)
        kept2 = latent.filter_proposals(t2, params)
        target = next(p for p in kept1 if p.id == "obj000-t1")
        rows, cols = np.nonzero(target.footprint)
        res = latent.point_query([(int(rows[0]), int(cols[0]), "t1")],
                                 kept1, kept2, params)
        cluster0 = {"obj%03d" % i for i in range(spec.per_cluster)}
        assert {i.rsplit("-", 1)[0] for i in res.category} <= cluster0
        assert {m.proposal.id.rsplit("-", 1)[0] for m in res.matches} == \
            {"obj%03d" % i for i in range(spec.planted_per_cluster)}


SEVERITY_TABLE = ((0.01, "minimal"), (0.03, "slight"), (0.06, "minor"),
                  (0.12, "modest"), (0.20, "moderate"), (0.35, "considerable"),
                  (float("inf"), "extensive"))

_LOCATION_RE = re.compile(
    r"(?:located in|concentrated in) the ((?:%s)(?: and (?:%s))*) "
    r"(?:area|section|region)s?" % ("|".join(CELL_NAMES), "|".join(CELL_NAMES)))


def expected_adjective(fraction):
    if fraction == 0:
        return "no"
    for bound, adj in SEVERITY_TABLE:
        if fraction < bound:
            return adj
    return "extensive"


def cell_shares(bits):
    """Label patches by BFS and credit areas to 3x3 cells by centroid."""
    h, w = bits.shape
    seen = np.zeros_like(bits, dtype=bool)
    shares = np.zeros(9, dtype=np.float64)
    for sr, sc in zip(*np.nonzero(bits)):
        if seen[sr, sc]:
            continue
        queue = deque([(sr, sc)])
        seen[sr, sc] = True
        cells = []
        while queue:
            r, c = queue.popleft()
            cells.append((r, c))
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if (0 <= rr < h and 0 <= cc < w and bits[rr, cc]
                            and not seen[rr, cc]):
                        seen[rr, cc] = True
                        queue.append((rr, cc))
        mean_r = sum(r for r, _ in cells) / len(cells)
        mean_c = sum(c for _, c in cells) / len(cells)
        row = min(2, int(mean_r * 3 / h))
        col = min(2, int(mean_c * 3 / w))
        shares[row * 3 + col] += len(cells)
    total = shares.sum()
    return shares / total if total else shares


def random_mask(rng, size=64):
    style = rng.integers(0, 3)
    bits = np.zeros((size, size), dtype=np.uint8)
    if style == 0:
        return bits  # empty: exercises the no-change path
    if style == 1:
        for _ in range(int(rng.integers(1, 12))):
            side = int(rng.integers(3, 17))
            r = int(rng.integers(0, size - side))
            c = int(rng.integers(0, size - side))
            bits[r:r + side, c:c + side] = 1
        return bits
    return (rng.random((size, size)) < rng.uniform(0.002, 0.4)).astype(np.uint8)


def test_caption_engine_grammar_properties():
    """Across 500 random masks: the leading severity adjective always matches
    the change fraction's bin, any named grid cell holds at least 25% of the
    changed area (recomputed by brute force), all tokens stay inside the
    published lexicon, and the frozen example sentence is reproduced
    verbatim."""
    vocab = lexicon()
    names = set(CELL_NAMES)
    rng = np.random.default_rng(99)
    for _ in range(500):
        bits = random_mask(rng)
        mask = ChangeMask(bits)
        features = extract_features(mask)
        want_adj = expected_adjective(bits.mean())
        shares = cell_shares(bits)
        for seed in range(4):
            caption = render_caption(features, seed)
            if want_adj == "no":
                assert caption in NO_CHANGE_VARIANTS
            else:
                head = caption[5:] if caption.startswith("some ") else caption
                assert head.split()[0] == want_adj
            for token in oracles.o_tokenize(caption):
                assert token in vocab, (token, caption)
            m = _LOCATION_RE.search(caption)
            if m:
                for cell in m.group(1).split(" and "):
                    assert cell in names
                    assert shares[CELL_NAMES.index(cell)] >= 0.25 - 1e-12

    caption = render_caption(
        extract_features(conftest.many_small_topleft_mask()),
        conftest.MANY_SMALL_TOPLEFT_SEED)
    assert caption == conftest.MANY_SMALL_TOPLEFT_SENTENCE


def test_baseline_detector_recovers_planted_squares():
    """A recolored 32x32 square under per-pixel noise up to 5/255 is found
    with IoU >= 0.8 at default settings on 20 seeded fixtures; identical
    pairs always produce an empty mask."""
    for seed in range(20):
        rng = np.random.default_rng(seed)
        base = np.full((128, 128, 3), rng.integers(0, 70, 3), dtype=np.int16)
        r = int(rng.integers(0, 96))
        c = int(rng.integers(0, 96))
        after = base.copy()
        after[r:r + 32, c:c + 32] += rng.integers(120, 180, 3)
        a = np.clip(base + rng.integers(-5, 6, base.shape), 0, 255)
        b = np.clip(after + rng.integers(-5, 6, base.shape), 0, 255)
        pair = BitemporalPair(a.astype(np.uint8), b.astype(np.uint8))
        mask = difference_mask(pair, DiffConfig())
        truth = np.zeros((128, 128), dtype=np.uint8)
        truth[r:r + 32, c:c + 32] = 1
        inter = int(np.sum(mask.bits & truth))
        union = int(np.sum(mask.bits | truth))
        assert inter / union >= 0.8, seed

        same = BitemporalPair(a.astype(np.uint8), a.astype(np.uint8))
        assert difference_mask(same, DiffConfig()).count == 0


def run_fixture_conversation():
    """Upload a pair, then walk detection, caption, percentage, count, and
    ground-truth comparison; returns every response body and artifact byte."""
    client = TestClient(create_app(backend=ScriptedBackend()))
    sid = client.post("/api/session").json()["session_id"]
    a, b, truth = conftest.solid_pair()
    import io
    from PIL import Image

    def png(arr, mode):
        buf = io.BytesIO()
        Image.fromarray(arr, mode=mode).save(buf, format="PNG")
        return buf.getvalue()

    upload = client.post(
        "/api/session/%s/pair" % sid,
        files={"image_a": ("a.png", png(a, "RGB"), "image/png"),
               "image_b": ("b.png", png(b, "RGB"), "image/png"),
               "ground_truth": ("gt.png",
                                png(truth.bits * np.uint8(255), "L"),
                                "image/png")},
        data={"human_caption": "the east stand of trees was cleared"})
    bodies = [upload.json()]
    artifact_names = set()
    for message in ("detect the changes between the two images",
                    "please describe the change",
                    "what percent of the area was deforested?",
                    "how many cleared patches are there?",
                    "compare the mask with the ground truth"):
        body = client.post("/api/session/%s/chat" % sid,
                           json={"message": message}).json()
        bodies.append(body)
        artifact_names.update(body["artifacts"])
    blobs = {name: client.get("/api/session/%s/artifact/%s"
                              % (sid, name)).content
             for name in sorted(artifact_names)}
    return bodies, blobs


def test_agent_conversation_is_deterministic():
    """The scripted fixture conversation completes offline, twice, with
    byte-identical replies and artifacts; the registry holds exactly 7
    tools."""
    assert len(register_tools()) == 7
    first_bodies, first_blobs = run_fixture_conversation()
    second_bodies, second_blobs = run_fixture_conversation()
    assert json.dumps(first_bodies, sort_keys=True) == \
        json.dumps(second_bodies, sort_keys=True)
    assert first_blobs == second_blobs
    tools = [t for body in first_bodies[1:] for t in body.get("tools_used", ())]
    assert tools == ["detect_changes_supervised", "caption_changes",
                     "deforestation_percentage", "count_patches",
                     "compare_with_ground_truth"]
    assert "miou" in first_bodies[-1]["reply"]


LEVIR_ROOT = os.environ.get("FORESTDIFF_LEVIR_ROOT")
FOREST_ROOT = os.environ.get("FORESTDIFF_FOREST_ROOT")


@pytest.mark.skipif(not LEVIR_ROOT, reason="FORESTDIFF_LEVIR_ROOT not set")
def test_levir_tree_subset_statistics():
    """Tree filtering keeps 1518/374/413 examples and their masks average
    15.28% change with a 72.79% maximum (both within 0.1 points)."""
    index = dataset.filter_tree_examples(dataset.load_index(LEVIR_ROOT))
    sizes = tuple(len(index.examples.get(s, ())) for s in ("train", "val",
                                                           "test"))
    assert sizes == (1518, 374, 413)
    stats = dataset.mask_stats(index)
    assert abs(100 * stats["mean"] - 15.28) < 0.1
    assert abs(100 * stats["max"] - 72.79) < 0.1


@pytest.mark.skipif(not FOREST_ROOT, reason="FORESTDIFF_FOREST_ROOT not set")
def test_forest_corpus_split_sizes():
    """The forest corpus indexes as 270/31/33 train/val/test examples."""
    index = dataset.load_index(FOREST_ROOT)
    sizes = tuple(len(index.examples.get(s, ())) for s in ("train", "val",
                                                           "test"))
    assert sizes == (270, 31, 33)
