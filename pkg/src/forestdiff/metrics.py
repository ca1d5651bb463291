"""Caption and mask evaluation metrics.

Caption side: corpus BLEU-1..4, ROUGE-L, METEOR-lite (exact + stem matching,
no synonym table), CIDEr-D. Mask side: dataset-level confusion accumulation
and two-class IoU. Scores live in [0,1] except CIDEr-D's conventional x10.
"""

import math
from collections import Counter, defaultdict
from dataclasses import dataclass

from . import kernels
from .stemming import porter_stem


def tokenize(text):
    """Lowercase, split on whitespace, strip non-alphanumerics."""
    toks = []
    for word in text.lower().split():
        t = "".join(c for c in word if c.isalnum())
        if t:
            toks.append(t)
    return toks


class CaptionCorpus:
    """Candidate/reference pairs, tokenized once up front."""

    def __init__(self, items):
        self.items = []
        for cand, refs in items:
            refs = list(refs)
            rtoks = [tokenize(r) for r in refs]
            if not any(rtoks):
                raise ValueError("every item needs at least one non-empty reference")
            self.items.append((tokenize(cand), rtoks))

    def __len__(self):
        return len(self.items)


def _count_ngrams(tokens, k):
    return Counter(tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1))


def bleu(corpus, n):
    """Corpus-level BLEU-n with uniform weights and closest-ref brevity."""
    if n not in (1, 2, 3, 4):
        raise ValueError("n must be in 1..4")
    if not corpus.items:
        raise ValueError("empty corpus")
    clipped = [0] * n
    totals = [0] * n
    cand_len = 0
    ref_len = 0
    for cand, refs in corpus.items:
        cand_len += len(cand)
        # closest reference length; ties resolved toward the shorter one
        ref_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for k in range(1, n + 1):
            counts = _count_ngrams(cand, k)
            ceiling = Counter()
            for r in refs:
                for g, v in _count_ngrams(r, k).items():
                    if v > ceiling[g]:
                        ceiling[g] = v
            clipped[k - 1] += sum(min(v, ceiling[g]) for g, v in counts.items())
            totals[k - 1] += sum(counts.values())
    if cand_len == 0 or any(t == 0 for t in totals):
        return 0.0
    precisions = [c / t for c, t in zip(clipped, totals)]
    if min(precisions) == 0.0:
        return 0.0
    score = math.exp(sum(math.log(p) for p in precisions) / n)
    if cand_len < ref_len:
        score *= math.exp(1.0 - ref_len / cand_len)
    return score


def _lcs(a, b):
    # two-row DP
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, 1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(corpus, beta=1.2):
    """LCS-based F with recall bias beta; best reference per item, mean over items."""
    if not corpus.items:
        raise ValueError("empty corpus")
    b2 = beta * beta
    acc = 0.0
    for cand, refs in corpus.items:
        best = 0.0
        for ref in refs:
            if not cand or not ref:
                continue
            lcs = _lcs(cand, ref)
            r = lcs / len(ref)
            p = lcs / len(cand)
            if r + p > 0:
                best = max(best, (1 + b2) * r * p / (r + b2 * p))
        acc += best
    return acc / len(corpus.items)


def _greedy_align(cand, ref):
    """Exact then stem matching, first unmatched reference slot wins."""
    taken = [False] * len(ref)
    pairs = []
    open_slots = list(range(len(ref)))
    matched = set()
    for i, tok in enumerate(cand):
        for j in open_slots:
            if not taken[j] and ref[j] == tok:
                taken[j] = True
                pairs.append((i, j))
                matched.add(i)
                break
    ref_stems = [porter_stem(t) for t in ref]
    for i, tok in enumerate(cand):
        if i in matched:
            continue
        stem = porter_stem(tok)
        for j in open_slots:
            if not taken[j] and ref_stems[j] == stem:
                taken[j] = True
                pairs.append((i, j))
                break
    pairs.sort()
    return pairs


def meteor_lite(corpus):
    """Unigram-alignment F with a fragmentation penalty (no synonym stage)."""
    if not corpus.items:
        raise ValueError("empty corpus")
    acc = 0.0
    for cand, refs in corpus.items:
        best = 0.0
        for ref in refs:
            pairs = _greedy_align(cand, ref)
            m = len(pairs)
            if m == 0:
                continue
            p = m / len(cand)
            r = m / len(ref)
            fmean = 10.0 * p * r / (r + 9.0 * p)
            chunks = 1 + sum(
                1 for (i1, j1), (i2, j2) in zip(pairs, pairs[1:])
                if i2 != i1 + 1 or j2 != j1 + 1)
            best = max(best, fmean * (1.0 - 0.5 * (chunks / m) ** 3))
        acc += best
    return acc / len(corpus.items)


def cider_d(corpus, sigma=6.0):
    """Consensus TF-IDF n-gram similarity, n = 1..4, scaled by 10."""
    n_items = len(corpus.items)
    if n_items < 2:
        raise ValueError("cider-d needs a corpus of at least 2 items")
    log_n = math.log(n_items)
    doc_freq = [defaultdict(int) for _ in range(4)]
    for _, refs in corpus.items:
        for k in range(4):
            grams = set()
            for r in refs:
                grams.update(_count_ngrams(r, k + 1))
            for g in grams:
                doc_freq[k][g] += 1
    total = 0.0
    for cand, refs in corpus.items:
        per_item = 0.0
        for k in range(4):
            df = doc_freq[k]
            cvec = {g: c * (log_n - math.log(max(1, df[g])))
                    for g, c in _count_ngrams(cand, k + 1).items()}
            cnorm = math.sqrt(sum(v * v for v in cvec.values()))
            ref_sum = 0.0
            for r in refs:
                rvec = {g: c * (log_n - math.log(max(1, df[g])))
                        for g, c in _count_ngrams(r, k + 1).items()}
                rnorm = math.sqrt(sum(v * v for v in rvec.values()))
                if cnorm > 0 and rnorm > 0:
                    dot = sum(min(cvec.get(g, 0.0), rv) * rv for g, rv in rvec.items())
                    delta = len(cand) - len(r)
                    ref_sum += (dot / (cnorm * rnorm)) * math.exp(
                        -(delta * delta) / (2.0 * sigma * sigma))
            per_item += ref_sum / len(refs)
        total += per_item / 4.0
    return 10.0 * total / n_items


def evaluate_captions(corpus):
    """The full caption metric bundle as a flat dict."""
    out = {"bleu%d" % n: bleu(corpus, n) for n in (1, 2, 3, 4)}
    out["meteor_lite"] = meteor_lite(corpus)
    out["rouge_l"] = rouge_l(corpus)
    out["cider_d"] = cider_d(corpus)
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary pixel confusion for the change class; no-change is the mirror."""
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0


@dataclass(frozen=True)
class IouReport:
    iou_c: float
    iou_nc: float
    miou: float


def accumulate(cm, pred, gt):
    """Add one prediction/truth pair's pixel counts; returns a new matrix."""
    tp, fp, fn, tn = kernels.confusion_counts(pred.bits, gt.bits)
    return ConfusionMatrix(cm.tp + tp, cm.fp + fp, cm.fn + fn, cm.tn + tn)


def miou(cm):
    """Two-class IoU; a class with an empty union scores 1.0."""
    denom_c = cm.tp + cm.fp + cm.fn
    denom_nc = cm.tn + cm.fn + cm.fp
    iou_c = cm.tp / denom_c if denom_c > 0 else 1.0
    iou_nc = cm.tn / denom_nc if denom_nc > 0 else 1.0
    return IouReport(iou_c, iou_nc, (iou_c + iou_nc) / 2.0)
