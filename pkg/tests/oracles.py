"""Brute-force metric oracles, written directly from the scoring formulas.

These are intentionally naive (python loops, dicts, no shared code with the
package implementations beyond the tokenizer/stemmer primitives, which define
the lexical layer rather than the metrics). Acceptance tests compare the
package against these within 1e-9.
"""

import math
from collections import Counter

from forestdiff.stemming import porter_stem


def o_tokenize(s):
    out = []
    for raw in s.lower().split():
        t = "".join(ch for ch in raw if ch.isalnum())
        if t:
            out.append(t)
    return out


def _ngrams(tokens, k):
    return [tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1)]


def o_bleu(items, n):
    """items: list of (cand_tokens, [ref_tokens, ...])."""
    if not items:
        raise ValueError("empty corpus")
    clipped = [0] * n
    total = [0] * n
    c_len = 0
    r_len = 0
    for cand, refs in items:
        c_len += len(cand)
        r_len += min((abs(len(r) - len(cand)), len(r)) for r in refs)[1]
        for k in range(1, n + 1):
            cc = Counter(_ngrams(cand, k))
            best = Counter()
            for r in refs:
                rc = Counter(_ngrams(r, k))
                for g, v in rc.items():
                    if v > best[g]:
                        best[g] = v
            clipped[k - 1] += sum(min(v, best[g]) for g, v in cc.items())
            total[k - 1] += sum(cc.values())
    ps = [clipped[i] / total[i] if total[i] else 0.0 for i in range(n)]
    if min(ps) == 0.0 or c_len == 0:
        return 0.0
    geo = math.exp(sum(math.log(p) for p in ps) / n)
    bp = 1.0 if c_len >= r_len else math.exp(1.0 - r_len / c_len)
    return geo * bp


def _lcs_len(a, b):
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[-1][-1]


def o_rouge_l(items, beta=1.2):
    if not items:
        raise ValueError("empty corpus")
    acc = 0.0
    for cand, refs in items:
        best = 0.0
        for ref in refs:
            lcs = _lcs_len(cand, ref)
            r = lcs / len(ref) if ref else 0.0
            p = lcs / len(cand) if cand else 0.0
            if r + p > 0:
                f = (1 + beta * beta) * r * p / (r + beta * beta * p)
            else:
                f = 0.0
            best = max(best, f)
        acc += best
    return acc / len(items)


def o_meteor_lite(items):
    if not items:
        raise ValueError("empty corpus")
    acc = 0.0
    for cand, refs in items:
        best = 0.0
        for ref in refs:
            used = [False] * len(ref)
            match = [None] * len(cand)
            for i, t in enumerate(cand):  # stage 1: exact
                for j, rt in enumerate(ref):
                    if not used[j] and rt == t:
                        used[j] = True
                        match[i] = j
                        break
            for i, t in enumerate(cand):  # stage 2: stems
                if match[i] is not None:
                    continue
                st = porter_stem(t)
                for j, rt in enumerate(ref):
                    if not used[j] and porter_stem(rt) == st:
                        used[j] = True
                        match[i] = j
                        break
            pairs = [(i, j) for i, j in enumerate(match) if j is not None]
            m = len(pairs)
            if m == 0:
                score = 0.0
            else:
                p = m / len(cand)
                r = m / len(ref)
                fmean = 10.0 * p * r / (r + 9.0 * p)
                chunks = 1
                for (i1, j1), (i2, j2) in zip(pairs, pairs[1:]):
                    if not (i2 == i1 + 1 and j2 == j1 + 1):
                        chunks += 1
                score = fmean * (1.0 - 0.5 * (chunks / m) ** 3)
            best = max(best, score)
        acc += best
    return acc / len(items)


def o_cider_d(items, sigma=6.0):
    n_items = len(items)
    if n_items < 2:
        raise ValueError("need at least 2 items for IDF")
    dfs = [Counter() for _ in range(4)]
    for _, refs in items:
        for k in range(4):
            seen = set()
            for r in refs:
                seen.update(_ngrams(r, k + 1))
            for g in seen:
                dfs[k][g] += 1
    total = 0.0
    for cand, refs in items:
        item_score = 0.0
        for k in range(4):
            idf = lambda g: math.log(n_items / max(1.0, dfs[k][g]))
            hc = Counter(_ngrams(cand, k + 1))
            hv = {g: c * idf(g) for g, c in hc.items()}
            hn = math.sqrt(sum(v * v for v in hv.values()))
            acc = 0.0
            for r in refs:
                rc = Counter(_ngrams(r, k + 1))
                rv = {g: c * idf(g) for g, c in rc.items()}
                rn = math.sqrt(sum(v * v for v in rv.values()))
                num = sum(min(hv.get(g, 0.0), rv[g]) * rv[g] for g in rv)
                s = num / (hn * rn) if hn > 0 and rn > 0 else 0.0
                s *= math.exp(-((len(cand) - len(r)) ** 2) / (2.0 * sigma * sigma))
                acc += s
            item_score += acc / len(refs)
        total += item_score / 4.0
    return 10.0 * total / n_items


def o_confusion(pred, gt):
    """Per-pixel brute-force confusion counts over 2-d 0/1 arrays."""
    tp = fp = fn = tn = 0
    for prow, grow in zip(pred.tolist(), gt.tolist()):
        for pv, gv in zip(prow, grow):
            if pv and gv:
                tp += 1
            elif pv:
                fp += 1
            elif gv:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def o_miou(tp, fp, fn, tn):
    iou_c = tp / (tp + fp + fn) if (tp + fp + fn) > 0 else 1.0
    iou_nc = tn / (tn + fn + fp) if (tn + fn + fp) > 0 else 1.0
    return iou_c, iou_nc, (iou_c + iou_nc) / 2.0
