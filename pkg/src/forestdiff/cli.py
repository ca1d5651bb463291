"""Command line front door.

Every subcommand prints a JSON document (or a file path it wrote) so the
output can be piped onward without scraping.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dataset, latent, mtl
from .metrics import CaptionCorpus, ConfusionMatrix, accumulate, \
    evaluate_captions, miou
from .raster import ChangeMask


def _emit(obj, out=None):
    text = json.dumps(obj, indent=2, sort_keys=True)
    if out:
        Path(out).write_text(text + "\n")
        print(out)
    else:
        print(text)


def _load_caption_map(path, many):
    """Accept {id: caption(s)} or a list of {example_id, caption(s)} records."""
    body = json.loads(Path(path).read_text())
    if isinstance(body, dict):
        items = body.items()
    else:
        key = "captions" if many else "caption"
        items = ((rec["example_id"], rec[key]) for rec in body)
    out = {}
    for example_id, value in items:
        if many:
            out[example_id] = list(value) if not isinstance(value, str) else [value]
        else:
            out[example_id] = value
    return out


def cmd_eval_captions(args):
    cands = _load_caption_map(args.candidates, many=False)
    refs = _load_caption_map(args.references, many=True)
    missing = sorted(set(cands) - set(refs))
    if missing:
        raise SystemExit("no references for: %s" % ", ".join(missing[:5]))
    corpus = CaptionCorpus((cands[k], refs[k]) for k in sorted(cands))
    scores = evaluate_captions(corpus)
    scores["items"] = len(corpus)
    _emit(scores, args.out)


def cmd_eval_masks(args):
    pred_dir, truth_dir = Path(args.pred), Path(args.truth)
    names = sorted(p.name for p in pred_dir.glob("*.png"))
    if not names:
        raise SystemExit("no .png masks under %s" % pred_dir)
    cm = ConfusionMatrix()
    for name in names:
        truth_path = truth_dir / name
        if not truth_path.exists():
            raise SystemExit("missing ground truth for %s" % name)
        cm = accumulate(cm, ChangeMask.read_png(pred_dir / name),
                        ChangeMask.read_png(truth_path))
    report = miou(cm)
    _emit({"images": len(names), "iou_c": report.iou_c,
           "iou_nc": report.iou_nc, "miou": report.miou}, args.out)


def _parse_point(text):
    row, col, t = (s.strip() for s in text.split(","))
    if t not in ("t1", "t2"):
        raise argparse.ArgumentTypeError("point time must be t1 or t2")
    return int(row), int(col), t


def cmd_zeroshot(args):
    pf = latent.load_proposals(args.proposals)
    params = latent.MatchParams(
        change_angle_threshold=args.change_thresh,
        stability_threshold=args.stability,
        max_area_fraction=args.max_area,
        min_area_pixels=args.min_pixels,
        object_similarity_threshold=args.obj_sim,
        top_k=args.top_k)
    report = {"proposals": len(pf.proposals)}
    if args.point:
        kept1 = latent.filter_proposals(pf.by_time("t1"), params)
        kept2 = latent.filter_proposals(pf.by_time("t2"), params)
        res = latent.point_query(args.point, kept1, kept2, params)
        mask = latent.proposals_to_mask(res.matches, pf.width, pf.height)
        report["category"] = list(res.category)
        report["changed"] = [m.proposal.id for m in res.matches]
        report["angles"] = {m.proposal.id: m.change_angle for m in res.matches}
    else:
        matches, mask = latent.zeroshot_detect(
            pf.by_time("t1"), pf.by_time("t2"), params, pf.width, pf.height)
        report["changed"] = [m.proposal.id for m in matches]
        report["angles"] = {m.proposal.id: m.change_angle for m in matches}
    mask.write_png(args.out_mask)
    report["mask"] = args.out_mask
    report["change_fraction"] = mask.count / (mask.width * mask.height)
    _emit(report, args.report)


def cmd_dataset(args):
    index = dataset.load_index(args.root)
    if args.dataset_cmd == "filter-trees":
        kept = dataset.filter_tree_examples(index)
        _emit({s: [e.example_id for e in kept.examples.get(s, ())]
               for s in kept.examples}, args.out)
    elif args.dataset_cmd == "stats":
        out = {"sizes": {s: len(v) for s, v in index.examples.items()},
               "masks": dataset.mask_stats(index, bins=args.bins)}
        if args.normalize_split:
            stats = dataset.normalization_stats(index, args.normalize_split)
            out["normalization"] = {"split": args.normalize_split,
                                    "mean": list(stats.mean),
                                    "std": list(stats.std)}
        _emit(out, args.out)
    else:  # split
        ratios = (args.train, args.val, args.test)
        _emit(dataset.make_splits(index, ratios, args.seed), args.out)


def cmd_mtl_lab(args):
    configs = mtl.all_strategy_configs(dwa_temperature=args.dwa_temperature,
                                       cagrad_c=args.cagrad_c)
    if args.balancing:
        configs = [c for c in configs if c.balancing in args.balancing]
    if args.surgery:
        configs = [c for c in configs if c.surgery in args.surgery]
    if not configs:
        raise SystemExit("no strategy combinations left after filtering")
    report = mtl.ablation_report(configs, args.runs, steps=args.steps,
                                 base_seed=args.seed, lr=args.lr)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.md").write_text(report["markdown"])
    payload = {k: report[k] for k in ("runs", "by_balancing", "by_surgery")}
    (out_dir / "report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    print(str(out_dir / "report.md"))
    print(str(out_dir / "report.json"))


def cmd_serve(args):
    from .agent import make_backend, service
    backend = make_backend()
    host, _, port = args.addr.rpartition(":")
    service.run(host=host or "127.0.0.1", port=int(port), backend=backend,
                static_dir=args.static_dir)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="forestdiff",
        description="forest change analytics: masks, captions, metrics, "
                    "latent matching, task balancing, and a chat service")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("eval-captions",
                       help="score candidate captions against references")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_captions)

    p = sub.add_parser("eval-masks",
                       help="mean IoU between two directories of mask PNGs")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_masks)

    p = sub.add_parser("zeroshot",
                       help="training-free change detection over a proposal file")
    p.add_argument("--proposals", required=True)
    p.add_argument("--out-mask", required=True)
    p.add_argument("--report")
    p.add_argument("--change-thresh", type=float, default=145.0)
    p.add_argument("--stability", type=float, default=0.93)
    p.add_argument("--max-area", type=float, default=0.9)
    p.add_argument("--min-pixels", type=int, default=400)
    p.add_argument("--obj-sim", type=float, default=60.0)
    p.add_argument("--top-k", type=int)
    p.add_argument("--point", action="append", type=_parse_point,
                   metavar="ROW,COL,T", help="answer a point query instead "
                   "of full-frame matching (repeatable)")
    p.set_defaults(func=cmd_zeroshot)

    p = sub.add_parser("dataset", help="inspect or reshape a dataset tree")
    dsub = p.add_subparsers(dest="dataset_cmd", required=True)
    for name, help_text in (
            ("filter-trees", "keep examples whose captions mention trees"),
            ("stats", "per-split sizes and mask coverage statistics"),
            ("split", "re-deal example ids into train/val/test")):
        dp = dsub.add_parser(name, help=help_text)
        dp.add_argument("--root", required=True)
        dp.add_argument("--out")
        if name == "stats":
            dp.add_argument("--bins", type=int, default=20)
            dp.add_argument("--normalize-split",
                            help="also compute channel mean/std over this split")
        if name == "split":
            dp.add_argument("--train", type=float, default=0.8)
            dp.add_argument("--val", type=float, default=0.1)
            dp.add_argument("--test", type=float, default=0.1)
            dp.add_argument("--seed", type=int, default=0)
        dp.set_defaults(func=cmd_dataset)

    p = sub.add_parser("mtl-lab",
                       help="run the balancing/surgery ablation grid")
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--lr", type=float, default=0.015)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--dwa-temperature", type=float, default=2.0)
    p.add_argument("--cagrad-c", type=float, default=0.5)
    p.add_argument("--balancing", action="append", choices=mtl.BALANCINGS)
    p.add_argument("--surgery", action="append", choices=mtl.SURGERIES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mtl_lab)

    p = sub.add_parser("serve", help="start the interactive analysis service")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--static-dir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
