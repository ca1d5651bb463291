"""The seven workbench tools.

Each tool returns a short text summary (what a language model reads), a data
dict (what the UI reads), and artifact names for anything rasterized. Tool
errors come back as structured failures the backend can relay, not exceptions.
"""

import io
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np
from PIL import Image

from .. import latent
from ..captions import generate_caption_set
from ..metrics import ConfusionMatrix, accumulate, miou
from ..raster import (ChangeMask, DiffConfig, change_fraction,
                      connected_patches, difference_mask, overlay,
                      patch_statistics, spatial_distribution)


@dataclass(frozen=True)
class ToolCall:
    tool: str
    args: dict


@dataclass
class ToolResult:
    ok: bool
    text: str
    data: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)

    def for_backend(self):
        body = {"ok": self.ok, "summary": self.text}
        body.update({k: v for k, v in self.data.items()
                     if isinstance(v, (int, float, str, bool, list))})
        return json.dumps(body, sort_keys=True)


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    schema: dict
    example_args: dict
    handler: object


def _png_bytes(arr, mode):
    buf = io.BytesIO()
    Image.fromarray(arr, mode=mode).save(buf, format="PNG")
    return buf.getvalue()


def _store_mask(session, mask, kind="mask"):
    data = _png_bytes(mask.bits * np.uint8(255), "L")
    return session.store_artifact(kind, data, "png", "image/png")


def _params_with(session, args, keys):
    fields = {}
    for k in keys:
        if k in args:
            fields[k] = args[k]
    base = session.match_params
    merged = {f: getattr(base, f) for f in (
        "change_angle_threshold", "stability_threshold", "max_area_fraction",
        "min_area_pixels", "object_similarity_threshold", "top_k")}
    merged.update(fields)
    return latent.MatchParams(**merged)


def _tool_detect_supervised(session, args):
    if session.pair is None:
        return ToolResult(False, "no image pair is loaded in this session")
    use_pre = args.get("use_precomputed", True)
    if use_pre and session.precomputed_pred is not None:
        mask = session.precomputed_pred
        origin = "precomputed model prediction"
    else:
        cfg = DiffConfig(
            blur_sigma=args.get("blur_sigma", 1.0),
            threshold_mode=args.get("threshold_mode", "otsu"),
            threshold_value=args.get("threshold_value", 0.0),
            min_area=args.get("min_area", 50),
            morph_radius=args.get("morph_radius", 1),
        )
        mask = difference_mask(session.pair, cfg)
        origin = "differencing baseline"
    session.last_mask = mask
    name = _store_mask(session, mask)
    frac = change_fraction(mask)
    n_patches = len(connected_patches(mask))
    return ToolResult(
        True,
        "change mask from %s: %.2f%% of the area changed across %d patches"
        % (origin, 100 * frac, n_patches),
        {"change_fraction": frac, "patch_count": n_patches, "mask": name},
        [name])


def _tool_detect_zeroshot(session, args):
    if session.proposals is None:
        return ToolResult(False, "no proposal file is loaded in this session")
    pf = session.proposals
    params = _params_with(session, args, (
        "change_angle_threshold", "stability_threshold", "max_area_fraction",
        "min_area_pixels", "top_k"))
    matches, mask = latent.zeroshot_detect(
        pf.by_time("t1"), pf.by_time("t2"), params, pf.width, pf.height)
    session.last_mask = mask
    name = _store_mask(session, mask)
    frac = change_fraction(mask)
    return ToolResult(
        True,
        "zero-shot matching flagged %d proposals covering %.2f%% of the area"
        % (len(matches), 100 * frac),
        {"matched": [m.proposal.id for m in matches],
         "change_fraction": frac, "mask": name},
        [name])


def _tool_point_query(session, args):
    if session.proposals is None:
        return ToolResult(False, "no proposal file is loaded in this session")
    pf = session.proposals
    params = _params_with(session, args, (
        "change_angle_threshold", "object_similarity_threshold",
        "stability_threshold", "max_area_fraction", "min_area_pixels"))
    points = [(p[0], p[1], p[2]) for p in args["points"]]
    for row, col, _t in points:
        if not (0 <= row < pf.height and 0 <= col < pf.width):
            return ToolResult(False, "point (%d, %d) is outside the %dx%d image"
                              % (row, col, pf.width, pf.height))
    kept1 = latent.filter_proposals(pf.by_time("t1"), params)
    kept2 = latent.filter_proposals(pf.by_time("t2"), params)
    try:
        res = latent.point_query(points, kept1, kept2, params)
    except ValueError as err:
        return ToolResult(False, str(err))
    mask = latent.proposals_to_mask(res.matches, pf.width, pf.height)
    name = _store_mask(session, mask, "pointquery")
    by_id = {p.id: p for p in list(kept1) + list(kept2)}
    return ToolResult(
        True,
        "the clicked category spans %d proposals, %d of them changed"
        % (len(res.category), len(res.matches)),
        {"category": list(res.category),
         "changed": [m.proposal.id for m in res.matches],
         # dict-valued, so it reaches API clients but not the LLM transcript
         "angles": {pid: by_id[pid].change_angle for pid in res.category},
         "mask": name},
        [name])


def _tool_caption(session, args):
    if session.last_mask is None:
        return ToolResult(False, "no change mask yet; run a detection tool first")
    cap_set = generate_caption_set(session.last_mask, session.human_caption,
                                   args.get("seed", 0))
    session.last_captions = cap_set
    caps = cap_set.all_captions()
    data = json.dumps({"captions": caps}).encode()
    name = session.store_artifact("captions", data, "json", "application/json")
    return ToolResult(True, caps[0] if cap_set.human is None else caps[1],
                      {"captions": caps, "artifact": name}, [name])


def _tool_percentage(session, args):
    if session.last_mask is None:
        return ToolResult(False, "no change mask yet; run a detection tool first")
    frac = change_fraction(session.last_mask)
    return ToolResult(True, "%.2f%% of the area shows deforestation" % (100 * frac),
                      {"percentage": 100 * frac, "change_fraction": frac})


def _tool_count(session, args):
    if session.last_mask is None:
        return ToolResult(False, "no change mask yet; run a detection tool first")
    patches = connected_patches(session.last_mask)
    if "min_area" in args:
        patches = [p for p in patches if p.area >= args["min_area"]]
    stats = patch_statistics(patches)
    sd = spatial_distribution(patches, session.last_mask.width,
                              session.last_mask.height)
    return ToolResult(
        True,
        "%d cleared patches (mean %.1f px, size variation cv %.2f)"
        % (stats.count, stats.mean_area, stats.coefficient_of_variation),
        {"count": stats.count, "mean_area": stats.mean_area,
         "std_area": stats.std_area,
         "coefficient_of_variation": stats.coefficient_of_variation,
         "concentrated": list(sd.concentrated), "scattered": sd.scattered})


def _tool_compare(session, args):
    if session.last_mask is None:
        return ToolResult(False, "no change mask yet; run a detection tool first")
    if session.pair is None or session.pair.ground_truth is None:
        return ToolResult(False, "no ground-truth mask was uploaded")
    gt = session.pair.ground_truth
    cm = accumulate(ConfusionMatrix(), session.last_mask, gt)
    report = miou(cm)
    ov = overlay(session.last_mask, gt, session.pair.image_b)
    name = session.store_artifact("overlay", _png_bytes(ov, "RGB"), "png",
                                  "image/png")
    return ToolResult(
        True,
        "miou %.3f against ground truth (change %.3f, no-change %.3f); "
        "overlay uses yellow for hits, red for false alarms, green for misses"
        % (report.miou, report.iou_c, report.iou_nc),
        {"miou": report.miou, "iou_c": report.iou_c, "iou_nc": report.iou_nc,
         "overlay": name},
        [name])


def _schema(props, required=()):
    return {"type": "object", "properties": props,
            "required": list(required), "additionalProperties": False}


_NUM = {"type": "number"}
_INT = {"type": "integer"}

_REGISTRY = None


def register_tools():
    """The complete tool registry, built once."""
    global _REGISTRY
    if _REGISTRY is not None:
        return _REGISTRY
    specs = [
        ToolSpec(
            "detect_changes_supervised",
            "produce a change mask from the loaded image pair, using the "
            "uploaded model prediction when present or the differencing "
            "baseline otherwise",
            _schema({"use_precomputed": {"type": "boolean"},
                     "blur_sigma": _NUM,
                     "threshold_mode": {"enum": ["otsu", "fixed"]},
                     "threshold_value": _NUM,
                     "min_area": _INT, "morph_radius": _INT}),
            {"use_precomputed": True},
            _tool_detect_supervised),
        ToolSpec(
            "detect_changes_zeroshot",
            "produce a change mask by bi-temporal latent matching over the "
            "loaded proposal file",
            _schema({"change_angle_threshold": _NUM,
                     "stability_threshold": _NUM,
                     "max_area_fraction": _NUM,
                     "min_area_pixels": _INT,
                     "top_k": _INT}),
            {"change_angle_threshold": 145.0},
            _tool_detect_zeroshot),
        ToolSpec(
            "point_query_changes",
            "find changed regions of the object category under the given "
            "points; each point is [row, col, time] with time t1 or t2",
            _schema({"points": {"type": "array", "minItems": 1,
                                "items": {"type": "array",
                                          "prefixItems": [
                                              _INT, _INT,
                                              {"enum": ["t1", "t2"]}],
                                          "minItems": 3, "maxItems": 3}},
                     "object_similarity_threshold": _NUM,
                     "change_angle_threshold": _NUM},
                    required=("points",)),
            {"points": [[128, 128, "t1"]]},
            _tool_point_query),
        ToolSpec(
            "caption_changes",
            "describe the current change mask in natural language",
            _schema({"seed": _INT}),
            {"seed": 0},
            _tool_caption),
        ToolSpec(
            "deforestation_percentage",
            "percentage of the area covered by the current change mask",
            _schema({}),
            {},
            _tool_percentage),
        ToolSpec(
            "count_patches",
            "count cleared patches in the current change mask and summarize "
            "their sizes and spatial spread",
            _schema({"min_area": _INT}),
            {},
            _tool_count),
        ToolSpec(
            "compare_with_ground_truth",
            "score the current change mask against the uploaded ground truth "
            "and render the agreement overlay",
            _schema({}),
            {},
            _tool_compare),
    ]
    _REGISTRY = {s.name: s for s in specs}
    return _REGISTRY


def execute_tool(session, call):
    """Validate and run one call; failures come back structured."""
    registry = register_tools()
    spec = registry.get(call.tool)
    if spec is None:
        return ToolResult(False, "unknown tool %r" % (call.tool,))
    try:
        jsonschema.validate(call.args, spec.schema)
    except jsonschema.ValidationError as err:
        return ToolResult(False, "invalid arguments for %s: %s"
                          % (call.tool, err.message))
    return spec.handler(session, call.args)
