"""Chat backends: a deterministic scripted planner and a remote API client.

The scripted backend speaks the same one-JSON-object-per-reply protocol a
hosted model would, so the orchestrator cannot tell them apart. It keys off
the state line in the system prompt to decide whether a detection step is
needed before the requested analysis.
"""

import json
import os
import re

import httpx

_STATE_RE = re.compile(r"^state: (.*)$", re.MULTILINE)
_RESULT_RE = re.compile(r"^tool result for (\w+): (.*)$", re.DOTALL)
_POINT_RE = re.compile(r"\((\d+),\s*(\d+)\)\s*in\s*(t1|t2)")

_HELP = ("I can detect forest change in the loaded imagery, describe it, "
         "count cleared patches, measure the deforestation percentage, "
         "answer point queries, and compare a mask against ground truth. "
         "What would you like to do?")


class BackendError(RuntimeError):
    """The backend could not produce a completion."""


def _parse_state(messages):
    state = {}
    for msg in messages:
        if msg["role"] != "system":
            continue
        m = _STATE_RE.search(msg["content"])
        if m:
            for token in m.group(1).split():
                key, _, value = token.partition("=")
                state[key] = value
    return state


def _turn_slice(messages):
    """Last real user message and the tool results that followed it."""
    user_msg = ""
    results = []
    for msg in messages:
        if msg["role"] != "user":
            continue
        m = _RESULT_RE.match(msg["content"])
        if m:
            try:
                payload = json.loads(m.group(2))
            except ValueError:
                payload = {}
            results.append((m.group(1), payload))
        else:
            user_msg = msg["content"]
            results = []
    return user_msg, results


def _classify(text):
    low = text.lower()
    points = [(int(r), int(c), t) for r, c, t in _POINT_RE.findall(low)]
    if points and ("point" in low or "click" in low or "here" in low):
        return "point_query_changes", {"points": [list(p) for p in points]}
    if "zero-shot" in low or "zeroshot" in low or "zero shot" in low:
        return "detect_changes_zeroshot", {}
    if "percent" in low or "how much" in low:
        return "deforestation_percentage", {}
    if "how many" in low or "count" in low:
        return "count_patches", {}
    if "caption" in low or "describe" in low or "description" in low:
        return "caption_changes", {}
    if ("compare" in low or "ground truth" in low or "iou" in low
            or "accurate" in low or "accuracy" in low):
        return "compare_with_ground_truth", {}
    if "detect" in low or "change" in low or "mask" in low:
        return "detect_changes_supervised", {}
    return None, {}


_NEEDS_MASK = {"caption_changes", "deforestation_percentage",
               "count_patches", "compare_with_ground_truth"}


def _final_text(tool, payload):
    summary = payload.get("summary", "")
    if tool == "deforestation_percentage":
        return "About %.2f%% of the visible area was deforested." % (
            payload.get("percentage", 0.0),)
    if tool == "count_patches":
        n = payload.get("count", 0)
        return "I count %d cleared patch%s in the current mask." % (
            n, "" if n == 1 else "es")
    if tool == "caption_changes":
        return "Here is a description of the change: %s." % (summary,)
    if tool == "compare_with_ground_truth":
        return "Comparison against ground truth: %s." % (summary,)
    if tool == "point_query_changes":
        return "Point query complete: %s." % (summary,)
    return "Detection complete: %s." % (summary,)


class ScriptedBackend:
    """Deterministic rule-based planner, useful offline and in tests."""

    name = "scripted"

    def complete(self, messages):
        state = _parse_state(messages)
        user_msg, results = _turn_slice(messages)
        intent, args = _classify(user_msg)
        if intent is None:
            return json.dumps({"final": _HELP})
        for tool, payload in results:
            if not payload.get("ok", False):
                return json.dumps(
                    {"final": "I could not complete that: %s."
                     % (payload.get("summary", "tool failed"),)})
        done = {tool for tool, _ in results}
        if intent in done:
            payload = dict(results)[intent]
            return json.dumps({"final": _final_text(intent, payload)})
        if intent in _NEEDS_MASK and state.get("mask") != "yes" and not (
                done & {"detect_changes_supervised",
                        "detect_changes_zeroshot"}):
            if state.get("pair") == "yes":
                return json.dumps({"tool": "detect_changes_supervised",
                                   "args": {}})
            if state.get("proposals") == "yes":
                return json.dumps({"tool": "detect_changes_zeroshot",
                                   "args": {}})
            return json.dumps(
                {"final": "Please upload an image pair or a proposal file "
                          "before asking for analysis."})
        if intent == "detect_changes_zeroshot" and state.get(
                "proposals") != "yes":
            return json.dumps(
                {"final": "Zero-shot detection needs a proposal file; "
                          "none is loaded."})
        if intent == "detect_changes_supervised" and state.get(
                "pair") != "yes":
            return json.dumps(
                {"final": "Please upload a before/after image pair first."})
        if intent == "point_query_changes" and state.get(
                "proposals") != "yes":
            return json.dumps(
                {"final": "Point queries need a proposal file; "
                          "none is loaded."})
        return json.dumps({"tool": intent, "args": args})


class RemoteBackend:
    """OpenAI-style chat-completions client over HTTP."""

    name = "remote"

    def __init__(self, base_url, api_key="", model="default", timeout=60.0):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.model = model
        self.timeout = timeout

    def complete(self, messages):
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = "Bearer " + self.api_key
        try:
            resp = httpx.post(
                self.base_url + "/chat/completions",
                json={"model": self.model, "messages": messages,
                      "temperature": 0},
                headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as err:
            raise BackendError("chat completion failed: %s" % (err,)) from err


def make_backend():
    """Pick a backend from the environment; scripted is the offline default."""
    kind = os.environ.get("WORKBENCH_BACKEND", "scripted").lower()
    if kind == "remote":
        base = os.environ.get("CHAT_API_BASE")
        if not base:
            raise BackendError("WORKBENCH_BACKEND=remote requires CHAT_API_BASE")
        return RemoteBackend(
            base,
            api_key=os.environ.get("CHAT_API_KEY", ""),
            model=os.environ.get("CHAT_MODEL", "default"),
            timeout=float(os.environ.get("CHAT_TIMEOUT", "60")))
    if kind != "scripted":
        raise BackendError("unknown WORKBENCH_BACKEND %r" % (kind,))
    return ScriptedBackend()
