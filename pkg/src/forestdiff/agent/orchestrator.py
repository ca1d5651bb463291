"""Turn orchestration: prompt assembly and the bounded tool-call loop.

The backend must answer every prompt with exactly one JSON object, either
{"tool": name, "args": {...}} or {"final": text}. A malformed reply earns one
repair re-prompt; a second malformed reply aborts the turn. Tool results are
fed back as user messages so stateless chat APIs can follow the exchange.
"""

import json
import re
from dataclasses import dataclass, field

from .tools import ToolCall, execute_tool, register_tools

MAX_ROUNDS = 6

_REPAIR = ("your last reply was not a single valid JSON object; reply with "
           '{"tool": "<name>", "args": {...}} or {"final": "<answer>"} '
           "and nothing else")

_FENCE_RE = re.compile(r"^```(?:json)?\s*\n(.*)\n```\s*$", re.DOTALL)


class ChatError(RuntimeError):
    """The backend broke the reply protocol beyond repair."""


@dataclass
class TurnOutcome:
    reply: str
    artifacts: list = field(default_factory=list)
    tools_used: list = field(default_factory=list)


def system_prompt(session):
    lines = [
        "You are the analysis assistant inside a forest-change workbench.",
        "Reply with exactly one JSON object and nothing else.",
        'To call a tool: {"tool": "<name>", "args": {...}}.',
        'To answer the user: {"final": "<answer>"}.',
        "Call at most one tool per reply; results arrive as user messages "
        "beginning with 'tool result for'.",
        "Run a detection tool before analysis tools that need a change mask.",
        "",
        "tools:",
    ]
    for spec in register_tools().values():
        lines.append("- %s: %s" % (spec.name, spec.description))
        lines.append("  example: %s" % json.dumps(
            {"tool": spec.name, "args": spec.example_args}, sort_keys=True))
    lines.append("")
    lines.append(session.state_line())
    return "\n".join(lines)


def _parse_reply(raw):
    text = raw.strip()
    m = _FENCE_RE.match(text)
    if m:
        text = m.group(1).strip()
    try:
        obj = json.loads(text)
    except ValueError:
        return None
    if not isinstance(obj, dict):
        return None
    if set(obj) == {"final"} and isinstance(obj["final"], str):
        return obj
    if "tool" in obj and "final" not in obj and isinstance(obj["tool"], str):
        args = obj.get("args", {})
        if isinstance(args, dict) and set(obj) <= {"tool", "args"}:
            return obj
    return None


def handle_chat(session, message, backend):
    """Run one user turn to completion; returns the final reply."""
    session.transcript.append({"role": "user", "content": message})
    artifacts = []
    tools_used = []
    repaired = False
    for _ in range(MAX_ROUNDS):
        messages = [{"role": "system", "content": system_prompt(session)}]
        messages.extend(session.transcript)
        raw = backend.complete(messages)
        parsed = _parse_reply(raw)
        session.transcript.append({"role": "assistant",
                                   "content": raw.strip()})
        if parsed is None:
            if repaired:
                raise ChatError(
                    "backend sent two malformed replies in one turn")
            repaired = True
            session.transcript.append({"role": "user", "content": _REPAIR})
            continue
        if "final" in parsed:
            text = parsed["final"]
            if "{{" in text:
                raise ChatError("backend left an unfilled placeholder "
                                "in its final answer")
            return TurnOutcome(text, artifacts, tools_used)
        call = ToolCall(parsed["tool"], parsed.get("args") or {})
        result = execute_tool(session, call)
        tools_used.append(call.tool)
        artifacts.extend(result.artifacts)
        session.transcript.append({
            "role": "user",
            "content": "tool result for %s: %s" % (call.tool,
                                                   result.for_backend())})
    raise ChatError("no final answer within %d rounds" % (MAX_ROUNDS,))
