"""Interactive analysis service: sessions, tools, chat loop, HTTP API."""

from .backends import (BackendError, RemoteBackend, ScriptedBackend,
                       make_backend)
from .orchestrator import ChatError, TurnOutcome, handle_chat, system_prompt
from .service import create_app, run
from .session import Session
from .tools import ToolCall, ToolResult, execute_tool, register_tools

__all__ = [
    "BackendError", "ChatError", "RemoteBackend", "ScriptedBackend",
    "Session", "ToolCall", "ToolResult", "TurnOutcome", "create_app",
    "execute_tool", "handle_chat", "make_backend", "register_tools", "run",
    "system_prompt",
]
