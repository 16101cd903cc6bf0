import json
import sys

from mirror_select.settings import debug_enabled

DEBUG_MAX_CHARS = 200


def _render(value) -> str:
    if isinstance(value, (dict, list, tuple)):
        try:
            text = json.dumps(value, default=str)
        except (TypeError, ValueError):
            text = repr(value)
    else:
        text = str(value)
    if len(text) > DEBUG_MAX_CHARS:
        return text[:DEBUG_MAX_CHARS] + "..."
    return text


def debug_log(event: str, **fields) -> None:
    """Print one trace event when MIRROR_SELECT_DEBUG=true."""
    if not debug_enabled():
        return
    print(f"🔵 {event}", file=sys.stderr, flush=True)
    for key, value in fields.items():
        print(f"   {key}: {_render(value)}", file=sys.stderr, flush=True)


def debug_warn(event: str, **fields) -> None:
    if not debug_enabled():
        return
    print(f"⚠️  {event}", file=sys.stderr, flush=True)
    for key, value in fields.items():
        print(f"   {key}: {_render(value)}", file=sys.stderr, flush=True)
