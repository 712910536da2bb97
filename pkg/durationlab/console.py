"""Prefixed console logger and small JSON helpers."""

import json
from pathlib import Path
from typing import Any


def load_json(json_path: Path) -> dict[str, Any]:
    """Load and parse a JSON file."""
    if not json_path.exists():
        raise FileNotFoundError(f"JSON file not found at {json_path}")
    try:
        return json.loads(json_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in file: {e}")


def dump_json(payload: Any, json_path: Path) -> None:
    """Write JSON with sorted keys so reruns are byte-identical."""
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


class Console:
    """Simple console logger with prefixed output."""

    # set by `runner.py --debug` for every logger at once
    debug_enabled = False

    def __init__(self, name: str) -> None:
        self.name = name

    def info(self, message: object) -> None:
        print(f"[{self.name}] INFO: {message}")

    def warn(self, message: object) -> None:
        print(f"[{self.name}] WARNING: {message}")

    def error(self, message: object) -> None:
        print(f"[{self.name}] ERROR: {message}")

    def debug(self, message: object) -> None:
        if Console.debug_enabled:
            print(f"[{self.name}] DEBUG: {message}")
