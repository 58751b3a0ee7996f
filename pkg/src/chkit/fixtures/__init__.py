"""Bundled scenario documents."""

from __future__ import annotations

from pathlib import Path

_HERE = Path(__file__).parent


def three_box_path() -> Path:
    """Path of the bundled three-box scenario document."""
    return _HERE / "three_box.json"
