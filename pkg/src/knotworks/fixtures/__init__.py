"""Bundled example inputs.  Regenerate with ``scripts/build_fixtures.py``."""
import json
from importlib import resources


def path(name: str):
    return resources.files(__name__) / name


def load(name: str) -> dict:
    return json.loads(path(name).read_text())


def names() -> list[str]:
    return sorted(p.name for p in resources.files(__name__).iterdir() if p.name.endswith(".json"))
