"""Numerical lab for NLS with a random point-measure nonlinearity."""

import json

from ._core import *  # noqa: F401,F403
from ._core import __version__


def parse_jsonl(text):
    """Split JSON-lines output into a list of dicts."""
    return [json.loads(line) for line in text.splitlines() if line]
