"""Behavioural fingerprints of programs from resource-usage traces."""

import json

from ._dfaprint import *  # noqa: F401,F403
from ._dfaprint import evaluate_manifest as _evaluate_manifest


def evaluate_manifest(manifest, **kwargs):
    """Repeated hold-out evaluation; returns the report as a dict."""
    return json.loads(_evaluate_manifest(manifest, **kwargs))
