"""Globally normalized topic model over reply trees.

Thin wrapper around the C++ core; see the project README for the full
command-line workflow.
"""

import json as _json

from ._core import *  # noqa: F401,F403
from ._core import evaluation_report as _evaluation_report


def evaluation_report(corpus, params, ais=None, schedule=None, with_oracle=False):
    """Run the full evaluation and return the report as a dict."""
    kwargs = {}
    if ais is not None:
        kwargs["ais"] = ais
    if schedule is not None:
        kwargs["schedule"] = schedule
    return _json.loads(_evaluation_report(corpus, params, with_oracle=with_oracle, **kwargs))
