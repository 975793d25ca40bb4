"""Multi-agent discussion toolkit.

Thin wrappers over the native module; structured values are plain dicts and
lists decoded from the JSON the core produces.
"""

import json

from ._cmd_forge import (
    CapExceeded,
    ConfigError,
    DatasetError,
    Error,
    SpecError,
    group_map,
    parse_verdict,
    render_system_prompt,
)
from . import _cmd_forge as _native

__all__ = [
    "CapExceeded",
    "ConfigError",
    "DatasetError",
    "Error",
    "SpecError",
    "bench",
    "discuss",
    "group_map",
    "parse_verdict",
    "render_question",
    "render_system_prompt",
    "symmetry",
]


def _dump(value):
    return value if isinstance(value, str) else json.dumps(value)


def symmetry(spec):
    """Symmetry report of a mechanism spec (dict or JSON text)."""
    return json.loads(_native.symmetry_json(_dump(spec)))


def render_question(task):
    return _native.render_question(_dump(task))


def discuss(config, task):
    """Runs one discussion; returns {verdict, resolution, transcript}."""
    return json.loads(_native.discuss_json(_dump(config), _dump(task)))


def bench(config, dataset, out_dir, resume=False, exclude_errored=False):
    return json.loads(
        _native.bench_json(_dump(config), str(dataset), str(out_dir), resume, exclude_errored)
    )
