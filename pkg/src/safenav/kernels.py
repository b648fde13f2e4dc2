"""Backend selection for the geometry hot loops.

The compiled ``_geom_c`` extension is used when it imports; otherwise the
numpy/pure-Python ``_geom_py`` module. Set ``SAFENAV_PURE_PYTHON=1`` to force
the fallback.
"""

import os

from safenav import _geom_py

if os.environ.get("SAFENAV_PURE_PYTHON", "") not in ("", "0"):
    _impl = _geom_py
else:
    try:
        from safenav import _geom_c as _impl
    except ImportError:  # extension not built
        _impl = _geom_py

BACKEND = "compiled" if _impl is not _geom_py else "python"

ray_box = _impl.ray_box
scan = _impl.scan
overlap = _impl.overlap
clearance = _impl.clearance
any_overlap = _impl.any_overlap
nearest_clearance = _impl.nearest_clearance


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _geom_py}
    try:
        from safenav import _geom_c
    except ImportError:
        pass
    else:
        found["compiled"] = _geom_c
    return found
