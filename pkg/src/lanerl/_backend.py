"""Kernel backend selection: compiled extension with a NumPy fallback.

The hot numeric kernels (MLP forward/backward, SGD updates) exist twice:
``lanerl._speedups`` (Cython) and ``lanerl._purepy`` (NumPy reference).
The compiled module is preferred when importable. Set ``LANERL_BACKEND``
to ``python`` or ``compiled`` before import to force a choice; ``compiled``
raises if the extension is missing instead of silently degrading.

``kernels`` is looked up through this module at call time, so tests and
benchmarks can swap implementations in-process via :func:`use_backend`.
"""

import os

from lanerl import _purepy

_VALID = ("auto", "compiled", "python")


def _load(choice):
    if choice == "python":
        return _purepy, "python"
    try:
        from lanerl import _speedups

        return _speedups, "compiled"
    except ImportError:
        if choice == "compiled":
            raise
        return _purepy, "python"


_choice = os.environ.get("LANERL_BACKEND", "auto")
if _choice not in _VALID:
    raise ValueError(f"LANERL_BACKEND must be one of {_VALID}, got {_choice!r}")

kernels, _name = _load(_choice)


def backend_name():
    """Name of the active kernel backend: 'compiled' or 'python'."""
    return _name


def use_backend(name):
    """Switch kernel backends in-process; returns the previous backend name."""
    global kernels, _name
    if name not in ("compiled", "python"):
        raise ValueError(f"backend must be 'compiled' or 'python', got {name!r}")
    previous = _name
    kernels, _name = _load(name)
    return previous
