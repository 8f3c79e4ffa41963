"""Kernel loading: prefer the compiled extension, fall back to the
interpreted source.  Set DIFFCD_PURE=1 to force the interpreted path.
"""

import importlib.machinery
import importlib.util
import os


def _load_pure():
    path = os.path.join(os.path.dirname(__file__), "_kernels.py")
    loader = importlib.machinery.SourceFileLoader("diffcd._core._kernels_pure", path)
    spec = importlib.util.spec_from_loader(loader.name, loader)
    mod = importlib.util.module_from_spec(spec)
    loader.exec_module(mod)
    return mod


if os.environ.get("DIFFCD_PURE"):
    kernels = _load_pure()
else:
    from . import _kernels as kernels

COMPILED = bool(getattr(kernels, "COMPILED", False))
