"""levlab: numerical harmonic analysis around the Levinson dichotomy.

Submodules are imported lazily so the CLI can cap thread pools (through
``LEVLAB_THREADS``) before numpy is loaded.
"""
import importlib

__version__ = "0.1.0"
__all__ = ["weights", "euclid", "dyadic", "hyperbolic", "dichotomy", "cli"]


def __getattr__(name):
    if name in __all__:
        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module 'levlab' has no attribute {name!r}")
