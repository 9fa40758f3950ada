"""Shared errors, quadrature helpers and deterministic serialisation."""
from __future__ import annotations

import hashlib
import json
import math
from datetime import datetime, timezone

import numpy as np
from scipy.special import gammaln

SCHEMA_VERSION = "1.0"

# accepted leakage outside a declared support, relative to sup|f|
SUPPORT_TOL = 1e-8


class LevlabError(Exception):
    """Base class for every library error."""


class ArgumentError(LevlabError, ValueError):
    pass


class RepresentationError(LevlabError, ValueError):
    pass


class SupportError(LevlabError):
    pass


class SymmetryError(LevlabError):
    pass


class CertificationError(LevlabError):
    """A numerical certificate failed; ``details`` carries the evidence."""

    def __init__(self, message: str, certificate: str = "", **details):
        super().__init__(message)
        self.certificate = certificate
        self.details = details


class PrecisionError(LevlabError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


class TruncationError(LevlabError):
    pass


class PreconditionError(LevlabError):
    pass


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n, i.e. of S^{n-1}."""
    if n < 1:
        raise ArgumentError("sphere_area needs n >= 1")
    return 2.0 * math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n))


def bump(x):
    """The standard smooth bump exp(-1/(1-x^2)) on (-1, 1), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


def bump_on(t, a: float, b: float):
    """Bump supported on [a, b]."""
    c, w = 0.5 * (a + b), 0.5 * (b - a)
    return bump((np.asarray(t, dtype=float) - c) / w)


def trapezoid_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, float(h))
    if n > 1:
        w[0] = w[-1] = 0.5 * h
    return w


def uniform_step(grid: np.ndarray, name: str = "grid") -> float:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ArgumentError(f"{name} needs at least two samples")
    steps = np.diff(grid)
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(1.0, abs(h)):
        raise ArgumentError(f"{name} must be uniform and increasing")
    return float(h)


def gauss_legendre_panels(a: float, b: float, panels: int, order: int = 16):
    """Composite Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[:-1] + edges[1:])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


def complex_pairs(values) -> list:
    arr = np.asarray(values, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in arr]


def from_pairs(pairs, shape=None) -> np.ndarray:
    arr = np.asarray(pairs, dtype=float).reshape(-1, 2)
    out = arr[:, 0] + 1j * arr[:, 1]
    return out.reshape(shape) if shape is not None else out


def jsonable(obj):
    """Recursively convert numpy scalars/arrays into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return complex_pairs(obj)
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(payload: dict) -> str:
    """Deterministic JSON: sorted keys, the timestamp alone on the first line.

    Everything after the first line is a pure function of ``payload``.
    """
    body = json.dumps(jsonable(payload), sort_keys=True, indent=2)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if body == "{}":
        return '{"generated_at": "%s"\n}' % stamp
    return '{"generated_at": "%s",\n%s' % (stamp, body[1:].lstrip("\n"))


def strip_timestamp(text: str) -> str:
    """Drop the single timestamp line from a file produced by this package."""
    return "\n".join(
        line for line in text.splitlines() if "generated_at" not in line
    )


def config_hash(config: dict) -> str:
    blob = json.dumps(jsonable(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
