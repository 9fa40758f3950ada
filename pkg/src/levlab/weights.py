"""Admissible weights psi, the Levinson integral and psi-weighted sup norms."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._common import ArgumentError, RepresentationError, gauss_legendre_panels

DEFAULT_HORIZON = 2.0**64
DEFAULT_THRESHOLD = 1e6

_FAMILIES = ("power", "lin-log", "const-log")


class WeightFunction:
    """A nondecreasing weight psi >= 0 with psi(r) -> infinity.

    Builtins are ``power:a`` (r^a, 0 < a <= 1), ``lin-log:k`` (r/(1+log r)^k,
    k >= 1, made monotone near the origin) and ``const-log:c`` (c + log(1+r)).
    ``custom`` wraps a user closure; ``tabulated`` interpolates samples.
    Instances are immutable; ``scaled`` returns a new weight.
    """

    __slots__ = ("kind", "family", "params", "scale", "_r", "_psi", "_func",
                 "horizon", "name")

    def __init__(self, kind, family, params=(), *, scale=1.0, table=None,
                 func=None, horizon=None, name=None):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", tuple(float(p) for p in params))
        object.__setattr__(self, "scale", float(scale))
        object.__setattr__(self, "_func", func)
        object.__setattr__(self, "horizon", horizon)
        object.__setattr__(self, "name", name)
        r = psi = None
        if table is not None:
            r, psi = (np.array(a, dtype=float) for a in table)
            r.setflags(write=False)
            psi.setflags(write=False)
        object.__setattr__(self, "_r", r)
        object.__setattr__(self, "_psi", psi)
        if not self.scale > 0 or not math.isfinite(self.scale):
            raise RepresentationError("weight scale must be positive and finite")

    def __setattr__(self, key, value):
        raise AttributeError("WeightFunction is immutable")

    # construction -----------------------------------------------------
    @classmethod
    def power(cls, a: float) -> "WeightFunction":
        if not 0 < a <= 1:
            raise RepresentationError("power weight needs 0 < a <= 1")
        return cls("builtin", "power", (a,))

    @classmethod
    def lin_log(cls, k: float) -> "WeightFunction":
        if not k >= 1:
            raise RepresentationError("lin-log weight needs k >= 1")
        return cls("builtin", "lin-log", (k,))

    @classmethod
    def const_log(cls, c: float = 0.0) -> "WeightFunction":
        if not c >= 0:
            raise RepresentationError("const-log weight needs c >= 0")
        return cls("builtin", "const-log", (c,))

    @classmethod
    def custom(cls, func: Callable, name: str = "custom") -> "WeightFunction":
        w = cls("builtin", "custom", func=func, name=name)
        probe = np.concatenate(([0.0], np.logspace(-3, 8, 500)))
        vals = w(probe)
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise RepresentationError("custom weight must be finite and >= 0")
        if np.any(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[1:]))):
            raise RepresentationError("custom weight is not nondecreasing")
        return w

    @classmethod
    def tabulated(cls, r, psi, horizon: float = 1.0) -> "WeightFunction":
        r = np.asarray(r, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if r.ndim != 1 or r.shape != psi.shape or r.size < 2:
            raise RepresentationError("table needs two equal-length columns")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(psi))):
            raise RepresentationError("table contains non-finite values")
        if np.any(np.diff(r) <= 0):
            raise RepresentationError("table radii must be strictly increasing")
        if np.any(np.diff(psi) < 0):
            raise RepresentationError("tabulated psi must be nondecreasing")
        if np.any(psi < 0) or r[0] < 0:
            raise RepresentationError("table must have r >= 0 and psi >= 0")
        if not psi[-1] > horizon:
            raise RepresentationError(
                f"last tabulated psi {psi[-1]} does not exceed horizon {horizon}")
        return cls("tabulated", "table", table=(r, psi), horizon=float(horizon))

    @classmethod
    def from_csv(cls, path, horizon: float = 1.0) -> "WeightFunction":
        rows = []
        with open(path, newline="") as fh:
            for row in csv.reader(fh):
                if not row or row[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(row[0]), float(row[1])))
                except (ValueError, IndexError):
                    # tolerate a single header line
                    if rows:
                        raise RepresentationError(f"malformed row {row!r}")
        if not rows:
            raise RepresentationError(f"no samples in {path}")
        r, psi = zip(*rows)
        return cls.tabulated(r, psi, horizon=horizon)

    @classmethod
    def parse(cls, descriptor: str) -> "WeightFunction":
        """Parse ``family:param`` names such as ``power:0.5`` or ``lin-log:2``."""
        text = descriptor.strip()
        aliases = {"sqrt": "power:0.5", "linear": "power:1"}
        text = aliases.get(text, text)
        family, _, arg = text.partition(":")
        if family not in _FAMILIES:
            raise RepresentationError(f"unknown weight family {family!r}")
        try:
            value = float(arg) if arg else (0.0 if family == "const-log" else 1.0)
        except ValueError:
            raise RepresentationError(f"bad weight parameter in {descriptor!r}")
        return {"power": cls.power, "lin-log": cls.lin_log,
                "const-log": cls.const_log}[family](value)

    # evaluation -------------------------------------------------------
    def _base(self, r: np.ndarray) -> np.ndarray:
        if self.family == "power":
            return r ** self.params[0]
        if self.family == "lin-log":
            k = self.params[0]
            knee = math.exp(k - 1.0)
            out = r / k**k
            far = r > knee
            out[far] = r[far] / (1.0 + np.log(r[far])) ** k
            return out
        if self.family == "const-log":
            return self.params[0] + np.log1p(r)
        if self.family == "custom":
            return np.asarray(self._func(r), dtype=float) * np.ones_like(r)
        # tabulated: clamp below, linear inside, last slope beyond
        out = np.interp(r, self._r, self._psi)
        slope = max((self._psi[-1] - self._psi[-2]) / (self._r[-1] - self._r[-2]), 0.0)
        beyond = r > self._r[-1]
        out[beyond] = self._psi[-1] + slope * (r[beyond] - self._r[-1])
        return out

    def __call__(self, r):
        arr = np.asarray(r, dtype=float)
        if np.any(arr < 0):
            raise ArgumentError("psi is defined on [0, inf)")
        out = self.scale * self._base(np.atleast_1d(arr).astype(float).copy())
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def scaled(self, c: float) -> "WeightFunction":
        return WeightFunction(self.kind, self.family, self.params,
                              scale=self.scale * c,
                              table=None if self._r is None else (self._r, self._psi),
                              func=self._func, horizon=self.horizon, name=self.name)

    @property
    def table(self):
        return None if self._r is None else (self._r.copy(), self._psi.copy())

    @property
    def table_extent(self) -> float:
        return math.inf if self._r is None else float(self._r[-1])

    @property
    def descriptor(self) -> str:
        if self.family == "custom":
            base = self.name or "custom"
        elif self.family == "table":
            base = f"table[{self._r.size}]"
        else:
            base = f"{self.family}:{self.params[0]:g}"
        return base if self.scale == 1.0 else f"{self.scale:.17g}*{base}"

    def closed_form_class(self) -> str | None:
        """Convergence class of the Levinson integral from closed-form analysis."""
        if self.family == "power":
            return "divergent" if self.params[0] == 1.0 else "convergent"
        if self.family == "lin-log":
            return "divergent" if self.params[0] <= 1.0 else "convergent"
        if self.family == "const-log":
            return "convergent"
        return None

    def __repr__(self):
        return f"WeightFunction({self.descriptor})"


@dataclass(frozen=True)
class LevinsonVerdict:
    verdict: str
    numeric_estimate: float
    method: str
    horizon: float
    threshold: float
    partial_sums: tuple = field(default=(), repr=False)

    @property
    def decided(self) -> bool:
        return self.verdict != "undecided"

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "numeric_estimate": self.numeric_estimate,
                "method": self.method, "horizon": self.horizon,
                "threshold": self.threshold,
                "partial_sums": list(self.partial_sums)}


def levinson_partial(psi: WeightFunction, R: float) -> float:
    """The partial integral of psi(r)/r^2 over [1, R], via r = e^u."""
    if R <= 1:
        return 0.0
    top = math.log(R)
    # panel edges at the lin-log knee, where psi' jumps
    cuts = [0.0, top]
    if psi.family == "lin-log" and 0.0 < psi.params[0] - 1.0 < top:
        cuts.insert(1, psi.params[0] - 1.0)
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        u, w = gauss_legendre_panels(a, b, max(4, math.ceil((b - a) / 0.25)), 16)
        total += float(np.sum(w * psi(np.exp(u)) * np.exp(-u)))
    return total


def _extrapolated_total(terms: np.ndarray, K: int):
    """Partial condensed sum to index K plus a tail estimate, or None."""
    head = float(np.sum(terms[: K + 1]))
    last = terms[K - 3: K + 1]
    if np.all(last > 0):
        ratios = last[1:] / last[:-1]
        if np.all(ratios < 0.9):
            q = float(ratios.max())
            return head + terms[K] * q / (1.0 - q)
    elif np.all(last == 0):
        return head
    lo = max(K // 2, 1)
    ks = np.arange(lo, K + 1)
    vals = terms[lo: K + 1]
    if np.any(vals <= 0):
        return None
    p = -np.polyfit(np.log(ks), np.log(vals), 1)[0]
    if p <= 1.1:
        return None
    return head + terms[K] * K / (p - 1.0)


def classify_levinson(psi: WeightFunction, horizon: float = DEFAULT_HORIZON,
                      threshold: float = DEFAULT_THRESHOLD) -> LevinsonVerdict:
    """Decide whether the integral of psi(r)/r^2 over [1, inf) diverges.

    Closed-form families are decided exactly. Otherwise the condensed series
    sum_k psi(2^k)/2^k is inspected up to ``horizon``: crossing ``threshold``
    means divergent, a stable extrapolated total means convergent, anything
    else is reported as undecided.
    """
    if not isinstance(psi, WeightFunction):
        raise ArgumentError("psi must be a WeightFunction")
    if not horizon >= 2:
        raise ArgumentError("horizon must be at least 2")
    if not threshold > 0:
        raise ArgumentError("threshold must be positive")
    reach = min(horizon, psi.table_extent)
    estimate = levinson_partial(psi, reach)
    K = int(math.floor(math.log2(reach))) if reach >= 2 else 0
    terms = psi(2.0 ** np.arange(K + 1)) / 2.0 ** np.arange(K + 1)
    sums = np.cumsum(terms)
    common = dict(numeric_estimate=estimate, horizon=float(horizon),
                  threshold=float(threshold), partial_sums=tuple(sums.tolist()))

    rule = psi.closed_form_class()
    if rule is not None:
        return LevinsonVerdict(rule, method="closed-form rule", **common)
    if sums[-1] > threshold:
        return LevinsonVerdict("divergent", method="dyadic condensation", **common)
    if K >= 8:
        full = _extrapolated_total(terms, K)
        half = _extrapolated_total(terms, K // 2)
        if full is not None and half is not None and abs(full - half) <= 0.05 * full:
            return LevinsonVerdict("convergent", method="numeric extrapolation", **common)
    return LevinsonVerdict("undecided", method="dyadic condensation", **common)


def psi_norm(f, psi: WeightFunction) -> float:
    """max over samples of |f| exp(-psi(|x|)).

    ``f`` is any carrier exposing ``values`` and ``radii()`` (grid functions,
    spectral functions), or a ``(radii, values)`` pair.
    """
    if isinstance(f, tuple):
        radii, values = (np.asarray(a) for a in f)
    else:
        radii, values = f.radii(), np.asarray(f.values)
    if values.size == 0:
        raise ArgumentError("psi_norm of an empty grid")
    weighted = np.abs(values).ravel() * np.exp(-psi(np.asarray(radii, float).ravel()))
    return float(weighted.max())


def psi_scale(psi: WeightFunction, d: int) -> WeightFunction:
    """The reduced weight psi/d."""
    if int(d) != d or d < 1:
        raise ArgumentError("d must be a positive integer")
    return psi.scaled(1.0 / int(d))
