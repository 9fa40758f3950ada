"""Dyadic node/weight approximation of kernel integrals over a ball.

F(lambda) = integral over B(0, L) of f(x) g(x, lambda) d mu(x) is replaced by
h_n(lambda) = sum_k C_k g(k / 2^n, lambda), with C_k the mass of f over the
dyadic cube I_k^n, and a certified uniform error on B(0, tau).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gammaln
from scipy.stats import qmc

from ._common import (ArgumentError, CertificationError, LevlabError,
                      complex_pairs, from_pairs, gauss_legendre_panels)

GL_ORDER = 8
MAX_CUBES = 4_000_000


class LevelTooCoarse(LevlabError):
    def __init__(self, message, level, minimal_level):
        super().__init__(message)
        self.level = level
        self.minimal_level = minimal_level


class KernelContractError(LevlabError):
    pass


# ------------------------------------------------------------------ measures

@dataclass(frozen=True)
class RadonMeasureRep:
    """Lebesgue measure with an optional density, or finitely many atoms.

    ``density`` is a callable on (N, d) point arrays returning real values
    >= 0 (``None`` means plain Lebesgue measure).
    """

    kind: str
    density: Callable | None = None
    points: np.ndarray | None = None
    masses: np.ndarray | None = None

    @classmethod
    def lebesgue(cls, density=None) -> "RadonMeasureRep":
        return cls("lebesgue-density", density=density)

    @classmethod
    def atomic(cls, points, masses) -> "RadonMeasureRep":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[0] == 1 and np.ndim(points) == 1:
            pts = pts.T
        m = np.asarray(masses, dtype=float).ravel()
        if pts.shape[0] != m.size:
            raise ArgumentError("one mass per atom is required")
        if np.any(m < 0) or not np.all(np.isfinite(m)):
            raise ArgumentError("atom masses must be finite and nonnegative")
        return cls("atomic", points=pts, masses=m)

    def weigh(self, X: np.ndarray) -> np.ndarray:
        if self.density is None:
            return np.ones(X.shape[0])
        rho = np.asarray(self.density(X), dtype=float)
        if np.any(rho < 0) or not np.all(np.isfinite(rho)):
            raise ArgumentError("density must be finite and nonnegative")
        return rho


# ------------------------------------------------------------------- kernels

@dataclass(frozen=True)
class KernelFunction:
    """g(x, lambda) with |g| <= 1 and a Lipschitz bound in x.

    ``evaluate(X, Lam)`` maps (N, d) points and (M, k) parameters to an
    (M, N) complex matrix. ``lipschitz(tau, L)`` bounds |grad_x g| over
    x in B(0, L) and |lambda| <= tau; ``None`` requests a finite-difference
    estimate inflated by 2.
    """

    evaluate: Callable
    lipschitz: Callable | None
    lambda_dim: int
    name: str = "kernel"
    bounded: bool = True
    # optional per-axis factor with g(x, lam) = prod_i factor(x_i, lam_i)
    factor: Callable | None = None

    def __call__(self, X, Lam):
        return self.evaluate(np.atleast_2d(X), np.atleast_2d(Lam))


def exponential_kernel(d: int) -> KernelFunction:
    """g(x, lambda) = exp(i lambda.x); its x-gradient has norm |lambda|."""
    def evaluate(X, Lam):
        return np.exp(1j * (Lam @ X.T))

    def factor(x, lam):
        return np.exp(1j * np.outer(lam, x))

    return KernelFunction(evaluate, lambda tau, L: float(tau), d, "exponential",
                          factor=factor)


def estimate_lipschitz(g: KernelFunction, L: float, tau: float, d: int,
                       seed: int = 0, step: float = 1e-6) -> float:
    """Central-difference estimate of sup |grad_x g|, inflated by 2."""
    X = _ball_points(L * (1 - 1e-9), d, 128, seed)
    Lam = probe_set(tau, g.lambda_dim, 64, seed)
    grad2 = np.zeros((Lam.shape[0], X.shape[0]))
    for i in range(d):
        e = np.zeros(d)
        e[i] = step
        diff = (g(X + e, Lam) - g(X - e, Lam)) / (2 * step)
        grad2 += np.abs(diff) ** 2
    return 2.0 * float(np.sqrt(grad2.max()))


# ---------------------------------------------------------- low-discrepancy

def _ball_points(radius: float, dim: int, count: int, seed: int) -> np.ndarray:
    """Deterministic Halton points in the open ball, rejection from the cube."""
    if radius <= 0:
        return np.zeros((count, dim))
    sampler = qmc.Halton(d=dim, scramble=False)
    if seed:
        sampler.fast_forward(int(seed))
    found = []
    total = 0
    while total < count:
        pts = (2.0 * sampler.random(2 * count + 8) - 1.0) * radius
        keep = pts[np.linalg.norm(pts, axis=1) < radius]
        found.append(keep)
        total += keep.shape[0]
    return np.concatenate(found)[:count]


def probe_set(tau: float, dim: int, count: int = 1000, seed: int = 0) -> np.ndarray:
    """Halton points in B(0, tau) plus the origin and points on the axes."""
    axis = [np.zeros(dim)]
    for i in range(dim):
        for frac in (0.5, 1.0 - 1e-9):
            for sign in (1.0, -1.0):
                v = np.zeros(dim)
                v[i] = sign * frac * tau
                axis.append(v)
    axis = np.array(axis)
    extra = max(count - axis.shape[0], 0)
    return np.concatenate((axis, _ball_points(tau, dim, extra, seed)))[:count]


# ------------------------------------------------------------------- covers

@dataclass(frozen=True)
class DyadicCover:
    """Closed dyadic cubes of side 2^-n lying strictly inside B(0, L)."""

    level: int
    L: float
    dim: int
    indices: np.ndarray  # (K, dim) integer lower corners, lexicographic
    empty: bool = False

    @property
    def side(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def corners(self) -> np.ndarray:
        return self.indices * self.side

    @property
    def volume(self) -> float:
        return self.indices.shape[0] * self.side**self.dim

    def contains(self, X: np.ndarray) -> np.ndarray:
        """Point membership in the union of half-open cubes."""
        X = np.atleast_2d(X)
        if self.empty:
            return np.zeros(X.shape[0], dtype=bool)
        k = np.floor(X / self.side).astype(np.int64)
        keys = {tuple(row) for row in self.indices.tolist()}
        return np.array([tuple(row) in keys for row in k.tolist()], dtype=bool)


def build_cover(L: float, n: int, dim: int = 1) -> DyadicCover:
    """All I_k^n = prod [k_j/2^n, (k_j+1)/2^n) whose closure lies in B(0, L)."""
    if not L > 0:
        raise ArgumentError("L must be positive")
    if n < 0 or int(n) != n:
        raise ArgumentError("level must be a nonnegative integer")
    n = int(n)
    scale = 2**n
    m = math.ceil(L * scale)
    count = (2 * m) ** dim
    if count > MAX_CUBES:
        raise ArgumentError(f"level {n} in dimension {dim} needs too many cubes")
    k = np.arange(-m, m)
    far = np.maximum(np.abs(k), np.abs(k + 1)).astype(float)
    grids = np.meshgrid(*[k] * dim, indexing="ij")
    reach = np.sqrt(sum(np.meshgrid(*[far**2] * dim, indexing="ij")))
    keep = reach < L * scale
    idx = np.stack([g[keep] for g in grids], axis=1).astype(np.int64)
    idx = idx[np.lexsort(idx.T[::-1])] if idx.size else idx.reshape(0, dim)
    return DyadicCover(n, float(L), dim, idx, empty=idx.shape[0] == 0)


def ball_volume(L: float, d: int) -> float:
    return math.exp(0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1)) * L**d


# ---------------------------------------------------------------- node sums

@dataclass
class NodeWeights:
    nodes: np.ndarray
    coeffs: np.ndarray
    level: int
    tau: float
    certified_bound: float
    mass_bound: float
    L: float = 0.0
    components: dict = field(default_factory=dict)
    empirical_error: float | None = None
    sup_check: float | None = None

    def to_dict(self) -> dict:
        return {"nodes": self.nodes.tolist(), "coeffs": complex_pairs(self.coeffs),
                "level": self.level, "tau": self.tau,
                "certified_bound": self.certified_bound,
                "mass_bound": self.mass_bound, "L": self.L,
                "components": self.components,
                "empirical_error": self.empirical_error}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "NodeWeights":
        return cls(np.asarray(data["nodes"], dtype=float), from_pairs(data["coeffs"]),
                   data["level"], data["tau"], data["certified_bound"],
                   data["mass_bound"], data.get("L", 0.0),
                   data.get("components", {}), data.get("empirical_error"))


def evaluate_nodes(w: NodeWeights, g: KernelFunction, lambdas, chunk=256) -> np.ndarray:
    """h(lambda) = sum_j C_j g(v_j, lambda), one fixed summation order per row."""
    Lam = np.asarray(lambdas, dtype=float)
    Lam = Lam.reshape(-1, 1) if Lam.ndim <= 1 and g.lambda_dim == 1 else np.atleast_2d(Lam)
    if w.coeffs.size == 0:
        return np.zeros(Lam.shape[0], dtype=complex)
    out = np.empty(Lam.shape[0], dtype=complex)
    for start in range(0, Lam.shape[0], chunk):
        G = g(w.nodes, Lam[start:start + chunk])
        out[start:start + chunk] = np.sum(G * w.coeffs[None, :], axis=1)
    return out


def _as_callable(f, d):
    if callable(f):
        return lambda X: np.asarray(f(X), dtype=complex).reshape(X.shape[0])
    axes = f.axes()
    re = RegularGridInterpolator(axes, f.values.real, bounds_error=False, fill_value=0.0)
    im = RegularGridInterpolator(axes, f.values.imag, bounds_error=False, fill_value=0.0)
    return lambda X: re(X) + 1j * im(X)


def _cube_rule(dim: int, side: float):
    x, w = np.polynomial.legendre.leggauss(GL_ORDER)
    x = 0.5 * (x + 1.0) * side
    w = 0.5 * w * side
    pts = np.array(list(itertools.product(x, repeat=dim)))
    wts = np.prod(np.array(list(itertools.product(w, repeat=dim))), axis=1)
    return pts, wts


def _cube_masses(fun, mu, cover, chunk=20000):
    """Per-cube integrals of f and |f| against mu (Gauss-Legendre, GL_ORDER per axis)."""
    pts, wts = _cube_rule(cover.dim, cover.side)
    K = cover.indices.shape[0]
    C = np.zeros(K, dtype=complex)
    A = np.zeros(K)
    sup = 0.0
    for start in range(0, K, chunk):
        corners = cover.corners[start:start + chunk]
        X = (corners[:, None, :] + pts[None, :, :]).reshape(-1, cover.dim)
        vals = fun(X)
        sup = max(sup, float(np.abs(vals).max()) if vals.size else 0.0)
        weighted = (vals * mu.weigh(X)).reshape(corners.shape[0], -1) * wts
        C[start:start + chunk] = weighted.sum(axis=1)
        A[start:start + chunk] = np.abs(weighted).sum(axis=1)
    return C, A, sup


def _gap_masses(fun, mu, cover, L, sub=4, panels=64):
    """mu(B \\ A^n) and the integral of |f| over the same region."""
    d = cover.dim
    if d == 1:
        if cover.empty:
            gaps = [(-L, L)]
        else:
            lo = float(cover.corners[:, 0].min())
            hi = float(cover.corners[:, 0].max()) + cover.side
            gaps = [(-L, lo), (hi, L)]
        mass = absf = 0.0
        for a, b in gaps:
            if b <= a:
                continue
            t, w = gauss_legendre_panels(a, b, panels, 8)
            X = t[:, None]
            rho = mu.weigh(X)
            mass += float(np.sum(w * rho))
            absf += float(np.sum(w * rho * np.abs(fun(X))))
        return mass, absf, 0.0
    # boundary layer: cubes meeting the ball but not in the cover, refined
    side = cover.side
    m = math.ceil(L / side)
    k = np.arange(-m, m)
    near = np.maximum(np.abs(k), np.abs(k + 1)) * side
    closest = np.where((k <= 0) & (k + 1 >= 0), 0.0, np.minimum(np.abs(k), np.abs(k + 1)) * side)
    grids = np.meshgrid(*[k] * d, indexing="ij")
    reach = np.sqrt(sum(np.meshgrid(*[near**2] * d, indexing="ij")))
    low = np.sqrt(sum(np.meshgrid(*[closest**2] * d, indexing="ij")))
    layer = (low < L) & (reach >= L)
    corners = np.stack([g[layer] for g in grids], axis=1) * side
    h = side / sub
    offs = (np.array(list(itertools.product(range(sub), repeat=d))) + 0.5) * h
    X = (corners[:, None, :] + offs[None, :, :]).reshape(-1, d)
    X = X[np.linalg.norm(X, axis=1) < L]
    vol = h**d
    rho = mu.weigh(X) if X.size else np.zeros(0)
    absf = float(np.sum(rho * np.abs(fun(X)))) * vol if X.size else 0.0
    if mu.density is None:
        return max(ball_volume(L, d) - cover.volume, 0.0), absf, 0.0
    return float(np.sum(rho)) * vol, absf, 0.0


def _oracle(fun, mu, g, L, d, level, Lam, chunk=64):
    """Independent reference for F: trapezoid at 4x the cube resolution."""
    if mu.kind == "atomic":
        X = mu.points[np.linalg.norm(mu.points, axis=1) < L]
        wts = mu.masses[np.linalg.norm(mu.points, axis=1) < L]
    else:
        h = 2.0 ** (-level) / 4.0
        ax = np.arange(-math.floor(L / h), math.floor(L / h) + 1) * h
        X = np.stack(np.meshgrid(*[ax] * d, indexing="ij"), -1).reshape(-1, d)
        inside = np.linalg.norm(X, axis=1) < L
        if g.factor is not None and g.lambda_dim == d:
            V = np.zeros(X.shape[0], dtype=complex)
            V[inside] = fun(X[inside]) * mu.weigh(X[inside]) * h**d
            V = V.reshape((ax.size,) * d)
            out = np.einsum("mi,i...->m...", g.factor(ax, Lam[:, 0]), V)
            for axis in range(1, d):
                out = np.einsum("mj,mj...->m...", g.factor(ax, Lam[:, axis]), out)
            return out
        X = X[inside]
        wts = mu.weigh(X) * h**d
    vals = fun(X) * wts
    out = np.empty(Lam.shape[0], dtype=complex)
    for start in range(0, Lam.shape[0], chunk):
        out[start:start + chunk] = g(X, Lam[start:start + chunk]) @ vals
    return out


def _atomic_masses(fun, mu, cover, L):
    inside = np.linalg.norm(mu.points, axis=1) < L
    pts, m = mu.points[inside], mu.masses[inside]
    vals = fun(pts) * m if pts.size else np.zeros(0, dtype=complex)
    K = cover.indices.shape[0]
    C = np.zeros(K, dtype=complex)
    A = np.zeros(K)
    if K and pts.size:
        lookup = {tuple(row): i for i, row in enumerate(cover.indices.tolist())}
        cells = np.floor(pts / cover.side).astype(np.int64).tolist()
        hit = np.array([lookup.get(tuple(c), -1) for c in cells])
    else:
        hit = np.full(pts.shape[0], -1)
    for j in np.nonzero(hit >= 0)[0]:
        C[hit[j]] += vals[j]
        A[hit[j]] += abs(vals[j])
    miss = hit < 0
    sup = float(np.abs(fun(pts)).max()) if pts.size else 0.0
    return C, A, sup, float(m[miss].sum()), float(np.abs(vals[miss]).sum())


def approximate(f, mu: RadonMeasureRep, g: KernelFunction, n: int, tau: float,
                eps: float, L: float | None = None, dim: int | None = None,
                probes: int = 1000, seed: int = 0, check: bool = True,
                lipschitz: float | None = None) -> NodeWeights:
    """Dyadic node/weight replacement of the kernel integral with a certificate.

    ``f`` is a callable on (N, d) arrays or a GridFunction; ``L`` defaults
    to ``f.support_radius``.  The certified bound is
    (eps/2) sup|f| + M_tau (sqrt(d)/2^n) ||f||_1, and with ``check`` the
    empirical sup of |F - h_n| over the probe set is asserted against it.
    """
    if L is None:
        L = getattr(f, "support_radius", None)
        if L is None:
            raise ArgumentError("the ball radius L is required")
    d = dim or getattr(f, "dim", None) or (mu.points.shape[1] if mu.kind == "atomic" else 1)
    if not tau > 0 or not eps > 0:
        raise ArgumentError("tau and eps must be positive")
    fun = _as_callable(f, d)
    M = lipschitz
    if M is None:
        M = g.lipschitz(tau, L) if g.lipschitz is not None else estimate_lipschitz(g, L, tau, d, seed)
    if M is None or not math.isfinite(M):
        raise KernelContractError("no derivative bound is available for the kernel")

    def gap_for(level):
        cov = build_cover(L, level, d)
        if mu.kind == "atomic":
            C, A, sup, gap, gap_abs = _atomic_masses(fun, mu, cov, L)
            return cov, (C, A, sup), gap, gap_abs
        gap, gap_abs, _ = _gap_masses(fun, mu, cov, L)
        return cov, None, gap, gap_abs

    cover, pre, gap, gap_abs = gap_for(n)
    if gap >= eps / 2:
        minimal = None
        for trial in range(n + 1, 40):
            try:
                _, _, trial_gap, _ = gap_for(trial)
            except ArgumentError:
                break
            if trial_gap < eps / 2:
                minimal = trial
                break
        raise LevelTooCoarse(
            f"mu(B \\ A^{n}) = {gap:.3e} is not below eps/2 = {eps / 2:.3e}; "
            f"minimal adequate level: {minimal}", n, minimal)

    if pre is None:
        C, A, sup = _cube_masses(fun, mu, cover)
    else:
        C, A, sup = pre
    mass = math.fsum(A.tolist()) + gap_abs
    diameter = math.sqrt(d) * 2.0 ** (-n)
    certified = 0.5 * eps * sup + M * diameter * mass
    w = NodeWeights(cover.corners.astype(float), C, n, float(tau), float(certified),
                    float(mass), float(L),
                    {"deficit": gap, "M_tau": float(M), "diameter": diameter,
                     "l1_norm": mass, "sup_f": sup, "eps": float(eps)})
    if not check or C.size == 0:
        w.empirical_error = 0.0 if C.size == 0 and sup == 0 else None
        return w

    Lam = probe_set(tau, g.lambda_dim, probes, seed)
    sample = g(cover.corners[: min(64, C.size)], Lam[:64])
    if g.bounded and float(np.abs(sample).max()) > 1.0 + 1e-12:
        raise KernelContractError("kernel exceeds 1 in modulus on the probe set")
    h = evaluate_nodes(w, g, Lam)
    F = _oracle(fun, mu, g, L, d, n, Lam)
    w.empirical_error = float(np.abs(F - h).max())
    far = Lam * 100.0
    w.sup_check = float(max(np.abs(h).max(), np.abs(evaluate_nodes(w, g, far)).max()))
    if w.empirical_error > certified:
        raise CertificationError(
            f"empirical error {w.empirical_error:.3e} exceeds certified {certified:.3e}",
            "dyadic", empirical=w.empirical_error, certified=certified)
    if w.sup_check > mass * (1 + 1e-12):
        raise CertificationError("node sum exceeds the mass bound", "sup",
                                 observed=w.sup_check, bound=mass)
    return w
