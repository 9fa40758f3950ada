"""Fourier analysis on R^d: grid transforms, radial Radon transform, spans.

Conventions: the forward transform has kernel exp(-i x.xi) and no prefactor;
the inverse carries (2 pi)^-d.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import bernoulli, jv, spherical_jn

from ._common import (SUPPORT_TOL, ArgumentError, CertificationError,
                      RepresentationError, SupportError, SymmetryError,
                      complex_pairs, from_pairs,
                      sphere_area, trapezoid_weights, uniform_step)
from .weights import WeightFunction, psi_norm

# relative size allowed at the edge of a frequency box before inversion
FREQ_DECAY_TOL = 1e-6


def _frozen(values, dtype=complex):
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


class GridFunction:
    """Complex samples on a uniform tensor grid (endpoints included)."""

    def __init__(self, dim, box, shape, values, support_radius=None, dual=None):
        self.dim = int(dim)
        self.box = tuple((float(lo), float(hi)) for lo, hi in box)
        self.shape = tuple(int(n) for n in shape)
        if self.dim < 1 or len(self.box) != self.dim or len(self.shape) != self.dim:
            raise RepresentationError("box and shape must have one entry per axis")
        if any(not lo < hi for lo, hi in self.box):
            raise RepresentationError("degenerate box")
        if any(n < 2 for n in self.shape):
            raise RepresentationError("each axis needs at least two samples")
        vals = np.asarray(values, dtype=complex)
        if vals.size != math.prod(self.shape):
            raise RepresentationError("values do not match the grid shape")
        if not np.all(np.isfinite(vals)):
            raise RepresentationError("grid values must be finite")
        self.values = _frozen(vals.reshape(self.shape))
        self.support_radius = None if support_radius is None else float(support_radius)
        # (box, shape) of the grid this function was transformed from
        self.dual = dual

    @classmethod
    def sample(cls, func, box, shape, support_radius=None):
        """Evaluate ``func(*coords)`` on the grid (coords broadcast with ij indexing)."""
        probe = cls(len(box), box, shape, np.zeros(math.prod(shape)))
        return cls(probe.dim, probe.box, probe.shape, func(*probe.mesh()),
                   support_radius=support_radius)

    def axes(self):
        return [np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.shape)]

    def steps(self):
        return [(hi - lo) / (n - 1) for (lo, hi), n in zip(self.box, self.shape)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def radii(self):
        return np.sqrt(sum(x**2 for x in self.mesh()))

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def boundary_max(self) -> float:
        v = np.abs(self.values)
        edge = 0.0
        for ax in range(self.dim):
            edge = max(edge, float(np.take(v, 0, axis=ax).max()),
                       float(np.take(v, -1, axis=ax).max()))
        return edge

    def check_support(self, tol=SUPPORT_TOL):
        if self.support_radius is None:
            return
        outside = self.radii() > self.support_radius
        if np.any(outside):
            leak = float(np.abs(self.values[outside]).max())
            if leak > tol * max(self.sup(), 1e-300):
                raise SupportError(
                    f"samples beyond radius {self.support_radius} reach {leak:.3e}")

    def with_values(self, values, **kw):
        kw.setdefault("support_radius", self.support_radius)
        kw.setdefault("dual", self.dual)
        return GridFunction(self.dim, self.box, self.shape, values, **kw)

    def to_dict(self) -> dict:
        out = {"dim": self.dim, "box": [list(b) for b in self.box],
               "shape": list(self.shape), "values": complex_pairs(self.values)}
        if self.support_radius is not None:
            out["support_radius"] = self.support_radius
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "GridFunction":
        return cls(data["dim"], data["box"], data["shape"],
                   from_pairs(data["values"]), data.get("support_radius"))

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        return cls.from_dict(json.loads(text))


class RadialProfile:
    """A radial function on R^dim sampled on a uniform grid r_i = i h over [0, R]."""

    def __init__(self, dim, radii, values, support=None):
        self.dim = int(dim)
        self.radii = _frozen(radii, float)
        if self.dim < 1:
            raise RepresentationError("dimension must be positive")
        if self.radii[0] != 0.0:
            raise RepresentationError("radii must start at 0")
        self.step = uniform_step(self.radii, "radii")
        vals = np.asarray(values, dtype=complex)
        if vals.shape != self.radii.shape or not np.all(np.isfinite(vals)):
            raise RepresentationError("profile values must be finite, one per radius")
        self.values = _frozen(vals)
        self.support = None if support is None else float(support)

    @classmethod
    def sample(cls, func, dim, R, n, support=None):
        r = np.linspace(0.0, R, n + 1)
        return cls(dim, r, func(r), support)

    @property
    def R(self) -> float:
        return float(self.radii[-1])

    def effective_support(self, tol=SUPPORT_TOL) -> float:
        mag = np.abs(self.values)
        big = np.nonzero(mag > tol * max(mag.max(), 1e-300))[0]
        return float(self.radii[big[-1]]) if big.size else 0.0

    def to_csv(self) -> str:
        rows = ["r,re,im"] + [f"{r!r},{v.real!r},{v.imag!r}"
                              for r, v in zip(self.radii, self.values)]
        return "\n".join(rows) + "\n"


class EvenProfile:
    """An even function on a symmetric uniform grid over [-R, R].

    Values are validated to be even within ``tol`` (relative to sup) and then
    symmetrised, so g(-s) == g(s) holds bitwise.
    """

    def __init__(self, s, values, tol=1e-10):
        s = np.asarray(s, dtype=float)
        self.step = uniform_step(s, "s grid")
        if s.size % 2 == 0 or np.max(np.abs(s + s[::-1])) > 1e-12 * max(1.0, s[-1]):
            raise RepresentationError("even profiles need an odd symmetric grid")
        vals = np.asarray(values, dtype=complex)
        if vals.shape != s.shape or not np.all(np.isfinite(vals)):
            raise RepresentationError("profile values must be finite, one per node")
        scale = max(float(np.abs(vals).max()), 1e-300)
        gap = float(np.abs(vals - vals[::-1]).max())
        if gap > tol * scale:
            raise SymmetryError(f"profile is not even: asymmetry {gap:.3e}")
        mid = s.size // 2
        half = 0.5 * (vals[mid:] + vals[mid::-1])
        pos = np.abs(s[mid:])
        pos[0] = 0.0
        self.s = _frozen(np.concatenate((-pos[:0:-1], pos)), float)
        self.values = _frozen(np.concatenate((half[::-1], half[1:])))

    @classmethod
    def from_half(cls, s_half, values_half):
        s_half = np.asarray(s_half, dtype=float)
        v = np.asarray(values_half, dtype=complex)
        return cls(np.concatenate((-s_half[:0:-1], s_half)),
                   np.concatenate((v[:0:-1], v)))

    @property
    def half(self):
        mid = self.s.size // 2
        return self.s[mid:], self.values[mid:]

    @property
    def R(self) -> float:
        return float(self.s[-1])

    def effective_support(self, tol=SUPPORT_TOL) -> float:
        s, v = self.half
        mag = np.abs(v)
        big = np.nonzero(mag > tol * max(mag.max(), 1e-300))[0]
        return float(s[big[-1]]) if big.size else 0.0

    def to_csv(self) -> str:
        rows = ["s,re,im"] + [f"{s!r},{v.real!r},{v.imag!r}"
                              for s, v in zip(self.s, self.values)]
        return "\n".join(rows) + "\n"


@dataclass(frozen=True)
class SpanSpec:
    """Frequencies lambda_j strictly inside the cube |lambda_i| < L/sqrt(d)."""

    L: float
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if nodes.size == 0:
            raise ArgumentError("span needs at least one node")
        if not self.L > 0:
            raise ArgumentError("L must be positive")
        half = self.L / math.sqrt(nodes.shape[1])
        if np.any(np.abs(nodes) >= half):
            raise ArgumentError("every node must lie strictly inside Q(0, L)")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def lattice(cls, L: float, per_axis: int, dim: int = 1, margin: float = 1e-9):
        """Uniform tensor lattice with ``per_axis`` nodes per coordinate."""
        half = L / math.sqrt(dim) * (1.0 - margin)
        ax = np.linspace(-half, half, per_axis)
        pts = np.stack(np.meshgrid(*[ax] * dim, indexing="ij"), -1).reshape(-1, dim)
        return cls(L, pts)


# ---------------------------------------------------------------- transforms

def _default_dual(box, shape):
    out = []
    for (lo, hi), n in zip(box, shape):
        xi = math.pi * (n - 1) / (hi - lo)
        out.append((-xi, xi))
    return tuple(out), tuple(shape)


def _separable(values, src_axes, src_weights, dst_axes, sign):
    out = values
    for ax, (x, w, xi) in enumerate(zip(src_axes, src_weights, dst_axes)):
        kernel = np.exp(sign * 1j * np.outer(xi, x)) * w[None, :]
        out = np.moveaxis(np.tensordot(kernel, out, axes=([1], [ax])), 0, ax)
    return out


def fourier_forward(f: GridFunction, freq_box=None, freq_shape=None,
                    tol=SUPPORT_TOL) -> GridFunction:
    """Trapezoid quadrature of the integral of f(x) exp(-i x.xi) dx.

    Without an explicit frequency grid the Nyquist-matched grid
    [-pi/h, pi/h] with the same sample count is used, for which the inverse
    is exact up to rounding.
    """
    f.check_support(tol)
    if f.boundary_max() > tol * max(f.sup(), 1e-300):
        raise SupportError("function does not vanish on the box boundary")
    if freq_box is None:
        freq_box, default_shape = _default_dual(f.box, f.shape)
        freq_shape = freq_shape or default_shape
    elif freq_shape is None:
        raise ArgumentError("freq_shape is required with freq_box")
    out = GridFunction(f.dim, freq_box, freq_shape, np.zeros(math.prod(freq_shape)))
    weights = [trapezoid_weights(n, h) for n, h in zip(f.shape, f.steps())]
    vals = _separable(f.values, f.axes(), weights, out.axes(), -1.0)
    return out.with_values(vals, support_radius=None, dual=(f.box, f.shape))


def fourier_inverse(F: GridFunction, box=None, shape=None,
                    tol=FREQ_DECAY_TOL) -> GridFunction:
    """(2 pi)^-d times the trapezoid sum of F(xi) exp(i x.xi)."""
    if F.boundary_max() > tol * max(F.sup(), 1e-300):
        raise SupportError("transform has not decayed at the frequency-box edge")
    if box is None:
        if F.dual is None:
            raise ArgumentError("no spatial grid given and none recorded")
        box, shape = F.dual
    out = GridFunction(F.dim, box, shape, np.zeros(math.prod(shape)))
    weights = [trapezoid_weights(n, h) for n, h in zip(F.shape, F.steps())]
    vals = _separable(F.values, F.axes(), weights, out.axes(), 1.0)
    return out.with_values(vals / (2 * math.pi) ** F.dim, dual=(F.box, F.shape))


def radial_fourier(f: RadialProfile, lambdas) -> np.ndarray:
    """F f(lambda omega) for radial f: a Hankel-type trapezoid sum in r."""
    lam = np.asarray(lambdas, dtype=float)
    d, r = f.dim, f.radii
    w = trapezoid_weights(r.size, f.step) * f.values
    if d == 1:
        return 2.0 * (np.cos(np.outer(lam, r)) @ w)
    nu = 0.5 * d - 1.0
    safe = np.where(lam > 0, lam, 1.0)
    kernel = _bessel(nu, np.outer(safe, r)) * r ** (0.5 * d)
    out = (2 * math.pi) ** (0.5 * d) * safe ** (1 - 0.5 * d) * (kernel @ w)
    origin = lam == 0
    if np.any(origin):
        out[origin] = sphere_area(d) * np.sum(w * r ** (d - 1))
    if d % 2 == 0:
        # for even d the integrand ~ f(0) r^(d-1) is odd at 0: leading
        # Euler-Maclaurin endpoint term
        out = out + bernoulli(d)[d] / d * f.step**d * sphere_area(d) * f.values[0]
    return out


def _bessel(nu: float, z: np.ndarray) -> np.ndarray:
    """J_nu(z), using spherical Bessel functions for half-integer orders."""
    n = nu - 0.5
    if n >= 0 and n == int(n):
        return np.sqrt(2.0 * z / math.pi) * spherical_jn(int(n), z)
    return jv(nu, z)


def _radon_half(f: RadialProfile, s: np.ndarray, chunk=512) -> np.ndarray:
    d, r, h = f.dim, f.radii, f.step
    # f is held constant on the centred cells [r_i - h/2, r_i + h/2] & [0, R]
    edges = np.concatenate(([0.0], r[:-1] + 0.5 * h, [r[-1]]))
    lo2, hi2 = edges[:-1] ** 2, edges[1:] ** 2
    m = 0.5 * (d - 1)
    out = np.empty(s.size, dtype=complex)
    for start in range(0, s.size, chunk):
        s2 = s[start:start + chunk, None] ** 2
        cell = (np.clip(hi2 - s2, 0.0, None) ** m
                - np.clip(lo2 - s2, 0.0, None) ** m) / (d - 1)
        out[start:start + chunk] = cell @ f.values
    return sphere_area(d - 1) * out


def radon_radial(f: RadialProfile) -> EvenProfile:
    """Hyperplane integrals s -> integral of f over {x.omega = s}.

    For radial f this is |S^{d-2}| times the integral over r > |s| of
    f(r) (r^2 - s^2)^{(d-3)/2} r dr, evaluated exactly for the cell-constant
    model of f (second-order accurate). In dimension one it is f(|s|).
    """
    s_half = np.asarray(f.radii)
    if f.dim == 1:
        return EvenProfile.from_half(s_half, f.values)
    return EvenProfile.from_half(s_half, _radon_half(f, s_half))


def _cosine_transform(g: EvenProfile, lam: np.ndarray, chunk=2048) -> np.ndarray:
    s, v = g.half
    # full symmetric trapezoid folded onto s >= 0
    wv = 2.0 * trapezoid_weights(s.size, g.step) * v
    out = np.empty(lam.size, dtype=complex)
    for start in range(0, lam.size, chunk):
        out[start:start + chunk] = np.cos(np.outer(lam[start:start + chunk], s)) @ wv
    return out


def _panel_cosine(g: EvenProfile, top: float, width_target: float, order: int = 16):
    """F_1 g at composite Gauss-Legendre nodes on [0, top], with weights.

    The panel width is set to W = pi / (N h) so that the panel offsets p W
    and the sample positions j h meet on a length-2N FFT; each of the
    ``order`` node offsets then costs one FFT.
    """
    s, v = g.half
    h = g.step
    N = max(1, math.ceil(math.pi / (h * width_target)))
    W = math.pi / (N * h)
    panels = max(1, math.ceil(top / W))
    x, wx = np.polynomial.legendre.leggauss(order)
    delta = 0.5 * W * (1.0 + x)
    wv = 2.0 * trapezoid_weights(s.size, h) * v
    idx = np.arange(s.size) % (2 * N)
    vals = np.empty((panels, order), dtype=complex)
    for m, dm in enumerate(delta):
        phase = np.exp(1j * dm * s)
        parts = []
        for comp in (wv.real, wv.imag):
            z = np.bincount(idx, weights=(comp * phase).real, minlength=2 * N) \
                + 1j * np.bincount(idx, weights=(comp * phase).imag, minlength=2 * N)
            parts.append((2 * N * np.fft.ifft(z))[:panels].real)
        vals[:, m] = parts[0] + 1j * parts[1]
    lam = (W * np.arange(panels)[:, None] + delta[None, :]).ravel()
    weights = np.tile(0.5 * W * wx, panels)
    return lam, weights, vals.ravel()


def fourier_1d_even(g: EvenProfile, lambdas) -> np.ndarray:
    """Trapezoid F_1 g on the given frequencies (g even, so a cosine sum)."""
    return _cosine_transform(g, np.asarray(lambdas, dtype=float))


def _spectral_cutoff(g: EvenProfile, rel=1e-14) -> float:
    """Smallest Lambda past which |F_1 g| stays below rel * max (Nyquist cap)."""
    nyquist = math.pi / g.step
    probe = np.linspace(0.0, nyquist, 2049)
    mag = np.abs(_cosine_transform(g, probe))
    tail = np.maximum.accumulate(mag[::-1])[::-1]
    ok = np.nonzero(tail < rel * max(mag.max(), 1e-300))[0]
    return float(probe[ok[0]]) if ok.size else nyquist


def radon_inverse_radial(g: EvenProfile, d: int, l: float, radii=None,
                         tol=SUPPORT_TOL) -> RadialProfile:
    """The radial f on R^d whose hyperplane integrals are g.

    Realised through slice projection: F_d f(lambda omega) = F_1 g(lambda),
    followed by the radial inverse transform with composite Gauss-Legendre
    quadrature in lambda.
    """
    d = int(d)
    if d < 1:
        raise ArgumentError("d must be positive")
    s_half, v_half = g.half
    scale = max(float(np.abs(v_half).max()), 1e-300)
    beyond = s_half > l + 1e-12
    if np.any(beyond) and float(np.abs(v_half[beyond]).max()) > tol * scale:
        raise SupportError(f"profile is not supported in [-{l}, {l}]")
    r = s_half if radii is None else np.asarray(radii, dtype=float)
    if d == 1:
        vals = np.interp(r, s_half, v_half.real) + 1j * np.interp(r, s_half, v_half.imag)
        return RadialProfile(1, r, vals, support=l)
    if not np.any(v_half):
        return RadialProfile(d, r, np.zeros(r.size), support=l)

    top = _spectral_cutoff(g)
    # 16-point panels resolve phase changes of a few radians exactly
    lam, w, G = _panel_cosine(g, top, 6.0 / max(r[-1], g.R, 1.0))
    G = G * w
    nu = 0.5 * d - 1.0
    out = np.empty(r.size, dtype=complex)
    for start in range(0, r.size, 256):
        rr = r[start:start + 256]
        safe = np.where(rr > 0, rr, 1.0)
        K = _bessel(nu, np.outer(safe, lam)) * lam ** (0.5 * d)
        block = (2 * math.pi) ** (-0.5 * d) * safe ** (1 - 0.5 * d) * (K @ G)
        block[rr == 0] = (2 * math.pi) ** (-d) * sphere_area(d) * np.sum(G * lam ** (d - 1))
        out[start:start + 256] = block
    f = RadialProfile(d, r, out, support=l)
    reach = f.effective_support(tol)
    cell = r[1] - r[0]
    if reach > l + cell + 1e-12:
        raise CertificationError(
            f"reconstruction leaks to radius {reach:.6g} > {l}", "support",
            radius=reach, bound=l)
    return f


def slice_projection_check(f: RadialProfile, lambdas=None) -> float:
    """sup over lambda of |F_d f(lambda omega) - F_1(radon f)(lambda)|."""
    lam = np.linspace(0.0, 20.0, 41) if lambdas is None else np.asarray(lambdas, float)
    lhs = radial_fourier(f, lam)
    rhs = _cosine_transform(radon_radial(f), lam)
    return float(np.abs(lhs - rhs).max())


# --------------------------------------------------------------- projection

@dataclass
class SpanProjection:
    coefficients: np.ndarray
    residual: float
    rank: int
    rank_deficient: bool
    iterations: int
    history: list = field(default_factory=list, repr=False)


def _lawson(A, b, weight, iterations, rcond):
    """Weighted least squares followed by Lawson reweighting toward minimax.

    Returns the coefficients with the smallest weighted sup residual seen.
    """
    m = A.shape[1]
    u = np.full(b.size, 1.0 / b.size)
    best = (math.inf, np.zeros(m, dtype=complex), m)
    history = []
    for _ in range(iterations + 1):
        s = np.sqrt(u) * weight
        coef, _, rank, _ = np.linalg.lstsq(A * s[:, None], b * s, rcond=rcond)
        err = np.abs(A @ coef - b) * weight
        sup = float(err.max())
        history.append(sup)
        if sup < best[0]:
            best = (sup, coef, int(rank))
        total = float(np.sum(u * err))
        if total <= 0:
            break
        u = u * err / total
    return best, history


def span_project(target: GridFunction, span: SpanSpec, psi: WeightFunction,
                 iterations: int = 60, rcond: float = 1e-12) -> SpanProjection:
    """Approximate ``target`` by sum_j c_j exp(i lambda_j.x) in the psi-norm.

    The reported residual is the exact grid psi-norm of the residual; the
    optimiser (least squares plus Lawson reweighting) is an implementation
    detail.
    """
    if span.nodes.shape[1] != target.dim:
        raise ArgumentError("span dimension does not match the target grid")
    X = np.stack([x.ravel() for x in target.mesh()], axis=1)
    A = np.exp(1j * X @ span.nodes.T)
    b = target.values.ravel()
    weight = np.exp(-psi(target.radii().ravel()))
    if not np.any(b):
        zero = np.zeros(span.nodes.shape[0], dtype=complex)
        return SpanProjection(zero, 0.0, int(np.linalg.matrix_rank(A * weight[:, None])),
                              False, 0, [0.0])
    (sup, coef, rank), history = _lawson(A, b, weight, iterations, rcond)
    residual = psi_norm((target.radii().ravel(), A @ coef - b), psi)
    return SpanProjection(coef, residual, rank, rank < A.shape[1],
                          len(history) - 1, history)
