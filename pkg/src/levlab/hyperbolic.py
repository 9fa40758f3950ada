"""Real hyperbolic space H^d: spherical functions, Plancherel density,
spherical and Abel transforms of K-biinvariant functions, heat kernel.

A K-biinvariant function is a function of the geodesic radius t >= 0.
Measure and normalisation:

* volume density J(t) = |S^{d-1}| sinh(t)^(d-1),
* |c(lam)|^-2 = |S^{d-1}| (2 pi)^-d |Gamma(i lam + rho) / Gamma(i lam)|^2,
* fhat(lam) = int f(t) phi_{-lam}(t) J(t) dt,
  f(t) = int_0^inf fhat(lam) phi_lam(t) |c(lam)|^-2 dlam.

For d = 3 the density is lam^2 / (2 pi^2) and phi_lam(t) = sin(lam t)/(lam sinh t).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import make_interp_spline
from scipy.fft import dct
from scipy.special import gammaln, loggamma, roots_jacobi, roots_legendre

from ._common import (SUPPORT_TOL, ArgumentError, CertificationError,
                      PrecisionError, SupportError, TruncationError,
                      gauss_legendre_panels, sphere_area, trapezoid_weights,
                      uniform_step)
from .euclid import EvenProfile

TAIL_TOL = 1e-10
PHI_TOL = 1e-12


@dataclass(frozen=True)
class HyperbolicModel:
    """H^d with root multiplicity d-1 and rho = (d-1)/2."""

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ArgumentError("hyperbolic dimension must be an integer >= 2")

    @classmethod
    def parse(cls, name: str) -> "HyperbolicModel":
        text = name.strip().upper()
        if not text.startswith("H") or not text[1:].isdigit():
            raise ArgumentError(f"unknown space {name!r}; expected H2, H3, ...")
        return cls(int(text[1:]))

    @property
    def m_alpha(self) -> int:
        return self.d - 1

    @property
    def rho(self) -> float:
        return 0.5 * (self.d - 1)

    @property
    def weyl_order(self) -> int:
        return 2

    @property
    def dim_n(self) -> int:
        return self.d - 1

    @property
    def alpha(self) -> float:
        """Jacobi parameter (d-3)/2 of the Mehler representation."""
        return 0.5 * (self.d - 3)

    @property
    def c_norm(self) -> float:
        return sphere_area(self.d)

    @property
    def kappa(self) -> float:
        return sphere_area(self.d) / (2 * math.pi) ** self.d

    @property
    def mehler_const(self) -> float:
        """Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)), normalising phi at the origin."""
        return math.exp(gammaln(0.5 * self.d) - 0.5 * math.log(math.pi)
                        - gammaln(0.5 * (self.d - 1)))

    def J(self, t):
        return VolumeDensity(self)(t)

    def __str__(self):
        return f"H{self.d}"


@dataclass(frozen=True)
class VolumeDensity:
    model: HyperbolicModel

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.model.c_norm * np.sinh(np.abs(t)) ** (self.model.d - 1)


def plancherel_density(model: HyperbolicModel, lam) -> np.ndarray:
    """|c(lam)|^-2 extended by 0 at lam = 0 (it vanishes there for d >= 2)."""
    lam = np.abs(np.asarray(lam, dtype=float))
    safe = np.where(lam > 0, lam, 1.0)
    ratio = loggamma(1j * safe + model.rho) - loggamma(1j * safe)
    return np.where(lam > 0, model.kappa * np.exp(2.0 * ratio.real), 0.0)


def c_density(model: HyperbolicModel, lam):
    """The Plancherel density |c(lam)|^-2 for lam > 0."""
    arr = np.asarray(lam, dtype=float)
    if np.any(~(arr > 0)):
        raise ArgumentError("c_density needs lambda > 0")
    out = plancherel_density(model, arr)
    return float(out) if np.ndim(lam) == 0 else out


# ------------------------------------------------------- spherical functions

def _sinhc(x):
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    big = np.abs(x) > 1e-6
    out[big] = np.sinh(x[big]) / x[big]
    small = ~big
    out[small] = 1.0 + x[small] ** 2 / 6.0
    return out


@lru_cache(maxsize=64)
def _jacobi(n: int, a: float):
    x, w = roots_jacobi(n, a, a)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def _mehler_rule(key: tuple, a: float):
    """Nodes and weights for int_{-1}^{1} g(x) (1 - x^2)^a dx.

    ``("gauss", n)`` is n-point Gauss-Jacobi; ``("panel", P)`` splits [-1, 1]
    into P panels of 32-point Gauss-Legendre, with Gauss-Jacobi(a, 0) rules
    on the two end panels carrying the endpoint factor. The panel form avoids
    computing very large Gauss-Jacobi rules.
    """
    kind, n = key
    if kind == "gauss":
        return _jacobi(n, a)
    y, wy = roots_legendre(32)
    yj, wj = roots_jacobi(32, a, 0.0)
    hw = 1.0 / n
    mids = -1.0 + hw * (2 * np.arange(n) + 1)
    xs, ws = [], []
    for k, m in enumerate(mids):
        if k == n - 1:
            x = m + hw * yj
            w = hw ** (a + 1) * wj * (1 + x) ** a
        elif k == 0:
            x = m - hw * yj[::-1]
            w = hw ** (a + 1) * wj[::-1] * (1 - x) ** a
        else:
            x = m + hw * y
            w = hw * wy * (1 - x * x) ** a
        xs.append(x)
        ws.append(w)
    x, w = np.concatenate(xs), np.concatenate(ws)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _rule_key(reach: float) -> tuple:
    """Quadrature size for e^{i reach x}: Gauss-Jacobi up to 512 nodes, then
    panels with at most 12 radians of phase per half-width."""
    n = 1 << math.ceil(math.log2(0.75 * reach + 48))
    if n <= 512:
        return ("gauss", max(64, n))
    return ("panel", 1 << math.ceil(math.log2(reach / 12.0)))


def _mehler_weight(model, t, x):
    """c_d (t/sinh t)^(d-2) S(t,x)^alpha on the Jacobi nodes x (t broadcast)."""
    a = model.alpha
    t = np.asarray(t, dtype=float)[..., None]
    S = _sinhc(0.5 * t * (1 + x)) * _sinhc(0.5 * t * (1 - x))
    return model.mehler_const * _sinhc(t) ** (2 - model.d) * S**a


def _phi_mehler(model, lam, t, n):
    x, w = _jacobi(n, model.alpha)
    weight = _mehler_weight(model, t, x) * w
    phase = np.exp(-1j * (lam * t)[..., None] * x)
    return np.sum(weight * phase, axis=-1)


def _phi_closed3(lam, t):
    lam = np.asarray(lam, dtype=complex)
    t = np.asarray(t, dtype=float)
    lt = lam * t
    small = np.abs(lt) < 1e-8
    safe = np.where(small, 1.0, lt)
    ratio = np.where(small, 1.0 - lt**2 / 6.0, np.sin(safe) / safe)
    return ratio / _sinhc(t)


def _phi_kintegral_point(model, lam, t, tol=1e-10, max_panels=4096):
    """Adaptive Gauss-Legendre on the boundary-sphere angle theta in [0, pi]."""
    if t == 0:
        return 1.0 + 0j, 0.0
    expo = -(1j * lam + model.rho)
    ch, sh = math.cosh(t), math.sinh(t)
    c = model.mehler_const

    def rule(panels):
        th, w = gauss_legendre_panels(0.0, math.pi, panels, 16)
        base = ch - sh * np.cos(th)
        return c * np.sum(w * np.exp(expo * np.log(base)) * np.sin(th) ** (model.d - 2))

    panels = 8
    prev = rule(panels)
    while panels < max_panels:
        panels *= 2
        cur = rule(panels)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)):
            return cur, err
        prev = cur
    return cur, err


def phi_lambda(model: HyperbolicModel, lam, t, method: str = "auto",
               tol: float = PHI_TOL):
    """Elementary spherical function phi_lam(a_t); broadcasts over lam and t.

    ``method``: ``auto`` (closed form for d = 3, else Mehler), ``closed``,
    ``mehler`` (Gauss-Jacobi with node doubling) or ``kintegral`` (adaptive
    quadrature of the defining integral over the boundary sphere).
    """
    lam_arr = np.asarray(lam, dtype=complex)
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ArgumentError("phi_lambda needs t >= 0")
    lam_b, t_b = np.broadcast_arrays(lam_arr, t_arr)
    scalar = lam_b.ndim == 0
    if method == "auto":
        method = "closed" if model.d == 3 else "mehler"
    if method == "closed":
        if model.d != 3:
            raise ArgumentError("closed form is only available for d = 3")
        out = _phi_closed3(lam_b, t_b)
    elif method == "mehler":
        out = _phi_mehler_checked(model, lam_b, t_b, tol)
    elif method == "kintegral":
        out = np.empty(lam_b.shape, dtype=complex)
        worst = 0.0
        for idx in np.ndindex(lam_b.shape):
            val, err = _phi_kintegral_point(model, complex(lam_b[idx]), float(t_b[idx]))
            out[idx] = val
            worst = max(worst, err / max(1.0, abs(val)))
        if worst > 1e-9:
            raise PrecisionError("boundary-sphere quadrature did not converge", worst)
    else:
        raise ArgumentError(f"unknown method {method!r}")
    return complex(out) if scalar else out


def _phi_mehler_checked(model, lam, t, tol):
    flat_l, flat_t = lam.ravel(), t.ravel()
    out = np.empty(flat_l.size, dtype=complex)
    reach = np.abs(flat_l.real) * flat_t
    # group by oscillation count so each group gets an adequate node count
    order = np.argsort(reach, kind="stable")
    start = 0
    while start < order.size:
        n = max(32, 1 << math.ceil(math.log2(0.6 * reach[order[start]] + 32)))
        stop = start
        while stop < order.size and 0.6 * reach[order[stop]] + 32 <= n:
            stop += 1
        stop = max(stop, start + 1)
        sel = order[start:stop]
        a = _phi_mehler(model, flat_l[sel], flat_t[sel], n)
        b = _phi_mehler(model, flat_l[sel], flat_t[sel], 2 * n)
        err = float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))
        if err > max(tol, 1e-9):
            raise PrecisionError("Mehler quadrature did not converge", err)
        out[sel] = b
        start = stop
    return out.reshape(lam.shape)


def phi_table(model: HyperbolicModel, lam, t, method="auto") -> np.ndarray:
    """phi_lam(t) as a (len(lam), len(t)) matrix."""
    lam = np.asarray(lam, dtype=complex).ravel()
    t = np.asarray(t, dtype=float).ravel()
    return np.asarray(phi_lambda(model, lam[:, None], t[None, :], method))


# ----------------------------------------------------------------- carriers

class BiinvariantFunction:
    """f(t) on a uniform radial grid t_i = i h over [0, T]."""

    def __init__(self, model, t, values, support=None, meta=None):
        self.model = model
        t = np.asarray(t, dtype=float)
        if t[0] != 0.0:
            raise ArgumentError("radial grid must start at 0")
        self.step = uniform_step(t, "t grid")
        vals = np.asarray(values, dtype=complex)
        if vals.shape != t.shape or not np.all(np.isfinite(vals)):
            raise ArgumentError("values must be finite, one per radius")
        if support is not None and support > t[-1] + 1e-12:
            raise ArgumentError("declared support exceeds the grid")
        self.t = t
        self.values = vals
        self.t.setflags(write=False)
        self.values.setflags(write=False)
        self.support = None if support is None else float(support)
        self.meta = dict(meta or {})

    @classmethod
    def sample(cls, model, func, T, n, support=None):
        t = np.linspace(0.0, T, n + 1)
        return cls(model, t, func(t), support)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    def radii(self):
        return self.t

    def sup(self) -> float:
        return float(np.abs(self.values).max())

    def support_hull(self, tol=0.0):
        """Smallest [a, b] outside which |f| <= tol * sup (grid resolution)."""
        mag = np.abs(self.values)
        big = np.nonzero(mag > tol * mag.max())[0] if mag.max() > 0 else []
        if len(big) == 0:
            return 0.0, 0.0
        lo = max(big[0] - 1, 0)
        hi = min(big[-1] + 1, self.t.size - 1)
        return float(self.t[lo]), float(self.t[hi])

    def effective_support(self, tol=SUPPORT_TOL) -> float:
        return self.support_hull(tol)[1] if self.sup() > 0 else 0.0

    def l1_mass(self) -> float:
        return radial_integral(self.model, self.t, np.abs(self.values))

    def to_csv(self) -> str:
        rows = ["t,re,im"] + [f"{t!r},{v.real!r},{v.imag!r}"
                              for t, v in zip(self.t, self.values)]
        return "\n".join(rows) + "\n"


class SpectralFunction:
    """F(lam) on a uniform grid over [0, Lambda], with |c(lam)|^-2 attached."""

    def __init__(self, model, lam, values, meta=None):
        self.model = model
        lam = np.asarray(lam, dtype=float)
        if lam[0] != 0.0:
            raise ArgumentError("spectral grid must start at 0")
        self.step = uniform_step(lam, "lambda grid") if lam.size > 1 and np.allclose(
            np.diff(lam), lam[1] - lam[0], rtol=1e-9, atol=0) else None
        vals = np.asarray(values, dtype=complex)
        if vals.shape != lam.shape or not np.all(np.isfinite(vals)):
            raise ArgumentError("values must be finite, one per lambda")
        self.lam = lam
        self.values = vals
        self.density = plancherel_density(model, lam)
        for arr in (self.lam, self.values, self.density):
            arr.setflags(write=False)
        self.meta = dict(meta or {})

    @property
    def Lambda(self) -> float:
        return float(self.lam[-1])

    def radii(self):
        return self.lam

    def with_values(self, values, **meta):
        return SpectralFunction(self.model, self.lam, values, {**self.meta, **meta})

    def integral(self, integrand) -> float:
        """Trapezoid integral over [0, Lambda] (integrands here are even in lam)."""
        if self.step is None:
            raise ArgumentError("integration needs a uniform lambda grid")
        return float(np.sum(trapezoid_weights(self.lam.size, self.step) * integrand))

    def tail_ratio(self) -> float:
        g = np.abs(self.values) * self.density
        top = g.max()
        return float(g[-1] / top) if top > 0 else 0.0

    def to_csv(self) -> str:
        rows = ["lambda,re,im,density"] + [
            f"{l!r},{v.real!r},{v.imag!r},{c!r}"
            for l, v, c in zip(self.lam, self.values, self.density)]
        return "\n".join(rows) + "\n"


# --------------------------------------------------------------- quadrature

def radial_integral(model, t, integrand) -> float:
    """int_0^T integrand(t) J(t) dt on a uniform grid.

    For odd d the integrand f J extends evenly and the trapezoid rule is
    spectrally accurate; for even d it is odd at 0, so one Richardson step
    on the h / 2h trapezoid pair is applied.
    """
    t = np.asarray(t, dtype=float)
    h = t[1] - t[0]
    y = np.asarray(integrand) * model.J(t)
    coarse = None
    full = np.sum(trapezoid_weights(t.size, h) * y)
    if model.d % 2 == 0 and (t.size - 1) % 2 == 0 and t.size >= 5:
        coarse = np.sum(trapezoid_weights((t.size + 1) // 2, 2 * h) * y[::2])
        full = (4.0 * full - coarse) / 3.0
    return float(full.real) if np.isrealobj(y) else complex(full)


def _spline(x_half, y_half, k=5):
    """Even quintic spline through samples on [0, X]."""
    x = np.concatenate((-x_half[:0:-1], x_half))
    y = np.concatenate((y_half[:0:-1], y_half))
    return make_interp_spline(x, y, k=k)


def abel_direct(f: BiinvariantFunction, s=None) -> np.ndarray:
    """A f(s) = |S^{d-1}| c_d 2^alpha int_{|s|}^inf f(t) (cosh t - cosh s)^alpha sinh t dt.

    Evaluated with t = |s| + w^2, which removes the endpoint singularity,
    and composite Gauss-Legendre in w on a quintic spline of f.
    """
    model = f.model
    s_arr = np.abs(f.t if s is None else np.asarray(s, dtype=float))
    re = _spline(f.t, f.values.real)
    im = _spline(f.t, f.values.imag) if np.any(f.values.imag) else None
    a, b = f.support_hull()
    out = np.zeros(s_arr.size, dtype=complex)
    alpha = model.alpha
    const = sphere_area(model.d) * model.mehler_const * 2.0**alpha
    if b <= 0:
        return out
    for j, sj in enumerate(s_arr):
        if sj >= b:
            continue
        lo, hi = math.sqrt(max(a - sj, 0.0)), math.sqrt(b - sj)
        panels = max(16, math.ceil((b - max(a, sj)) / (4 * f.step)))
        w, wt = gauss_legendre_panels(lo, hi, panels, 16)
        tt = sj + w * w
        gap = 2.0 * np.sinh(sj + 0.5 * w * w) * np.sinh(0.5 * w * w)
        kern = np.where(gap > 0, gap, 1.0) ** alpha * np.sinh(tt) * 2.0 * w
        kern = np.where(gap > 0, kern, 0.0)
        vals = re(tt) if im is None else re(tt) + 1j * im(tt)
        out[j] = np.sum(wt * kern * vals)
    return const * out


def _dct_size(dx: float, dy: float) -> int | None:
    ratio = math.pi / (dx * dy)
    N = round(ratio)
    return N if N > 0 and abs(ratio - N) < 1e-9 * ratio else None


def _cosine_sum(x, y, freqs, weights, chunk=1024):
    """sum_j weights_j y_j cos(freq_k x_j) for every k.

    When both grids are uniform from 0 with dx * dfreq = pi / N this is a
    zero-padded DCT-I, otherwise a chunked direct sum.
    """
    x = np.asarray(x, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    wy = weights * y
    if x.size > 1 and freqs.size > 1 and x[0] == 0 and freqs[0] == 0:
        dx, df = x[1] - x[0], freqs[1] - freqs[0]
        N = _dct_size(dx, df)
        if (N is not None and N >= max(x.size, freqs.size) - 1
                and np.allclose(np.diff(x), dx, rtol=1e-9, atol=0)
                and np.allclose(np.diff(freqs), df, rtol=1e-9, atol=0)):
            coef = np.zeros(N + 1, dtype=complex)
            coef[: x.size] = wy
            coef[1:N] *= 0.5
            out = dct(coef.real, type=1)[: freqs.size].astype(complex)
            if np.any(coef.imag):
                out += 1j * dct(coef.imag, type=1)[: freqs.size]
            return out
    out = np.empty(freqs.size, dtype=complex)
    for start in range(0, freqs.size, chunk):
        out[start:start + chunk] = np.cos(np.outer(freqs[start:start + chunk], x)) @ wy
    return out


def default_lambda_step(T: float, model: HyperbolicModel | None = None) -> float:
    """Spacing of auto lambda grids.

    pi / (2T) keeps aliased images out of [-T, T].  For even d the density
    has poles at distance 1/2 from the real axis, so the trapezoid error is
    about exp(-pi / dlam) and the spacing is capped at 0.1.
    """
    step = math.pi / (2.0 * T)
    if model is not None and model.d % 2 == 0:
        step = min(step, 0.1)
    return step


def choose_lambda_max(model, lam, values, tail_tol=TAIL_TOL):
    """Index at which the spectral tail rule is met (or the noise-floor minimum)."""
    g = np.abs(values) * plancherel_density(model, lam)
    top = g.max()
    if top == 0:
        return lam.size - 1, 0.0, False
    suffix = np.maximum.accumulate(g[::-1])[::-1] / top
    ok = np.nonzero(suffix < tail_tol)[0]
    if ok.size:
        return int(max(ok[0], 1)), float(suffix[ok[0]]), False
    k = int(np.argmin(suffix[1:]) + 1)
    return k, float(suffix[k]), True


def sft_forward(f: BiinvariantFunction, lam=None, method: str = "abel",
                tail_tol: float = TAIL_TOL, strict: bool = False) -> SpectralFunction:
    """Spherical transform fhat(lam) = int f(t) phi_{-lam}(t) J(t) dt.

    ``abel`` (default) evaluates the same integral as a cosine transform of
    the directly computed Abel transform; ``direct`` sums phi tables.
    Without ``lam`` a grid is chosen up to the t-grid Nyquist frequency and
    cut where the tail rule |fhat| |c|^-2 < tail_tol * max is met; otherwise
    the cut is placed at the noise floor and flagged as truncated.
    """
    auto = lam is None
    if auto:
        dl = default_lambda_step(f.T, f.model)
        top = 0.95 * math.pi / f.step
        lam = np.arange(0.0, top + 0.5 * dl, dl)
    lam = np.asarray(lam, dtype=float)
    if method == "abel":
        A = abel_direct(f)
        vals = _cosine_sum(f.t, A, lam, 2.0 * trapezoid_weights(f.t.size, f.step))
    elif method == "direct":
        table = phi_table(f.model, lam, f.t)
        vals = np.array([radial_integral(f.model, f.t, row * f.values) for row in table])
    else:
        raise ArgumentError(f"unknown method {method!r}")
    if np.all(np.isreal(f.values)):
        vals = vals.real.astype(complex)
    meta = {"method": method}
    if auto:
        k, ratio, truncated = choose_lambda_max(f.model, lam, vals, tail_tol)
        lam, vals = lam[: k + 1], vals[: k + 1]
        meta.update(tail_ratio=ratio, truncated=truncated, tail_tol=tail_tol)
        if truncated and strict:
            raise TruncationError(f"spectral tail only reaches {ratio:.2e}")
    out = SpectralFunction(f.model, lam, vals, meta)
    if "tail_ratio" not in meta:
        out.meta.update(tail_ratio=out.tail_ratio(), truncated=out.tail_ratio() > tail_tol)
    return out


def sft_inverse(F: SpectralFunction, t=None, T: float | None = None, n: int | None = None,
                tail_tol: float = TAIL_TOL, strict: bool = False,
                support: float | None = None) -> BiinvariantFunction:
    """f(t) = int_0^Lambda F(lam) phi_lam(t) |c(lam)|^-2 dlam.

    The lam-integral is taken first: G(s) = int F |c|^-2 cos(lam s) dlam is
    tabulated and splined, then integrated against the Gauss-Jacobi Mehler
    kernel for each t.
    """
    model = F.model
    if t is None:
        T = T or 2.0
        n = n or 1000
        t = np.linspace(0.0, T, n + 1)
    t = np.asarray(t, dtype=float)
    ratio = F.tail_ratio()
    truncated = ratio > tail_tol
    if truncated and strict:
        raise TruncationError(f"spectral tail ratio {ratio:.2e} exceeds {tail_tol:.0e}")
    Tmax = float(t[-1])
    if F.step is None:
        raise ArgumentError("inversion needs a uniform lambda grid")
    hs = min(t[1] - t[0], math.pi / (4.0 * max(F.Lambda, 1.0)))
    ns = max(64, math.ceil(Tmax / hs))
    if F.step * Tmax < math.pi:
        # align the s grid with the lambda grid so the cosine sum is a DCT
        N = max(F.lam.size - 1, math.ceil(math.pi / (F.step * hs)))
        hs = math.pi / (N * F.step)
        ns = max(ns, math.ceil(Tmax / hs))
        if ns > N:
            ns = N
    s = np.arange(ns + 1) * hs if F.step * Tmax < math.pi else np.linspace(0.0, Tmax, ns + 1)
    G = _cosine_sum(F.lam, F.values, s, trapezoid_weights(F.lam.size, F.step) * F.density)
    re = _spline(s, G.real)
    im = _spline(s, G.imag) if np.any(G.imag) else None
    out = np.empty(t.size, dtype=complex)
    keys = [_rule_key(F.Lambda * ti) for ti in t]
    for key in sorted(set(keys)):
        sel = np.array([i for i, k in enumerate(keys) if k == key])
        x, w = _mehler_rule(key, model.alpha)
        rows = max(1, 2_000_000 // x.size)
        for start in range(0, sel.size, rows):
            part = sel[start:start + rows]
            weight = _mehler_weight(model, t[part], x) * w
            pts = t[part][:, None] * x[None, :]
            vals = re(pts) if im is None else re(pts) + 1j * im(pts)
            out[part] = np.sum(weight * vals, axis=1)
    if np.all(np.isreal(F.values)):
        out = out.real.astype(complex)
    return BiinvariantFunction(model, t, out, support=support,
                               meta={"tail_ratio": ratio, "truncated": bool(truncated)})


def plancherel_sides(f: BiinvariantFunction, F: SpectralFunction):
    """(int |f|^2 J dt, int |F|^2 |c|^-2 dlam)."""
    lhs = radial_integral(f.model, f.t, np.abs(f.values) ** 2)
    rhs = F.integral(np.abs(F.values) ** 2 * F.density)
    return lhs, rhs


# --------------------------------------------------------------------- Abel

def abel_forward(f: BiinvariantFunction, method: str = "spectral",
                 lam=None) -> EvenProfile:
    """Abel transform as an even profile on [-T, T].

    ``spectral`` inverts the 1-D cosine transform of fhat (F(A f) = fhat);
    ``direct`` evaluates the kernel integral.
    """
    if f.support is None:
        raise SupportError("abel_forward needs a declared support")
    if method == "direct":
        return EvenProfile.from_half(f.t, abel_direct(f))
    if method != "spectral":
        raise ArgumentError(f"unknown method {method!r}")
    F = sft_forward(f, lam)
    w = trapezoid_weights(F.lam.size, F.step) / math.pi
    g = _cosine_sum(F.lam, F.values, f.t, w)
    if np.all(np.isreal(f.values)):
        g = g.real.astype(complex)
    return EvenProfile.from_half(f.t, g)


def even_fourier(g: EvenProfile, lam) -> np.ndarray:
    """F_1 g(lam) for an even profile (trapezoid cosine sum)."""
    s, v = g.half
    return _cosine_sum(s, v, np.asarray(lam, dtype=float),
                       2.0 * trapezoid_weights(s.size, g.step))


def abel_inverse(g: EvenProfile, model: HyperbolicModel, L: float | None = None,
                 tol: float = SUPPORT_TOL, t=None) -> BiinvariantFunction:
    """The K-biinvariant f with A f = g: f = sft_inverse(F_1 g), support-certified.

    ``t`` is the output radial grid (default: the profile's half grid).
    """
    s, v = g.half
    scale = float(np.abs(v).max())
    if L is None:
        L = g.effective_support(tol)
    beyond = s > L + 1e-12
    if scale > 0 and np.any(beyond) and np.abs(v[beyond]).max() > tol * scale:
        raise SupportError(f"profile is not supported in [-{L}, {L}]")
    if scale == 0:
        return BiinvariantFunction(model, s, np.zeros(s.size), support=L)
    dl = default_lambda_step(g.R, model)
    lam = np.arange(0.0, 0.95 * math.pi / g.step + 0.5 * dl, dl)
    vals = even_fourier(g, lam)
    if np.all(np.isreal(v)):
        vals = vals.real.astype(complex)
    k, ratio, truncated = choose_lambda_max(model, lam, vals)
    F = SpectralFunction(model, lam[: k + 1], vals[: k + 1],
                         {"tail_ratio": ratio, "truncated": truncated})
    f = sft_inverse(F, s if t is None else np.asarray(t, dtype=float), support=L)
    reach = f.effective_support(max(tol, 10 * ratio))
    if reach > L + max(g.step, f.step) + 1e-12:
        raise CertificationError(f"reconstruction leaks to t = {reach:.6g} > {L}",
                                 "support", radius=reach, bound=L)
    f.meta.update(F.meta)
    return f


# --------------------------------------------------------------------- heat

def heat_hat(model: HyperbolicModel, t: float, lam) -> SpectralFunction:
    """The heat multiplier exp(-t (lam^2 + rho^2)) on the given grid."""
    if not t > 0:
        raise ArgumentError("heat time must be positive")
    lam = np.asarray(lam, dtype=float)
    return SpectralFunction(model, lam, np.exp(-t * (lam**2 + model.rho**2)),
                            {"kind": "heat", "time": float(t)})


def heat_kernel(model: HyperbolicModel, t: float, T: float | None = None,
                n: int | None = None) -> BiinvariantFunction:
    """h_t on [0, T] by spectral inversion of the heat multiplier."""
    T = T or max(6.0, 2.0 * model.rho * t + 10.0 * math.sqrt(t) + 2.0)
    n = n or int(200 * T)
    top = math.sqrt(40.0 / t)
    lam = np.linspace(0.0, top, max(2001, int(top / default_lambda_step(2 * T, model)) + 1))
    return sft_inverse(heat_hat(model, t, lam), np.linspace(0.0, T, n + 1))


def convolve_spectral(F: SpectralFunction, phi_hat: SpectralFunction) -> SpectralFunction:
    """(f * phi)^ = fhat phihat on a shared grid."""
    if F.model != phi_hat.model:
        raise ArgumentError("spectral functions live on different spaces")
    if F.lam.shape != phi_hat.lam.shape or not np.array_equal(F.lam, phi_hat.lam):
        raise ArgumentError("spectral grids differ")
    return F.with_values(F.values * phi_hat.values, product=True)


def heat_apply(f: BiinvariantFunction, t: float, lam=None) -> BiinvariantFunction:
    F = sft_forward(f, lam)
    return sft_inverse(convolve_spectral(F, heat_hat(f.model, t, F.lam)), f.t)


# ----------------------------------------------------------- Paley-Wiener

def spherical_transform_imag(f: BiinvariantFunction, mus) -> np.ndarray:
    """fhat(i mu) = int f phi_{i mu} J dt (phi real and positive there)."""
    mus = np.asarray(mus, dtype=float)
    table = phi_table(f.model, 1j * mus, f.t, method="mehler").real
    return np.array([radial_integral(f.model, f.t, row * f.values.real) for row in table])


@dataclass
class PaleyWienerReport:
    L: float
    mus: np.ndarray
    values: np.ndarray
    fitted: np.ndarray
    spread: float
    stable: bool
    extras: dict = field(default_factory=dict)


def paley_wiener_check(f: BiinvariantFunction, L: float, mus=None,
                       spread_tol: float = 0.10) -> PaleyWienerReport:
    """Fit C in |fhat(i mu)| <= C exp(L mu) on growing windows [0, mu_k].

    C_k is the sup of |fhat(i mu)| exp(-L mu) over the k-th window; the
    bound is consistent with support in [0, L] when the C_k spread stays
    within ``spread_tol``.
    """
    mus = np.linspace(0.0, 2.0, 21) if mus is None else np.asarray(mus, float)
    vals = spherical_transform_imag(f, mus)
    ratio = np.abs(vals) * np.exp(-L * mus)
    fitted = np.maximum.accumulate(ratio)[1:]
    spread = float(fitted.max() / fitted.min() - 1.0) if fitted.min() > 0 else math.inf
    return PaleyWienerReport(float(L), mus, vals, fitted, spread, spread <= spread_tol)
