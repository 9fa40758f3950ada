"""Both sides of the Levinson dichotomy, numerically.

Divergent weights: spans of spherical functions chi_x(lam) = phi_lam(x),
|x| < L, are dense in the psi-norm, which forces the L^2(|c|^-2) energy of
a transform vanishing on B(o, L) to be small relative to its weighted mass.
Convergent weights: an explicit compactly supported witness with
|fhat| <= C exp(-psi), certified numerically, on the line, on R^d (radial)
and on H^d (K-biinvariant).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dyadic, euclid, hyperbolic as hyp
from ._common import (SCHEMA_VERSION, ArgumentError, CertificationError,
                      PreconditionError, jsonable, sphere_area,
                      trapezoid_weights)
from .weights import WeightFunction, classify_levinson, psi_norm

DEFAULT_EPSILONS = (1e-1, 1e-2, 1e-3)


# ------------------------------------------------------------------ spans

@dataclass(frozen=True)
class PhiSpan:
    """Radial positions t_j in [0, L) spanning chi_{t_j}(lam) = phi_lam(t_j)."""

    model: hyp.HyperbolicModel
    L: float
    points: tuple
    coefficients: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.size == 0:
            raise ArgumentError("a span needs at least one point")
        if np.any(pts < 0) or np.any(pts >= self.L):
            raise ArgumentError("span points must lie in [0, L)")

    @classmethod
    def uniform(cls, model, L: float, count: int) -> "PhiSpan":
        """t_j = j L / count; doubling ``count`` gives nested spans."""
        return cls(model, float(L), tuple(L * j / count for j in range(count)))

    @property
    def size(self) -> int:
        return len(self.points)

    def matrix(self, lam) -> np.ndarray:
        return hyp.phi_table(self.model, lam, np.asarray(self.points)).real

    def evaluate(self, lam, coefficients=None) -> np.ndarray:
        c = self.coefficients if coefficients is None else coefficients
        return self.matrix(lam) @ np.asarray(c, dtype=complex)


@dataclass
class DensityReport:
    target_id: str
    residual: float
    node_count: int
    pipeline: str
    coefficients: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)
    converged: bool = True
    parameters: dict = field(default_factory=dict)
    chain: dict = field(default_factory=dict)
    history: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = jsonable(asdict(self))
        out["schema_version"] = SCHEMA_VERSION
        return out


def _pad(coef, size):
    out = np.zeros(size, dtype=complex)
    out[: len(coef)] = coef
    return out


def _weighted_sup(residual, lam, psi):
    return psi_norm((np.abs(lam), residual), psi)


def phi_span_project(target: hyp.SpectralFunction, span: PhiSpan, psi: WeightFunction,
                     mode: str = "least-squares", eps: float = 1e-2,
                     warm_start=None, target_id: str = "target",
                     iterations: int = 60, seed: int = 0) -> DensityReport:
    """Approximate ``target`` by sum_j c_j phi_lam(t_j) in the psi-norm.

    The reported residual is always the grid psi-norm of target - u.
    ``warm_start`` (coefficients on a prefix of ``span.points``) is kept when
    it beats the fresh fit, so nested refinements never increase the residual.
    """
    lam = target.lam
    b = np.asarray(target.values)
    if np.max(np.abs(b)) == 0:
        zero = np.zeros(span.size, dtype=complex)
        return DensityReport(target_id, 0.0, span.size, mode, zero,
                             np.asarray(span.points))
    if mode == "least-squares":
        A = span.matrix(lam)
        weight = np.exp(-psi(lam))
        (_, coef, rank), history = euclid._lawson(A, b, weight, iterations, 1e-13)
        residual = _weighted_sup(A @ coef - b, lam, psi)
        if warm_start is not None:
            prev = _pad(warm_start, span.size)
            prev_res = _weighted_sup(A @ prev - b, lam, psi)
            if prev_res < residual:
                coef, residual = prev, prev_res
        return DensityReport(target_id, residual, span.size, mode, coef,
                             np.asarray(span.points),
                             parameters={"rank": rank}, history=history)
    if mode == "constructive":
        return _constructive(target, span, psi, eps, target_id, seed)
    raise ArgumentError(f"unknown mode {mode!r}")


def _pw_cutoff(lam):
    """An even Paley-Wiener factor of type 1 with value 1 at 0."""
    return hormander_factor(1.0, lam)


def _constructive(target, span, psi, eps, target_id, seed):
    """Dilation, Paley-Wiener cutoff, then dyadic nodes (chain <= 4 eps)."""
    model, lam = target.model, target.lam
    f = np.asarray(target.values)

    def fnu(nu):
        return np.interp(nu * lam, lam, f.real) + 1j * np.interp(nu * lam, lam, f.imag)

    nu = None
    for k in range(1, 30):
        cand = 1.0 - 2.0 ** (-k)
        e1 = _weighted_sup(f - fnu(cand), lam, psi)
        if e1 < eps:
            nu = cand
            break
    if nu is None:
        return _unconverged(target_id, span, "dilation")
    f_nu = fnu(nu)
    h = None
    for k in range(0, 40):
        cand = span.L * 2.0 ** (-k)
        g1 = f_nu * _pw_cutoff(cand * lam)
        e2 = _weighted_sup(f_nu - g1, lam, psi)
        if e2 < eps:
            h = cand
            break
    if h is None:
        return _unconverged(target_id, span, "cutoff")
    # g1 is the spherical transform of F supported near B(o, nu L0 + h)
    T = span.L
    t = np.linspace(0.0, T, 1025)
    G = hyp.SpectralFunction(model, lam, g1)
    F = hyp.sft_inverse(G, t)
    Fvals = F.values

    def density(X):
        return 0.5 * model.J(np.abs(X[:, 0]))

    def fun(X):
        r = np.abs(X[:, 0])
        return np.interp(r, t, Fvals.real) + 1j * np.interp(r, t, Fvals.imag)

    mass = hyp.radial_integral(model, t, np.abs(Fvals))
    weights_tail = mass * np.exp(-psi(lam))
    inside = np.nonzero(weights_tail >= eps)[0]
    tau = float(lam[inside[-1] + 1]) if inside.size and inside[-1] + 1 < lam.size else float(lam[-1])
    kern = spherical_kernel(model, span.L)
    level = None
    nodes = None
    for n in range(2, 16):
        try:
            w = dyadic.approximate(fun, dyadic.RadonMeasureRep.lebesgue(density), kern,
                                   n, max(tau, 1e-3), eps, L=span.L, dim=1, check=False,
                                   seed=seed)
        except dyadic.LevelTooCoarse:
            continue
        if w.certified_bound < eps:
            level, nodes = n, w
            break
    if nodes is None:
        return _unconverged(target_id, span, "dyadic")
    pts = np.abs(nodes.nodes[:, 0])
    u = hyp.phi_table(model, lam, pts).real @ nodes.coeffs
    residual = _weighted_sup(f - u, lam, psi)
    e3 = _weighted_sup(g1 - u, lam, psi)
    chain = {"dilation": e1, "cutoff": e2, "dyadic": e3, "bound": 4 * eps}
    return DensityReport(target_id, residual, int(pts.size), "constructive", nodes.coeffs,
                         pts, residual <= 4 * eps,
                         {"nu": nu, "h": h, "cutoff": "hormander-type-1", "level": level,
                          "tau": tau, "certified": nodes.certified_bound}, chain)


def _unconverged(target_id, span, stage):
    return DensityReport(target_id, math.inf, 0, "constructive",
                         np.zeros(0, dtype=complex), np.zeros(0), False,
                         {"failed_stage": stage})


def spherical_kernel(model: hyp.HyperbolicModel, L: float) -> dyadic.KernelFunction:
    """g(x, lam) = phi_lam(|x|) on the line, for the dyadic engine.

    From (J phi')' = -(lam^2 + rho^2) J phi and |phi| <= 1,
    |phi'(t)| <= (lam^2 + rho^2) min(t, 1/(d-1)).
    """
    def evaluate(X, Lam):
        return hyp.phi_table(model, Lam[:, 0], np.abs(X[:, 0]))

    def lipschitz(tau, radius):
        return (tau**2 + model.rho**2) * min(radius, 1.0 / (model.d - 1))

    return dyadic.KernelFunction(evaluate, lipschitz, 1, f"spherical-{model}")


# --------------------------------------------------------------- Step 2

@dataclass
class EnergyBound:
    energy: float
    residual: float
    weighted_mass: float
    pairing: float
    pairing_spectral: float
    slack: float
    holds: bool
    status: str = "ok"

    @property
    def ratio(self) -> float:
        if self.weighted_mass == 0 or not math.isfinite(self.weighted_mass):
            return 0.0
        return self.energy / self.weighted_mass

    def to_dict(self) -> dict:
        return jsonable({**asdict(self), "ratio": self.ratio})


def vanishing_energy_bound(fhat: hyp.SpectralFunction, span: PhiSpan, psi: WeightFunction,
                           f: hyp.BiinvariantFunction | None = None,
                           projection: DensityReport | None = None,
                           warm_start=None) -> tuple[EnergyBound, DensityReport]:
    """Energy, residual, weighted mass and pairing of the vanishing argument.

    u is the psi-projection of conj(fhat) onto the span. The discrete chain
    energy <= residual * weighted_mass + |int fhat u |c|^-2| is exact; the
    time-domain pairing sum_j c_j f(t_j) differs from the spectral one by
    quadrature error, which is reported as slack.
    """
    lam, dens = fhat.lam, fhat.density
    w = trapezoid_weights(lam.size, fhat.step)
    vals = np.asarray(fhat.values)
    energy = float(np.sum(w * np.abs(vals) ** 2 * dens))
    with np.errstate(over="ignore", invalid="ignore"):
        wm = float(np.sum(w * np.abs(vals) * np.exp(psi(lam)) * dens))
    target = hyp.SpectralFunction(fhat.model, lam, np.conj(vals))
    proj = projection or phi_span_project(target, span, psi, warm_start=warm_start,
                                          target_id="conj-fhat")
    if not math.isfinite(wm):
        return EnergyBound(energy, proj.residual, wm, math.nan, math.nan, math.nan,
                           False, "hypothesis-violation"), proj
    u = span.evaluate(lam, proj.coefficients)
    spectral = abs(complex(np.sum(w * vals * u * dens)))
    if f is not None:
        fv = np.interp(np.asarray(span.points), f.t, f.values.real) \
            + 1j * np.interp(np.asarray(span.points), f.t, f.values.imag)
        pairing = abs(complex(np.dot(proj.coefficients, fv)))
    else:
        pairing = spectral
    slack = abs(spectral - pairing) + 1e-12 * max(energy, 1.0)
    holds = energy <= proj.residual * wm + pairing + slack
    return EnergyBound(energy, proj.residual, wm, pairing, spectral, slack, holds), proj


@dataclass
class LadderRung:
    Lambda: float
    span_size: int
    bound: EnergyBound
    eps_met: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"Lambda": self.Lambda, "span_size": self.span_size,
                "eps_met": self.eps_met, **self.bound.to_dict()}


def _prefix(F: hyp.SpectralFunction, Lam: float) -> hyp.SpectralFunction:
    k = int(np.searchsorted(F.lam, Lam * (1 + 1e-12), side="right"))
    return hyp.SpectralFunction(F.model, F.lam[:k], F.values[:k], F.meta)


def step2_ladder(f: hyp.BiinvariantFunction, L: float, psi: WeightFunction,
                 epsilons=DEFAULT_EPSILONS, lam0: float = 8.0, span0: int = 8,
                 max_doublings: int = 10) -> list[LadderRung]:
    """Rungs k = 0, 1, ... with Lambda_k = lam0 2^k and span size span0 2^k.

    energy / weighted_mass depends on Lambda only, so the schedule is fixed
    first: it stops at the first rung below min(epsilons). Each nested span
    is then projected on the final grid [0, Lambda_K], which makes the
    residual column comparable (and non-increasing) across rungs; the bound
    chain is asserted on every rung over its own prefix [0, Lambda_k].
    ``f`` must vanish on [0, L).
    """
    if np.any(np.abs(f.values[f.t < L]) > 0):
        raise PreconditionError("f must vanish on B(o, L)")
    step = hyp.default_lambda_step(f.T, f.model)
    nyquist = 0.95 * math.pi / f.step
    top = min(lam0 * 2.0**max_doublings, nyquist)
    full = hyp.sft_forward(f, np.arange(0.0, top + 0.5 * step, step))
    schedule = []
    goal = min(epsilons)
    for k in range(max_doublings + 1):
        Lam = lam0 * 2.0**k
        if Lam > nyquist:
            raise CertificationError("ladder exceeded the t-grid Nyquist frequency",
                                     "step2", Lambda=Lam)
        F = _prefix(full, Lam)
        w = trapezoid_weights(F.lam.size, F.step)
        energy = float(np.sum(w * np.abs(F.values) ** 2 * F.density))
        with np.errstate(over="ignore"):
            wm = float(np.sum(w * np.abs(F.values) * np.exp(psi(F.lam)) * F.density))
        schedule.append((Lam, span0 * 2**k))
        if wm > 0 and energy / wm < goal:
            break
    else:
        raise CertificationError(f"ratio stayed above {goal}", "step2")
    final = _prefix(full, schedule[-1][0])
    target = hyp.SpectralFunction(f.model, final.lam, np.conj(final.values))
    rungs, coef = [], None
    pending = sorted(epsilons, reverse=True)
    for Lam, size in schedule:
        span = PhiSpan.uniform(f.model, L, size)
        proj = phi_span_project(target, span, psi, warm_start=coef, target_id="conj-fhat")
        coef = proj.coefficients
        bound, _ = vanishing_energy_bound(_prefix(full, Lam), span, psi, f, projection=proj)
        met = [e for e in pending if bound.ratio < e]
        pending = [e for e in pending if e not in met]
        rungs.append(LadderRung(float(Lam), size, bound, met))
        if not bound.holds:
            raise CertificationError("energy bound chain violated", "step2",
                                     rung=rungs[-1].to_dict())
    return rungs


# ---------------------------------------------------------------- witness

def hormander_factor(L: float, xi, terms: int = 64) -> np.ndarray:
    """prod_j sinc(b_j xi), b_j = L (6/pi^2) / j^2: even, entire of type <= L,
    decaying faster than any power."""
    xi = np.asarray(xi, dtype=float)
    out = np.ones_like(xi)
    for j in range(1, terms + 1):
        out = out * np.sinc(L * 6.0 / math.pi**2 / j**2 * xi / math.pi)
    return out


@dataclass
class InghamBlocks:
    """Factor sinc(a_k xi)^{n_k} for k = k0..K with a_k = e 2^-k."""

    k0: int
    K: int
    a: np.ndarray
    n: np.ndarray

    @property
    def length(self) -> float:
        return float(np.sum(self.a * self.n))

    def log_abs(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.zeros_like(xi)
        for a, n in zip(self.a, self.n):
            if n:
                with np.errstate(divide="ignore"):
                    out += n * np.log(np.abs(np.sinc(a * xi / math.pi)))
        return out

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.ones_like(xi)
        for a, n in zip(self.a, self.n):
            if n:
                out *= np.sinc(a * xi / math.pi) ** n
        return out


def ingham_blocks(psi: WeightFunction, k0: int, K: int) -> InghamBlocks:
    """n_k = ceil(psi(2^{k+1})) - ceil(psi(2^k)) factors of width a_k = e 2^-k.

    For xi in [2^m, 2^{m+1}) the blocks k0..m each give |sinc| <= 1/e, so
    |P(xi)| <= exp(psi(2^k0) + 1 - psi(xi)).
    """
    ks = np.arange(k0, K + 1)
    levels = np.ceil(psi(2.0 ** np.arange(k0, K + 2)))
    n = np.diff(levels).astype(float)
    return InghamBlocks(k0, K, math.e * 2.0 ** (-ks.astype(float)), n)


@dataclass
class WitnessFunction:
    domain: str
    payload: object = field(repr=False)
    psi: str
    L: float
    support_radius: float
    decay: dict
    support: dict
    nontrivial: dict
    weighted_mass: dict
    parameters: dict

    def certificates_pass(self) -> bool:
        return all(c.get("passed", False) for c in
                   (self.decay, self.support, self.nontrivial, self.weighted_mass))

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "payload"}
        out["schema_version"] = SCHEMA_VERSION
        return jsonable(out)


@dataclass
class RealLineWitness:
    """F(xi) = P(xi) H(xi), its inverse transform g, and the certificate data."""

    psi: WeightFunction
    L: float
    blocks: InghamBlocks
    C_theory: float

    def transform(self, xi) -> np.ndarray:
        return self.blocks(xi) * hormander_factor(0.5 * self.L, xi)

    def log_transform(self, xi) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return self.blocks.log_abs(xi) + np.log(np.abs(hormander_factor(0.5 * self.L, xi)))

    def xi_max(self) -> float:
        """A frequency beyond which |F| < exp(-40) by the a priori bound."""
        target = math.log(self.C_theory) + 40.0
        xi = 16.0
        while self.psi(xi) < target:
            xi *= 1.25
        return xi

    def profile(self, R: float | None = None, n: int | None = None) -> euclid.EvenProfile:
        """g(x) = (1/pi) int_0^Xi F(xi) cos(x xi) dxi on [-R, R] (R defaults to 2L)."""
        R = R or 2.0 * self.L
        top = self.xi_max()
        dxi = math.pi / (R + self.L)
        xi = np.arange(0.0, top + dxi, dxi)
        F = self.transform(xi)
        n = n or 2 * math.ceil(1.25 * top * R / math.pi)
        x = np.linspace(0.0, R, n + 1)
        g = np.empty(x.size)
        wF = trapezoid_weights(xi.size, dxi) * F / math.pi
        for s in range(0, x.size, 512):
            g[s:s + 512] = np.cos(np.outer(x[s:s + 512], xi)) @ wF
        return euclid.EvenProfile.from_half(x, g)


def _decay_certificate(wit: RealLineWitness, xi_range=(1.0, 1e4), samples=400_001):
    xi = np.linspace(*xi_range, samples)
    ratio = np.exp(wit.log_transform(xi) + wit.psi(xi))
    worst = int(np.argmax(ratio))
    fitted = float(ratio[worst])
    return {"C_fit": fitted, "C_theory": wit.C_theory, "range": list(xi_range),
            "samples": samples, "worst_xi": float(xi[worst]),
            "passed": bool(fitted <= wit.C_theory * (1 + 1e-12))}


def ingham_witness(psi: WeightFunction, L: float, K: int | None = None,
                   retries: int = 4, verdict=None) -> tuple[RealLineWitness, dict]:
    """Certified real-line witness of type <= L with |F| <= C exp(-psi)."""
    if not L > 0:
        raise ArgumentError("L must be positive")
    verdict = verdict or classify_levinson(psi)
    if verdict.verdict != "convergent":
        raise PreconditionError(f"weight {psi.descriptor} is {verdict.verdict}, "
                                "a witness needs a convergent Levinson integral")
    K = K or 48
    budget = 0.5 * L
    k0 = 0
    while ingham_blocks(psi, k0, K).length > budget:
        k0 += 1
        if k0 >= K - 16:
            raise CertificationError("the dyadic budget does not fit in L/2", "decay")
    cert = None
    for attempt in range(retries + 1):
        blocks = ingham_blocks(psi, k0 + attempt, K)
        C = math.exp(float(psi(2.0 ** blocks.k0)) + 1.0)
        wit = RealLineWitness(psi, float(L), blocks, C)
        cert = _decay_certificate(wit)
        if cert["passed"]:
            cert["attempts"] = attempt + 1
            return wit, cert
    raise CertificationError("decay certificate failed", "decay",
                             xi=cert["worst_xi"], C_fit=cert["C_fit"])


def _mass_ladder(integrand, start=64.0, step=0.05, rtol=1e-6, max_doublings=14):
    """int_0^Lambda integrand for Lambda doubling until the relative change < rtol."""
    values = []
    Lam = start
    for _ in range(max_doublings + 1):
        lam = np.arange(0.0, Lam + 0.5 * step, step)
        values.append(float(np.sum(trapezoid_weights(lam.size, step) * integrand(lam))))
        if len(values) > 1 and abs(values[-1] - values[-2]) <= rtol * abs(values[-1]):
            break
        Lam *= 2
    change = abs(values[-1] - values[-2]) / abs(values[-1]) if len(values) > 1 else math.inf
    return {"value": values[-1], "ladder": values, "Lambda": Lam,
            "last_change": change, "passed": bool(change <= rtol and math.isfinite(values[-1]))}


def _witness_mass(wit, density, extra=None):
    def integrand(lam):
        logs = wit.log_transform(lam) + wit.psi(lam)
        if extra is not None:
            with np.errstate(divide="ignore"):
                logs = logs + np.log(np.abs(extra(lam)))
        return np.exp(logs) * density(lam)
    return _mass_ladder(integrand)


def witness_on_space(psi: WeightFunction, L: float, space: str = "real-line",
                     n: int | None = None) -> WitnessFunction:
    """Certified nontrivial witness on the line, on R^d (radial) or on H^d.

    ``space`` is ``real-line``, ``R<d>`` or ``H<d>``.
    """
    if space != "real-line" and not (space[:1].upper() in "RH" and space[1:].isdigit()
                                     and int(space[1:]) >= 2):
        raise ArgumentError(f"unknown space {space!r}")
    wit, decay = ingham_witness(psi, L)
    g = wit.profile()
    params = {"k0": wit.blocks.k0, "K": wit.blocks.K, "blocks_length": wit.blocks.length,
              "hormander_type": 0.5 * L, "xi_max": wit.xi_max(), "grid_step": g.step}
    F0 = float(wit.transform(np.array([0.0]))[0])
    if space == "real-line":
        s, v = g.half
        mass = _support_mass(s, np.abs(v.real), L)
        scale = F0 / (2 * L)
        sup = float(np.abs(v).max())
        return WitnessFunction(space, g, psi.descriptor, L, L, decay, mass,
                               _nontrivial(sup, scale),
                               _witness_mass(wit, lambda lam: np.full_like(lam, 1 / math.pi)),
                               params)
    kind, dim = space[0].upper(), int(space[1:])
    if kind == "R":
        radii = np.linspace(0.0, 2 * L, 1601)
        f = euclid.radon_inverse_radial(g, dim, L, radii)
        weight = np.abs(f.values) * f.radii ** (dim - 1)
        mass = _support_mass(f.radii, weight, L)
        vol = math.pi ** (dim / 2) / math.gamma(dim / 2 + 1) * L**dim
        c = sphere_area(dim) / (2 * math.pi) ** dim
        wm = _witness_mass(wit, lambda lam: c * lam ** (dim - 1))
        params["slice_check"] = euclid.slice_projection_check(f)
        return WitnessFunction(space, f, psi.descriptor, L, L, decay, mass,
                               _nontrivial(float(np.abs(f.values).max()), F0 / vol),
                               wm, params)
    if kind == "H":
        model = hyp.HyperbolicModel(dim)
        h = hyp.abel_inverse(g, model, L, t=np.linspace(0.0, 2 * L, 1001))
        hhat = hyp.sft_forward(h, np.linspace(0.0, 20.0, 81))
        params["abel_identity"] = float(np.abs(hhat.values - wit.transform(hhat.lam)).max())
        radius = 2 * L
        T = 3 * L
        t = np.linspace(0.0, T, (n or 1500) + 1)
        top = min(wit.xi_max(), 0.9 * math.pi / (t[1] - t[0]))
        lam = np.arange(0.0, top, hyp.default_lambda_step(T, model))
        fhat = wit.transform(lam) * hormander_factor(L, lam)
        F = hyp.SpectralFunction(model, lam, fhat)
        f = hyp.sft_inverse(F, t, support=None)
        weight = np.abs(f.values) * model.J(t)
        mass = _support_mass(t, weight, radius)
        vol = hyp.radial_integral(model, t, (t <= radius).astype(float))
        wm = _witness_mass(wit, lambda lam: hyp.plancherel_density(model, lam),
                           extra=lambda lam: hormander_factor(L, lam))
        return WitnessFunction(space, f, psi.descriptor, L, radius, decay, mass,
                               _nontrivial(float(np.abs(f.values).max()), F0 / vol),
                               wm, params)
    raise ArgumentError(f"unknown space {space!r}")


def _support_mass(x, weight, radius, tol=1e-8):
    total = float(np.sum(weight))
    outside = float(np.sum(weight[x > radius + 1e-12]))
    rel = outside / total if total > 0 else math.inf
    return {"radius": radius, "outside_relative": rel, "tol": tol, "passed": bool(rel < tol)}


def _nontrivial(sup, scale, tol=1e-6):
    return {"sup": sup, "scale": scale, "passed": bool(scale > 0 and sup > tol * scale)}


# ------------------------------------------------------------ estimates

@dataclass
class EstimateReport:
    verdict: str
    p: float
    lambdas: list
    partials: list
    sup_weighted: float

    def to_dict(self) -> dict:
        return jsonable(asdict(self))


def verify_estimate(fhat: hyp.SpectralFunction, psi: WeightFunction, p: float = 1.0,
                    rungs: int = 6, rtol: float = 1e-6) -> EstimateReport:
    """Partial integrals int_0^Lambda |fhat|^p e^psi |c|^-2 on a Lambda ladder.

    ``finite`` when the last increment is below ``rtol`` relative,
    ``infinite-trend`` when the increments do not shrink over the last three
    rungs, ``undecided`` otherwise.
    """
    if p < 1:
        raise ArgumentError("p must be >= 1")
    lam = fhat.lam
    with np.errstate(over="ignore"):
        integrand = np.abs(np.asarray(fhat.values)) ** p * np.exp(psi(lam)) * fhat.density
    n = lam.size - 1
    ends = sorted({max(1, n >> k) for k in range(rungs)})
    partials, lams = [], []
    for e in ends:
        ww = trapezoid_weights(e + 1, fhat.step)
        partials.append(float(np.sum(ww * integrand[: e + 1])))
        lams.append(float(lam[e]))
    sup_w = float(np.max(np.abs(fhat.values) * np.exp(psi(lam))))
    inc = np.diff(partials)
    total = partials[-1]
    if not math.isfinite(total):
        verdict = "infinite-trend"
    elif inc.size and abs(inc[-1]) <= rtol * abs(total):
        verdict = "finite"
    elif inc.size >= 3 and np.all(inc[-3:][1:] >= 0.9 * inc[-3:][:-1]):
        verdict = "infinite-trend"
    else:
        verdict = "undecided"
    return EstimateReport(verdict, float(p), lams, partials, sup_w)
