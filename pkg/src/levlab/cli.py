"""Command-line front end.

Exit codes: 0 success, 1 error, 2 undecided weight, 3 tolerance or
certificate failure (the report is still written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED, EXIT_BREACH = 0, 1, 2, 3

DEFAULTS = {
    "common": {"out": "levlab-out", "seed": 0, "tol": None},
    "classify": {"psi": None, "table": None, "horizon": 2.0**64, "threshold": 1e6},
    "transform": {"op": "sft-roundtrip", "space": "H3", "d": 3, "bump": "0.5,1.5",
                  "zero": False, "n": None, "T": 2.0, "time": 1.0},
    "dichotomy": {"psi": None, "table": None, "space": "H3", "L": 1.0, "witness_L": 2.0,
                  "eps": "0.1,0.01,0.001"},
    "witness": {"psi": None, "table": None, "space": "real-line", "L": 2.0},
    "approx": {"d": 2, "level": 5, "tau": 4.0, "eps": 1.0, "L": 1.0, "probes": 1000},
}

TRANSFORM_N = {"sft-roundtrip": 1000, "abel-roundtrip": 1000, "slice-check": 2000,
               "radon-roundtrip": 1000}

TRANSFORM_TOL = {"sft-roundtrip": 1e-4, "abel-roundtrip": 1e-4, "fourier-roundtrip": 1e-6,
                 "slice-check": 1e-6, "radon-roundtrip": 1e-4, "heat-mass": 1e-3}


def _cap_threads():
    n = os.environ.get("LEVLAB_THREADS")
    if n:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = n


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=S, help="output directory")
    common.add_argument("--seed", type=int, default=S, help="seed for probe sequences")
    common.add_argument("--tol", type=float, default=S, help="tolerance override")
    common.add_argument("--config", default=S, help="JSON config file (flags win)")

    parser = argparse.ArgumentParser(prog="levlab", parents=[common],
                                     description="Levinson dichotomy experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def weight_flags(p):
        p.add_argument("--psi", default=S, help="power:a, lin-log:k, const-log:c")
        p.add_argument("--table", default=S, help="CSV of (r, psi) samples")

    p = sub.add_parser("classify", parents=[common], help="classify the weight integral")
    weight_flags(p)
    p.add_argument("--horizon", type=float, default=S)
    p.add_argument("--threshold", type=float, default=S)

    p = sub.add_parser("transform", parents=[common], help="transform round trips")
    p.add_argument("--op", choices=sorted(TRANSFORM_TOL), default=S)
    p.add_argument("--space", default=S, help="H2, H3, H4")
    p.add_argument("--d", type=int, default=S, help="Euclidean dimension")
    p.add_argument("--bump", default=S, help="support a,b of the test bump")
    p.add_argument("--zero", action="store_true", default=S, help="use f = 0")
    p.add_argument("--n", type=int, default=S, help="grid intervals")
    p.add_argument("--T", type=float, default=S, help="grid extent")
    p.add_argument("--time", type=float, default=S, help="heat time")

    p = sub.add_parser("dichotomy", parents=[common], help="run either side of the dichotomy")
    weight_flags(p)
    p.add_argument("--space", default=S)
    p.add_argument("--L", type=float, default=S, help="ball radius of the vanishing argument")
    p.add_argument("--witness-L", dest="witness_L", type=float, default=S)
    p.add_argument("--eps", default=S, help="comma-separated epsilon ladder")

    p = sub.add_parser("witness", parents=[common], help="certified witness")
    weight_flags(p)
    p.add_argument("--space", default=S, help="real-line, R<d> or H<d>")
    p.add_argument("--L", type=float, default=S)

    p = sub.add_parser("approx", parents=[common], help="dyadic node approximation demo")
    p.add_argument("--d", type=int, default=S)
    p.add_argument("--level", type=int, default=S)
    p.add_argument("--tau", type=float, default=S)
    p.add_argument("--eps", type=float, default=S)
    p.add_argument("--L", type=float, default=S)
    p.add_argument("--probes", type=int, default=S)
    return parser


def resolve_config(argv) -> dict:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config = {**DEFAULTS["common"], **DEFAULTS[command]}
    path = args.pop("config", None)
    if path:
        with open(path, encoding="utf-8") as fh:
            config.update(json.load(fh))
    config.update(args)
    config["command"] = command
    return config


class Run:
    """Output directory plus the provenance every file carries."""

    def __init__(self, config: dict):
        from ._common import config_hash
        self.config = config
        self.out = Path(config["out"])
        self.out.mkdir(parents=True, exist_ok=True)
        replay = {k: v for k, v in config.items() if k != "out"}
        self.hash = config_hash(replay)
        self.replay = replay

    def provenance(self) -> dict:
        return {"config": self.replay, "config_hash": self.hash, "seed": self.config["seed"]}

    def write_json(self, name: str, payload: dict) -> str:
        from ._common import SCHEMA_VERSION, dumps
        text = dumps({**payload, **self.provenance(), "schema_version": SCHEMA_VERSION})
        (self.out / name).write_text(text + "\n", encoding="utf-8")
        return text

    def write_csv(self, name: str, body: str):
        from ._common import dumps
        stamp = dumps({}).splitlines()[0].rstrip(",")
        head = (f"# {stamp.strip('{')}\n"
                f"# config_hash={self.hash} seed={self.config['seed']}\n")
        (self.out / name).write_text(head + body, encoding="utf-8")


def _csv(columns: dict) -> str:
    keys = list(columns)
    rows = [",".join(keys)]
    for vals in zip(*columns.values()):
        rows.append(",".join(repr(float(v)) if not isinstance(v, str) else v for v in vals))
    return "\n".join(rows) + "\n"


def _weight(config):
    from .weights import WeightFunction
    if config.get("table"):
        return WeightFunction.from_csv(config["table"])
    if not config.get("psi"):
        from ._common import ArgumentError
        raise ArgumentError("a weight is required (--psi or --table)")
    return WeightFunction.parse(config["psi"])


# ----------------------------------------------------------------- commands

def cmd_classify(run: Run) -> int:
    from .weights import classify_levinson
    psi = _weight(run.config)
    verdict = classify_levinson(psi, run.config["horizon"], run.config["threshold"])
    text = run.write_json("classify.json", {"psi": psi.descriptor, **verdict.to_dict()})
    print(text)
    return EXIT_OK if verdict.decided else EXIT_UNDECIDED


def _bump_support(config):
    a, b = (float(x) for x in str(config["bump"]).split(","))
    return a, b


def cmd_transform(run: Run) -> int:
    import numpy as np
    from . import euclid, hyperbolic as hyp
    from ._common import bump, bump_on
    cfg = run.config
    op = cfg["op"]
    tol = cfg["tol"] if cfg["tol"] is not None else TRANSFORM_TOL[op]
    a, b = _bump_support(cfg)
    n = cfg["n"] or TRANSFORM_N.get(op, 1000)
    scale = 0.0 if cfg["zero"] else 1.0
    report = {"op": op, "tolerance": tol}
    if op in ("sft-roundtrip", "abel-roundtrip", "heat-mass"):
        model = hyp.HyperbolicModel.parse(cfg["space"])
        report["space"] = str(model)
    if op == "sft-roundtrip":
        f = hyp.BiinvariantFunction.sample(model, lambda t: scale * bump_on(t, a, b),
                                           cfg["T"], n, support=b)
        F = hyp.sft_forward(f)
        g = hyp.sft_inverse(F, f.t)
        lhs, rhs = hyp.plancherel_sides(f, F)
        residual = float(np.abs(g.values - f.values).max())
        report.update(plancherel_lhs=lhs, plancherel_rhs=rhs, Lambda=F.Lambda,
                      tail_ratio=F.meta.get("tail_ratio"), truncated=F.meta.get("truncated"))
        run.write_csv("input.csv", f.to_csv())
        run.write_csv("spectrum.csv", F.to_csv())
        run.write_csv("output.csv", g.to_csv())
    elif op == "abel-roundtrip":
        f = hyp.BiinvariantFunction.sample(model, lambda t: scale * bump_on(t, a, b),
                                           cfg["T"], n, support=b)
        g = hyp.abel_forward(f)
        back = hyp.abel_inverse(g, model, b)
        residual = float(np.abs(back.values - f.values).max())
        run.write_csv("input.csv", f.to_csv())
        run.write_csv("abel.csv", g.to_csv())
        run.write_csv("output.csv", back.to_csv())
    elif op == "heat-mass":
        h = hyp.heat_kernel(model, cfg["time"])
        mass = hyp.radial_integral(model, h.t, h.values.real)
        residual = abs(mass - 1.0)
        report.update(mass=mass, time=cfg["time"])
        run.write_csv("output.csv", h.to_csv())
    elif op == "fourier-roundtrip":
        d = cfg["d"]
        R = 1.25 * b
        f = euclid.GridFunction.sample(
            lambda *x: scale * bump(np.sqrt(sum(c**2 for c in x)) / b),
            [(-R, R)] * d, [cfg.get("grid", {1: 256, 2: 96, 3: 64}.get(d, 32))] * d,
            support_radius=b)
        F = euclid.fourier_forward(f)
        g = euclid.fourier_inverse(F)
        residual = float(np.abs(g.values - f.values).max())
        (run.out / "input.json").write_text(f.to_json(), encoding="utf-8")
        (run.out / "output.json").write_text(g.to_json(), encoding="utf-8")
    elif op == "slice-check":
        f = euclid.RadialProfile.sample(lambda r: scale * bump(r / b), cfg["d"], 1.2 * b,
                                        n, support=b)
        lam = np.linspace(0.0, 20.0, 41)
        lhs = euclid.radial_fourier(f, lam)
        rhs = euclid.fourier_1d_even(euclid.radon_radial(f), lam)
        residual = euclid.slice_projection_check(f)
        run.write_csv("discrepancy.csv", _csv({"lambda": lam, "abs_diff": np.abs(lhs - rhs)}))
    elif op == "radon-roundtrip":
        s = np.linspace(0.0, 1.5 * b, n + 1)
        g = euclid.EvenProfile.from_half(s, scale * bump(s / b))
        f = euclid.radon_inverse_radial(g, cfg["d"], b)
        back = euclid.radon_radial(f)
        residual = float(np.abs(back.values - g.values).max())
        run.write_csv("input.csv", g.to_csv())
        run.write_csv("output.csv", f.to_csv())
    report["residual"] = residual
    report["passed"] = bool(residual < tol)
    print(run.write_json("residual.json", report))
    return EXIT_OK if report["passed"] else EXIT_BREACH


def cmd_dichotomy(run: Run) -> int:
    import numpy as np
    from . import dichotomy, hyperbolic as hyp
    from ._common import LevlabError, bump_on
    from .weights import classify_levinson
    cfg = run.config
    psi = _weight(cfg)
    verdict = classify_levinson(psi)
    report = {"psi": psi.descriptor, "verdict": verdict.to_dict()}
    if not verdict.decided:
        print(run.write_json("dichotomy.json", {**report, "status": "undecided"}))
        return EXIT_UNDECIDED
    if verdict.verdict == "divergent":
        model = hyp.HyperbolicModel.parse(cfg["space"])
        L = float(cfg["L"])
        eps = tuple(float(e) for e in str(cfg["eps"]).split(","))
        f = hyp.BiinvariantFunction.sample(model, lambda t: bump_on(t, L, L + 1.0),
                                           L + 2.0, 1500)
        try:
            rungs = dichotomy.step2_ladder(f, L, psi, eps)
            status = "ok"
        except LevlabError as exc:
            rungs, status = [], f"failed: {exc}"
        rows = [r.to_dict() for r in rungs]
        res = [r["residual"] for r in rows]
        decreasing = all(x > y for x, y in zip(res, res[1:]))
        met = sorted({e for r in rows for e in r["eps_met"]})
        passed = status == "ok" and decreasing and met == sorted(eps)
        report.update(side="vanishing", space=str(model), L=L, epsilons=list(eps),
                      rungs=rows, residual_decreasing=decreasing, status=status,
                      passed=passed)
        run.write_csv("ladder.csv", _csv({
            "Lambda": [r["Lambda"] for r in rows], "span_size": [r["span_size"] for r in rows],
            "residual": res, "energy": [r["energy"] for r in rows],
            "weighted_mass": [r["weighted_mass"] for r in rows],
            "ratio": [r["ratio"] for r in rows]}))
        if rows:
            lam = np.arange(0.0, rows[-1]["Lambda"], 0.25)
            F = hyp.sft_forward(f, lam)
            run.write_csv("decay.csv", _csv({"lambda": lam, "abs_fhat_e_psi":
                                             np.abs(F.values) * np.exp(psi(lam))}))
    else:
        try:
            w = dichotomy.witness_on_space(psi, float(cfg["witness_L"]), cfg["space"])
        except LevlabError as exc:
            print(run.write_json("dichotomy.json", {**report, "status": f"failed: {exc}"}))
            return EXIT_BREACH
        passed = w.certificates_pass()
        report.update(side="witness", witness=w.to_dict(), passed=passed)
        _witness_plots(run, w, psi, report)
    print(run.write_json("dichotomy.json", report))
    return EXIT_OK if passed else EXIT_BREACH


def _witness_plots(run, w, psi, report):
    import numpy as np
    from . import dichotomy, hyperbolic as hyp
    wit, _ = dichotomy.ingham_witness(psi, w.L)
    xi = np.geomspace(1.0, 1e4, 2001)
    run.write_csv("decay.csv", _csv({"xi": xi, "abs_F_e_psi":
                                     np.exp(wit.log_transform(xi) + psi(xi))}))
    run.write_csv("profile.csv", w.payload.to_csv())
    if w.domain.upper().startswith("H"):
        model = hyp.HyperbolicModel.parse(w.domain)
        lam = np.linspace(0.0, 40.0, 321)
        vals = wit.transform(lam) * dichotomy.hormander_factor(w.L, lam)
        target = hyp.SpectralFunction(model, lam, vals)
        sizes, res, coef = [8, 16, 32], [], None
        for n in sizes:
            span = dichotomy.PhiSpan.uniform(model, w.L, n)
            r = dichotomy.phi_span_project(target, span, psi, warm_start=coef)
            coef = r.coefficients
            res.append(r.residual)
        report["span_floor"] = {"sizes": sizes, "residuals": res}
        run.write_csv("residual_vs_span.csv", _csv({"span_size": sizes, "residual": res}))


def cmd_witness(run: Run) -> int:
    from . import dichotomy
    from .weights import classify_levinson
    cfg = run.config
    psi = _weight(cfg)
    verdict = classify_levinson(psi)
    if not verdict.decided:
        print(run.write_json("witness.json", {"psi": psi.descriptor, "status": "undecided"}))
        return EXIT_UNDECIDED
    w = dichotomy.witness_on_space(psi, float(cfg["L"]), cfg["space"])
    report = {"witness": w.to_dict(), "passed": w.certificates_pass()}
    _witness_plots(run, w, psi, report)
    print(run.write_json("witness.json", report))
    return EXIT_OK if report["passed"] else EXIT_BREACH


def cmd_approx(run: Run) -> int:
    import numpy as np
    from . import dyadic
    from ._common import bump
    cfg = run.config
    d, L = int(cfg["d"]), float(cfg["L"])

    def f(X):
        return bump(np.sqrt(np.sum(X**2, axis=1)) / L)

    try:
        w = dyadic.approximate(f, dyadic.RadonMeasureRep.lebesgue(), dyadic.exponential_kernel(d),
                               int(cfg["level"]), float(cfg["tau"]), float(cfg["eps"]),
                               L=L, dim=d, probes=int(cfg["probes"]), seed=int(cfg["seed"]))
    except dyadic.LevelTooCoarse as exc:
        print(run.write_json("approx.json", {"status": "level-too-coarse", "message": str(exc),
                                             "level": exc.level,
                                             "minimal_level": exc.minimal_level}))
        return EXIT_ERROR
    report = {"status": "ok", "level": w.level, "nodes": int(w.coeffs.size),
              "certified_bound": w.certified_bound, "empirical_error": w.empirical_error,
              "mass_bound": w.mass_bound, "sup_check": w.sup_check,
              "components": w.components}
    print(run.write_json("approx.json", report))
    return EXIT_OK


COMMANDS = {"classify": cmd_classify, "transform": cmd_transform, "dichotomy": cmd_dichotomy,
            "witness": cmd_witness, "approx": cmd_approx}


def main(argv=None) -> int:
    _cap_threads()
    try:
        config = resolve_config(sys.argv[1:] if argv is None else argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    except (OSError, ValueError) as exc:
        print(f"levlab: {exc}", file=sys.stderr)
        return EXIT_ERROR
    from ._common import LevlabError
    try:
        if config.get("tol") is not None and not config["tol"] > 0:
            raise ValueError("--tol must be positive")
        run = Run(config)
        return COMMANDS[config["command"]](run)
    except (LevlabError, ValueError, OSError) as exc:
        print(f"levlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        try:
            run.write_json(f"{config['command']}-error.json",
                           {"error": type(exc).__name__, "message": str(exc)})
        except Exception:
            pass
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
