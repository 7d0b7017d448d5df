"""Command-line interface: ``permcycles {exact,asympt,sample,admissible,ldp,verify}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import artifacts, exact, sampler, saddle, verify
from ._backend import backend_name
from .weights import WeightModel, from_descriptor, known_log_admissible, to_descriptor

DEFAULT_MODEL = {"kind": "algebraic", "beta": 1.0, "gamma": 1.0}


class RefusedError(RuntimeError):
    """The run was refused before doing work (budget, non-admissible model, ...)."""


@dataclass
class RunConfig:
    command: str
    model: dict = field(default_factory=lambda: dict(DEFAULT_MODEL))
    n: int | None = None
    n_grid: list | None = None
    s_grid: list | None = None
    samples: int = 100_000
    seed: int = 12345
    delta: str | None = None
    out: str = "out"
    timestamp: bool = True
    budget: int = 2000
    suite: list = field(default_factory=lambda: ["all"])
    tol: dict = field(default_factory=dict)
    a_grid: list = field(default_factory=lambda: [0.0, 1.0, 2.0])
    eps: float = 3.0
    force: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config field(s): {', '.join(unknown)}")
        if "command" not in data:
            raise ValueError("config needs a 'command'")
        cfg = cls(**data)
        cfg.model_obj()  # validates the descriptor
        return cfg

    def model_obj(self) -> WeightModel:
        return from_descriptor(self.model)

    def sizes(self) -> list[int]:
        if self.n_grid:
            return [int(v) for v in self.n_grid]
        if self.n is not None:
            return [int(self.n)]
        raise ValueError("give --n or --n-grid")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = to_descriptor(self.model_obj())
        return d


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _model_arg(text: str) -> dict:
    # JSON text or a path; from_descriptor does the validation
    return to_descriptor(from_descriptor(text))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="permcycles", description="Cycle counts of weighted random permutations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields (command-line flags override it)")
    common.add_argument("--model", type=_model_arg, help="model descriptor as JSON text or a path to a JSON file")
    common.add_argument("--n", type=int)
    common.add_argument("--n-grid", type=_ints, help="comma-separated sizes")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the creation-time header line")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("exact", parents=[common], help="exact pmf and h_n table")
    sp.add_argument("--budget", type=int, help="largest n allowed (default 2000)")

    sp = sub.add_parser("asympt", parents=[common], help="saddle-point moments and coefficients")
    sp.add_argument("--s-grid", type=_floats, help="tilts s for the log G_{n,s} table")
    sp.add_argument("--force", action="store_true", help="evaluate even for non-admissible models")

    sp = sub.add_parser("sample", parents=[common], help="Monte Carlo cycle counts")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)

    sp = sub.add_parser("admissible", parents=[common], help="log-admissibility checker")
    sp.add_argument("--delta", help="form:alpha with form power or exp_decay")

    sp = sub.add_parser("ldp", parents=[common], help="large-deviation estimates")
    sp.add_argument("--a-grid", type=_floats)
    sp.add_argument("--eps", type=float)
    sp.add_argument("--budget", type=int, help="largest n for the exact comparison (default 2000)")

    sp = sub.add_parser("verify", parents=[common], help="run acceptance criteria")
    sp.add_argument("--suite", type=lambda t: [v.strip() for v in t.split(",") if v.strip()],
                    help=f"comma-separated suites from {', '.join(verify.SUITES)}")
    sp.add_argument("--delta")
    sp.add_argument("--tol", action="append", default=None, metavar="NAME=VALUE",
                    help="override a tolerance (repeatable)")
    sp.add_argument("--samples", type=int)
    sp.add_argument("--seed", type=int)
    return p


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if ns.config:
        data = json.loads(Path(ns.config).read_text())
    data["command"] = ns.command
    for name in ("model", "n", "n_grid", "s_grid", "samples", "seed", "delta", "out", "budget", "suite",
                 "a_grid", "eps"):
        v = getattr(ns, name, None)
        if v is not None:
            data[name] = v
    if getattr(ns, "force", False):
        data["force"] = True
    if ns.no_timestamp:
        data["timestamp"] = False
    if getattr(ns, "tol", None):
        tol = dict(data.get("tol", {}))
        for item in ns.tol:
            key, sep, val = item.partition("=")
            if not sep:
                raise ValueError(f"--tol expects NAME=VALUE, got {item!r}")
            tol[key.strip()] = val.strip()
        data["tol"] = tol
    return RunConfig.from_dict(data)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_exact(cfg: RunConfig) -> int:
    model = cfg.model_obj()
    sizes = cfg.sizes()
    top = max(sizes)
    if top > cfg.budget:
        raise RefusedError(f"n={top} exceeds the budget {cfg.budget}; rerun with --budget {top} or more")
    out = Path(cfg.out)
    conf = cfg.to_dict()
    table = exact.compute_h(model, top)
    artifacts.write_csv(out / "h_table.csv", artifacts.TABLE_COLUMNS, artifacts.table_rows(table), conf, cfg.timestamp)
    summary = []
    for n in sizes:
        dist = exact.cycle_count_distribution(model, n, table=table)
        mean, var = exact.exact_moments(dist)
        artifacts.write_csv(out / f"pmf_n{n}.csv", artifacts.PMF_COLUMNS, artifacts.pmf_rows(dist), conf, cfg.timestamp)
        summary.append({"n": n, "log_h": dist.log_h, "mean": mean, "var": var})
        print(f"n={n}  log h_n={dist.log_h:.12g}  mean={mean:.12g}  var={var:.12g}")
    artifacts.write_json(out / "exact_summary.json", {"results": summary, "backend": backend_name()},
                         conf, cfg.timestamp)
    return 0


def cmd_asympt(cfg: RunConfig) -> int:
    model = cfg.model_obj()
    if known_log_admissible(model) is False and not cfg.force:
        rep = saddle.check_admissibility(model, verify.default_delta(model))
        raise RefusedError(f"{model} is not log-admissible (checker with delta {rep.delta}: failed "
                           f"{', '.join(rep.failed()) or 'none on this grid'}); use --force to evaluate anyway")
    sizes = cfg.sizes()
    out = Path(cfg.out)
    conf = cfg.to_dict()
    rows, saddle_rows = [], []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", saddle.NonAdmissibleWarning)
        for n in sizes:
            try:
                mom = saddle.asymptotic_moments(model, n)
                sp = saddle.solve_saddle(model, n)
            except saddle.NonDivergentModelError as exc:
                raise RefusedError(str(exc)) from exc
            closed = _closed_form(model, n)
            p = model.beta / (model.beta + 1) if model.kind == "algebraic" else math.nan
            rows.append((n, mom.mu, mom.sigma2, mom.xi, mom.valid,
                         closed.mu if closed else math.nan, closed.sigma2 if closed else math.nan,
                         mom.mu / n**p if model.kind == "algebraic" else math.nan))
            saddle_rows.append((sp.x, sp.r, sp.g_at_r, sp.b_at_r, *sp.eta))
            print(f"n={n}  mu={mom.mu:.6g}  sigma2={mom.sigma2:.6g}  xi={mom.xi:.6g}"
                  + (f"  closed mu={closed.mu:.6g} sigma2={closed.sigma2:.6g}" if closed else ""))
        artifacts.write_csv(out / "moments.csv",
                            ("n", "mu", "sigma2", "xi", "valid", "mu_closed", "sigma2_closed", "mu_over_n_pow"),
                            rows, conf, cfg.timestamp)
        artifacts.write_csv(out / "saddle.csv", artifacts.SADDLE_COLUMNS, saddle_rows, conf, cfg.timestamp)
        if cfg.s_grid:
            coef = [(n, s, saddle.asymptotic_coefficient(model, n, s)) for n in sizes for s in cfg.s_grid]
            artifacts.write_csv(out / "coefficients.csv", ("n", "s", "log_G"), coef, conf, cfg.timestamp)
    return 0


def _closed_form(model: WeightModel, n: float):
    if model.kind == "algebraic":
        return saddle.closed_form_algebraic(model.beta, model.gamma, n)
    if model.kind == "subexp" and model.scale == 1.0 and n >= 3:
        return saddle.closed_form_subexp(model.beta, n)
    return None


def cmd_sample(cfg: RunConfig) -> int:
    model = cfg.model_obj()
    out = Path(cfg.out)
    conf = cfg.to_dict()
    results = []
    for n in cfg.sizes():
        s = sampler.monte_carlo(model, n, cfg.samples, cfg.seed)
        artifacts.write_csv(out / f"hist_n{n}.csv", artifacts.HIST_COLUMNS,
                            artifacts.histogram_rows(n, s.histogram), conf, cfg.timestamp)
        results.append(s.to_dict())
        print(f"n={n}  samples={s.N_samples}  mean={s.mean:.8g}  var={s.variance:.8g}  ks={s.ks_distance:.4g}")
    payload = results[0] if len(results) == 1 else {"results": results}
    artifacts.write_json(out / "sample_summary.json", payload, conf, cfg.timestamp)
    return 0


def cmd_admissible(cfg: RunConfig) -> int:
    model = cfg.model_obj()
    delta = saddle.DeltaSpec.parse(cfg.delta) if cfg.delta else verify.default_delta(model)
    rep = saddle.check_admissibility(model, delta)
    conf = cfg.to_dict()
    out = Path(cfg.out)
    artifacts.write_csv(out / "admissibility.csv", artifacts.ADMISSIBILITY_COLUMNS, rep.rows(), conf, cfg.timestamp)
    for name, v in rep.conditions.items():
        print(f"{name:<14} {'pass' if v.passed else 'FAIL'}")
    print(f"log-admissible with delta {delta}: {'yes' if rep.passed else 'no'}")
    return 0


def cmd_ldp(cfg: RunConfig) -> int:
    model = cfg.model_obj()
    conf = cfg.to_dict()
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", saddle.NonAdmissibleWarning)
        for n in cfg.sizes():
            moments = exact.moment_sequence(model, n) if n <= cfg.budget else None
            for a in cfg.a_grid:
                est = saddle.large_deviation_estimate(model, n, a, cfg.eps, strict=False)
                p_exact = ratio = math.nan
                if moments is not None:
                    mean, var = moments[0][n], moments[1][n]
                    sd = math.sqrt(var)
                    k_max = min(n, int(math.ceil(mean + (abs(a) + cfg.eps + 1) * sd)) + 1)
                    dist = exact.cycle_count_distribution(model, n, k_max=k_max)
                    p_exact = verify.window_probability(dist, mean, sd, a, cfg.eps)
                    ratio = -math.log(p_exact) / (a * a / 2) if a != 0 and p_exact > 0 else math.nan
                rows.append((n, a, cfg.eps, est.estimate, est.prefactor, est.delta_scale, est.tilt,
                             est.regime_valid, p_exact, ratio))
                print(f"n={n} a={a:g}  estimate={est.estimate:.6g}  delta={est.delta_scale:.3g}"
                      f"{'' if est.regime_valid else ' (regime invalid)'}  exact={p_exact:.6g}  ratio={ratio:.4g}")
    artifacts.write_csv(Path(cfg.out) / "ldp.csv",
                        ("n", "a", "eps", "estimate", "prefactor", "delta_scale", "tilt", "regime_valid",
                         "p_exact", "ratio"), rows, conf, cfg.timestamp)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    tol = verify.Tolerances().override(cfg.tol)
    if cfg.samples != RunConfig.samples:
        tol = verify.Tolerances(**{**asdict(tol), "samples": cfg.samples})
    model = cfg.model_obj() if cfg.model != DEFAULT_MODEL else None
    delta = saddle.DeltaSpec.parse(cfg.delta) if cfg.delta else None
    results = verify.run_suite(cfg.suite, tol, model=model, n_grid=cfg.n_grid, delta=delta)
    for r in results:
        print(r.line())
    failed = [r.id for r in results if not r.passed]
    report = {"passed": not failed, "failed": failed, "tolerances": asdict(tol),
              "criteria": [r.to_dict() for r in results]}
    artifacts.write_json(Path(cfg.out) / "verify_report.json", report, cfg.to_dict(), cfg.timestamp)
    return 1 if failed else 0


COMMANDS = {
    "exact": cmd_exact,
    "asympt": cmd_asympt,
    "sample": cmd_sample,
    "admissible": cmd_admissible,
    "ldp": cmd_ldp,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        return COMMANDS[cfg.command](cfg)
    except RefusedError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
