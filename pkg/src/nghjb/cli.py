"""Command-line driver: experiment configs and plot-ready CSV output.

Configuration is a flat ``key = value`` text file (blank lines and ``#``
comments ignored); any flag repeats a config key and wins over the file,
which wins over the built-in defaults.  Data rows go to stdout or --out,
diagnostics to stderr.  Exit codes: 0 all checks passed, 1 a check or
solver failed, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from . import fd
from .errors import ConfigError
from .galerkin import integrate, mass_matrix_discrepancy
from .mc import McConfig, simulate_expected_utility, trial_policy, z_score
from .model import MarketParams, SpacePoint
from .pricing import PriceQuery, indifference_price_bisect, indifference_price_closed, trial_evaluator
from .quadrature import moment_identities
from .trial import evolve, initial_params, rate_constants, trial_value, value_function

__all__ = ["main"]

# every key a config file may carry, with its parser
_SCHEMA = {
    "gamma": float,
    "r": float,
    "lam": float,
    "a0": float,
    "b0": float,
    "rho": float,
    "n": int,
    "k": float,
    "T": float,
    "L": float,
    "d": int,
    "N": str,
    "order": int,
    "dt": float,
    "method": str,
    "assembler": str,
    "paths": int,
    "steps": int,
    "seed": int,
    "sigma_mc": float,
    "mode": str,
    "metric": str,
    "param": str,
    "points": int,
    "x0": float,
    "y0": float,
    "k_list": str,
}

# study range for each swept parameter as (low, default, high); relative
# position 1 maps to the default, 0.5 to low, 2 to high, piecewise linearly.
_SWEEP_RANGES = {
    "a0": (0.25, 0.3, 0.4),
    "b0": (0.1, 0.2, 0.4),
    "rho": (-0.5, 0.1, 0.4),
    "lam": (0.05, 0.1, 0.2),
    "r": (0.025, 0.05, 0.1),
}
# the r range as literally printed; kept behind --literal-r-range
_LITERAL_R_RANGE = (0.25, 0.05, 0.1)

_IDENTITY_TOL = 1e-10
_PRICE_RESIDUAL_TOL = 1e-9


def load_config(path: str) -> dict:
    """Parse a flat key = value file; unknown keys are rejected."""
    cfg: dict = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            if key not in _SCHEMA:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                cfg[key] = _SCHEMA[key](val)
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: bad value {val!r} for {key}"
                ) from None
    return cfg


def _merge(args: argparse.Namespace) -> dict:
    cfg = load_config(args.config) if args.config else {}
    for key in _SCHEMA:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _market(cfg: dict, n: int, k: float) -> MarketParams:
    return MarketParams(
        gamma=cfg.get("gamma", 0.5),
        r=cfg.get("r", 0.05),
        lam=cfg.get("lam", 0.1),
        a0=cfg.get("a0", 0.3),
        b0=cfg.get("b0", 0.2),
        rho=cfg.get("rho", 0.1),
        n=n,
        k=k,
        T=cfg.get("T", 1.0),
    )


def _auto_k(cfg: dict, n: int) -> float:
    if "k" in cfg:
        return float(cfg["k"])
    return 1.0 if n >= 1 else 0.0


def _mode(cfg: dict) -> str:
    mode = cfg.get("mode", "oracle")
    if mode not in ("paper", "oracle"):
        raise ConfigError(f"mode must be 'paper' or 'oracle', got {mode!r}")
    return mode


def _int_list(spec: str) -> list[int]:
    spec = str(spec).strip()
    if ":" in spec:
        lo, _, hi = spec.partition(":")
        return list(range(int(lo), int(hi) + 1))
    return [int(tok) for tok in spec.split(",") if tok.strip()]


def _float_list(spec: str) -> list[float]:
    return [float(tok) for tok in str(spec).split(",") if tok.strip()]


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17e")
    return str(v)


def _write_csv(out, header, rows) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(_fmt(v) for v in row) + "\n")


def _trial_reference(mp: MarketParams, mode: str):
    """Trial solution at reversed time T as a mesh-evaluable callable."""
    s = evolve(initial_params(mp), rate_constants(mp, mode), mp.T)
    return lambda p: trial_value(s, mp.n, p)


def cmd_identities(cfg: dict, out, args) -> int:
    order = cfg.get("order", 8)
    ns = [int(cfg["n"])] if "n" in cfg else [1, 2, 3]
    rows = []
    failures = []
    for n in ns:
        for b in (0.5, 1.0, 2.0):
            for rec in moment_identities(n, b, order=order):
                rows.append(
                    (rec["identity"], rec["n"], rec["b"], rec["value"], rec["expected"], rec["rel_err"])
                )
                if not rec["rel_err"] <= _IDENTITY_TOL:
                    failures.append(rec)
    _write_csv(out, ("identity", "n", "b", "value", "expected", "rel_err"), rows)
    for rec in failures:
        print(
            f"FAIL {rec['identity']} n={rec['n']} b={rec['b']} rel_err={rec['rel_err']:.3e}",
            file=sys.stderr,
        )
    print(f"{len(rows) - len(failures)}/{len(rows)} identities passed", file=sys.stderr)
    return 1 if failures else 0


def cmd_ng_solve(cfg: dict, out, args) -> int:
    n = int(cfg.get("n", 1))
    mp = _market(cfg, n=n, k=_auto_k(cfg, n))
    mode = _mode(cfg)
    assembler = cfg.get("assembler", "closed")
    if mode == "paper" and assembler != "closed":
        raise ConfigError("paper mode applies to the closed assembler only")
    s0 = initial_params(mp)
    traj = integrate(
        mp,
        s0,
        mp.T,
        cfg.get("dt", 1e-3),
        assembler=assembler,
        method=cfg.get("method", "rk4"),
        order=cfg.get("order", 8),
        paper_m33=(mode == "paper"),
    )
    header = ["t", "log_alpha", "log_beta"] + (["log_zeta"] if n >= 1 else [])
    rows = []
    for t, s in zip(traj.times, traj.states):
        row = [float(t), s.log_alpha, s.log_beta]
        if n >= 1:
            row.append(s.log_zeta)
        rows.append(row)
    _write_csv(out, header, rows)
    rec = mass_matrix_discrepancy(mp, s0, order=cfg.get("order", 8))
    if rec is not None:
        clean = {
            k: v if isinstance(v, (str, int)) else float(v) for k, v in rec.items()
        }
        print(json.dumps(clean), file=sys.stderr)
    return 0


def cmd_fd_solve(cfg: dict, out, args) -> int:
    d = int(cfg.get("d", 1))
    n_values = _int_list(cfg.get("N", "4"))
    if len(n_values) != 1:
        raise ConfigError("fd-solve takes a single N")
    mp = _market(cfg, n=d - 1, k=_auto_k(cfg, d - 1))
    grid = fd.Grid(d=d, N=n_values[0], L=cfg.get("L", 4.0))
    f = fd.solve(grid, mp, mp.T, cfg.get("dt"))
    mesh = np.meshgrid(*([grid.axis()] * d), indexing="ij")
    header = ["x"] + [f"y{i}" for i in range(1, d)] + ["u"]
    cols = [m.ravel() for m in mesh] + [f.values.ravel()]
    _write_csv(out, header, zip(*(c.tolist() for c in cols)))
    print(
        f"d={d} N={grid.N} steps={f.steps} dt={f.dt:.6e} clamp_tally={f.clamp_tally}",
        file=sys.stderr,
    )
    return 0


def cmd_compare(cfg: dict, out, args) -> int:
    d = int(cfg.get("d", 1))
    default_range = {1: "3:6", 2: "3:5", 3: "2:4"}[d]
    n_values = _int_list(cfg.get("N", default_range))
    mode = _mode(cfg)
    mp = _market(cfg, n=d - 1, k=_auto_k(cfg, d - 1))
    ref = _trial_reference(mp, mode)
    probe = (2.0,) * d
    rows = []
    prev = None
    for N in n_values:
        grid = fd.Grid(d=d, N=N, L=cfg.get("L", 4.0))
        f = fd.solve(grid, mp, mp.T, cfg.get("dt"))
        for metric in ("mean_abs", "mean_abs_log10", "mean_rel_pct"):
            rows.append((N, metric, fd.error_report(f, ref, metric=metric).value))
        if prev is not None:
            rep = fd.error_report(f, prev, metric="pointwise_abs", point=probe)
            rows.append((N, "self_abs_probe", rep.value))
        if d == 3:
            for xs in (1.0, 2.0, 3.0, 3.5):
                rep = fd.error_report(f, ref, metric="slice_mean", x=xs)
                rows.append((N, f"slice_mean_x{xs:g}", rep.value))
        prev = f
    wanted = cfg.get("metric")
    if wanted is not None:
        rows = [row for row in rows if row[1] == wanted]
        if not rows:
            raise ConfigError(f"metric {wanted!r} not among the emitted labels")
    _write_csv(out, ("N", "metric", "value"), rows)
    return 0


def _sweep_value(lo: float, default: float, hi: float, rel: float) -> float:
    if rel <= 1.0:
        return lo + (rel - 0.5) * 2.0 * (default - lo)
    return default + (rel - 1.0) * (hi - default)


def cmd_sweep(cfg: dict, out, args) -> int:
    d = int(cfg.get("d", 3))
    n_values = _int_list(cfg.get("N", "4"))
    if len(n_values) != 1:
        raise ConfigError("sweep takes a single N")
    mode = _mode(cfg)
    points = int(cfg.get("points", 5))
    if points < 1:
        raise ConfigError("points must be >= 1")
    # points = 1 is the consistency probe: a single run at the defaults
    rels = [1.0] if points == 1 else np.linspace(0.5, 2.0, points).tolist()
    which = cfg.get("param", "all")
    params = list(_SWEEP_RANGES) if which == "all" else [which]
    base = _market(cfg, n=d - 1, k=_auto_k(cfg, d - 1))
    grid = fd.Grid(d=d, N=n_values[0], L=cfg.get("L", 4.0))
    rows = []
    for param in params:
        if param not in _SWEEP_RANGES:
            raise ConfigError(f"unknown sweep parameter {param!r}")
        lo, default, hi = _SWEEP_RANGES[param]
        if param == "r" and getattr(args, "literal_r_range", False):
            lo, default, hi = _LITERAL_R_RANGE
        for rel in rels:
            mp = dataclasses.replace(base, **{param: _sweep_value(lo, default, hi, rel)})
            f = fd.solve(grid, mp, mp.T, cfg.get("dt"))
            ref = _trial_reference(mp, mode)
            rel_pct = fd.error_report(f, ref, metric="mean_rel_pct").value
            mabs = fd.error_report(f, ref, metric="mean_abs").value
            rows.append((param, float(rel), rel_pct, mabs))
    _write_csv(out, ("param", "rel", "mean_rel_pct", "mean_abs"), rows)
    return 0


def cmd_price(cfg: dict, out, args) -> int:
    n = int(cfg.get("n", 1))
    mode = _mode(cfg)
    x0 = float(cfg.get("x0", 1.0))
    y0 = np.full(n, float(cfg.get("y0", 1.0)))
    k_values = _float_list(cfg.get("k_list", "0,1"))
    rows = []
    worst = 0.0
    for k in k_values:
        mp_k = _market(cfg, n=n, k=k)
        mp_0 = dataclasses.replace(mp_k, n=0, k=0.0)
        q = PriceQuery(mp=mp_k, x0=x0, y0=y0)
        p_closed = indifference_price_closed(q, mode)
        left = trial_evaluator(mp_k, mode)
        right = trial_evaluator(mp_0, mode)
        p_bisect = indifference_price_bisect(left, right, q)
        v0 = right(0.0, x0, y0)
        residual = abs(left(0.0, x0 - p_closed, y0) - v0) / abs(v0)
        worst = max(worst, residual)
        rows.append((float(k), p_closed, p_bisect, residual))
    _write_csv(out, ("k", "p_closed", "p_bisect", "residual"), rows)
    if worst > _PRICE_RESIDUAL_TOL:
        print(f"worst substitution residual {worst:.3e} exceeds {_PRICE_RESIDUAL_TOL}", file=sys.stderr)
        return 1
    return 0


def cmd_mc_check(cfg: dict, out, args) -> int:
    if cfg.get("n", 0) != 0:
        raise ConfigError("mc-check validates the n = 0 exact case only")
    mp = _market(cfg, n=0, k=0.0)
    mode = _mode(cfg)
    x0 = float(cfg.get("x0", 1.0))
    mc_cfg = McConfig(
        paths=cfg.get("paths", 100_000),
        steps=cfg.get("steps", 2000),
        seed=cfg.get("seed", 42),
        sigma_mc=cfg.get("sigma_mc", 0.2),
    )
    est = simulate_expected_utility(mp, trial_policy(mp, mode), x0, np.zeros(0), mc_cfg)
    target = float(value_function(mp, 0.0, SpacePoint(x0, np.zeros(0)), mode))
    z = z_score(est.mean, est.stderr, target)
    _write_csv(
        out,
        ("mean", "stderr", "z", "neg_wealth_frac"),
        [(est.mean, est.stderr, z, est.neg_wealth_frac)],
    )
    print(f"value function {target:.12e}, z = {z:.3f}", file=sys.stderr)
    return 0 if z <= 3.0 else 1


_DISPATCH = {
    "identities": cmd_identities,
    "ng-solve": cmd_ng_solve,
    "fd-solve": cmd_fd_solve,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "price": cmd_price,
    "mc-check": cmd_mc_check,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--out", help="write CSV here instead of stdout")

    parser = argparse.ArgumentParser(prog="nghjb", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", parents=[common], help="quadrature moment identity suite")
    p.add_argument("--order", type=int)
    p.add_argument("--n", type=int)

    p = sub.add_parser("ng-solve", parents=[common], help="integrate the projected parameter system")
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--method", choices=("rk4", "euler"))
    p.add_argument("--assembler", choices=("closed", "quadrature"))
    p.add_argument("--order", type=int)
    p.add_argument("--mode", choices=("paper", "oracle"))

    p = sub.add_parser("fd-solve", parents=[common], help="finite-difference solve, emit the field")
    p.add_argument("--d", type=int, choices=(1, 2, 3))
    p.add_argument("--N", type=str, help="log2 of grid intervals")
    p.add_argument("--dt", type=float)

    p = sub.add_parser("compare", parents=[common], help="error metrics across grid resolutions")
    p.add_argument("--d", type=int, choices=(1, 2, 3))
    p.add_argument("--N", type=str, help="single N, comma list, or lo:hi range")
    p.add_argument("--mode", choices=("paper", "oracle"))
    p.add_argument("--metric", type=str, help="restrict output to one metric label")

    p = sub.add_parser("sweep", parents=[common], help="parameter sweeps on the relative [0.5,2] scale")
    p.add_argument("--d", type=int, choices=(1, 2, 3))
    p.add_argument("--N", type=str)
    p.add_argument("--param", choices=tuple(_SWEEP_RANGES) + ("all",))
    p.add_argument("--points", type=int)
    p.add_argument("--mode", choices=("paper", "oracle"))
    p.add_argument(
        "--literal-r-range",
        action="store_true",
        help="sweep r over the printed [0.25, 0.1] instead of [0.025, 0.1]",
    )

    p = sub.add_parser("price", parents=[common], help="indifference prices, closed form and bisection")
    p.add_argument("--n", type=int)
    p.add_argument("--k", dest="k_list", type=str, help="comma list of claim sizes")
    p.add_argument("--x0", type=float)
    p.add_argument("--y0", type=float)
    p.add_argument("--mode", choices=("paper", "oracle"))

    p = sub.add_parser("mc-check", parents=[common], help="Monte Carlo check of the n = 0 candidate control")
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--x0", type=float)
    p.add_argument("--mode", choices=("paper", "oracle"))

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge(args)
        out = open(args.out, "w") if args.out else sys.stdout
        try:
            return _DISPATCH[args.command](cfg, out, args)
        finally:
            if out is not sys.stdout:
                out.close()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # ConfigError, bad parameters, CFL violations
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, RuntimeError) as exc:  # solver failures
        print(f"solver error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
