"""Command-line front end: JSON configs in, JSON reports out.

Subcommands::

    allocate     closed-form allocation report for one strategy
    nash         equilibrium search (exhaustive or best-response dynamics)
    validate     closed forms vs Monte Carlo oracle (4 standard errors)
    sensitivity  shock and weight derivatives, optionally vs finite differences
    estimate     sd + correlation of daily log-returns from a price table
    reproduce    re-run an embedded published scenario

Exit codes: 0 success, 2 input error, 3 non-convergence, 4 validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import MarketConfig, estimate_moments, load_prices
from .disjoint import Partition, allocation_disjoint
from .equilibrium import (
    brute_force_nash_disjoint,
    fictitious_play_disjoint,
    fictitious_play_overlap,
)
from .errors import GroupRiskError, NotConverged, ParseError
from .fixtures import EXAMPLES, reproduce
from .market import GaussianMarket
from .montecarlo import budget_check, mean_and_se, sample_X, tilt_weights, tilted_estimate, z_score
from .overlap import (
    ShockVector,
    WeightMatrix,
    allocation_overlap,
    fd_local_causal_responsibility,
    fd_marginal_group_risk,
    fd_marginal_risk_allocation,
    fd_weight_sensitivity,
    local_causal_responsibility,
    marginal_group_risk,
    marginal_risk_allocation,
    weight_sensitivity,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NOT_CONVERGED = 3
EXIT_VALIDATION = 4


def parse_partition(text: str, n: int) -> Partition:
    """Parse ``"1,3|2,4"`` (1-based banks, ``|`` between blocks)."""
    blocks: list[list[int]] = []
    seen: set[int] = set()
    for part in text.split("|"):
        block: list[int] = []
        for tok in part.split(","):
            tok = tok.strip()
            if not tok:
                raise ParseError(f"empty bank index in partition {text!r}")
            try:
                idx = int(tok)
            except ValueError as exc:
                raise ParseError(f"bad bank index {tok!r} in partition") from exc
            if not 1 <= idx <= n:
                raise ParseError(f"bank index {idx} out of range 1..{n}")
            if idx in seen:
                raise ParseError(f"duplicate bank index {idx} in partition")
            seen.add(idx)
            block.append(idx - 1)
        blocks.append(block)
    if len(seen) != n:
        missing = sorted(set(range(1, n + 1)) - {i + 1 for b in blocks for i in b})
        raise ParseError(f"partition must cover every bank; missing {missing}")
    return Partition.from_blocks(blocks, n)


def _load_weights(spec: str, n: int, h: int, seed: int) -> WeightMatrix:
    if spec == "uniform":
        return WeightMatrix.uniform(n, h)
    if spec == "random":
        return WeightMatrix.random(n, h, np.random.default_rng(seed))
    try:
        with open(spec) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read weights {spec}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"weights {spec} line {exc.lineno}: {exc.msg}") from exc
    if isinstance(raw, dict) and "w" in raw:
        raw = raw["w"]
    return WeightMatrix(np.asarray(raw, dtype=float))


def _parse_shock(spec: str, market: GaussianMarket) -> ShockVector:
    if spec == "X":
        return ShockVector.equal_to_risk(market)
    if spec.lstrip().startswith("{"):
        raw = json.loads(spec)
    else:
        with open(spec) as fh:
            raw = json.load(fh)
    if "z" in raw:
        return ShockVector.deterministic_shock(np.asarray(raw["z"], dtype=float))
    if "mean" in raw:
        n = market.n
        return ShockVector.gaussian(
            np.asarray(raw["mean"], dtype=float),
            np.asarray(raw.get("cov", np.zeros((n, n))), dtype=float),
            np.asarray(raw["cov_xz"], dtype=float) if "cov_xz" in raw else None,
        )
    raise ParseError("shock must be 'X', {'z': [...]}, or {'mean': ..., 'cov': ..., 'cov_xz': ...}")


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)!r}")


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_allocate(args) -> int:
    cfg = MarketConfig.load(args.config)
    market = cfg.to_market()
    echo = {"config": cfg.to_dict(), "seed": cfg.seed}
    if args.mode == "disjoint":
        if not args.partition:
            raise ParseError("--mode disjoint requires --partition")
        partition = parse_partition(args.partition, market.n)
        report = allocation_disjoint(market, partition)
        payload = {"mode": "disjoint", "partition": str(partition), **report.to_dict(), **echo}
    else:
        if not args.weights:
            raise ParseError("--mode overlap requires --weights")
        w = _load_weights(args.weights, market.n, cfg.h, cfg.seed)
        report = allocation_overlap(market, w)
        payload = {"mode": "overlap", "weights": w.w.tolist(), **report.to_dict(), **echo}
    _emit(payload, args.out)
    return EXIT_OK


def cmd_nash(args) -> int:
    cfg = MarketConfig.load(args.config)
    market = cfg.to_market()
    seed0 = args.seed if args.seed is not None else cfg.seed
    max_iter = args.max_iter or cfg.max_iter
    if args.h:
        cfg.h = args.h
    if args.grid:
        cfg.grid = args.grid
    results = []
    rc = EXIT_OK
    if args.method == "brute":
        if args.mode != "disjoint":
            raise ParseError("exhaustive search is defined for --mode disjoint only")
        partitions = brute_force_nash_disjoint(market)
        payload = {
            "mode": "disjoint",
            "method": "brute",
            "equilibria": [[list(map(lambda i: i + 1, b)) for b in p.blocks] for p in partitions],
            "count": len(partitions),
        }
        _emit(payload, args.out)
        return EXIT_OK

    seen = set()
    for k in range(args.seeds):
        seed = seed0 + k
        try:
            if args.mode == "disjoint":
                res = fictitious_play_disjoint(market, seed, max_iter)
            else:
                w0 = cfg.init_weights
                if isinstance(w0, list):
                    w0 = WeightMatrix(np.asarray(w0, dtype=float))
                res = fictitious_play_overlap(market, cfg.h, w0, seed, max_iter, grid=cfg.grid)
        except NotConverged as exc:
            res = exc.result
            rc = EXIT_NOT_CONVERGED
        entry = res.to_dict()
        key = json.dumps(entry["terminal"])
        if key not in seen:
            seen.add(key)
            results.append(entry)
    payload = {"mode": args.mode, "method": "play", "runs": args.seeds, "terminals": results}
    _emit(payload, args.out)
    return rc


def _compare(name: str, closed: float, estimate: float, se: float) -> dict:
    z = z_score(closed, estimate, se)
    return {
        "quantity": name,
        "closed_form": closed,
        "estimate": estimate,
        "std_error": se,
        "z": z,
        "passed": abs(z) <= 4.0,
    }


def cmd_validate(args) -> int:
    cfg = MarketConfig.load(args.config)
    market = cfg.to_market()
    samples_n = args.samples or cfg.samples
    x = sample_X(market, samples_n, cfg.seed)
    rows: list[dict] = []
    if args.mode == "disjoint":
        if not args.partition:
            raise ParseError("--mode disjoint requires --partition")
        strategy = parse_partition(args.partition, market.n)
        report = allocation_disjoint(market, strategy)
        from .disjoint import sample_optimal_Y

        y = sample_optimal_Y(market, strategy, x)
        for m, blk in enumerate(strategy.blocks):
            a = np.zeros(market.n)
            a[list(blk)] = 1.0
            bm = report.beta_groups[m]
            z0_est, z0_se = mean_and_se(tilt_weights(x, a, bm))
            d_est = bm * np.log(market.beta_total / -market.budget * z0_est)
            d_se = bm * z0_se / z0_est
            rows.append(_compare(f"d[{m + 1}]", float(report.d[m]), float(d_est), float(d_se)))
            for bank in blk:
                est, se = tilted_estimate(x, a, bm, y[:, bank])
                rows.append(_compare(f"rho[{bank + 1}]", float(report.rho[bank]), est, se))
    else:
        if not args.weights:
            raise ParseError("--mode overlap requires --weights")
        strategy = _load_weights(args.weights, market.n, cfg.h, cfg.seed)
        report = allocation_overlap(market, strategy)
        for j in range(strategy.h):
            col = strategy.w[:, j]
            members = strategy.members(j)
            if members.size == 0:
                continue
            bj = report.beta_groups[j]
            z0_est, z0_se = mean_and_se(tilt_weights(x, col, bj))
            d_est = bj * np.log(report.beta / -market.budget * z0_est)
            d_se = bj * z0_se / z0_est
            rows.append(_compare(f"d[{j + 1}]", float(report.d[j]), float(d_est), float(d_se)))
            s = x @ col
            for bank in members:
                y_ij = -col[bank] * x[:, bank] + (s + report.d[j]) / (market.alpha[bank] * bj)
                est, se = tilted_estimate(x, col, bj, y_ij)
                rows.append(
                    _compare(f"rho[{bank + 1},{j + 1}]", float(report.rho_ij[bank, j]), est, se)
                )
    est, se = budget_check(market, strategy, x, d_offset=args.perturb_d)
    rows.append(_compare("budget", market.budget, est, se))
    passed = all(r["passed"] for r in rows)
    payload = {
        "samples": samples_n,
        "seed": cfg.seed,
        "comparisons": rows,
        "passed": passed,
    }
    _emit(payload, args.out)
    return EXIT_OK if passed else EXIT_VALIDATION


def cmd_sensitivity(args) -> int:
    cfg = MarketConfig.load(args.config)
    market = cfg.to_market()
    if not args.weights:
        raise ParseError("sensitivity requires --weights (overlap mode)")
    w = _load_weights(args.weights, market.n, cfg.h, cfg.seed)
    shock = _parse_shock(args.shock, market)
    rows = []
    for j in range(w.h):
        members = w.members(j)
        if members.size == 0:
            continue
        group_row = {
            "group": j + 1,
            "marginal_group_risk": marginal_group_risk(market, w, j, shock),
        }
        if args.fd_check:
            fd = fd_marginal_group_risk(market, w, j, shock)
            group_row["marginal_group_risk_fd"] = fd
            group_row["marginal_group_risk_absdiff"] = abs(group_row["marginal_group_risk"] - fd)
        rows.append(group_row)
        for i in members:
            entry = {
                "bank": int(i) + 1,
                "group": j + 1,
                "local_causal_responsibility": local_causal_responsibility(market, w, int(i), j, shock),
                "marginal_risk_allocation": marginal_risk_allocation(market, w, int(i), j, shock),
                "weight_sensitivity": weight_sensitivity(market, w, int(i), j),
            }
            if args.fd_check:
                pairs = [
                    ("local_causal_responsibility", fd_local_causal_responsibility(market, w, int(i), j, shock)),
                    ("marginal_risk_allocation", fd_marginal_risk_allocation(market, w, int(i), j, shock)),
                    ("weight_sensitivity", fd_weight_sensitivity(market, w, int(i), j)),
                ]
                for name, fd in pairs:
                    entry[f"{name}_fd"] = fd
                    entry[f"{name}_absdiff"] = abs(entry[name] - fd)
            rows.append(entry)
    _emit({"shock": args.shock, "rows": rows, "seed": cfg.seed}, args.out)
    return EXIT_OK


def cmd_estimate(args) -> int:
    table = load_prices(args.prices)
    sd, corr = estimate_moments(table)
    _emit({"names": table.names, "sd": sd.tolist(), "corr": corr.tolist()}, args.out)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    report = reproduce(args.example)
    _emit(report, args.out)
    return EXIT_OK if report["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grouprisk",
        description="Fair systemic-risk allocation and group-formation equilibria",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="market config JSON")
        p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("allocate", help="closed-form allocation for one strategy")
    common(p)
    p.add_argument("--mode", choices=("disjoint", "overlap"), required=True)
    p.add_argument("--partition", help="blocks like '1,3|2,4' (1-based)")
    p.add_argument("--weights", help="weights JSON path, or 'uniform'/'random'")

    p = sub.add_parser("nash", help="equilibrium search")
    common(p)
    p.add_argument("--mode", choices=("disjoint", "overlap"), required=True)
    p.add_argument("--method", choices=("brute", "play"), default="play")
    p.add_argument("--seeds", type=int, default=1, help="number of dynamics runs")
    p.add_argument("--seed", type=int, help="first seed (default: config seed)")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--h", type=int, dest="h")
    p.add_argument("--grid", type=int, help="deviation-scan resolution (default: config)")

    p = sub.add_parser("validate", help="closed forms vs Monte Carlo oracle")
    common(p)
    p.add_argument("--mode", choices=("disjoint", "overlap"), required=True)
    p.add_argument("--partition")
    p.add_argument("--weights")
    p.add_argument("--samples", type=int)
    p.add_argument(
        "--perturb-d", type=float, default=0.0, dest="perturb_d",
        help="shift every group constant (negative control; nonzero must fail)",
    )

    p = sub.add_parser("sensitivity", help="shock and weight derivatives")
    common(p)
    p.add_argument("--weights", required=True)
    p.add_argument("--shock", required=True, help="'X', inline JSON, or a JSON file")
    p.add_argument("--fd-check", action="store_true", dest="fd_check")

    p = sub.add_parser("estimate", help="sd + correlation from a price CSV")
    p.add_argument("--prices", required=True)
    p.add_argument("--out")

    p = sub.add_parser("reproduce", help="re-run an embedded published scenario")
    p.add_argument("--example", required=True, help=f"one of {', '.join(EXAMPLES)}")
    p.add_argument("--out")
    return parser


_HANDLERS = {
    "allocate": cmd_allocate,
    "nash": cmd_nash,
    "validate": cmd_validate,
    "sensitivity": cmd_sensitivity,
    "estimate": cmd_estimate,
    "reproduce": cmd_reproduce,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except GroupRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
