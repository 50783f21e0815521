"""Command-line experiment driver.

Subcommands: simulate | estimate-deck | recover | lowerbound |
certificate | verify.  Every command takes an optional --config JSON
file whose keys mirror the flags one-to-one; explicit flags override
config values.  Results are machine-readable JSON on stdout (plus
optional output files) and carry provenance: the sha256 of the merged
config, the seed, and the library version.  Exit codes: 0 success,
1 check failure, 2 input error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction

from . import __version__
from .channel import ChannelParams, read_traces, sample_traces, write_traces
from .deck import estimate_deck
from .lower_bound import (
    PBDSpec,
    build_hard_pair,
    exact_trace_tv,
    krawtchouk_pmf,
    pair_report,
    roos_term_check,
    verify_moment_equality,
)
from .model import DomainError, Population, decimal_str, format_rational, parse_rational, tv_distance
from .poly import chebyshev_T, poly_norm1, verify_h_properties
from .recovery import RecoveryConfig, recover, required_sample_size
from .separation import build_certificate, pascal_coefficients, verify_IDd


def _merge_config(args: argparse.Namespace, keys) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise DomainError("config file must hold a JSON object")
        unknown = set(loaded) - set(keys)
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in keys:
        val = getattr(args, key.replace("-", "_"), None)
        if val is not None:
            cfg[key] = val
    return cfg


def _provenance(cfg: dict) -> dict:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return {
        "config_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "seed": cfg.get("seed"),
        "version": __version__,
    }


def _emit(obj: dict, path=None) -> None:
    text = json.dumps(obj, indent=2)
    print(text)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _require(cfg: dict, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise DomainError(f"missing required parameters: {missing}")


def _rat(cfg, key):
    return parse_rational(cfg[key])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

SIMULATE_KEYS = ("population", "count", "delta", "seed", "out")


def cmd_simulate(args) -> int:
    cfg = _merge_config(args, SIMULATE_KEYS)
    cfg.setdefault("seed", 0)
    _require(cfg, "population", "count", "delta", "out")
    X = Population.load(cfg["population"])
    params = ChannelParams(delta=float(_rat(cfg, "delta")), seed=int(cfg["seed"]))
    batch = sample_traces(X, params, int(cfg["count"]))
    write_traces(cfg["out"], batch)
    lengths = [len(t) for t in batch.traces]
    _emit(
        {
            "command": "simulate",
            "count": len(batch.traces),
            "mean_length": decimal_str(Fraction(sum(lengths), max(len(lengths), 1))),
            "out": cfg["out"],
            "provenance": _provenance(cfg),
        }
    )
    return 0


ESTIMATE_KEYS = ("traces", "k", "out")


def cmd_estimate_deck(args) -> int:
    cfg = _merge_config(args, ESTIMATE_KEYS)
    _require(cfg, "traces", "k")
    batch = read_traces(cfg["traces"])
    deck = estimate_deck(batch, int(cfg["k"]), batch.params.delta_exact)
    cfg["seed"] = batch.params.seed
    obj = deck.to_json_obj()
    obj["provenance"] = _provenance(cfg)
    _emit(obj, cfg.get("out"))
    return 0


RECOVER_KEYS = ("traces", "ell", "k", "xi", "multiplier", "truth", "out")


def cmd_recover(args) -> int:
    cfg = _merge_config(args, RECOVER_KEYS)
    cfg.setdefault("multiplier", 1)
    _require(cfg, "traces", "ell", "k", "xi")
    batch = read_traces(cfg["traces"])
    rconfig = RecoveryConfig(
        ell=int(cfg["ell"]),
        k=int(cfg["k"]),
        xi=parse_rational(cfg["xi"]),
        sample_multiplier=int(cfg["multiplier"]),
        seed=batch.params.seed,
    )
    result = recover(batch, rconfig)
    cfg["seed"] = batch.params.seed
    obj = {
        "command": "recover",
        "estimate": result.estimate.to_json_obj(),
        "achieved_deck_distance": format_rational(result.achieved_deck_distance),
        "achieved_deck_distance_decimal": decimal_str(result.achieved_deck_distance),
        "candidates_scanned": result.candidates_scanned,
        "samples_used": result.samples_used,
        "samples_recommended": required_sample_size(
            rconfig.k, rconfig.xi, batch.params.delta_exact, rconfig.sample_multiplier
        ),
        "provenance": _provenance(cfg),
    }
    if cfg.get("truth"):
        truth = Population.load(cfg["truth"])
        tv = tv_distance(result.estimate, truth)
        obj["tv_to_truth"] = format_rational(tv)
        obj["tv_to_truth_decimal"] = decimal_str(tv)
    _emit(obj, cfg.get("out"))
    return 0


def _fit_slope(points) -> float:
    """Least-squares slope of log(tv) against log(n)."""
    xs = [math.log(n) for n, _ in points]
    ys = [math.log(float(tv)) for _, tv in points]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    num = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    den = sum((x - mx) ** 2 for x in xs)
    return num / den


LOWERBOUND_KEYS = ("ell", "delta", "n-grid", "out", "csv")


def cmd_lowerbound(args) -> int:
    cfg = _merge_config(args, LOWERBOUND_KEYS)
    cfg.setdefault("delta", "1/2")
    _require(cfg, "ell", "n-grid")
    ell = int(cfg["ell"])
    if ell < 1:
        raise DomainError("ell must be at least 1")
    grid = cfg["n-grid"]
    if isinstance(grid, str):
        grid = [int(x) for x in grid.split(",")]
    if any(n % 2 == 0 for n in grid):
        raise DomainError("every n in the grid must be odd")
    delta = _rat(cfg, "delta")
    rho = 1 - delta
    rows = []
    certs = []
    for n in sorted(grid):
        pair = build_hard_pair(ell, n, rho)
        if not verify_moment_equality(pair, ell):
            return 1
        tv = exact_trace_tv(pair.pi_S, pair.pi_T, delta)
        rows.append((n, tv))
        certs.append(pair_report(pair, delta))
    obj = {
        "command": "lowerbound",
        "ell": ell,
        "delta": format_rational(delta),
        "grid": [
            {
                "n": n,
                "tv": format_rational(tv),
                "tv_decimal": decimal_str(tv),
                "normalized": float(tv) * n ** ((ell + 1) / 2),
            }
            for n, tv in rows
        ],
        "strictly_decreasing": all(a[1] > b[1] for a, b in zip(rows, rows[1:])),
        "log_log_slope": _fit_slope(rows) if len(rows) > 1 else None,
        "pairs": certs,
        "provenance": _provenance(cfg),
    }
    _emit(obj, cfg.get("out"))
    if cfg.get("csv"):
        with open(cfg["csv"], "w") as fh:
            fh.write("n,tv,tv_decimal\n")
            for n, tv in rows:
                fh.write(f"{n},{format_rational(tv)},{decimal_str(tv)}\n")
    return 0 if obj["strictly_decreasing"] else 1


CERTIFICATE_KEYS = ("x", "y", "seed", "out")


def cmd_certificate(args) -> int:
    cfg = _merge_config(args, CERTIFICATE_KEYS)
    cfg.setdefault("seed", 0)
    _require(cfg, "x", "y")
    X = Population.load(cfg["x"])
    Y = Population.load(cfg["y"])
    cert = build_certificate(X, Y, seed=int(cfg["seed"]))
    obj = cert.to_json_obj()
    obj["provenance"] = _provenance(cfg)
    _emit(obj, cfg.get("out"))
    return 0


VERIFY_KEYS = ("suite", "m", "cases", "seed", "out")


def _suite_identities():
    checks = []
    for r in range(9):
        v = pascal_coefficients(r)
        ok = all(
            sum(c * math.comb(t, b) for b, c in enumerate(v)) == t**r for t in range(21)
        )
        checks.append({"check": f"pascal r={r}", "pass": ok})
    for n in range(2, 9):
        for k in range(2, min(n, 5) + 1):
            for d in (1, 2):
                if d > k:
                    continue
                ok = True
                for t in _sorted_tuples(n, d):
                    for beta in _sorted_betas(k - d, d):
                        ok = ok and verify_IDd(beta, n, k, t)
                checks.append({"check": f"IDd n={n} k={k} d={d}", "pass": ok})
    return checks


def _sorted_tuples(n, d):
    from itertools import combinations

    return combinations(range(n), d)


def _sorted_betas(total, d):
    from itertools import product as iproduct

    return [b for b in iproduct(range(total + 1), repeat=d) if sum(b) <= total]


def _suite_h(m: int):
    report = verify_h_properties(m)
    cheb_ok = all(poly_norm1(chebyshev_T(r)) <= 3**r for r in range(31))
    return [
        {"check": "chebyshev norm1 <= 3^r, r <= 30", "pass": cheb_ok},
        {
            "check": f"h properties m={m}",
            "pass": not report.violations,
            "report": {
                "m": report.m,
                "degree": report.degree,
                "norm1": format_rational(report.norm1),
                "norm1_product_bound": format_rational(report.norm1_product_bound),
                "neg_constant": report.neg_constant,
                "violations": len(report.violations),
            },
        },
    ]


def _suite_krawtchouk(cases: int, seed: int):
    from .channel import counter_rand64

    checks = []
    for case in range(cases):
        nprime = counter_rand64(seed, case, 0) % 7 + 2
        probs = tuple(
            Fraction(counter_rand64(seed, case, i + 1) % 33, 32) for i in range(nprime)
        )
        p = Fraction(counter_rand64(seed, case, 99) % 31 + 1, 32)
        spec = PBDSpec(probs=probs, p=p)
        ok = True
        try:
            for r in range(nprime + 1):
                krawtchouk_pmf(spec, r)
            for t in range(1, nprime + 1):
                if not roos_term_check(spec, t).holds:
                    ok = False
        except AssertionError:
            ok = False
        checks.append({"check": f"krawtchouk case {case} n'={nprime}", "pass": ok})
    return checks


def cmd_verify(args) -> int:
    cfg = _merge_config(args, VERIFY_KEYS)
    cfg.setdefault("seed", 0)
    cfg.setdefault("cases", 50)
    cfg.setdefault("m", 16)
    _require(cfg, "suite")
    suite = cfg["suite"]
    if suite == "identities":
        checks = _suite_identities()
    elif suite == "h-properties":
        checks = _suite_h(int(cfg["m"]))
    elif suite == "krawtchouk":
        checks = _suite_krawtchouk(int(cfg["cases"]), int(cfg["seed"]))
    else:
        raise DomainError(f"unknown suite: {suite!r}")
    all_pass = all(c["pass"] for c in checks)
    _emit(
        {
            "command": "verify",
            "suite": suite,
            "checks": checks,
            "all_pass": all_pass,
            "provenance": _provenance(cfg),
        },
        cfg.get("out"),
    )
    return 0 if all_pass else 1


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="JSON config file; flags override its keys")
    p.add_argument("--out", help="also write the result JSON here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deckrec",
        description="population recovery from deletion-channel traces",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample traces from a population file")
    _add_common(p)
    p.add_argument("--population", help="population JSON file")
    p.add_argument("--count", type=int)
    p.add_argument("--delta", help="deletion probability (rational or decimal)")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate-deck", help="estimate a k-deck from a trace file")
    _add_common(p)
    p.add_argument("--traces")
    p.add_argument("--k", type=int)
    p.set_defaults(func=cmd_estimate_deck)

    p = sub.add_parser("recover", help="recover a population from a trace file")
    _add_common(p)
    p.add_argument("--traces")
    p.add_argument("--ell", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--xi", help="accuracy parameter (rational)")
    p.add_argument("--multiplier", type=int)
    p.add_argument("--truth", help="optional ground-truth population JSON")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("lowerbound", help="hard pairs and exact trace TV over an n-grid")
    _add_common(p)
    p.add_argument("--ell", type=int)
    p.add_argument("--delta")
    p.add_argument("--n-grid", dest="n_grid", help="comma-separated odd n values")
    p.add_argument("--csv", help="write (n, tv) rows here")
    p.set_defaults(func=cmd_lowerbound)

    p = sub.add_parser("certificate", help="separation certificate for two populations")
    _add_common(p)
    p.add_argument("--x", help="first population JSON file")
    p.add_argument("--y", help="second population JSON file")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_certificate)

    p = sub.add_parser("verify", help="run an identity/property suite")
    _add_common(p)
    p.add_argument("--suite", choices=["identities", "h-properties", "krawtchouk"])
    p.add_argument("--m", type=int)
    p.add_argument("--cases", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, FileNotFoundError, json.JSONDecodeError, KeyError, OSError) as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
