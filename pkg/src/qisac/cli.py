"""Command-line front end.

Every subcommand writes deterministic CSV data files plus a JSON manifest
recording the fully resolved parameters, the seed, the output names and
the tool version; re-running with the same flags and seed reproduces the
CSV bytes exactly.

Exit codes: 0 success, 2 configuration error, 3 protocol abort (only with
``protocol --strict``).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, estimate, metrics, protocol, states
from .channel import Adversary

DEFAULT_THETA_TRUE = 0.8 * np.pi


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n")


def write_manifest(out_dir: Path, subcommand: str, params: dict, outputs: list[str],
                   extras: dict | None = None, wall_time: float = 0.0) -> Path:
    manifest = {
        "subcommand": subcommand,
        "params": params,
        "outputs": outputs,
        "tool_version": __version__,
        "wall_time_s": round(wall_time, 3),
    }
    if extras:
        manifest["results"] = extras
    path = out_dir / f"{subcommand.replace('-', '_')}_manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_table1(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    thetas = np.linspace(0.0, 2.0 * np.pi, args.points, endpoint=False)
    rows = []
    for theta in thetas:
        for bit, state_name in ((0, "psi_minus"), (1, "phi_minus")):
            ket = states.probe_state(bit, args.n_passes, theta)
            for obs in ("O1", "O2"):
                probs = states.detector_distribution(ket, obs)
                rows.append([theta, args.n_passes, state_name, obs, *probs])
    write_csv(out / "table1.csv",
              ["theta", "n_passes", "state", "observable", "p1", "p2", "p3", "p4"], rows)
    write_manifest(out, "table1",
                   {"points": args.points, "n_passes": args.n_passes},
                   ["table1.csv"], wall_time=time.perf_counter() - t0)
    return 0


def cmd_capacity(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    es = np.linspace(0.0, args.e_max, args.points)
    rows = [[e, metrics.secrecy_capacity_qisac(e), metrics.secrecy_capacity_twostep(e)]
            for e in es]
    write_csv(out / "capacity.csv", ["e", "cs_qisac", "cs_twostep"], rows)
    extras = {
        "threshold_qisac": metrics.threshold_root(metrics.secrecy_capacity_qisac, 0.01, args.e_max),
        "threshold_twostep": metrics.threshold_root(metrics.secrecy_capacity_twostep, 0.01, args.e_max),
    }
    write_manifest(out, "capacity", {"e_max": args.e_max, "points": args.points},
                   ["capacity.csv"], extras, time.perf_counter() - t0)
    return 0


def cmd_fisher(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    es = np.linspace(0.0, args.e_max, args.points)
    rows = [[e, metrics.fisher_bob_bound(e, args.n_passes), metrics.fisher_eve(e, args.n_passes)]
            for e in es]
    write_csv(out / "fisher.csv", ["e", "f_bob_bound", "f_eve"], rows)
    crossing = metrics.threshold_root(
        lambda e: metrics.fisher_bob_bound(e, args.n_passes) - metrics.fisher_eve(e, args.n_passes),
        0.01, args.e_max)
    write_manifest(out, "fisher",
                   {"n_passes": args.n_passes, "e_max": args.e_max, "points": args.points},
                   ["fisher.csv"], {"threshold_fisher": crossing}, time.perf_counter() - t0)
    return 0


def cmd_cfi_noisy(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    thetas = np.linspace(0.0, 2.0 * np.pi, args.points, endpoint=False)
    rows = [[t, metrics.cfi_noisy("O1", args.e, t, args.n_passes),
             metrics.cfi_noisy("O2", args.e, t, args.n_passes)] for t in thetas]
    write_csv(out / "cfi_noisy.csv", ["theta", "f_o1", "f_o2"], rows)
    write_manifest(out, "cfi-noisy",
                   {"e": args.e, "n_passes": args.n_passes, "points": args.points},
                   ["cfi_noisy.csv"], wall_time=time.perf_counter() - t0)
    return 0


def _normalized_curve(table: estimate.CountTable, grid: np.ndarray) -> np.ndarray:
    ll = estimate.log_likelihood(table, grid)
    return np.exp(ll - ll.max())


def cmd_likelihood(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    rng = np.random.default_rng(args.seed)
    table = estimate.sample_count_table(args.pairs, args.theta_true, args.n_passes,
                                        args.split, rng)
    grid = np.linspace(0.0, 2.0 * np.pi, args.points, endpoint=False)
    zeros = np.zeros(4, dtype=np.int64)
    variants = {
        "l_obs1": estimate.CountTable(table.n_passes, table.o1_single, zeros,
                                      table.o1_multi, zeros),
        "l_obs2": estimate.CountTable(table.n_passes, zeros, table.o2_single,
                                      zeros, table.o2_multi),
        "l_single": estimate.CountTable(table.n_passes, table.o1_single, table.o2_single,
                                        zeros, zeros),
        "l_multi": estimate.CountTable(table.n_passes, zeros, zeros,
                                       table.o1_multi, table.o2_multi),
        "l_total": table,
    }
    curves = {name: _normalized_curve(tab, grid) for name, tab in variants.items()}
    rows = [[g, *[curves[name][i] for name in variants]] for i, g in enumerate(grid)]
    write_csv(out / "likelihood.csv", ["theta", *variants.keys()], rows)
    extras = {}
    if table.total():
        extras["mle_theta"] = estimate.mle_combined(table).theta_est
    write_manifest(out, "likelihood",
                   {"pairs": args.pairs, "split": args.split, "n_passes": args.n_passes,
                    "theta_true": args.theta_true, "points": args.points, "seed": args.seed},
                   ["likelihood.csv"], extras, time.perf_counter() - t0)
    return 0


def cmd_bias(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    pair_counts = [int(x) for x in args.pairs.split(",")]
    grid = np.linspace(0.0, 2.0 * np.pi, args.points, endpoint=False)
    rows = []
    for i, nu in enumerate(pair_counts):
        table = estimate.monte_carlo_bias(nu, grid, args.repeats, n_passes=args.n_passes,
                                          estimator=args.estimator, seed=args.seed + i)
        rows.extend([r["theta"], r["n"], r["value"], r["stderr"]] for r in table.rows())
    write_csv(out / "bias.csv", ["theta", "n", "value", "stderr"], rows)
    write_manifest(out, "bias",
                   {"pairs": pair_counts, "repeats": args.repeats, "points": args.points,
                    "n_passes": args.n_passes, "estimator": args.estimator, "seed": args.seed},
                   ["bias.csv"], wall_time=time.perf_counter() - t0)
    return 0


def cmd_tradeoff(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    pes = np.linspace(args.p_e_min, args.p_e_max, args.points)
    rows = []
    for p_e in pes:
        variance = 1.0 / (p_e * args.m * args.n_passes ** 2)
        p1 = metrics.detection_probability("double_cnot", p_e, m=args.m)
        p2 = metrics.detection_probability("intercept_resend", p_e, k=args.k)
        rows.append([p_e, variance, p1, p2])
    write_csv(out / "tradeoff.csv", ["p_e", "variance", "p_det1", "p_det2"], rows)
    write_manifest(out, "tradeoff",
                   {"m": args.m, "k": args.k, "n_passes": args.n_passes,
                    "p_e_min": args.p_e_min, "p_e_max": args.p_e_max, "points": args.points},
                   ["tradeoff.csv"], wall_time=time.perf_counter() - t0)
    return 0


def cmd_optimal_n(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    pair_counts = [int(x) for x in args.pairs.split(",")]
    n_values = [int(x) for x in args.n_values.split(",")]
    grid = np.linspace(0.0, 2.0 * np.pi, args.points, endpoint=False)
    scan = estimate.optimal_n_scan(pair_counts, n_values, grid, args.repeats,
                                   single_pass_fraction=args.split, seed=args.seed)
    outputs = []
    extras = {}
    for nu in pair_counts:
        heat_name = f"optimal_n_heatmap_{nu}.csv"
        rows = [[n, theta, scan.heatmaps[nu][i, j]]
                for i, n in enumerate(n_values) for j, theta in enumerate(grid)]
        write_csv(out / heat_name, ["n_passes", "theta", "bias"], rows)
        scatter_name = f"optimal_n_scatter_{nu}.csv"
        write_csv(out / scatter_name, ["n_passes", "mean_bias"],
                  [[n, scan.scatter[nu][i]] for i, n in enumerate(n_values)])
        outputs.extend([heat_name, scatter_name])
        extras[str(nu)] = {
            "best_n": scan.best_n[nu][0],
            "runner_up_n": scan.best_n[nu][1],
            "single_pass_reference": scan.single_pass_reference[nu],
        }
    write_manifest(out, "optimal-n",
                   {"pairs": pair_counts, "n_values": n_values, "points": args.points,
                    "repeats": args.repeats, "split": args.split, "seed": args.seed},
                   outputs, extras, time.perf_counter() - t0)
    return 0


def cmd_precision(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    n_check = int(np.floor((1.0 - args.p_e) * args.m / 2.0))
    nu = args.m - 2 * n_check
    predicted = 1.0 / np.sqrt(args.p_e * args.m * args.n_passes ** 2)
    rng = np.random.default_rng(args.seed)
    rows = []
    errors = []
    for rep in range(args.repeats):
        table = estimate.sample_count_table(nu, args.theta_true, args.n_passes,
                                            args.split, rng)
        res = estimate.mle_combined(table)
        err = float(estimate.wrap_error(res.theta_est - args.theta_true))
        rows.append([rep, res.theta_est, err])
        errors.append(err)
    errors = np.asarray(errors)
    empirical_std = float(np.sqrt((errors ** 2).mean()))
    write_csv(out / "precision.csv", ["repeat", "estimate", "error"], rows)
    write_manifest(out, "precision",
                   {"p_e": args.p_e, "m": args.m, "n_passes": args.n_passes,
                    "split": args.split, "repeats": args.repeats,
                    "theta_true": args.theta_true, "seed": args.seed},
                   ["precision.csv"],
                   {"predicted_delta_theta": predicted, "empirical_std": empirical_std,
                    "message_pairs": nu},
                   time.perf_counter() - t0)
    return 0


# ---------------------------------------------------------------------------
# Protocol runs from a config file
# ---------------------------------------------------------------------------

_CONFIG_TYPES = {
    "m": int, "p_e": float, "theta_true": float, "n_passes": int, "p_o": float,
    "single_pass_fraction": float, "noise_e": float,
    "qber_threshold_1": float, "qber_threshold_2": float,
    "guard_delta": float, "seed": int,
    "adversary": str, "adversary_lambdas": str, "adversary_intercepts": int,
}


def parse_config_file(path: str) -> protocol.ProtocolConfig:
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in _CONFIG_TYPES:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_TYPES[key](val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from None
    kind = values.pop("adversary", "none")
    lambdas = values.pop("adversary_lambdas", None)
    intercepts = values.pop("adversary_intercepts", 0)
    if kind == "collective":
        if lambdas is None:
            raise ValueError(f"{path}: collective adversary needs adversary_lambdas")
        adversary = Adversary.collective([float(x) for x in lambdas.split(",")])
    elif kind == "intercept_resend":
        adversary = Adversary.intercept_resend(intercepts)
    elif kind in ("none", "double_cnot"):
        adversary = Adversary(kind=kind)
    else:
        raise ValueError(f"{path}: unknown adversary {kind!r}")
    return protocol.ProtocolConfig(adversary=adversary, **values)


def read_message_file(path: str) -> list[int]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return [int(ch) for ch in text if ch in "0123"]


def cmd_protocol(args) -> int:
    t0 = time.perf_counter()
    out = _out_dir(args)
    try:
        config = parse_config_file(args.config)
        message = read_message_file(args.message)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.twostep:
            transcript = protocol.run_twostep_baseline(config, message)
        else:
            transcript = protocol.run_qisac(config, message)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    transcript.write_records(out / "transcript.csv")
    transcript.write_summary(out / "summary.json")
    write_manifest(out, "protocol",
                   {"config": config.as_dict(), "message_bits": len(message),
                    "twostep": bool(args.twostep)},
                   ["transcript.csv", "summary.json"],
                   {"aborted": transcript.aborted, "abort_stage": transcript.abort_stage},
                   time.perf_counter() - t0)
    if transcript.aborted:
        print(f"protocol aborted at stage {transcript.abort_stage}", file=sys.stderr)
        if args.strict:
            return 3
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qisac",
        description="Deterministic simulator and analytics for the integrated "
                    "sensing and communication protocol.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default=".")

    p = sub.add_parser("table1", help="detector response probabilities on a phase grid")
    common(p)
    p.add_argument("--points", type=int, default=25)
    p.add_argument("--n-passes", type=int, default=1)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("capacity", help="secrecy capacities vs check QBER")
    common(p)
    p.add_argument("--e-max", type=float, default=0.25)
    p.add_argument("--points", type=int, default=126)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("fisher", help="receiver vs eavesdropper Fisher information")
    common(p)
    p.add_argument("--n-passes", type=int, default=1)
    p.add_argument("--e-max", type=float, default=0.25)
    p.add_argument("--points", type=int, default=126)
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("cfi-noisy", help="per-observable CFI over the phase at fixed noise")
    common(p)
    p.add_argument("--e", type=float, default=0.05)
    p.add_argument("--n-passes", type=int, default=1)
    p.add_argument("--points", type=int, default=256)
    p.set_defaults(func=cmd_cfi_noisy)

    p = sub.add_parser("likelihood", help="normalized likelihood curves from sampled counts")
    common(p)
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--split", type=float, default=1.0,
                   help="fraction of pairs sensing once (the rest sense N times)")
    p.add_argument("--n-passes", type=int, default=4)
    p.add_argument("--theta-true", type=float, default=DEFAULT_THETA_TRUE)
    p.add_argument("--points", type=int, default=2048)
    p.set_defaults(func=cmd_likelihood)

    p = sub.add_parser("bias", help="mean estimation bias over a phase grid")
    common(p)
    p.add_argument("--pairs", default="100,500,1000,2000")
    p.add_argument("--repeats", type=int, default=1000)
    p.add_argument("--points", type=int, default=64)
    p.add_argument("--n-passes", type=int, default=1)
    p.add_argument("--estimator", choices=("expectation", "mle"), default="expectation")
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("tradeoff", help="precision-security trade-off vs encoded fraction")
    common(p)
    p.add_argument("--m", type=int, default=320)
    p.add_argument("--k", type=int, default=32)
    p.add_argument("--n-passes", type=int, default=3)
    p.add_argument("--p-e-min", type=float, default=0.01)
    p.add_argument("--p-e-max", type=float, default=0.99)
    p.add_argument("--points", type=int, default=99)
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("optimal-n", help="bias scan over the number of sensing passes")
    common(p)
    p.add_argument("--pairs", default="800")
    p.add_argument("--n-values", default="2,4,6,8,10,14,18,22,26,30,100,200,400,700,1000")
    p.add_argument("--points", type=int, default=16)
    p.add_argument("--repeats", type=int, default=50)
    p.add_argument("--split", type=float, default=0.1)
    p.set_defaults(func=cmd_optimal_n)

    p = sub.add_parser("precision", help="headline sensing precision with the combined estimator")
    common(p)
    p.add_argument("--p-e", type=float, default=0.8)
    p.add_argument("--m", type=int, default=60000)
    p.add_argument("--n-passes", type=int, default=4)
    p.add_argument("--split", type=float, default=0.1)
    p.add_argument("--repeats", type=int, default=200)
    p.add_argument("--theta-true", type=float, default=DEFAULT_THETA_TRUE)
    p.set_defaults(func=cmd_precision)

    p = sub.add_parser("protocol", help="run the protocol from a key=value config file")
    common(p)
    p.add_argument("--config", required=True)
    p.add_argument("--message", required=True)
    p.add_argument("--twostep", action="store_true",
                   help="run the dense-coding two-step baseline instead")
    p.add_argument("--strict", action="store_true",
                   help="exit with status 3 when the run aborts")
    p.set_defaults(func=cmd_protocol)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
