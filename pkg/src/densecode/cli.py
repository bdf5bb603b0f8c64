"""Command-line interface: figure-reproduction sweeps, Monte Carlo runs, and
key-distribution experiments, with JSON config files and CSV output.

Configuration precedence: command-line flags override config-file entries,
which override built-in defaults. Output files are written only after a
command has computed all of its rows, so a failure leaves no partial file.
Floats are printed with 9 significant digits and row order is deterministic.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import SchmidtState
from .discrimination import FINAL_ABSTAIN, FINAL_ME, StagePlan
from .infometrics import (
    mutual_info_me,
    mutual_info_multistage,
    mutual_info_sep,
)
from .protocol_sim import (
    DecodingStrategy,
    analytic_record_distribution,
    run_simulation,
)
from .qkd import EveStrategy, analytic_qkd_error, analytic_sift_rate, simulate_qkd

_DEFAULT_MARGIN = 1e-3


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _write_csv(path: str, header, rows) -> None:
    rendered = [[_fmt(v) for v in row] for row in rows]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rendered)
    except OSError as exc:
        raise RuntimeError(f"cannot write output file {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise RuntimeError(f"cannot write output file {path}: {exc}") from exc


def _compositions(total: int, parts: int):
    """All nonnegative integer tuples of length `parts` summing to `total`,
    in lexicographic order."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


def simplex_grid(rank: int, resolution: int, margin: float) -> np.ndarray:
    """Uniform lattice over squared coefficients, affinely shrunk so every
    coordinate stays at least `margin` from the simplex boundary (a boundary
    point would change the Schmidt rank). The centroid is on the grid whenever
    `rank` divides `resolution`."""
    if resolution < 2:
        raise ValueError("grid resolution must be >= 2")
    if margin <= 0:
        raise ValueError("boundary margin must be positive")
    if rank * margin >= 1.0:
        raise ValueError("margin too large for this rank")
    scale = 1.0 - rank * margin
    points = [
        [margin + (k / resolution) * scale for k in combo]
        for combo in _compositions(resolution, rank)
    ]
    return np.array(points)


def _parallel_map(fn, items, threads: int):
    if threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise RuntimeError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise RuntimeError("config file must hold a JSON object")
    return obj


def _setting(args, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _resolve_threads(args, config: dict) -> int:
    value = _setting(args, config, "threads", None)
    if value is None:
        value = os.environ.get("DENSECODE_THREADS", 1)
    return max(1, int(value))


def _resolve_state(args, config: dict, default: dict) -> SchmidtState:
    return SchmidtState.from_dict(config.get("state", default))


@dataclass(frozen=True)
class SweepConfig:
    """Resolved sweep settings after merging defaults, config file, and flags."""

    d1: int
    d2: int
    grid_resolution: int
    boundary_margin: float
    xi_steps: int
    strategy: str
    out: str
    seed: int
    threads: int

    def __post_init__(self) -> None:
        if self.grid_resolution < 2:
            raise ValueError("grid resolution must be >= 2")
        if self.boundary_margin <= 0:
            raise ValueError("boundary margin must be positive")


def _resolve_sweep_config(args, config: dict, *, strategy: str, out: str, d1=3, d2=4, grid=60) -> SweepConfig:
    return SweepConfig(
        d1=int(_setting(args, config, "d1", d1)),
        d2=int(_setting(args, config, "d2", d2)),
        grid_resolution=int(_setting(args, config, "grid", grid)),
        boundary_margin=float(_setting(args, config, "margin", _DEFAULT_MARGIN)),
        xi_steps=int(_setting(args, config, "xi_steps", 50)),
        strategy=strategy,
        out=_setting(args, config, "out", out),
        seed=int(_setting(args, config, "seed", 0)),
        threads=_resolve_threads(args, config),
    )


def _cmd_sweep_me(args) -> int:
    cfg = _resolve_sweep_config(
        args, _load_config(args.config), strategy="me", out="sweep_me.csv"
    )
    rank = min(cfg.d1, cfg.d2)

    def point(squared) -> list:
        state = SchmidtState.from_squared(cfg.d1, cfg.d2, squared)
        coeffs = [float(c) for c in state.coeffs[: rank - 1]]
        return coeffs + [mutual_info_me(state).total_bits]

    grid = simplex_grid(rank, cfg.grid_resolution, cfg.boundary_margin)
    rows = _parallel_map(point, grid, cfg.threads)
    header = [f"a{i}" for i in range(rank - 1)] + ["I_bits"]
    _write_csv(cfg.out, header, rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _cmd_sweep_sep(args) -> int:
    config = _load_config(args.config)
    state = _resolve_state(
        args, config, {"d1": 2, "d2": 2, "coeffs": [0.2, 0.8], "squared": True}
    )
    cfg = _resolve_sweep_config(
        args, config, strategy="sep_me", out="sweep_sep.csv", d1=state.d1, d2=state.d2
    )
    steps = cfg.xi_steps
    if steps < 1:
        raise RuntimeError("xi_steps must be >= 1")
    i_me = mutual_info_me(state).total_bits

    def point(k: int) -> list:
        xi = k / steps
        report = mutual_info_sep(state, xi)
        p_s = report.branch_probabilities[0]
        return [xi, p_s, report.total_bits, report.success_branch_bits, i_me]

    rows = _parallel_map(point, range(steps + 1), cfg.threads)
    _write_csv(cfg.out, ["xi", "P_s", "I_total", "I_success", "I_ME"], rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _cmd_sweep_multistage(args) -> int:
    cfg = _resolve_sweep_config(
        args,
        _load_config(args.config),
        strategy="multistage",
        out="sweep_multistage.csv",
        grid=30,
    )
    rank = min(cfg.d1, cfg.d2)
    if rank < 3:
        raise RuntimeError("multistage sweep needs Schmidt rank >= 3")
    plan_abstain = StagePlan((1.0,), FINAL_ABSTAIN)
    plan_me = StagePlan((1.0,), FINAL_ME)
    plan_two = StagePlan((1.0, 1.0), FINAL_ABSTAIN)

    def point(squared) -> list:
        state = SchmidtState.from_squared(cfg.d1, cfg.d2, squared)
        i_me = mutual_info_me(state).total_bits
        single = mutual_info_multistage(state, plan_abstain)
        follow_me = mutual_info_multistage(state, plan_me)
        two_stage = mutual_info_multistage(state, plan_two)
        p_s1 = two_stage.branch_probabilities[0]
        p_s2 = two_stage.branch_probabilities[1]
        i_suc1 = two_stage.stage_success_bits[0]
        i_suc2 = two_stage.stage_success_bits[1]
        p_overall = p_s1 + (1.0 - p_s1) * p_s2 * (1.0 if i_suc2 > i_me else 0.0)
        coeffs = [float(c) for c in state.coeffs[: rank - 1]]
        return coeffs + [
            single.total_bits,
            follow_me.total_bits,
            two_stage.total_bits,
            i_suc1,
            i_suc2,
            i_me,
            p_s1,
            p_overall,
        ]

    grid = simplex_grid(rank, cfg.grid_resolution, cfg.boundary_margin)
    rows = _parallel_map(point, grid, cfg.threads)
    header = [f"a{i}" for i in range(rank - 1)] + [
        "I_MC",
        "I_MC_ME",
        "I_MC_MC",
        "I_suc1",
        "I_suc2",
        "I_ME",
        "P_s1",
        "P_overall",
    ]
    _write_csv(cfg.out, header, rows)
    print(f"wrote {len(rows)} rows to {cfg.out}")
    return 0


def _analytic_total(state: SchmidtState, strat: DecodingStrategy) -> float:
    if strat.kind == "me":
        return mutual_info_me(state).total_bits
    if strat.kind == "sep_me":
        return mutual_info_sep(state, strat.xi).total_bits
    return mutual_info_multistage(state, strat.plan).total_bits


def _sigma3(p: float, n: int) -> float:
    if n <= 0:
        return 0.0
    return 3.0 * math.sqrt(max(p * (1.0 - p), 0.0) / n)


def montecarlo_summary(report, state: SchmidtState, strat: DecodingStrategy):
    """Empirical-versus-analytic rows: (quantity, empirical, analytic, bound)."""
    labels, dist = analytic_record_distribution(state, strat)
    per_record = dist.mean(axis=0)
    rows = []
    rows.append(["k_channel_exact_rate", 1.0, 1.0, 0.0])
    if strat.kind == "me":
        stage_probs: tuple = ()
    elif strat.kind == "sep_me":
        stage_probs = mutual_info_sep(state, strat.xi).branch_probabilities
    else:
        stage_probs = mutual_info_multistage(state, strat.plan).branch_probabilities
    for i, (att, suc) in enumerate(zip(report.stage_attempts, report.stage_successes)):
        if att == 0:
            continue
        rows.append(
            [f"stage{i + 1}_success_rate", suc / att, stage_probs[i], _sigma3(stage_probs[i], att)]
        )
    if "inc" in labels:
        inc_p = float(per_record[labels.index("inc")])
        inc_emp = float(
            report.joint_counts[:, :, labels.index("inc")].sum() / report.n_trials
        )
        rows.append(["inconclusive_rate", inc_emp, inc_p, _sigma3(inc_p, report.n_trials)])
    rank = dist.shape[0]
    conclusive = [r for r, label in enumerate(labels) if label != "inc"]
    inferred = [int(labels[r].split(":")[1]) for r in conclusive]
    conclusive_p = float(sum(per_record[r] for r in conclusive))
    correct_p = float(
        np.mean([sum(dist[j, r] for r, l in zip(conclusive, inferred) if l == j) for j in range(rank)])
    )
    marginal = report.joint_counts.sum(axis=1)
    conclusive_emp = int(sum(marginal[:, r].sum() for r in conclusive))
    correct_emp = int(sum(marginal[l, r] for r, l in zip(conclusive, inferred)))
    if conclusive_emp and conclusive_p:
        cond_p = correct_p / conclusive_p
        rows.append(
            [
                "conclusive_correct_rate",
                correct_emp / conclusive_emp,
                cond_p,
                _sigma3(cond_p, conclusive_emp),
            ]
        )
    analytic_bits = _analytic_total(state, strat)
    rows.append(
        ["mutual_info_bits", report.empirical_mutual_info_bits, analytic_bits, 0.02]
    )
    return rows


def _cmd_montecarlo(args) -> int:
    config = _load_config(args.config)
    state = _resolve_state(
        args, config, {"d1": 2, "d2": 2, "coeffs": [0.2, 0.8], "squared": True}
    )
    strat = DecodingStrategy.from_dict(config.get("strategy", {"kind": "me"}))
    trials = int(_setting(args, config, "trials", 100000))
    seed = int(_setting(args, config, "seed", 0))
    out = _setting(args, config, "out", "montecarlo.csv")
    threads = _resolve_threads(args, config)
    report = run_simulation(state, strat, trials, seed, threads=threads)
    rows = montecarlo_summary(report, state, strat)
    rendered = [
        [q, _fmt(float(e)), _fmt(float(a)), _fmt(abs(float(e) - float(a))), _fmt(float(b))]
        for q, e, a, b in rows
    ]
    _write_csv(out, ["quantity", "empirical", "analytic", "abs_delta", "bound"], rendered)
    _write_text(os.path.splitext(out)[0] + ".json", report.to_json())
    print(f"wrote {out} and {os.path.splitext(out)[0] + '.json'}")
    return 0


def _cmd_qkd(args) -> int:
    config = _load_config(args.config)
    state = _resolve_state(
        args, config, {"d1": 2, "d2": 2, "coeffs": [0.2, 0.8], "squared": True}
    )
    eve = EveStrategy.from_dict(config.get("eve", {"kind": "absent"}))
    rounds = int(_setting(args, config, "trials", 100000))
    seed = int(_setting(args, config, "seed", 0))
    out = _setting(args, config, "out", "qkd.csv")
    threads = _resolve_threads(args, config)
    report = simulate_qkd(state, eve, rounds, seed, threads=threads)
    sift_analytic = analytic_sift_rate(state.coeffs)
    error_analytic = analytic_qkd_error(state.coeffs, eve)
    row = [
        eve.describe(),
        rounds,
        seed,
        report.sift_rate,
        sift_analytic,
        _sigma3(sift_analytic, rounds),
        report.sifted_error_rate,
        error_analytic,
        _sigma3(error_analytic, max(report.kept, 1)),
        report.eve_info_bits,
    ]
    _write_csv(
        out,
        [
            "eve",
            "n_rounds",
            "seed",
            "sift_rate",
            "sift_rate_analytic",
            "sift_rate_3sigma",
            "error_rate",
            "error_rate_analytic",
            "error_rate_3sigma",
            "eve_info_bits",
        ],
        [row],
    )
    _write_text(os.path.splitext(out)[0] + ".json", report.to_json())
    print(f"wrote {out} and {os.path.splitext(out)[0] + '.json'}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densecode",
        description="Probabilistic dense coding: analytic sweeps and Monte Carlo runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--seed", type=int, help="RNG seed")
        p.add_argument("--grid", type=int, help="simplex lattice resolution")
        p.add_argument("--xi-steps", dest="xi_steps", type=int, help="distinguishability steps")
        p.add_argument("--trials", type=int, help="Monte Carlo trials / rounds")
        p.add_argument(
            "--threads",
            type=int,
            help="worker threads (env DENSECODE_THREADS as fallback)",
        )
        p.add_argument("--margin", type=float, help="simplex boundary margin")
        p.add_argument("--d1", type=int, help="control-system dimension")
        p.add_argument("--d2", type=int, help="transmitted-system dimension")

    sweep_me = sub.add_parser("sweep-me", help="mutual information of ME decoding over the simplex")
    common(sweep_me)
    sweep_me.set_defaults(func=_cmd_sweep_me)

    sweep_sep = sub.add_parser("sweep-sep", help="separation-assisted decoding versus xi")
    common(sweep_sep)
    sweep_sep.set_defaults(func=_cmd_sweep_sep)

    sweep_multi = sub.add_parser("sweep-multistage", help="multistage decoding over the simplex")
    common(sweep_multi)
    sweep_multi.set_defaults(func=_cmd_sweep_multistage)

    montecarlo = sub.add_parser("montecarlo", help="Monte Carlo run with analytic cross-check")
    common(montecarlo)
    montecarlo.set_defaults(func=_cmd_montecarlo)

    qkd = sub.add_parser("qkd", help="intercept-resend key-distribution run")
    common(qkd)
    qkd.set_defaults(func=_cmd_qkd)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (RuntimeError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
