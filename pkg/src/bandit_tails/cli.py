"""Command line driver: ``bandit-tails {simulate,tail,sweep,verify}``.

CSV schemas (one header line, rows sorted by policy, n, replication, arm)::

    regret.csv  policy,env_id,n,replication,regret,pseudo_regret
    counts.csv  policy,env_id,n,replication,arm,pulls
    tail.csv    policy,env_id,n,threshold,p_hat,se
    pmf.csv     policy,env_id,n,x,density,spike

Replications are numbered from 0 and arms from 1 (the position of the arm
literal in env_id). Reals are written with 17 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .config import ConfigError, ExperimentConfig, load_config
from .policies import PolicyConfig, PolicyError
from .simulate import SampleSet, run_horizons
from .stats import TailRate, f_regret_check, f_tail_check, mean_ci, smoothed_pmf, tail_curve

log = logging.getLogger("bandit_tails")

REGRET_HEADER = ("policy", "env_id", "n", "replication", "regret", "pseudo_regret")
COUNTS_HEADER = ("policy", "env_id", "n", "replication", "arm", "pulls")
TAIL_HEADER = ("policy", "env_id", "n", "threshold", "p_hat", "se")
PMF_HEADER = ("policy", "env_id", "n", "x", "density", "spike")
SUMMARY_HEADER = ("policy", "env_id", "n", "reps", "mean_regret", "ci_regret", "mean_pseudo_regret", "ci_pseudo_regret")
FCHECK_HEADER = ("policy", "env_id", "n", "clause", "arm", "threshold", "p_hat", "se", "bound", "passed")


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


# -- runs --------------------------------------------------------------------


def run_policies(cfg: ExperimentConfig, policies: Sequence[PolicyConfig]) -> list[SampleSet]:
    """Monte Carlo sample sets for each policy, ordered by policy literal."""
    lits = [p.literal for p in policies]
    dup = {x for x in lits if lits.count(x) > 1}
    if dup:
        raise ConfigError(f"duplicate policies: {sorted(dup)}")
    out = []
    for p in sorted(policies, key=lambda p: p.literal):
        t0 = time.perf_counter()
        ss = run_horizons(cfg.env, p, cfg.checkpoints, cfg.reps, cfg.seed, cfg.workers)
        log.info("%s on %s: %d reps in %.1fs", p.literal, cfg.env.env_id, cfg.reps, time.perf_counter() - t0)
        out.append(ss)
    return out


def regret_rows(sets: Sequence[SampleSet]):
    for ss in sets:
        for c, n in enumerate(ss.checkpoints):
            reg, ps = ss.regret[:, c], ss.pseudo_regret[:, c]
            for r in range(ss.reps):
                yield ss.policy, ss.env_id, n, r, reg[r], ps[r]


def counts_rows(sets: Sequence[SampleSet]):
    for ss in sets:
        for c, n in enumerate(ss.checkpoints):
            cnt = ss.counts[:, c, :]
            for r in range(ss.reps):
                for k in range(cnt.shape[1]):
                    yield ss.policy, ss.env_id, n, r, k + 1, cnt[r, k]


def summary_rows(sets: Sequence[SampleSet]):
    for ss in sets:
        for n in ss.checkpoints:
            reg, ps = ss.regret_at(n), ss.pseudo_regret_at(n)
            if ss.reps < 2:
                yield ss.policy, ss.env_id, n, ss.reps, reg.mean(), float("nan"), ps.mean(), float("nan")
                continue
            m1, h1 = mean_ci(reg)
            m2, h2 = mean_ci(ps)
            yield ss.policy, ss.env_id, n, ss.reps, m1, h1, m2, h2


def _thresholds(cfg: ExperimentConfig, n: int) -> np.ndarray:
    req = cfg.stats.tail
    if req.thresholds is not None:
        th = np.array(sorted(req.thresholds), dtype=float)
    else:
        start = 0.0 if req.start is None else req.start
        stop = n * max(cfg.env.gaps) if req.stop is None else req.stop
        if stop <= start:
            stop = start + 1.0
        th = np.linspace(start, stop, req.num)
    return th


def _write_simulation(cfg: ExperimentConfig, sets: list[SampleSet]) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    write_csv(cfg.out / "regret.csv", REGRET_HEADER, regret_rows(sets))
    write_csv(cfg.out / "counts.csv", COUNTS_HEADER, counts_rows(sets))
    if cfg.stats.mean:
        write_csv(cfg.out / "summary.csv", SUMMARY_HEADER, summary_rows(sets))


def cmd_simulate(cfg: ExperimentConfig) -> int:
    _write_simulation(cfg, run_policies(cfg, cfg.policies))
    return 0


def cmd_sweep(cfg: ExperimentConfig) -> int:
    if cfg.sweep is None:
        raise ConfigError("sweep needs a sweep section (family and rho list)")
    _write_simulation(cfg, run_policies(cfg, cfg.sweep.policies()))
    return 0


def cmd_tail(cfg: ExperimentConfig) -> int:
    sets = run_policies(cfg, cfg.policies)
    cfg.out.mkdir(parents=True, exist_ok=True)
    status = 0
    tails, pmfs = [], []
    for ss in sets:
        for n in ss.checkpoints:
            reg = ss.regret_at(n)
            if cfg.stats.tail is not None:
                tc = tail_curve(reg, _thresholds(cfg, n))
                tails.append((ss, n, tc))
            if cfg.stats.pmf is not None:
                if reg.size < 2:
                    log.error("pmf for %s at n=%d needs at least two replications", ss.policy, n)
                    status = 1
                    continue
                pmfs.append((ss, n, smoothed_pmf(reg, cfg.stats.pmf.bandwidth, cfg.stats.pmf.grid_size)))
    if cfg.stats.tail is not None:
        write_csv(cfg.out / "tail.csv", TAIL_HEADER, (
            (ss.policy, ss.env_id, n, x, p, se)
            for ss, n, tc in tails
            for x, p, se in zip(tc.thresholds, tc.p_hat, tc.se)
        ))
    if cfg.stats.pmf is not None:
        write_csv(cfg.out / "pmf.csv", PMF_HEADER, (
            (ss.policy, ss.env_id, n, x, d, pm.is_spike)
            for ss, n, pm in pmfs
            for x, d in zip(pm.grid, pm.density)
        ))
    if cfg.stats.fcheck is not None:
        fc = cfg.stats.fcheck
        rate = TailRate(fc.rate, fc.param)
        rows = []
        try:
            for ss in sets:
                for clause, rep in (("T", f_tail_check(ss, cfg.env, fc.C, fc.C_tilde, rate)),
                                    ("R", f_regret_check(ss, cfg.env, fc.C, fc.C_tilde, rate))):
                    for row in rep.rows:
                        arm = "" if row.arm < 0 else row.arm + 1
                        rows.append((ss.policy, ss.env_id, row.n, clause, arm, row.threshold,
                                     row.exceedance, row.se, row.bound, row.passed))
        except ValueError as e:
            log.error("f-check not produced: %s", e)
            status = 1
        else:
            rows.sort(key=lambda r: (r[0], r[2]))
            write_csv(cfg.out / "fcheck.csv", FCHECK_HEADER, rows)
    if cfg.stats.plot:
        from .plots import tail_figures

        tail_figures(cfg.out, tails, pmfs)
    return status


def cmd_verify(suite: str, seed: int | None, reps: int | None, workers: int, out: Path) -> int:
    from .checks import SUITES, run_suite

    if suite not in SUITES:
        print(f"error: unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    results = run_suite(suite, seed=seed, reps=reps, workers=workers)
    for r in results:
        print(r.line())
    out.mkdir(parents=True, exist_ok=True)
    report = {
        "suite": suite,
        "passed": all(r.passed for r in results),
        "checks": [r.to_json() for r in results],
    }
    (out / f"verify_{suite}.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if report["passed"] else 1


# -- argument parsing --------------------------------------------------------


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="experiment config (YAML)")
    common.add_argument("--seed", type=_u64, default=argparse.SUPPRESS, help="base seed (overrides config)")
    common.add_argument("--reps", type=_positive, default=argparse.SUPPRESS, help="replications (overrides config)")
    common.add_argument("--workers", type=_positive, default=argparse.SUPPRESS, help="worker threads")
    common.add_argument("--out", type=Path, default=argparse.SUPPRESS, help="output directory")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="bandit-tails", parents=[common],
                                description="Bandit regret and deviation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write regret.csv and counts.csv")
    sub.add_parser("tail", parents=[common], help="write tail.csv and pmf.csv (and optional SVG)")
    sub.add_parser("sweep", parents=[common], help="rho grid over one UCB family")
    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", help="oracle, invariants, bounds or decay")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    seed = getattr(args, "seed", None)
    reps = getattr(args, "reps", None)
    workers = getattr(args, "workers", None)
    out = getattr(args, "out", None)
    try:
        if args.command == "verify":
            return cmd_verify(args.suite, seed, reps, workers or 1, out or Path("results"))
        path = getattr(args, "config", None)
        if path is None:
            raise ConfigError(f"{args.command} needs --config")
        cfg = load_config(path).with_overrides(seed=seed, reps=reps, workers=workers, out=out)
        cmd = {"simulate": cmd_simulate, "tail": cmd_tail, "sweep": cmd_sweep}[args.command]
        return cmd(cfg)
    except (ConfigError, PolicyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
