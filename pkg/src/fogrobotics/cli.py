"""Command-line entry point: ``fogrobotics <subcommand> ...``.

Exit status is 0 on success, 1 when a run or validation fails and 2 for bad
arguments or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .advisor import advice_rows, collect_stats, frs_capacities
from .engine import simulate
from .metrics import to_csv
from .profiles import ScenarioParseError
from .protocol import FailureMode
from .scenarios import FailureSpec, Scenario, arch_a, arch_b, arch_c
from .scnfile import load_scenario
from .topology import TopologyError, validate

FIG3_ROBOTS = (1, 2, 3, 4, 5)
FIG4_FRS = (2, 5, 10, 15, 20)
ADVICE_COLUMNS = ("frs", "peak_load", "capacity", "mean_load", "queue_wait_ms", "requests",
                  "recommended_sfrs")


class BadConfig(ValueError):
    pass


class BadGrid(BadConfig):
    pass


@dataclass(frozen=True)
class RunConfig:
    arch: Optional[str] = None
    scenario: Optional[str] = None
    robots: int = 1
    frs: int = 2
    dsr_per_frs: int = 4
    sfrs: int = 0
    profile: Optional[str] = None
    seed: int = 42
    duration: Optional[float] = None
    failures: tuple = ()

    def build(self) -> Scenario:
        if self.arch is not None and self.scenario is not None:
            raise BadConfig("give either --arch or --scenario, not both")
        if self.scenario is not None:
            sc = load_scenario(self.scenario, self.profile)
            changes = {"seed": self.seed}
            if self.duration is not None:
                changes["duration_ms"] = self.duration
        else:
            sc = _build_arch(self.arch or "a", self.robots, self.frs, self.dsr_per_frs, self.sfrs,
                             self.profile or "default", self.seed, self.duration)
            changes = {}
        if self.failures:
            names = {n.name for n in sc.topology.nodes}
            for f in self.failures:
                if f.node not in names:
                    raise BadConfig(f"--fail names unknown node {f.node!r}")
            changes["failures"] = sc.failures + tuple(self.failures)
        return sc.replace(**changes) if changes else sc


def _build_arch(arch, robots, frs, dsr_per_frs, sfrs, profile, seed, duration) -> Scenario:
    kw = dict(profile=profile, seed=seed, duration_ms=duration)
    if arch == "a":
        return arch_a(robots, n_sfrs=sfrs, **kw)
    if arch == "b":
        return arch_b(robots, **kw)
    if arch == "c":
        return arch_c(frs, dsr_per_frs, **kw)
    if arch == "cloud":
        return arch_a(robots, placement="cloud", **kw)
    raise BadConfig(f"unknown architecture {arch!r}")


def parse_fail(text: str) -> FailureSpec:
    """``NODE@TIME[:mode]`` with TIME in ms; mode defaults to shutdown."""
    node, at, rest = text.partition("@")
    if not at or not node:
        raise argparse.ArgumentTypeError(f"expected NODE@TIME[:mode], got {text!r}")
    time_text, _, mode = rest.partition(":")
    try:
        return FailureSpec(node, float(time_text), FailureMode(mode or "shutdown"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad --fail {text!r}: {exc}") from None


def parse_int_list(text: str) -> list:
    """``1-5``, ``1,3,7`` or a mix such as ``1-3,8``."""
    out = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            lo, sep, hi = part.partition("-")
            if sep:
                lo, hi = int(lo), int(hi)
                if hi < lo:
                    raise BadGrid(f"empty range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError as exc:
        if isinstance(exc, BadGrid):
            raise
        raise BadGrid(f"bad list {text!r}") from None
    if not out:
        raise BadGrid(f"empty list {text!r}")
    return out


def _config_fields(args) -> dict:
    return dict(
        arch=getattr(args, "arch", None), scenario=getattr(args, "scenario", None),
        robots=getattr(args, "robots", 1), frs=getattr(args, "frs", 2),
        dsr_per_frs=getattr(args, "dsr_per_frs", 4), sfrs=getattr(args, "sfrs", 0),
        profile=getattr(args, "profile", None), seed=getattr(args, "seed", 42),
        duration=getattr(args, "duration", None), failures=tuple(getattr(args, "fail", None) or ()),
    )


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _run_one(config: RunConfig, record_trace: bool = False):
    return simulate(config.build(), record_trace=record_trace)


def _report_row(config: RunConfig):
    return _run_one(config).report


# -- subcommands ---------------------------------------------------------


def cmd_run(args) -> int:
    config = RunConfig(**_config_fields(args))
    result = _run_one(config, record_trace=args.trace is not None)
    if args.trace is not None:
        text = result.trace_text()
        if args.trace == "-":
            sys.stderr.write(text)
        else:
            Path(args.trace).write_text(text, encoding="utf-8")
    report = result.report
    if args.format == "table":
        _emit(report.table(), args.out)
    else:
        _emit(to_csv([report]), args.out)
    return 0


def cmd_sweep(args) -> int:
    robots = parse_int_list(args.robots)
    frs = parse_int_list(args.frs)
    seeds = parse_int_list(args.seeds)
    base = _config_fields(args)
    configs = []
    for r in robots:
        for f in frs:
            for s in seeds:
                configs.append(RunConfig(**{**base, "robots": r, "frs": f, "seed": s}))
    for c in configs:
        c.build()  # surface config errors before forking
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            reports = list(pool.map(_report_row, configs))
    else:
        reports = [_report_row(c) for c in configs]
    _emit(to_csv(reports), args.out)
    return 0


def fig3_rows(profile="paper-fig3") -> list:
    rows = []
    for series, build in (("D2D", lambda n: arch_b(n, profile=profile)),
                          ("FR", lambda n: arch_a(n, profile=profile)),
                          ("Cloud", lambda n: arch_a(n, profile=profile, placement="cloud"))):
        for n in FIG3_ROBOTS:
            rows.append((series, n, simulate(build(n), record_trace=False).report.mean_us))
    return rows


def fig4_rows(profile="paper-fig4") -> list:
    rows = []
    for series, placement in (("FR", "fr"), ("Cloud", "cloud")):
        for n in FIG4_FRS:
            sc = arch_c(n, 4, profile=profile, placement=placement)
            rows.append((series, n, simulate(sc, record_trace=False).report.mean_us))
    return rows


def _series_csv(header: tuple, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for series, n, mean_us in rows:
        w.writerow([series, n, f"{mean_us / 1000:.3f}"])
    return buf.getvalue()


def cmd_fig3(args) -> int:
    _emit(_series_csv(("series", "robots", "mean_ms"), fig3_rows(args.profile)), args.out)
    return 0


def cmd_fig4(args) -> int:
    _emit(_series_csv(("series", "n_frs", "mean_ms"), fig4_rows(args.profile)), args.out)
    return 0


def cmd_advise(args) -> int:
    config = RunConfig(**_config_fields(args))
    result = _run_one(config, record_trace=True)
    topo = result.scenario.topology
    caps = frs_capacities(topo)
    stats = collect_stats(result.trace, caps)
    rows = advice_rows(stats, caps, topo, args.threshold)
    buf = io.StringIO()
    if args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(ADVICE_COLUMNS)
        w.writerows(rows)
    else:
        buf.write(f"seed {result.scenario.seed}, threshold {args.threshold}\n")
        widths = [max(len(str(x)) for x in col) for col in zip(ADVICE_COLUMNS, *rows)]
        for row in (ADVICE_COLUMNS, *rows):
            buf.write("  ".join(f"{str(x):<{w}}" for x, w in zip(row, widths)).rstrip() + "\n")
        flagged = [(name, k) for name, *_, k in rows if k]
        if flagged:
            for name, k in flagged:
                buf.write(f"recommend {k} additional SFRS at {name}\n")
        else:
            buf.write("no SFRS recommended\n")
    _emit(buf.getvalue(), args.out)
    return 0


def cmd_validate(args) -> int:
    sc = RunConfig(**_config_fields(args)).build()
    problems = validate(sc.topology) + sc.problems()
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return 1
    print(f"{sc.name}: ok ({len(sc.topology.nodes)} nodes, {len(sc.topology.links)} links)")
    return 0


# -- parser --------------------------------------------------------------


def _scenario_flags(p, sweep: bool = False) -> None:
    p.add_argument("--arch", choices=("a", "b", "c", "cloud"), default=None,
                   help="builder architecture (default a when no --scenario)")
    p.add_argument("--scenario", help="scenario file path or shipped name (arch_a, arch_b, arch_c)")
    if sweep:
        p.add_argument("--robots", default="1", help="robot counts, e.g. 1-5 (default 1)")
        p.add_argument("--frs", default="2", help="FRS counts for --arch c, e.g. 2,5,10 (default 2)")
        p.add_argument("--seeds", default="42", help="seeds, e.g. 42,43 (default 42)")
    else:
        p.add_argument("--robots", type=int, default=1, help="robots for arch a/b/cloud (default 1)")
        p.add_argument("--frs", type=int, default=2, help="FRS count for arch c (default 2)")
        p.add_argument("--seed", type=int, default=42, help="workload seed (default 42)")
    p.add_argument("--dsr-per-frs", type=int, default=4, help="robots per FRS for arch c (default 4)")
    p.add_argument("--sfrs", type=int, default=0, help="SFRS under the FRS for arch a (default 0)")
    p.add_argument("--profile", default=None,
                   help="default | paper-fig3 | paper-fig4 | path to .cal (default: default)")
    p.add_argument("--duration", type=float, default=None, help="run length in ms (default from profile)")
    p.add_argument("--fail", type=parse_fail, action="append", metavar="NODE@TIME[:MODE]",
                   help="inject a failure; MODE is shutdown, compromise or recover")
    p.add_argument("--out", help="write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fogrobotics", description="Fog vs cloud robotics simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario")
    _scenario_flags(p)
    p.add_argument("--format", choices=("csv", "table"), default="csv")
    p.add_argument("--trace", nargs="?", const="-", default=None, metavar="PATH",
                   help="dump the event trace (to stderr without PATH)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter grid, one CSV row per point and seed")
    _scenario_flags(p, sweep=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.set_defaults(func=cmd_sweep)

    for name, func, profile in (("reproduce-fig3", cmd_fig3, "paper-fig3"),
                                ("reproduce-fig4", cmd_fig4, "paper-fig4")):
        p = sub.add_parser(name, help=f"plot-ready CSV of the {name[-4:]} series")
        p.add_argument("--profile", default=profile, help=f"(default {profile})")
        p.add_argument("--out")
        p.set_defaults(func=func)

    p = sub.add_parser("advise", help="recommend SFRS deployment from a run's traffic")
    _scenario_flags(p)
    p.add_argument("--threshold", type=float, default=1.0, help="utilization threshold in (0, 1]")
    p.add_argument("--format", choices=("csv", "table"), default="table")
    p.set_defaults(func=cmd_advise)

    p = sub.add_parser("validate", help="check a scenario without running it")
    _scenario_flags(p)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not 0 < getattr(args, "threshold", 1.0) <= 1:
        print("error: --threshold must be in (0, 1]", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BadConfig, TopologyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
