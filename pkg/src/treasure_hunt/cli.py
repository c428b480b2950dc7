"""Command-line front end: ``hunt run|bench|adversary|verify``.

Exit codes: 0 ok, 1 an invariant or model check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from .adversary import run_adversary
from .environment import (
    AgentSession,
    ModelViolation,
    Restriction,
    SpecError,
    build_generator,
    place_treasure,
    trace_records,
)
from .explorer import InvariantError
from .hunt import build_report, emulate_restricted, run_baseline_bfs, treasure_hunt
from .verify import SUITES

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE = 0, 1, 2
CSV_COLUMNS = ["d", "e(d)", "cost", "ratio", "model"]


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str = "line"
    treasure: str = "none"
    model: str = "unrestricted"
    x: str | None = None  # None: 1 unrestricted, alpha/2 in the restricted models
    algo: str = "hunt"  # hunt | bfs
    seed: int = 0
    repetitions: int = 1
    trace: str | None = None
    report: str | None = None

    def dumps(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        raw = json.loads(text)
        names = {f.name for f in fields(cls)}
        extra = set(raw) - names
        if extra:
            raise UsageError(f"unknown config keys: {sorted(extra)}")
        return cls(**raw)

    def restriction(self) -> Restriction:
        try:
            return Restriction.parse(self.model)
        except ValueError as exc:
            raise UsageError(f"bad model {self.model!r}: {exc}") from None

    def effective_x(self) -> Fraction:
        r = self.restriction()
        try:
            given = None if self.x is None else Fraction(self.x)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"bad rational x={self.x!r}") from None
        if given is not None and given <= 0:
            raise UsageError("x must be positive")
        if r.kind == "unrestricted":
            return Fraction(1) if given is None else given
        if given is not None and given != r.alpha / 2:
            raise UsageError(f"restricted runs use x = alpha/2 = {r.alpha / 2}, got {given}")
        return r.alpha / 2


def run_experiment(cfg: ExperimentConfig, record=None, timing=False):
    """One hunt (or emulation, or baseline) for ``cfg``; returns (report, session)."""
    restriction = cfg.restriction()
    x = cfg.effective_x()
    if cfg.algo not in ("hunt", "bfs"):
        raise UsageError(f"unknown algo {cfg.algo!r}, expected hunt or bfs")
    if cfg.algo == "bfs" and restriction.kind != "unrestricted":
        raise UsageError("the baseline only runs in the unrestricted model")
    oracle = place_treasure(build_generator(cfg.graph, cfg.seed), cfg.treasure)
    if record is None:
        record = cfg.trace is not None
    t0 = time.perf_counter()
    if cfg.algo == "bfs":
        session = AgentSession(oracle, record=record, track_rope=record)
        result = run_baseline_bfs(session)
        model = "bfs"
    elif restriction.kind == "unrestricted":
        session = AgentSession(oracle, record=record)
        result, _ = treasure_hunt(session, x)
        model = "unrestricted"
    else:
        session = AgentSession(oracle, restriction, record=record)
        result, _, _ = emulate_restricted(session, restriction.alpha)
        model = str(restriction)
    wall = time.perf_counter() - t0
    report = build_report(oracle, result, model, x, session.audit(), wall if timing else 0.0)
    return report, session


def report_json(report, cfg: ExperimentConfig, timing: bool) -> str:
    doc = report.to_dict(timing=timing)
    doc["config"] = asdict(cfg)
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def write_trace(path: str, log) -> None:
    with open(path, "w") as fh:
        for rec in trace_records(log):
            fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")


def cmd_run(args) -> int:
    if args.config:
        cfg = ExperimentConfig.loads(Path(args.config).read_text())
    else:
        cfg = ExperimentConfig(
            graph=args.graph,
            treasure=args.treasure,
            model=args.model,
            x=args.x,
            algo=args.algo,
            seed=args.seed,
            repetitions=args.repetitions,
            trace=args.trace,
            report=args.report,
        )
    if cfg.repetitions < 1:
        raise UsageError("repetitions must be >= 1")
    first = None
    for _ in range(cfg.repetitions):
        report, session = run_experiment(cfg, timing=args.timing)
        key = report_json(report, cfg, timing=False)
        if first is None:
            first = key
        elif key != first:
            raise InvariantError("repeated runs of the same config produced different reports")
    text = report_json(report, cfg, args.timing)
    if cfg.report:
        Path(cfg.report).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.trace:
        write_trace(cfg.trace, session.log)
    audit = report.audit
    if not (audit["ropeBoundOK"] and audit["fuelBoundOK"]):
        print("audit bound violated", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def parse_d_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            d = int(part)
        except ValueError:
            raise UsageError(f"bad distance {part!r}") from None
        if d < 0:
            raise UsageError("distances must be non-negative")
        out.append(d)
    return out


def bench_rows(graph, ds, x=None, model="unrestricted", algo="hunt", pick="worst", seed=0):
    """One row per d; ``pick=worst`` takes the costlier of the two extreme labels at distance d."""
    picks = ["min", "max"] if pick == "worst" else [pick]
    rows = []
    for d in ds:
        best = None
        for p in picks:
            cfg = ExperimentConfig(graph=graph, treasure=f"dist:{d},pick={p}", model=model, x=x, algo=algo, seed=seed)
            report, _ = run_experiment(cfg, record=False)
            if best is None or report.total_cost > best.total_cost:
                best = report
        ratio = "" if best.ratio is None else f"{best.ratio:.6f}"
        rows.append({"d": d, "e(d)": best.e_d, "cost": best.total_cost, "ratio": ratio, "model": best.model})
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_bench(args) -> int:
    if args.pick not in ("min", "max", "worst"):
        raise UsageError("pick must be min, max or worst")
    rows = bench_rows(args.graph, parse_d_list(args.d), args.x, args.model, args.algo, args.pick, args.seed)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_adversary(args) -> int:
    v = run_adversary(args.d, args.m, args.x, args.algo)
    text = json.dumps(v.to_dict(), sort_keys=True, indent=2) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if v.ok else EXIT_INVARIANT


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    status = EXIT_OK
    for name in names:
        kw = {"seed": args.seed} if name != "lower-bound" else {}
        res = SUITES[name](**kw)
        print(res.summary())
        for msg in res.failures[:20]:
            print(f"  {msg}")
        if not res.passed:
            status = EXIT_INVARIANT
    return status


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hunt", description="Treasure hunting in unknown port-numbered graphs.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one hunt and write a JSON report")
    run.add_argument("--config", help="JSON config file (overrides the other options)")
    run.add_argument("--graph", default="line")
    run.add_argument("--treasure", default="none")
    run.add_argument("--x", default=None)
    run.add_argument("--model", default="unrestricted")
    run.add_argument("--algo", default="hunt", choices=["hunt", "bfs"])
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repetitions", type=int, default=1)
    run.add_argument("--trace", help="write every traversal as JSON lines")
    run.add_argument("--report", help="report path (default: stdout)")
    run.add_argument("--timing", action="store_true", help="include wall time in the report")
    run.set_defaults(func=cmd_run)

    bench = sub.add_parser("bench", help="sweep treasure distances and emit CSV")
    bench.add_argument("--graph", default="line")
    bench.add_argument("--d", default="10,100,1000", help="comma-separated distances (may be empty)")
    bench.add_argument("--x", default=None)
    bench.add_argument("--model", default="unrestricted")
    bench.add_argument("--algo", default="hunt", choices=["hunt", "bfs"])
    bench.add_argument("--pick", default="worst", help="min, max or worst")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out")
    bench.set_defaults(func=cmd_bench)

    adv = sub.add_parser("adversary", help="run the lower-bound adversary")
    adv.add_argument("--d", type=int, required=True)
    adv.add_argument("--m", type=int, required=True)
    adv.add_argument("--x", type=int, required=True)
    adv.add_argument("--algo", default="huntx:1")
    adv.add_argument("--report")
    adv.set_defaults(func=cmd_adversary)

    ver = sub.add_parser("verify", help="run an invariant suite")
    ver.add_argument("suite", choices=[*SUITES, "all"])
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, SpecError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvariantError, ModelViolation, AssertionError) as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
