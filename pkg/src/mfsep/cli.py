"""Command-line runner: ``mfsep <subcommand> [--config FILE] [flags]``.

Every subcommand writes into its own ``--out`` directory: the artifacts, a
``config.json`` echo, and a ``manifest.json`` listing a SHA-256 digest for
each file. Artifacts are a pure function of (config, seed, code version);
only the wall-clock block of the manifest varies between runs.

Exit codes: 0 success, 1 failed check or run error, 2 configuration error.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__, plots
from .concepts import FSource, LabelMode, dump_dataset, generate_training_data
from .config import ExperimentConfig, load_yaml, parse_config, parse_protocol, with_overrides
from .errors import ConfigError, MfsepError
from .evaluation import (
    FullyQuantumProtocol,
    MeasureFirstProtocol,
    SeparationConfig,
    evaluate_learnability,
    separation_experiment,
)
from .fqlearner import fully_quantum_learn
from .gf2bits import BitVec
from .hmgame import (
    TranscriptWriter,
    estimate_success,
    hm_classical_baseline,
    hm_quantum,
    hm_random_guess,
    reduce_measure_first,
)
from .mflearner import Strategy, StrategyKind, measure_first_learn, measure_training_data
from .prfcrypto import DEFAULT_SPEC, estimate_advantage
from .seeding import derive_rng
from .verify import run_suites

log = logging.getLogger("mfsep")

__all__ = ["main", "RunManifest", "RunWriter", "run", "build_strategy"]


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class RunManifest:
    experiment: str
    config_hash: str
    code_version: str
    config: dict
    files: dict[str, str] = field(default_factory=dict)
    wall_clock: dict[str, float] = field(default_factory=dict)
    failures: int = 0
    status: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


class RunWriter:
    """Single writer for one output directory; records a digest per file."""

    def __init__(self, out: Path, cfg: ExperimentConfig):
        self.out = Path(out)
        manifest = self.out / "manifest.json"
        if manifest.exists():
            prior = json.loads(manifest.read_text()).get("experiment")
            if prior != cfg.experiment:
                raise ConfigError(
                    f"{self.out} holds a {prior!r} run; choose another --out for {cfg.experiment!r}"
                )
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest(cfg.experiment, cfg.config_hash(), __version__, cfg.echo())
        self.write_json("config.json", cfg.echo())

    def write_text(self, name: str, text: str) -> Path:
        path = self.out / name
        data = text.encode()
        path.write_bytes(data)
        self.manifest.files[name] = _sha256(data)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write_text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def finish(self, timings: dict[str, float], failures: int, status: int) -> RunManifest:
        m = self.manifest
        m.wall_clock = {k: round(v, 6) for k, v in timings.items()}
        m.failures = failures
        m.status = status
        m.files = dict(sorted(m.files.items()))
        (self.out / "manifest.json").write_text(m.to_json())
        return m


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, (set, frozenset, tuple)):
        return list(o)
    return str(o)


def build_strategy(cfg: ExperimentConfig, sid: str, n: int) -> Strategy:
    """Strategy for arm ``sid`` at size ``n``: honest budget, or the full table for leaky."""
    kind = StrategyKind(sid)
    if kind is StrategyKind.LEAKY:
        return Strategy.leaky(1, m_budget=1 << n)
    ell = cfg.ell_for(n)
    budget = 3 * n * ell if cfg.m_budget is None else cfg.m_budget
    return Strategy(kind, ell, m_budget=budget)


def _n_examples(cfg: ExperimentConfig, n: int) -> int:
    return 1 if cfg.label_mode == "full_x" else n + 10


def _hidden_string(cfg: ExperimentConfig, n: int, *path) -> int:
    if cfg.x is not None:
        return int(cfg.x, 16)
    return int(derive_rng(cfg.seed, "x", *path, n).integers(1, 1 << n))


# --- experiments ----------------------------------------------------------


@dataclass
class Outcome:
    status: int = 0
    failures: int = 0
    timings: dict[str, float] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)


def _run_verify(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    results = run_suites(cfg.seed, list(cfg.suites) if cfg.suites else None)
    out = Outcome()
    out.lines = [r.line() for r in results]
    out.failures = sum(not r.passed for r in results)
    out.status = 1 if out.failures else 0
    out.timings = {f"{r.suite}/{r.name}": r.seconds for r in results}
    w.write_json("verify.json", [
        {"suite": r.suite, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results
    ])
    out.lines.append(f"{len(results) - out.failures}/{len(results)} checks passed")
    return out


def _learn_report(cfg, w, protocol, n, x, tag, out: Outcome) -> None:
    t0 = time.perf_counter()
    report = evaluate_learnability(
        protocol, x, FSource(cfg.f_source), cfg.eval_criteria(),
        cfg.trials["f"], cfg.trials["protocol"], derive_rng(cfg.seed, "eval", tag, n),
        n=n, exact=cfg.exact, shots=cfg.shots,
    )
    out.timings[f"{tag}/n={n}"] = time.perf_counter() - t0
    body = json.loads(report.to_json())
    body["config"]["echo"] = cfg.echo()
    w.write_json(f"{tag}_n{n}_report.json", body)
    tvs = np.array(report.tv).ravel()
    out.lines.append(
        f"{tag} n={n} x={BitVec(n, x).hex()}: median TV {np.median(tvs):.4g}, "
        f"delta_hat {report.good_fraction:.3f}, p_hat {report.p_hat:.3f} -> "
        f"{'learnable' if report.verdict else 'not learnable'} at {cfg.criteria}"
    )


def _run_learn_fq(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    out = Outcome()
    mode = LabelMode(cfg.label_mode)
    for n in cfg.n:
        x = _hidden_string(cfg, n, "learn")
        k = _n_examples(cfg, n)
        rng = derive_rng(cfg.seed, "train", "fq", n)
        data = generate_training_data(n, x, k, 1, mode, FSource(cfg.f_source), rng)
        buf = io.StringIO()
        dump_dataset(data, buf)
        w.write_text(f"fq_n{n}_train.jsonl", buf.getvalue())
        try:
            learner = fully_quantum_learn(data)
        except MfsepError as exc:
            out.failures += 1
            out.lines.append(f"fq n={n}: training failed: {exc}")
            continue
        w.write_text(f"fq_n{n}_learner.json", learner.to_json() + "\n")
        _learn_report(cfg, w, FullyQuantumProtocol(n_examples=k, label_mode=mode), n, x, "fq", out)
    out.status = 1 if out.failures else 0
    return out


def _run_learn_mf(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    out = Outcome()
    mode = LabelMode(cfg.label_mode)
    for n in cfg.n:
        x = _hidden_string(cfg, n, "learn")
        k = _n_examples(cfg, n)
        for sid in cfg.strategies:
            strategy = build_strategy(cfg, sid, n)
            rng = derive_rng(cfg.seed, "train", sid, n)
            data_rng, meas_rng = rng.spawn(2)
            data = generate_training_data(n, x, k, strategy.ell, mode, FSource(cfg.f_source), data_rng)
            measured = measure_training_data(strategy, data, meas_rng)
            buf = io.StringIO()
            dump_dataset(measured, buf)
            w.write_text(f"{sid}_n{n}_train.jsonl", buf.getvalue())
            try:
                gen = measure_first_learn(strategy, measured)
            except MfsepError as exc:
                out.failures += 1
                out.lines.append(f"{sid} n={n}: training failed: {exc}")
                continue
            w.write_json(f"{sid}_n{n}_learner.json", {
                "n": n, "x": BitVec(n, gen.x).hex(), "strategy": sid, "ell": strategy.ell,
                "m": strategy.record_length(n), "m_budget": strategy.m_budget, "groups": gen.groups,
            })
            protocol = MeasureFirstProtocol(strategy, n_examples=k, label_mode=mode)
            _learn_report(cfg, w, protocol, n, x, sid, out)
    out.status = 1 if out.failures else 0
    return out


def separation_config(cfg: ExperimentConfig) -> SeparationConfig:
    from .evaluation import EvalCriteria

    return SeparationConfig(
        n_values=tuple(cfg.n),
        strategies=tuple(cfg.strategies),
        ell=cfg.ell,
        m_budget=cfg.m_budget,
        f_trials=cfg.trials["f"],
        protocol_trials=cfg.trials["protocol"],
        f_source=FSource(cfg.f_source),
        label_mode=LabelMode(cfg.label_mode),
        criteria=EvalCriteria(**cfg.criteria),
        seed=cfg.seed,
        leaky_max_n=max(cfg.n) if cfg.leaky_override else 8,
        exact=cfg.exact,
        shots=cfg.shots,
        threads=cfg.threads,
    )


def _run_separation(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    result = separation_experiment(separation_config(cfg))
    out = Outcome(timings=dict(result.timings))
    w.write_text("separation.csv", result.rows_csv())
    w.write_text("summary.csv", result.summary_csv())
    w.write_json("summary.json", {"config": cfg.echo(), "arms": result.summary})
    w.write_text("tv_vs_n.svg", plots.tv_vs_n(result.summary))
    out.failures = sum(s["failures"] for s in result.summary)
    out.lines.append(f"{'n':>3} {'strategy':>9} {'m':>7} {'median TV':>10} {'delta_hat':>9} {'p_hat':>6}")
    for s in result.summary:
        m = "" if s["m"] is None else s["m"]
        out.lines.append(
            f"{s['n']:>3} {s['strategy']:>9} {m!s:>7} {s['tv_median']:>10.4f} {s['delta_hat']:>9.3f} {s['p_hat']:>6.2f}"
        )
    return out


def _hm_protocol(spec: str, n: int) -> Callable:
    name, params = parse_protocol(spec)
    if name == "quantum":
        return hm_quantum
    if name == "guess":
        return hm_random_guess
    if name == "classical":
        budget = int(params["c"])
        return lambda inst, rng: hm_classical_baseline(budget, inst, rng)
    sid = params["strategy"]
    if StrategyKind(sid) is StrategyKind.LEAKY:
        strategy = Strategy.leaky(1, m_budget=1 << n)
    else:
        ell = 10 * n * n
        strategy = Strategy(StrategyKind(sid), ell, m_budget=3 * n * ell)
    return lambda inst, rng: reduce_measure_first(strategy, inst, rng)


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", text).strip("_")


def _run_hm(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    out = Outcome()
    columns = ["n"]
    for p in cfg.protocols:
        columns += [f"success:{p}", f"low:{p}", f"high:{p}", f"bits:{p}"]
    rows, records = [], []
    trials = cfg.trials["hm"]
    for n in cfg.n:
        row: list = [n]
        for p in cfg.protocols:
            t0 = time.perf_counter()
            rng = derive_rng(cfg.seed, "hm", p, n)
            if cfg.transcript:
                with open(w.out / f"hm_{_slug(p)}_n{n}.jsonl", "w") as fp:
                    est = estimate_success(_hm_protocol(p, n), n, trials, rng, TranscriptWriter(fp))
                path = w.out / f"hm_{_slug(p)}_n{n}.jsonl"
                w.manifest.files[path.name] = _sha256(path.read_bytes())
            else:
                est = estimate_success(_hm_protocol(p, n), n, trials, rng)
            out.timings[f"{p}/n={n}"] = time.perf_counter() - t0
            row += [est.rate, est.low, est.high, est.mean_cost_bits]
            records.append({"protocol": p, "n": n, "bits": est.mean_cost_bits, "success": est.rate})
            out.lines.append(
                f"n={n} {p:<20} success {est.rate:.4f} [{est.low:.4f}, {est.high:.4f}] "
                f"bits {est.mean_cost_bits:.0f}"
            )
        rows.append(row)
    lines = [",".join(columns)] + [",".join([str(r[0])] + [repr(float(v)) for v in r[1:]]) for r in rows]
    w.write_text("hm.csv", "\n".join(lines) + "\n")
    w.write_text("hm_success_vs_bits.svg", plots.hm_success_vs_bits(records))
    return out


def _run_distinguish(cfg: ExperimentConfig, w: RunWriter) -> Outcome:
    out = Outcome()
    reports = []
    for n in cfg.n:
        for sid in cfg.strategies:
            t0 = time.perf_counter()
            rep = estimate_advantage(
                DEFAULT_SPEC, build_strategy(cfg, sid, n), n, cfg.trials["distinguish"],
                derive_rng(cfg.seed, "distinguish", sid, n),
            )
            out.timings[f"{sid}/n={n}"] = time.perf_counter() - t0
            out.failures += rep.failures
            body = json.loads(rep.to_json())
            reports.append(body)
            flag = "" if rep.gap_consistent_with_zero else "  <-- gap excludes 0: possible PRF defect"
            out.lines.append(
                f"n={n} {sid:<8} p_prf {rep.p_prf:.4f} p_rand {rep.p_rand:.4f} gap {rep.gap:+.4f} "
                f"CI [{rep.gap_ci[0]:+.4f}, {rep.gap_ci[1]:+.4f}]{flag}"
            )
    w.write_json("distinguisher.json", {"config": cfg.echo(), "reports": reports})
    cols = ["n", "strategy", "trials", "p_prf", "p_rand", "gap", "gap_low", "gap_high", "failures"]
    lines = [",".join(cols)]
    for r in reports:
        lines.append(",".join(map(str, [r["n"], r["strategy"], r["trials"], repr(r["p_prf"]), repr(r["p_rand"]),
                                        repr(r["gap"]), repr(r["ci"]["gap"][0]), repr(r["ci"]["gap"][1]),
                                        r["failures"]])))
    w.write_text("distinguisher.csv", "\n".join(lines) + "\n")
    w.write_text("distinguisher.svg", plots.distinguisher_bars(reports))
    return out


RUNNERS = {
    "verify": _run_verify,
    "learn-fq": _run_learn_fq,
    "learn-mf": _run_learn_mf,
    "separation": _run_separation,
    "hm": _run_hm,
    "distinguish": _run_distinguish,
}


def run(cfg: ExperimentConfig, echo: Callable[[str], None] = print) -> RunManifest:
    """Run one validated experiment into ``cfg.out`` and return its manifest."""
    writer = RunWriter(Path(cfg.out), cfg)
    t0 = time.perf_counter()
    outcome = RUNNERS[cfg.experiment](cfg, writer)
    outcome.timings["total"] = time.perf_counter() - t0
    for line in outcome.lines:
        echo(line)
    if outcome.failures:
        echo(f"{outcome.failures} failed trial(s) logged and counted")
    return writer.finish(outcome.timings, outcome.failures, outcome.status)


def report(out: Path, echo: Callable[[str], None] = print) -> int:
    """Check a finished run's digests and print its headline numbers."""
    path = Path(out) / "manifest.json"
    if not path.is_file():
        raise ConfigError(f"no manifest.json in {out}")
    m = RunManifest.load(path)
    bad = []
    for name, digest in m.files.items():
        f = Path(out) / name
        if not f.is_file() or _sha256(f.read_bytes()) != digest:
            bad.append(name)
    echo(f"{m.experiment} run, config {m.config_hash[:12]}, version {m.code_version}, "
         f"{len(m.files)} files, {m.wall_clock.get('total', 0.0):.1f}s, failures {m.failures}")
    summary = Path(out) / {"separation": "summary.csv", "hm": "hm.csv",
                           "distinguish": "distinguisher.csv"}.get(m.experiment, "config.json")
    if m.experiment in ("separation", "hm", "distinguish") and summary.is_file():
        echo(summary.read_text().rstrip())
    for name in bad:
        echo(f"digest mismatch: {name}")
    if bad or m.status:
        return 1
    echo("all digests match")
    return 0


# --- argument parsing -------------------------------------------------------


def _int_list_arg(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory (default runs/<subcommand>)")
    common.add_argument("--threads", type=int, help="worker threads; results do not depend on it")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--exact", dest="exact", action="store_true", default=None,
                      help="exact output distributions (n <= 12)")
    mode.add_argument("--empirical", dest="exact", action="store_false",
                      help="frequency estimates from --shots samples")
    common.add_argument("--n", type=_int_list_arg, help="comma-separated n values")
    common.add_argument("--trials", type=int, help="main trial count for the subcommand")
    common.add_argument("--strategies", help="comma-separated: shadow,fourier,leaky")
    common.add_argument("--label-mode", choices=["full_x", "parity"])
    common.add_argument("--f-source", choices=["uniform", "prf"])
    common.add_argument("--shots", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="mfsep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mfsep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="brute-force oracle and property suites") \
        .add_argument("--suites", help="comma-separated subset of suites")
    sub.add_parser("learn-fq", parents=[common], help="train and score the fully-quantum learner") \
        .add_argument("--x", help="hidden string in hex (single n only)")
    sub.add_parser("learn-mf", parents=[common], help="train and score measure-first learners") \
        .add_argument("--x", help="hidden string in hex (single n only)")
    sub.add_parser("separation", parents=[common], help="TV of every arm on shared draws")
    hm = sub.add_parser("hm", parents=[common], help="Hidden Matching success rates")
    hm.add_argument("--protocols", help="e.g. quantum,classical:c=8,reduction:shadow")
    hm.add_argument("--transcript", action="store_true", default=None, help="write per-game JSONL")
    sub.add_parser("distinguish", parents=[common], help="PRF-vs-uniform distinguisher harness")
    sub.add_parser("report", parents=[common], help="check digests of a finished run and print its tables")
    return parser


_TRIAL_KEY = {"separation": "f", "learn-fq": "f", "learn-mf": "f", "hm": "hm", "distinguish": "distinguish"}


def _overrides(args: argparse.Namespace) -> dict:
    ov = {
        "seed": args.seed,
        "threads": args.threads,
        "exact": args.exact,
        "n": args.n,
        "label_mode": args.label_mode,
        "f_source": args.f_source,
        "shots": args.shots,
        "strategies": args.strategies.split(",") if args.strategies else None,
        "protocols": getattr(args, "protocols", None),
        "transcript": getattr(args, "transcript", None),
        "x": getattr(args, "x", None),
        "suites": args.suites.split(",") if getattr(args, "suites", None) else None,
    }
    return {k: v for k, v in ov.items() if v is not None}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return report(Path(args.out or "runs/separation"))
        ov = _overrides(args)
        if args.config:
            cfg = parse_config(args.config, ov)
            if cfg.experiment != args.command:
                raise ConfigError(f"{args.config} configures {cfg.experiment!r}, not {args.command!r}")
        else:
            cfg = parse_config(None, {"experiment": args.command, **ov})
        if args.trials is not None and args.command in _TRIAL_KEY:
            if args.trials < 1:
                raise ConfigError("--trials must be >= 1")
            cfg = with_overrides(cfg, trials={**cfg.trials, _TRIAL_KEY[args.command]: args.trials})
        if args.out:
            cfg = with_overrides(cfg, out=args.out)
        elif args.config is None or "out" not in load_yaml(Path(args.config).read_text())[0]:
            cfg = with_overrides(cfg, out=f"runs/{args.command}")
        manifest = run(cfg)
        print(f"wrote {len(manifest.files)} files to {cfg.out} (config {manifest.config_hash[:12]})")
        return manifest.status
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except MfsepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
