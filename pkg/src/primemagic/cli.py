"""Command-line front end.

Every run writes its tables as CSV, its records as JSON and a run manifest
into ``--out``.  Files are written to a temporary name and renamed into
place.  Exit codes: 0 success, 1 invalid configuration (or a failed
``verify``), 2 search exhausted, 3 small obstruction (q0 in {2, 3}),
4 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .algebra import MagicSquare, verify_prime_magic
from .errors import DomainError, NotMagicError, NotPrimeError, ResourceError, SearchExhausted, SmallObstructionError
from .geometry import Cutoff
from .local import STARS, compute_w_normalization, local_table, moebius
from .primes import WeightKind
from .search import DEFAULT_BUDGET, Strategy, find_solution, scan_primes
from . import stats

log = logging.getLogger("primemagic")

SCHEMA_VERSION = 1
SUBCOMMANDS = ("construct", "verify", "scan", "local", "mass", "joint", "restricted", "discrepancy", "bdh", "diagcheck")
NEEDS_Q0 = {"construct", "verify", "local", "mass", "joint", "restricted", "discrepancy", "diagcheck"}
NEEDS_X = {"mass", "joint", "restricted", "discrepancy", "bdh", "diagcheck"}

EXIT_OK, EXIT_INVALID, EXIT_EXHAUSTED, EXIT_OBSTRUCTION, EXIT_RESOURCE = 0, 1, 2, 3, 4


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    q0: int | None = None
    max: int | None = None
    w: int = 7
    shrink: float = 0.6
    support: float = 0.85
    X: list[int] = field(default_factory=list)
    delta: float = 0.5
    budget: int = DEFAULT_BUDGET
    strategy: str = Strategy.LEX.value
    weight: str = WeightKind.THETA.value
    threads: int = 1
    out: str = "primemagic-out"
    square: str | None = None
    d: list[int] = field(default_factory=lambda: [1])
    star: str = "1"
    lam: str = "unit"
    Q: list[int] = field(default_factory=lambda: [100])
    P: int = 199

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        if self.subcommand in NEEDS_Q0 and self.q0 is None:
            raise ConfigError(f"{self.subcommand} needs --q0")
        if self.subcommand == "scan" and self.max is None:
            raise ConfigError("scan needs --max")
        if self.subcommand == "verify" and not self.square:
            raise ConfigError("verify needs --square")
        if self.subcommand in NEEDS_X and not self.X:
            raise ConfigError(f"{self.subcommand} needs --X")
        if any(x < 1 for x in self.X):
            raise ConfigError("--X values must be >= 1")
        if self.w < 2:
            raise ConfigError("--w must be >= 2")
        if not 0 < self.shrink < self.support < 1:
            raise ConfigError("need 0 < --shrink < --support < 1")
        if not 0 < self.delta < 1:
            raise ConfigError("--delta must lie in (0, 1)")
        if self.budget < 1 or self.threads < 1:
            raise ConfigError("--budget and --threads must be positive")
        if self.q0 is not None and self.q0 >= 1 << 60:
            raise ConfigError("--q0 must be below 2**60 so every form fits in 62 bits")
        if self.star not in STARS:
            raise ConfigError(f"--star must be one of {STARS}")
        if self.subcommand == "bdh" and any(not 1 <= q <= x for q in self.Q for x in self.X):
            raise ConfigError("bdh needs 1 <= Q <= X")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--q0", type=int)
    common.add_argument("--max", type=int)
    common.add_argument("--w", type=int, default=7)
    common.add_argument("--shrink", type=float, default=0.6)
    common.add_argument("--support", type=float, default=0.85)
    common.add_argument("--X", type=int, nargs="+", default=[])
    common.add_argument("--delta", type=float, default=0.5)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--strategy", choices=[s.value for s in Strategy], default=Strategy.LEX.value)
    common.add_argument("--region-strict", action="store_true", help="same as --strategy region")
    common.add_argument("--weight", choices=[k.value for k in WeightKind], default=WeightKind.THETA.value)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", default="primemagic-out")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="primemagic", description="Prime 3x3 magic squares through a prescribed prime.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "verify":
            p.add_argument("--square", help="nine row-major entries, comma-separated")
        if name == "restricted":
            p.add_argument("--d", type=int, nargs="+", default=[1])
        if name in ("restricted", "discrepancy"):
            p.add_argument("--star", choices=list(STARS), default="1")
        if name == "discrepancy":
            p.add_argument("--lam", choices=["unit", "moebius"], default="unit")
        if name == "bdh":
            p.add_argument("--Q", type=int, nargs="+", default=[100])
        if name == "local":
            p.add_argument("--P", type=int, default=199, help="largest prime in the table")
    return parser


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    if ns.pop("region_strict"):
        ns["strategy"] = Strategy.REGION.value
    ns.pop("verbose")
    return RunConfig(**ns)


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() or "unknown"


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["schema_version"] + header)
    for row in rows:
        writer.writerow([SCHEMA_VERSION] + ["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


class Run:
    """Collects the artifacts of one subcommand and the manifest describing them."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.outputs: list[str] = []
        self.extra: dict = {}

    def table(self, header, rows) -> str:
        text = csv_text(header, rows)
        self._write(f"{self.cfg.subcommand}.csv", text)
        return text

    def record(self, obj) -> None:
        self._write(f"{self.cfg.subcommand}.json", json.dumps(obj, indent=2, sort_keys=True) + "\n")

    def _write(self, name: str, text: str) -> None:
        write_atomic(self.out / name, text)
        self.outputs.append(name)

    def manifest(self, status: int, error: str | None = None) -> None:
        cfg = self.cfg
        doc = {
            "schema_version": SCHEMA_VERSION,
            "package_version": __version__,
            "build": git_describe(),
            "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "config": asdict(cfg),
            "cutoff": {"shrink": cfg.shrink, "support": cfg.support, "profile": "smooth exp(-1/x) step in the K gauge"},
            "exit_status": status,
            "error": error,
            "outputs": self.outputs,
        }
        doc.update(self.extra)
        write_atomic(self.out / "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _normalization(run: Run):
    cfg = run.cfg
    norm = compute_w_normalization(cfg.w, cfg.q0)
    run.extra.update(q0=cfg.q0, w=norm.w, W=norm.W, a_W=norm.a_W, b_W=norm.b_W)
    return norm, Cutoff(cfg.shrink, cfg.support)


def cmd_construct(run: Run) -> int:
    cfg = run.cfg
    rec = find_solution(cfg.q0, cfg.strategy, cfg.budget, cfg.w)
    run.record(rec.to_dict())
    run.table(list("abcdefghi"), [list(rec.square.entries)])
    print(rec.square.to_csv())
    log.info("q0=%d t=%d u=%d S=%d after %d candidates", rec.q0, rec.t, rec.u, rec.magic_constant, rec.candidates_tested)
    return EXIT_OK


def cmd_verify(run: Run) -> int:
    cfg = run.cfg
    sq = MagicSquare.parse(cfg.square)
    rep = verify_prime_magic(sq, cfg.q0)
    doc = {k: v for k, v in asdict(rep).items()}
    doc["passed"] = rep.passed
    run.record(doc)
    run.table(
        ["square", "q0", "is_magic", "all_positive", "all_prime", "all_distinct", "contains_q0", "passed"],
        [[sq.to_csv(), cfg.q0, rep.is_magic, rep.all_positive, rep.all_prime, rep.all_distinct, rep.contains_q0, rep.passed]],
    )
    print("PASS" if rep.passed else "FAIL: " + "; ".join(rep.failures))
    return EXIT_OK if rep.passed else EXIT_INVALID


def cmd_scan(run: Run) -> int:
    cfg = run.cfg
    summary = scan_primes(cfg.max, cfg.strategy, cfg.budget, cfg.w, cfg.threads)
    rows = [[r.q0, r.found, r.t, r.u, r.magic_constant, r.candidates_tested] for r in summary.rows]
    run.table(["q0", "found", "t", "u", "S", "candidates_tested"], rows)
    run.extra.update(rows=len(rows), success_rate=summary.success_rate)
    print(f"{sum(r.found for r in summary.rows)}/{len(rows)} primes found")
    return EXIT_OK if all(r.found for r in summary.rows) else EXIT_EXHAUSTED


def cmd_local(run: Run) -> int:
    cfg = run.cfg
    norm, _ = _normalization(run)
    rows = []
    for r in local_table(cfg.q0, cfg.P, norm.W):
        g = [(r.g[s].numerator, r.g[s].denominator) if s in r.g else (None, None) for s in STARS]
        rows.append([r.p, r.core_count, *g[0], *g[1], *g[2], r.sigma_p, r.beta_p])
    header = ["p", "core_count", "g1_num", "g1_den", "g2_num", "g2_den", "gD_num", "gD_den", "sigma_p", "beta_p"]
    sys.stdout.write(run.table(header, rows))
    return EXIT_OK


def cmd_mass(run: Run) -> int:
    cfg = run.cfg
    norm, cut = _normalization(run)
    rows = []
    for X in cfg.X:
        r = stats.core_mass(cfg.q0, norm, cut, X, cfg.weight)
        rows.append([X, r.weight, r.M1, r.C, r.core_prime_pairs, r.all_prime_pairs, r.c_pred, r.ratio])
    sys.stdout.write(run.table(["X", "weight", "M1", "C", "core_prime_pairs", "all_prime_pairs", "c_pred", "M1_over_X2"], rows))
    return EXIT_OK


def cmd_joint(run: Run) -> int:
    cfg = run.cfg
    norm, cut = _normalization(run)
    rows = [[X, cfg.weight, stats.joint_functional(cfg.q0, norm, cut, X, cfg.weight)] for X in cfg.X]
    sys.stdout.write(run.table(["X", "weight", "C"], rows))
    return EXIT_OK


def cmd_restricted(run: Run) -> int:
    cfg = run.cfg
    norm, cut = _normalization(run)
    from .local import g_multiplicative

    rows = []
    for X in cfg.X:
        M1 = stats.core_mass(cfg.q0, norm, cut, X, cfg.weight).M1
        for d in cfg.d:
            A = stats.restricted_mass(cfg.q0, norm, cut, X, d, cfg.star, cfg.weight)
            g = float(g_multiplicative(d, cfg.q0, cfg.star))
            rows.append([X, d, cfg.star, A, M1, g, A / M1 if M1 else None])
    sys.stdout.write(run.table(["X", "d", "star", "A_d", "M1", "g_d", "A_d_over_M1"], rows))
    return EXIT_OK


def cmd_discrepancy(run: Run) -> int:
    cfg = run.cfg
    norm, cut = _normalization(run)
    rows, summary = [], []
    for X in cfg.X:
        rep = stats.discrepancy_sum(cfg.q0, norm, cut, X, cfg.delta, cfg.lam, cfg.star, cfg.weight)
        rows += [[X, cfg.delta, rep.star, d, moebius(d), A, gm, err] for d, A, gm, err in rep.rows]
        summary.append(
            {"X": X, "M1": rep.M1, "sum_abs": rep.sum_abs, "sum_unit": rep.sum_unit, "sum_moebius": rep.sum_moebius, "normalized_abs": rep.normalized_abs}
        )
    run.record(summary)
    sys.stdout.write(run.table(["X", "delta", "star", "d", "mu", "A_d", "g_d_M1", "error"], rows))
    return EXIT_OK


def cmd_bdh(run: Run) -> int:
    cfg = run.cfg
    rows = []
    for X in cfg.X:
        for Q in cfg.Q:
            rep = stats.bdh_variance(X, Q)
            rows.append([X, Q, rep.V, rep.normalized, rep.log_exponent])
    sys.stdout.write(run.table(["X", "Q", "V", "V_over_XQ", "log_exponent"], rows))
    return EXIT_OK


def cmd_diagcheck(run: Run) -> int:
    cfg = run.cfg
    norm, cut = _normalization(run)
    rows = []
    ok = stats.diagonal_direction_check(cfg.q0)
    for X in cfg.X:
        rep = stats.diagonal_mass_check(cfg.q0, norm, cut, X, cfg.weight)
        ok &= rep.passed
        rows.append([X, rep.weight, rep.M1, rep.diagonal_total, rep.rel_error, rep.count_direct, rep.count_diagonal, rep.passed])
    sys.stdout.write(run.table(["X", "weight", "M1", "diagonal_total", "rel_error", "count_direct", "count_diagonal", "passed"], rows))
    return EXIT_OK if ok else EXIT_INVALID


COMMANDS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


def dispatch(cfg: RunConfig) -> int:
    run = Run(cfg)
    error = None
    if cfg.q0 is not None:
        try:
            _normalization(run)
        except (DomainError, NotPrimeError, SmallObstructionError):
            pass  # reported by the subcommand itself
    try:
        status = COMMANDS[cfg.subcommand](run)
    except SmallObstructionError as exc:
        status, error = EXIT_OBSTRUCTION, str(exc)
    except SearchExhausted as exc:
        status, error = EXIT_EXHAUSTED, str(exc)
        run.record({"q0": exc.q0, "strategy": exc.strategy, "exhausted": True, "candidates_tested": exc.candidates_tested})
    except (ResourceError, MemoryError) as exc:
        status, error = EXIT_RESOURCE, str(exc)
    except (DomainError, NotPrimeError, NotMagicError, ValueError) as exc:
        status, error = EXIT_INVALID, str(exc)
    if error:
        print(f"primemagic: {error}", file=sys.stderr)
    run.manifest(status, error)
    return status


def main(argv: list[str] | None = None) -> int:
    raw = sys.argv[1:] if argv is None else argv
    logging.basicConfig(level=logging.INFO if ("-v" in raw or "--verbose" in raw) else logging.WARNING, format="%(message)s")
    try:
        cfg = config_from_args(raw)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"primemagic: {exc}", file=sys.stderr)
        Run(cfg).manifest(EXIT_INVALID, str(exc))
        return EXIT_INVALID
    return dispatch(cfg)


if __name__ == "__main__":
    sys.exit(main())
