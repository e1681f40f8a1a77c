"""Command line front end: ``nthcoeff compute`` and ``nthcoeff selftest``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import random
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .christol_engine import (
    base_p_digits,
    build_section_matrices,
    nth_coeff_bivariate,
    nth_coeff_matrix,
    represent_y,
    stable_section,
)
from .errors import FallbackExhausted, InputError, InternalInvariantError, NthCoeffError, ParseError
from .ff_core import FieldCtx, format_elem, parse_elem
from .hermite_pade import build_hp_system, nth_coeff_hp
from .recurrence import RecurrenceStats, nth_coeff_recurrence
from .series_lift import AlgebraicInstance, oracle_nth_coeff

ALGORITHMS = ("auto", "bivariate", "matrix", "hermite-pade", "recurrence")
ORACLE_LIMIT = 10**6
_KEYS = {"p", "s", "pi", "E", "rho", "init", "N"}


@dataclass
class RunConfig:
    algorithm: str = "auto"
    verify: bool = False
    seed: int = 0
    output: str = "plain"
    bench: str | None = None


# ---------------------------------------------------------------------------
# instance files


def _tokens(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _elements(F: FieldCtx, words, lineno: int, count: int):
    if len(words) != count * F.s:
        raise ParseError(lineno, f"expected {count} elements of {F.s} residue(s) each, got {len(words)} numbers")
    out = []
    for i in range(count):
        chunk = " ".join(words[i * F.s:(i + 1) * F.s])
        try:
            out.append(parse_elem(F, chunk))
        except ValueError as exc:
            raise ParseError(lineno, f"bad field element {chunk!r}: {exc}") from exc
    return out


def _int(words, lineno, n=1):
    if len(words) != n:
        raise ParseError(lineno, f"expected {n} integer(s)")
    try:
        return [int(w) for w in words]
    except ValueError as exc:
        raise ParseError(lineno, str(exc)) from exc


def parse_instance_text(text: str) -> AlgebraicInstance:
    lines = list(_tokens(text))
    header = {}
    pos = 0
    E_rows = None
    E_line = None
    while pos < len(lines):
        lineno, words = lines[pos]
        key, rest = words[0], words[1:]
        pos += 1
        if key in header or (key == "E" and E_rows is not None):
            raise ParseError(lineno, f"duplicate key {key!r}")
        if key in ("p", "s", "rho"):
            header[key] = (lineno, _int(rest, lineno)[0])
        elif key == "N":
            header[key] = (lineno, _int(rest, lineno)[0])
        elif key in ("pi", "init"):
            header[key] = (lineno, rest)
        elif key == "E":
            nrows, ncols = _int(rest, lineno, 2)
            if nrows < 2 or ncols < 1:
                raise ParseError(lineno, "E needs at least 2 rows and 1 column")
            if pos + nrows > len(lines) or any(lines[pos + i][1][0] in _KEYS for i in range(nrows)):
                raise ParseError(lineno, f"E header announces {nrows} rows")
            E_rows = [(lines[pos + i][0], lines[pos + i][1], ncols) for i in range(nrows)]
            E_line = lineno
            pos += nrows
        else:
            raise ParseError(lineno, f"unknown key {key!r}")
    for key in ("p", "rho", "init"):
        if key not in header:
            raise ParseError(0, f"missing key {key!r}")
    if E_rows is None:
        raise ParseError(0, "missing E block")
    p_line, p = header["p"]
    s = header.get("s", (0, 1))[1]
    try:
        if s == 1 and "pi" not in header:
            F = FieldCtx(p)
        else:
            if "pi" not in header:
                raise ParseError(p_line, "pi is required when s > 1")
            pi_line, pi_words = header["pi"]
            pi = _int(pi_words, pi_line, s + 1)
            F = FieldCtx(p, pi)
    except InputError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(p_line, str(exc)) from exc
    if F.s != s:
        raise ParseError(p_line, f"pi has degree {F.s}, expected s = {s}")
    E = [_elements(F, words, ln, ncols) for ln, words, ncols in E_rows]
    rho_line, rho = header["rho"]
    init_line, init_words = header["init"]
    if rho < 0:
        raise ParseError(rho_line, "rho must be nonnegative")
    init = _elements(F, init_words, init_line, 2 * rho + 1)
    N = header["N"][1] if "N" in header else None
    if N is not None and N < 0:
        raise ParseError(header["N"][0], "N must be nonnegative")
    inst = AlgebraicInstance(F, E, rho, init, N)
    if inst.d + 1 != len(E_rows):
        raise ParseError(E_line, "leading row of E is zero")
    return inst.validate()


def parse_instance(path) -> AlgebraicInstance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_instance_text(text)


def bundled_instance(name: str = "f5_paper.nth") -> AlgebraicInstance:
    text = resources.files("nthcoeff").joinpath("data", name).read_text()
    return parse_instance_text(text)


def format_instance(inst: AlgebraicInstance, N: int | None = None) -> str:
    F = inst.field
    lines = [f"p {F.p}", f"s {F.s}"]
    if F.s > 1:
        lines.append("pi " + " ".join(map(str, F.pi)))
    width = inst.h + 1
    lines.append(f"E {inst.d + 1} {width}")
    for row in inst.E:
        padded = list(row) + [F.zero] * (width - len(row))
        lines.append("  ".join(format_elem(F, c) for c in padded))
    lines.append(f"rho {inst.rho}")
    lines.append("init " + "  ".join(format_elem(F, c) for c in inst.init))
    if N is not None or inst.N is not None:
        lines.append(f"N {N if N is not None else inst.N}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# engines


def choose_engine(inst: AlgebraicInstance, algorithm: str) -> str:
    if algorithm != "auto":
        return algorithm
    dh = inst.d * inst.h
    return "recurrence" if inst.p > 2 * dh * dh else "hermite-pade"


def run_engine(inst: AlgebraicInstance, engine: str, N: int, seed: int = 0):
    """``(value, block_mults)``; the count is 0 for engines without matrix factorials."""
    if engine == "bivariate":
        return nth_coeff_bivariate(inst, N), 0
    if engine == "matrix":
        return nth_coeff_matrix(inst, N, rng=random.Random(seed)), 0
    if engine == "hermite-pade":
        return nth_coeff_hp(inst, N), 0
    if engine == "recurrence":
        stats: list[RecurrenceStats] = []
        value = nth_coeff_recurrence(inst, N, seed=seed, stats_out=stats)
        return value, stats[0].block_mults
    raise InputError(f"unknown algorithm {engine!r}")


def run_compute(inst: AlgebraicInstance, cfg: RunConfig, out=None) -> dict:
    out = out or sys.stdout
    if inst.N is None:
        raise InputError("instance has no N line")
    N = inst.N
    F = inst.field
    engine = choose_engine(inst, cfg.algorithm)
    start = time.perf_counter()
    value, block_mults = run_engine(inst, engine, N, cfg.seed)
    wall = time.perf_counter() - start
    report = {
        "engine": engine,
        "p": F.p,
        "s": F.s,
        "d": inst.d,
        "h": inst.h,
        "N": N,
        "digits": len(base_p_digits(N, F.p)),
        "block_mults": block_mults,
        "value": format_elem(F, value),
    }
    if cfg.verify:
        if N <= ORACLE_LIMIT:
            expected = oracle_nth_coeff(inst, N)
            report["oracle"] = format_elem(F, expected)
            report["verify"] = "MATCH" if expected == value else "MISMATCH"
        else:
            report["verify"] = "SKIPPED"
    if cfg.bench:
        path = Path(cfg.bench)
        new = not path.exists() or path.stat().st_size == 0
        with path.open("a", newline="") as fh:
            w = csv.writer(fh)
            if new:
                w.writerow(["engine", "p", "d", "h", "N", "digits", "block_mults", "wall_s"])
            w.writerow([engine, F.p, inst.d, inst.h, N, report["digits"], block_mults, f"{wall:.6f}"])
    if cfg.output == "json":
        out.write(json.dumps(report, sort_keys=True) + "\n")
    else:
        out.write(report["value"] + "\n")
        if "verify" in report:
            out.write(report["verify"] + "\n")
    return report


# ---------------------------------------------------------------------------
# self test on the bundled F_5 example


def _bi(F, rows):
    return [[F.from_int(c) for c in row] for row in rows]


def selftest(out=None) -> bool:
    out = out or sys.stdout
    inst = bundled_instance()
    F = inst.field
    results = []

    for engine in ("bivariate", "matrix", "hermite-pade", "recurrence"):
        t0 = time.perf_counter()
        value, _ = run_engine(bundled_instance(), engine, 70)
        results.append((f"f_70 via {engine}", value == 2, f"{value} in {time.perf_counter() - t0:.2f}s"))

    images = {
        0: [[0, 0, 0, 0, 4], [0, 2, 4], [1, 1, 2]],
        1: [[0, 0, 0, 4], [1, 0, 0, 4], [0, 1, 0, 4]],
        2: [[0, 0, 2, 4], [0, 0, 3], [2, 4]],
        3: [[0, 4], [0, 1, 3], [3, 4, 2]],
        4: [[1], [3, 3], [4, 3]],
    }
    y = represent_y(inst)
    for r, want in images.items():
        got = stable_section(y, r).P
        results.append((f"section {r} of y", got == _bi(F, want), str(got)))
    comp = stable_section(stable_section(stable_section(y, 0), 4), 2)
    want = [[2, 0, 1], [4, 3, 0, 3], [2, 0, 4, 2]]
    results.append(("composed sections 0, 4, 2", comp.P == _bi(F, want), str(comp.P)))

    S = build_section_matrices(inst, random.Random(0))
    row0 = [[1, 0, 0, 0, 3, 0, 0, 0, 1, 0, 0, 0, 1, 1, 0, 0, 1], [0, 0, 0, 0, 1, 0, 0, 0, 2],
            [0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1], [0] * 12 + [1]]
    results.append(("inverse Frobenius matrix, first row", S.Minv.rows[0] == _bi(F, row0), ""))
    last = S.Minv.rows[-1]
    last_ok = (last[:3] == [[], [], []] and len(last[3]) == 17
               and last[3][:2] == [1, 4] and last[3][13] == 4 and last[3][16] == 1)
    results.append(("inverse Frobenius matrix, last row", last_ok, ""))
    results.append(("inverse Frobenius matrix, degree", S.Minv.max_degree() == inst.h * (inst.p - 1),
                    str(S.Minv.max_degree())))
    sys_hp = build_hp_system(inst)
    results.append(("approximation matrix shape", (len(sys_hp.H), len(sys_hp.H[0])) == (32, 20),
                    f"{len(sys_hp.H)}x{len(sys_hp.H[0])}"))

    ok = True
    for name, passed, detail in results:
        ok &= passed
        out.write(f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail and not passed else "") + "\n")
    return ok


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nthcoeff", description="N-th coefficient of an algebraic power series over a finite field")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", help="compute f_N for an instance file")
    c.add_argument("--input", required=True, help="instance file")
    c.add_argument("--algorithm", choices=ALGORITHMS, default="auto")
    c.add_argument("--verify", action="store_true", help="compare with direct Newton expansion (N <= 10^6)")
    c.add_argument("--seed", type=int, default=0, help="seed for the randomized steps (64-bit)")
    c.add_argument("--json", action="store_true", help="print a JSON report")
    c.add_argument("--bench", metavar="OUT.csv", help="append a timing row to a CSV file")
    c.add_argument("-v", "--verbose", action="store_true")
    sub.add_parser("selftest", help="check the bundled F_5 example")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            return 0 if selftest() else 2
        if not 0 <= args.seed < 1 << 64:
            raise InputError("seed must fit in 64 bits")
        cfg = RunConfig(args.algorithm, args.verify, args.seed, "json" if args.json else "plain", args.bench)
        inst = parse_instance(args.input)
        report = run_compute(inst, cfg)
        return 2 if report.get("verify") == "MISMATCH" else 0
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FallbackExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InternalInvariantError, NthCoeffError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
