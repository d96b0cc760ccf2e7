"""Command-line front end.

Every command prints a deterministic JSON report (to ``--out`` or stdout) and
exits 0 when all checks pass, 2 when a check fails and 1 on input errors.
Wall-clock time goes to stderr only, so reports stay byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import acceptance
from .charclasses import NonDiagonalizableError, cs_classes_of_flat, cs_of_morphism, distance_mod_z, segre_inverse
from .formcalc import AliasingError, TorusGrid
from .specio import (
    SpecError,
    cplx_out,
    dump_total_class,
    dumps,
    index_key,
    load_connection,
    load_holonomy,
    load_morphism,
    load_total_class,
    matrix_out,
)
from .superalgebra import DimensionError, ParityError
from .superconnection import (
    FlatnessError,
    HolonomyRep,
    c1_from_holonomy,
    check_closed,
    class_pairing,
    family_connection_check,
    holonomy_of_flat,
    transgress_c1,
)

COMMANDS = ("check-closed", "ch-form", "t-sweep", "holonomy", "cs1", "cs-flat", "cs-morphism", "segre", "selftest")

DEFAULT_TOL = {
    "check-closed": 1e-8,
    "ch-form": 1e-8,
    "t-sweep": 1e-6,
    "holonomy": 1e-8,
    "cs1": 1e-8,
    "cs-flat": 1e-9,
    "cs-morphism": 1e-9,
    "segre": 0.0,
    "selftest": None,
}

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2


class InputError(Exception):
    """Bad command line or input document; maps to exit code 1."""


@dataclass
class JobSpec:
    command: str
    input_path: Path | None
    output_path: Path | None
    tol: float | None
    t_values: list[float] | None
    grid: tuple[int, ...] | None
    selftest_filter: list[int] | None
    document: Any = None
    raw: bytes = b""


@dataclass
class Report:
    command: str
    inputs_digest: str
    config: dict
    results: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    csv_text: str | None = None

    def check(self, name: str, value, tol, passed: bool | None = None):
        if passed is None:
            passed = bool(value <= tol)
        self.checks[name] = {"value": value, "tol": tol, "passed": bool(passed)}

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "inputs_digest": self.inputs_digest,
            "config": self.config,
            "results": self.results,
            "residuals": self.residuals,
            "checks": self.checks,
            "passed": self.passed,
        }

    def text(self) -> str:
        return dumps(self.to_json())


def _grid_arg(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.replace("x", ",").split(",") if p)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}, expected e.g. 16,16") from None


def _filter_arg(text: str) -> list[int]:
    try:
        out = sorted({int(p) for p in text.split(",") if p})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad filter {text!r}, expected e.g. 1,3,5") from None
    bad = [k for k in out if k not in acceptance.CRITERIA]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown criteria {bad}")
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="superchern", description="Chern-Simons classes of superconnections on flat tori.")
    p.add_argument("command", help="one of: " + ", ".join(COMMANDS))
    p.add_argument("--in", dest="input_path", type=Path, help="input JSON document")
    p.add_argument("--out", dest="output_path", type=Path, help="write the report (CSV for t-sweep) here")
    p.add_argument("--tol", type=float, help="tolerance for the command's checks")
    p.add_argument("--t", dest="t_values", type=float, action="append", help="superconnection parameter (repeatable)")
    p.add_argument("--grid", type=_grid_arg, help="override grid, e.g. 16,16")
    p.add_argument("--selftest-filter", type=_filter_arg, help="criteria to run, e.g. 1,2,6")
    return p


def parse_job(argv: list[str]) -> JobSpec:
    """Parse and validate the command line and load the input document."""
    ns = build_parser().parse_args(argv)
    if ns.command not in COMMANDS:
        raise InputError(f"unknown command {ns.command!r}")
    job = JobSpec(ns.command, ns.input_path, ns.output_path, ns.tol, ns.t_values, ns.grid, ns.selftest_filter)
    if job.command == "selftest":
        return job
    if job.input_path is None:
        raise InputError(f"{job.command} needs --in")
    if not job.input_path.is_file():
        raise InputError(f"input not found: {job.input_path}")
    job.raw = job.input_path.read_bytes()
    try:
        job.document = json.loads(job.raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise InputError(f"malformed input {job.input_path}: {exc}") from None
    if not isinstance(job.document, dict):
        raise InputError(f"malformed input {job.input_path}: top level must be an object")
    # fail early on aliasing and grading errors
    if job.command in ("check-closed", "ch-form", "t-sweep", "holonomy", "cs1"):
        _connection(job)
    return job


def _connection(job: JobSpec):
    c, t_doc = load_connection(job.document, job.grid)
    return c, (job.t_values or t_doc)


def _tol(job: JobSpec) -> float:
    return DEFAULT_TOL[job.command] if job.tol is None else job.tol


def _pairing_json(p: dict) -> dict:
    return {index_key(I) or "0": cplx_out(v) for I, v in p.items()}


def _run_check_closed(job, rep):
    c, ts = _connection(job)
    tol = _tol(job)
    for t in ts:
        res = check_closed(c.with_t(t))
        rep.residuals[f"t={t!r}"] = res
        rep.check(f"closed at t={t!r}", res, tol)


def _run_ch_form(job, rep):
    c, ts = _connection(job)
    tol = _tol(job)
    out = {}
    for t in ts:
        ct = c.with_t(t)
        out[f"t={t!r}"] = _pairing_json(class_pairing(ct))
        res = check_closed(ct)
        rep.residuals[f"t={t!r}"] = res
        rep.check(f"closed at t={t!r}", res, tol)
    rep.results["pairings"] = out


def _run_t_sweep(job, rep):
    c, ts = _connection(job)
    if job.t_values is None and "t" not in job.document:
        ts = list(acceptance.T_SWEEP)
    tol = _tol(job)
    fam = family_connection_check(c, ts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "degree", "subtorus", "real", "imag"])
    for t, p in zip(fam.t_values, fam.pairings):
        for I, v in p.items():
            w.writerow([repr(t), len(I), index_key(I), repr(float(v.real)), repr(float(v.imag))])
    rep.csv_text = buf.getvalue()
    rep.results["flat_pair"] = c.is_flat_pair()
    rep.results["deviation"] = {index_key(I) or "0": d for I, d in fam.deviation.items()}
    rep.residuals["max_deviation"] = fam.max_deviation
    rep.check("t-independence", fam.max_deviation, tol)
    if c.is_flat_pair():
        worst = max((abs(v) for p in fam.pairings for I, v in p.items() if I), default=0.0)
        rep.residuals["max_positive_degree_pairing"] = worst
        rep.check("positive-degree pairings vanish", worst, tol)


def _run_holonomy(job, rep):
    c, _ = _connection(job)
    hols = [holonomy_of_flat(c, k) for k in range(c.grid.dim)]
    try:
        HolonomyRep((tuple(h[0] for h in hols), tuple(h[1] for h in hols)), _tol(job))
        commute = True
    except ValueError:
        commute = False
    rep.results["E0"] = [matrix_out(h[0]) for h in hols]
    rep.results["E1"] = [matrix_out(h[1]) for h in hols]
    worst = 0.0
    for blk in (0, 1):
        mats = [h[blk] for h in hols]
        for a in mats:
            for b in mats:
                worst = max(worst, float(np.max(np.abs(a @ b - b @ a), initial=0.0)))
    rep.residuals["max_commutator"] = worst
    rep.check("holonomies commute", worst, _tol(job), commute)


def _run_cs1(job, rep):
    c, _ = _connection(job)
    tol = _tol(job)
    rows = []
    worst = 0.0
    for k in range(c.grid.dim):
        tr = transgress_c1(c, k)
        hol = holonomy_of_flat(c, k)
        via_hol = (c1_from_holonomy(hol[0]), c1_from_holonomy(hol[1]))
        for blk in (0, 1):
            worst = max(worst, distance_mod_z(tr[blk], via_hol[blk]))
        rows.append(
            {
                "axis": k,
                "E0": cplx_out(tr[0]),
                "E1": cplx_out(tr[1]),
                "E0_from_holonomy": cplx_out(via_hol[0]),
                "E1_from_holonomy": cplx_out(via_hol[1]),
            }
        )
    rep.results["c1"] = rows
    rep.residuals["max_modz_disagreement"] = worst
    rep.check("transgression matches holonomy", worst, tol)


def _run_cs_flat(job, rep):
    b = load_holonomy(job.document)
    total = cs_classes_of_flat(b)
    rep.results["total_class"] = dump_total_class(total)
    # the holonomy eigenvalues must reproduce the input matrices
    worst = 0.0
    for k, h in enumerate(b.holonomy):
        rebuilt = complex(np.prod(np.exp(2j * np.pi * b.alpha[:, k])))
        worst = max(worst, abs(complex(np.linalg.det(h)) - rebuilt))
    rep.residuals["det_reconstruction"] = worst
    rep.check("eigen-decomposition consistent", worst, _tol(job) * 1e3)


def _run_cs_morphism(job, rep):
    doc = job.document
    for key in ("E0", "E1"):
        if key not in doc:
            raise SpecError(f"missing field {key!r}")
    b0, b1 = load_holonomy(doc["E0"]), load_holonomy(doc["E1"])
    m = None
    if "morphism" in doc:
        grid = TorusGrid(tuple(doc.get("grid", [16] * b0.n)))
        m = load_morphism(doc["morphism"], grid, b0.rank, b1.rank)
    total = cs_of_morphism(m, b0, b1)
    rep.results["total_class"] = dump_total_class(total)
    tol = _tol(job)
    if total.N >= 1:
        # independent route for c1: the determinant line of each bundle
        worst = 0.0
        for k in range(b0.n):
            expected = c1_from_holonomy(b0.holonomy[k]) - c1_from_holonomy(b1.holonomy[k])
            worst = max(worst, distance_mod_z(total[1].coefficient((k,)), expected))
        rep.residuals["c1_vs_determinants"] = worst
        rep.check("c1 matches determinant lines", worst, tol)


def _run_segre(job, rep):
    c = load_total_class(job.document)
    s = segre_inverse(c)
    rep.results["segre"] = dump_total_class(s)
    rep.check("c * s == 1 (exact)", 0 if c.product(s).is_one(0) else 1, 0)


def _run_selftest(job, rep):
    rows = acceptance.run(job.selftest_filter)
    rep.results["criteria"] = [r.to_json() for r in rows]
    for r in rows:
        rep.checks[f"criterion {r.number}"] = {"value": r.passed, "tol": None, "passed": r.passed}
        print(r.line(), file=sys.stderr)


RUNNERS = {
    "check-closed": _run_check_closed,
    "ch-form": _run_ch_form,
    "t-sweep": _run_t_sweep,
    "holonomy": _run_holonomy,
    "cs1": _run_cs1,
    "cs-flat": _run_cs_flat,
    "cs-morphism": _run_cs_morphism,
    "segre": _run_segre,
    "selftest": _run_selftest,
}


def run_job(job: JobSpec) -> Report:
    config = {
        "tol": _tol(job),
        "t": job.t_values,
        "grid": list(job.grid) if job.grid else None,
        "selftest_filter": job.selftest_filter,
    }
    rep = Report(job.command, hashlib.sha256(job.raw).hexdigest(), config)
    RUNNERS[job.command](job, rep)
    return rep


_INPUT_ERRORS = (
    InputError,
    SpecError,
    AliasingError,
    ParityError,
    DimensionError,
    FlatnessError,
    NonDiagonalizableError,
    ValueError,
    KeyError,
    TypeError,
)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    start = time.perf_counter()
    try:
        job = parse_job(argv)
        rep = run_job(job)
    except _INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    text = rep.text()
    if job.output_path is not None:
        job.output_path.write_text(rep.csv_text if rep.csv_text is not None else text)
        if rep.csv_text is not None:
            sys.stdout.write(text)
    else:
        sys.stdout.write(text)
    print(f"runtime: {time.perf_counter() - start:.3f} s", file=sys.stderr)
    return EXIT_OK if rep.passed else EXIT_CHECK


if __name__ == "__main__":
    raise SystemExit(main())
