"""Command-line front end: ``xmspace {params,norm,dualnorm,verify,report}``.

Exit codes: 0 pass, 1 verdict failure, 2 hypothesis or input error,
3 budget exhausted or comparison indeterminate.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import io
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from . import base_spaces as bs
from . import quotient as q
from .construction import (build_blocks, build_ledger, ledger_from_text, ledger_to_text,
                           parse_sizing, select_k0, standard_setup)
from .errors import (BudgetExceeded, HypothesisFailed, Indeterminate, IterationCap,
                     NoUpperEstimateWitness, XMError)
from .measures import UnitFunctional, format_measure, in_M, parse_measure
from .norm_engine import DEFAULT_BUDGET, dual_norm_M, norm_M
from .rational import format_fraction, parse_fraction
from .schreier import format_set
from .vectors import SparseVector, format_vector, parse_vector

EXIT_PASS, EXIT_FAIL, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3
CACHE_ENV = "XMSPACE_CACHE_DIR"
LEMMAS = ("L1", "L2", "L3", "L4", "L5", "T3", "C3")


@dataclass
class RunConfig:
    space: str = "c0"
    params: Optional[str] = None
    depth: int = 4
    precision: Fraction = q.T3_PRECISION
    trials: int = 100
    seed: int = 0
    budget: int = DEFAULT_BUDGET
    out: Optional[str] = None
    workers: int = 1
    lemma: Optional[str] = None
    violate: bool = False

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        """Parse ``key = value`` lines (``#`` comments allowed)."""
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"config line {lineno}: expected key = value")
            cfg.set(key.strip(), val.strip())
        return cfg

    def set(self, key: str, value):
        fields = {f.name: f for f in dataclasses.fields(self)}
        if key not in fields:
            raise ValueError(f"unknown config key {key!r}")
        if isinstance(value, str):
            if key == "precision":
                value = parse_fraction(value)
            elif key == "violate":
                value = value.lower() in ("1", "true", "yes")
            elif key in ("depth", "trials", "seed", "budget", "workers"):
                value = int(value)
        setattr(self, key, value)


# -- setup loading ---------------------------------------------------------------

def load_setup(cfg: RunConfig) -> q.Setup:
    if cfg.params:
        ledger, blocks = ledger_from_text(Path(cfg.params).read_text())
        if cfg.space and bs.parse_space(cfg.space) != ledger.space:
            raise ValueError(f"ledger is for {bs.format_space(ledger.space)}, not {cfg.space}")
        return q.Setup(ledger, blocks)
    space = bs.parse_space(cfg.space)
    cache = os.environ.get(CACHE_ENV)
    if cache:
        name = bs.format_space(space).replace(":", "_").replace("/", "-").replace(",", "_")
        path = Path(cache) / f"ledger-{name}-d{cfg.depth}.txt"
        if path.exists():
            return q.Setup(*ledger_from_text(path.read_text()))
        ledger, blocks = standard_setup(space, cfg.depth)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(ledger_to_text(ledger, blocks))
        return q.Setup(ledger, blocks)
    return q.Setup(*standard_setup(space, cfg.depth))


# -- certificates -------------------------------------------------------------------

def element_record(elem) -> Dict:
    if elem is None:
        return {"kind": "zero"}
    if isinstance(elem, UnitFunctional):
        return {"kind": "unit", "coord": elem.coord}
    return {"kind": "measure", "parts": [format_measure(p) for p in elem.parts],
            "zbound": format_fraction(elem.zbound.value.upper),
            "profile": ",".join(f"{n}:{g}" for n, g in elem.zbound.witness.lengths)}


def norm_record(x: SparseVector, setup: q.Setup, budget: int) -> Dict:
    cert = norm_M(x, setup.space, setup.blocks, budget)
    return {"vector": format_vector(x), "value": format_fraction(cert.value), "sign": cert.sign,
            "exhaustive": cert.exhaustive, "maximizer": element_record(cert.maximizer)}


def check_norm_record(rec: Dict, setup: q.Setup) -> bool:
    """Re-validate a norm certificate: the maximizer is in M and attains the value."""
    x = parse_vector(rec["vector"])
    value = parse_fraction(rec["value"])
    m = rec["maximizer"]
    if m["kind"] == "zero":
        return value == 0
    if m["kind"] == "unit":
        return rec["sign"] * x[m["coord"]] == value
    measure = parse_measure(",".join(m["parts"]))
    if in_M(measure, setup.space, setup.blocks) is None:
        return False
    return rec["sign"] * measure(x) == value


def dual_record(f: SparseVector, setup: q.Setup, precision: Fraction, budget: int) -> Dict:
    cert = dual_norm_M(f, setup.space, setup.blocks, precision, budget=budget)
    return {"functional": format_vector(f), "lower": format_fraction(cert.value.lower),
            "upper": format_fraction(cert.value.upper), "witness": format_vector(cert.witness),
            "iterations": cert.iterations, "cuts": cert.cuts}


def check_dual_record(rec: Dict, setup: q.Setup) -> bool:
    f, w = parse_vector(rec["functional"]), parse_vector(rec["witness"])
    if norm_M(w, setup.space, setup.blocks, strict=True).value > 1:
        return False
    return f.dot(w) == parse_fraction(rec["lower"])


# -- lemma campaigns ---------------------------------------------------------------

def _fmt_lengths(lengths) -> str:
    return ",".join(f"{n}:{g}" for n, g in lengths)


def _l1(rng, setup, violate, precision):
    I, profile = q.gen_L1(rng, setup, violate)
    return {"I": format_set(I), "profile": _fmt_lengths(profile.lengths)}, \
        lambda: q.verify_L1(I, profile, setup)


def _l2(rng, setup, violate, precision):
    a = q.gen_coefficients(rng, setup, violate, nonneg=rng.random() < 0.5)
    return {"a": format_vector(a)}, lambda: q.verify_L2_lowerbound(a, setup, precision)


def _l3(rng, setup, violate, precision):
    mu, u, n = q.gen_L3(rng, setup, violate)
    return {"mu": format_measure(mu), "u": format_vector(u), "n": n}, \
        lambda: q.verify_L3(mu, u, n, setup, precision)


def _l4(rng, setup, violate, precision):
    inst = q.gen_L4(rng, setup, violate)
    return {"I": format_set(inst.I), "n": inst.n, "lengths": _fmt_lengths(inst.lengths),
            "rho": format_vector(inst.rho), "family": [format_set(J) for J in inst.family],
            "u": format_vector(inst.u)}, lambda: q.verify_L4(inst, setup)


def _l5(rng, setup, violate, precision):
    u, rho = q.gen_L5(rng, setup, violate)
    return {"u": format_vector(u), "rho": format_vector(rho)}, lambda: q.verify_L5(u, rho, setup)


def _t3(rng, setup, violate, precision):
    a = q.gen_coefficients(rng, setup, violate)
    return {"a": format_vector(a)}, lambda: q.verify_T3_sandwich(a, setup, precision)


def _c3(rng, setup, violate, precision):
    if violate:
        raise ValueError("the quotient identities carry no hypotheses to violate")
    x = q.gen_vector(rng, setup.blocks)

    def run():
        v = q.verify_C3_operator(x, setup)
        adj = all(q.verify_adjoint(n, setup.blocks) for n in setup.blocks.indices)
        v.measured["adjoint"] = adj
        v.passed = v.passed and adj
        return v

    return {"x": format_vector(x)}, run


CAMPAIGNS: Dict[str, Callable] = {"L1": _l1, "L2": _l2, "L3": _l3, "L4": _l4, "L5": _l5,
                                  "T3": _t3, "C3": _c3}


def trial_rng(seed: int, lemma: str, trial: int) -> random.Random:
    return random.Random(f"{seed}:{lemma}:{trial}")


def run_trial(lemma: str, setup: q.Setup, seed: int, trial: int, violate: bool,
              precision: Fraction) -> Dict:
    rec: Dict = {"trial": trial, "lemma": lemma}
    rng = trial_rng(seed, lemma, trial)
    try:
        instance, run = CAMPAIGNS[lemma](rng, setup, violate, precision)
    except ValueError as exc:
        rec.update(hypothesis="n/a", verdict="input-error", error=str(exc))
        return rec
    rec["instance"] = instance
    try:
        verdict = run()
    except HypothesisFailed as exc:
        rec.update(hypothesis="failed", verdict="hypothesis-failed", error=str(exc))
        return rec
    except (BudgetExceeded, Indeterminate, IterationCap) as exc:
        rec.update(hypothesis="ok", verdict="budget", error=f"{type(exc).__name__}: {exc}")
        return rec
    rec.update(hypothesis="ok", verdict="pass" if verdict.passed else "fail",
               measured=verdict.record())
    return rec


def _trial_job(args):
    return run_trial(*args)


def run_campaign(cfg: RunConfig, setup: q.Setup) -> List[Dict]:
    jobs = [(cfg.lemma, setup, cfg.seed, t, cfg.violate, cfg.precision) for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            records = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    else:
        records = [_trial_job(j) for j in jobs]
    return sorted(records, key=lambda r: r["trial"])


def summarize(records: List[Dict]) -> Dict[str, Dict[str, int]]:
    out: Dict[str, Dict[str, int]] = {}
    for r in records:
        row = out.setdefault(r["lemma"], {"trials": 0, "pass": 0, "fail": 0, "hypothesis-failed": 0,
                                          "budget": 0, "input-error": 0})
        row["trials"] += 1
        row[r["verdict"]] += 1
    return out


def campaign_exit(records: List[Dict], violate: bool) -> int:
    verdicts = [r["verdict"] for r in records]
    if "input-error" in verdicts:
        return EXIT_INPUT
    if violate:
        # negative control: every trial must be refused
        return EXIT_PASS if all(v == "hypothesis-failed" for v in verdicts) else EXIT_FAIL
    if "hypothesis-failed" in verdicts:
        return EXIT_INPUT
    if "fail" in verdicts:
        return EXIT_FAIL
    if "budget" in verdicts:
        return EXIT_BUDGET
    return EXIT_PASS


def write_report(records: List[Dict], cfg: RunConfig, out: io.TextIOBase):
    header = {"header": True, "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
              "lemma": cfg.lemma, "space": cfg.space, "seed": cfg.seed, "trials": cfg.trials,
              "violate": cfg.violate}
    out.write(json.dumps(header, sort_keys=True) + "\n")
    for r in records:
        out.write(json.dumps(r, sort_keys=True) + "\n")


def write_summary_csv(summary: Dict[str, Dict[str, int]], space: str, out: io.TextIOBase):
    cols = ["trials", "pass", "fail", "hypothesis-failed", "budget", "input-error"]
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["lemma", "space"] + cols)
    for lemma in sorted(summary):
        w.writerow([lemma, space] + [summary[lemma][c] for c in cols])


def read_report(path: str) -> Tuple[Dict, List[Dict]]:
    header, records = {}, []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("header"):
            header = rec
        else:
            records.append(rec)
    return header, records


# -- commands ------------------------------------------------------------------------

def cmd_params(cfg: RunConfig, args) -> int:
    space = bs.parse_space(cfg.space)
    k0, ph = select_k0(space)
    lam = parse_fraction(args.lam) if args.lam else None
    ledger = build_ledger(space, k0, ph, lam, cfg.depth)
    blocks = build_blocks(ledger, parse_sizing(args.sizing) if args.sizing else None)
    text = ledger_to_text(ledger, blocks)
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_PASS


def cmd_norm(cfg: RunConfig, args) -> int:
    setup = load_setup(cfg)
    rec = norm_record(parse_vector(args.vector), setup, cfg.budget)
    _emit(rec, cfg)
    return EXIT_PASS if rec["exhaustive"] else EXIT_BUDGET


def cmd_dualnorm(cfg: RunConfig, args) -> int:
    setup = load_setup(cfg)
    if args.u_coefficients:
        f = q.u_combination(parse_vector(args.u_coefficients), setup.blocks)
    elif args.functional:
        f = parse_vector(args.functional)
    else:
        raise ValueError("give --functional or --u-coefficients")
    _emit(dual_record(f, setup, cfg.precision, cfg.budget), cfg)
    return EXIT_PASS


def _emit(rec: Dict, cfg: RunConfig):
    text = json.dumps(rec, sort_keys=True, indent=2) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)


def cmd_verify(cfg: RunConfig, args) -> int:
    if cfg.lemma not in LEMMAS:
        raise ValueError(f"--lemma must be one of {', '.join(LEMMAS)}")
    setup = load_setup(cfg)
    records = run_campaign(cfg, setup)
    summary = summarize(records)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            write_report(records, cfg, fh)
        with open(Path(cfg.out).with_suffix(".csv"), "w") as fh:
            write_summary_csv(summary, cfg.space, fh)
    buf = io.StringIO()
    write_summary_csv(summary, bs.format_space(setup.space), buf)
    sys.stdout.write(buf.getvalue())
    return campaign_exit(records, cfg.violate)


def cmd_report(cfg: RunConfig, args) -> int:
    header, records = read_report(args.input)
    summary = summarize(records)
    buf = io.StringIO()
    write_summary_csv(summary, header.get("space", "?"), buf)
    sys.stdout.write(buf.getvalue())
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
    return campaign_exit(records, bool(header.get("violate")))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xmspace", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value configuration file")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, params=True):
        sp.add_argument("--space")
        sp.add_argument("--depth", type=int)
        sp.add_argument("--out")
        if params:
            sp.add_argument("--params", help="ledger file written by `params`")
            sp.add_argument("--budget", type=int)
            sp.add_argument("--precision")

    sp = sub.add_parser("params", help="build the parameter ledger and blocks")
    common(sp, params=False)
    sp.add_argument("--lambda", dest="lam")
    sp.add_argument("--sizing", help="geometric:base:scale")

    sp = sub.add_parser("norm", help="||x||_M with a maximizing member of M")
    common(sp)
    sp.add_argument("--vector", required=True, help='e.g. "5:1,9:-1/2"')

    sp = sub.add_parser("dualnorm", help="enclosure of the dual norm")
    common(sp)
    sp.add_argument("--functional", help='coefficients of e_j*, e.g. "5:1/4,6:1/4"')
    sp.add_argument("--u-coefficients", help='coefficients a_n of sum a_n u_n*, e.g. "1:1"')

    sp = sub.add_parser("verify", help="run a verification campaign")
    common(sp)
    sp.add_argument("--lemma", choices=LEMMAS)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--violate-hypothesis", dest="violate", action="store_true", default=None)

    sp = sub.add_parser("report", help="summarize a verification report")
    sp.add_argument("--input", required=True)
    sp.add_argument("--csv")
    return p


COMMANDS = {"params": cmd_params, "norm": cmd_norm, "dualnorm": cmd_dualnorm,
            "verify": cmd_verify, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = RunConfig.from_text(Path(args.config).read_text()) if args.config else RunConfig()
        for key in ("space", "depth", "out", "params", "budget", "precision", "lemma", "trials",
                    "seed", "workers", "violate"):
            val = getattr(args, key, None)
            if val is not None:
                cfg.set(key, val)
        return COMMANDS[args.command](cfg, args)
    except NoUpperEstimateWitness as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (BudgetExceeded, Indeterminate, IterationCap) as exc:
        print(f"budget: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (XMError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
