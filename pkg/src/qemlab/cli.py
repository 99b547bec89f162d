"""Command-line front end: ``qemlab verify|classify|spectrum|suite``."""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import catalog, classify as cls, verify
from .charts import DEFAULT_POINTS, DEFAULT_SEED
from .errors import DomainError, InconsistencyError, MetricSignatureError, NumericError, ParamError

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    entry: str | None = None
    params: dict = field(default_factory=dict)
    points: int = DEFAULT_POINTS
    seed: int = DEFAULT_SEED
    tol: float | None = None
    perturb: tuple[str, float] | None = None
    fmt: str = "text"
    output: str | None = None

    def __post_init__(self):
        if self.points < 1:
            raise UsageError("--points must be at least 1")
        if self.tol is not None and not self.tol > 0:
            raise UsageError("--tol must be positive")


# serialization ---------------------------------------------------------------

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON with 17 significant digits for every float."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, Fraction):
        return f"\"{obj}\""
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_json_str(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _json_str(s: str) -> str:
    import json
    return json.dumps(s, ensure_ascii=False)


def _csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt_float(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# building blocks ---------------------------------------------------------------

def parse_params(text: str | None) -> dict:
    out: dict = {}
    if not text:
        return out
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"bad parameter {item!r}; expected key=value")
        try:
            num = float(val)
        except ValueError:
            raise UsageError(f"parameter {key} must be numeric, got {val!r}") from None
        out[key.strip()] = int(num) if num.is_integer() and "." not in val else num
    return out


def _build(entry_id: str, params: dict) -> catalog.CatalogEntry:
    try:
        return catalog.build(entry_id, params)
    except KeyError:
        raise UsageError(f"unknown entry {entry_id!r}; known: {', '.join(catalog.entry_ids())}") from None
    except ParamError as exc:
        raise UsageError(f"invalid parameters for {entry_id}: {exc}") from None


def _report_dict(r: verify.IdentityReport) -> dict:
    return {
        "identity_id": r.identity_id,
        "points_checked": r.points_checked,
        "max_residual": r.max_residual,
        "tolerance": r.tolerance,
        "status": r.status,
        "pass": r.passed,
        "failure_kind": r.failure_kind,
        "note": r.note,
        "values": r.values,
    }


def _measured(qe, pts) -> dict:
    from .conformal import qe_point
    qs = [qe_point(qe, p) for p in pts]
    Rs = [q.R for q in qs]
    out = {"lambda": qe.lam, "R": float(np.mean(Rs)), "R_spread": float(max(Rs) - min(Rs))}
    if qe.m > 1:
        mus = [q.mu for q in qs]
        out.update(mu=float(np.mean(mus)), mu_spread=float(max(mus) - min(mus)))
    return out


def verify_entry(entry: catalog.CatalogEntry, cfg: RunConfig, qe=None) -> dict:
    qe = qe if qe is not None else entry.qe
    pts = qe.g.chart.sample(cfg.points, cfg.seed)
    tol = cfg.tol if cfg.tol is not None else verify.DEFAULT_TOL
    reports = verify.run_all(qe, pts, tol)
    if entry.warped is not None and qe.g is entry.qe.g:
        reports.append(verify.check_warped_oracle(entry.warped, qe.g, pts, tol))
    return {
        "entry": entry.id,
        "params": entry.params,
        "points": cfg.points,
        "seed": cfg.seed,
        "tolerance": tol,
        "measured": _measured(qe, pts),
        "expected": _expected_dict(entry),
        "reports": [_report_dict(r) for r in reports],
        "notes": list(entry.notes),
        "passed": all(r.passed for r in reports),
    }


def _expected_dict(entry: catalog.CatalogEntry) -> dict:
    e = entry.expected
    return {"lambda_sign": e.lam_sign, "mu": e.mu, "R": e.R, "t_flat": e.t_flat,
            "einstein": e.einstein, "case_label": e.case_label, "kappa": e.kappa}


def classify_entry(entry: catalog.CatalogEntry, cfg: RunConfig) -> dict:
    pts = entry.qe.g.chart.sample(cfg.points, cfg.seed)
    rep = cls.classify(entry.qe, pts)
    out = {
        "entry": entry.id,
        "params": entry.params,
        "points": cfg.points,
        "seed": cfg.seed,
        "matched_case": rep.matched_case,
        "kappa": rep.kappa,
        "thm_b_case": rep.thm_b_case,
        "invariants": rep.invariants,
        "diagnostics": rep.diagnostics,
        "assumptions": rep.assumptions,
        "notes": list(entry.notes),
    }
    if entry.qe.n == 3 and rep.matched_case != "NonConstantR":
        es = _eigenstructure(entry.qe, pts)
        if es is not None:
            out["eigenstructure_3d"] = es
    return out


def _eigenstructure(qe, pts) -> dict | None:
    from .errors import NotApplicable
    try:
        e = cls.eigenstructure_3d(qe, pts[0], constant_R_points=pts)
    except NotApplicable:
        return None
    return {"mu2": e.mu2, "mu3": e.mu3, "rho": e.rho, "route": e.route, "checks": e.checks}


def _controls(entry: catalog.CatalogEntry, cfg: RunConfig) -> dict:
    """Residual of each QE identity under its documented perturbation."""
    pts = entry.qe.g.chart.sample(cfg.points, cfg.seed)
    base = {r.identity_id: r for r in verify.run_all(entry.qe, pts, kernel=False)}
    perturbed = {}
    for kind, amount in sorted(set(verify.NEGATIVE_CONTROLS.values())):
        qe = verify.perturbed(entry.qe, kind, amount)
        perturbed[kind] = {r.identity_id: r for r in verify.run_all(qe, pts, kernel=False)}
    out = {}
    for ident, (kind, _) in verify.NEGATIVE_CONTROLS.items():
        if base[ident].status == verify.NOT_APPLICABLE:
            continue
        r = perturbed[kind][ident]
        out[ident] = {"perturbation": kind, "residual": r.max_residual,
                      "detected": r.status != verify.NOT_APPLICABLE
                      and r.max_residual >= verify.CONTROL_MIN_RESIDUAL}
    return out


# commands ----------------------------------------------------------------------

def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.entry:
        raise UsageError("--entry is required")
    entry = _build(cfg.entry, cfg.params)
    qe = None
    if cfg.perturb:
        kind, amount = cfg.perturb
        qe = verify.perturbed(entry.qe, kind, amount,
                              lambda f: _build(cfg.entry, dict(cfg.params, fiber_scale=f)).qe)
    result = verify_entry(entry, cfg, qe)
    result["perturbation"] = ({"kind": cfg.perturb[0], "amount": cfg.perturb[1]}
                              if cfg.perturb else None)
    doc = {"schema_version": SCHEMA_VERSION, "command": "verify", **result}
    if cfg.fmt == "json":
        _emit(to_json(doc) + "\n", cfg)
    elif cfg.fmt == "csv":
        _emit(_csv([{k: r[k] for k in ("identity_id", "points_checked", "max_residual",
                                       "tolerance", "status", "failure_kind")}
                    for r in doc["reports"]]), cfg)
    else:
        _emit(_verify_text(doc), cfg)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _verify_text(doc: dict) -> str:
    lines = [f"entry {doc['entry']} {doc['params']}  points={doc['points']} seed={doc['seed']}"]
    if doc.get("perturbation"):
        p = doc["perturbation"]
        lines.append(f"perturbation: {p['kind']} {p['amount']:+g}")
    m = doc["measured"]
    lines.append("measured: " + ", ".join(f"{k}={v:.12g}" for k, v in m.items()))
    for r in doc["reports"]:
        kind = f" [{r['failure_kind']}]" if r["failure_kind"] else ""
        note = f"  ({r['note']})" if r["note"] else ""
        lines.append(f"  {r['status'].upper():15s} {r['identity_id']:32s} "
                     f"{r['max_residual']:.3e} / {r['tolerance']:.0e}{kind}{note}")
    lines += [f"note: {n}" for n in doc["notes"]]
    lines.append("PASS" if doc["passed"] else "FAIL")
    return "\n".join(lines) + "\n"


def cmd_classify(cfg: RunConfig) -> int:
    if not cfg.entry:
        raise UsageError("--entry is required")
    entry = _build(cfg.entry, cfg.params)
    doc = {"schema_version": SCHEMA_VERSION, "command": "classify", **classify_entry(entry, cfg)}
    if cfg.fmt == "json":
        _emit(to_json(doc) + "\n", cfg)
    elif cfg.fmt == "csv":
        rows = [{"key": "matched_case", "value": doc["matched_case"]},
                {"key": "kappa", "value": doc["kappa"]},
                {"key": "thm_b_case", "value": doc["thm_b_case"]}]
        rows += [{"key": k, "value": v} for k, v in doc["invariants"].items()]
        _emit(_csv(rows), cfg)
    else:
        kappa = "none" if doc["kappa"] is None else doc["kappa"]
        lines = [f"entry {doc['entry']} {doc['params']}",
                 f"case: {doc['matched_case']}  kappa: {kappa}  T-flat list: {doc['thm_b_case']}"]
        lines += [f"  {k} = {v}" for k, v in doc["invariants"].items()]
        if "eigenstructure_3d" in doc:
            e = doc["eigenstructure_3d"]
            lines.append(f"  P eigenvalues orthogonal to grad u: {e['mu2']:.12g}, {e['mu3']:.12g} "
                         f"(route {e['route']})")
        lines.append(f"assumption: {doc['assumptions']}")
        lines += [f"note: {n}" for n in doc["notes"]]
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


def spectrum_rows(n: int, m, lam) -> list[dict]:
    table = cls.admissible_spectrum(n, m, lam)
    rows = []
    for row in table.rows:
        v = row.value(table.lam)
        rows.append({"kappa": row.kappa, "numerator": v.numerator, "denominator": v.denominator,
                     "value_decimal": float(v), "coefficient": cls.render_rational(row.coefficient)})
    return rows


def cmd_spectrum(n: int, m: str, lam: str, cfg: RunConfig) -> int:
    try:
        rows = spectrum_rows(n, Fraction(m), Fraction(lam))
    except ParamError as exc:
        raise UsageError(str(exc)) from None
    except ValueError:
        raise UsageError("--m and --lambda must be rationals such as 2, 2.5 or 5/2") from None
    if cfg.fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": "spectrum", "n": n,
               "m": str(Fraction(m)), "lambda": str(Fraction(lam)), "rows": rows}
        _emit(to_json(doc) + "\n", cfg)
    elif cfg.fmt == "csv":
        _emit(_csv(rows), cfg)
    else:
        lines = [f"admissible scalar curvature, n={n} m={m} lambda={lam}"]
        for r in rows:
            lines.append(f"  kappa={r['kappa']}: R = {r['coefficient']} = "
                         f"{r['numerator']}/{r['denominator']} = {r['value_decimal']:.12g}")
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK


def _suite_items(filter_text: str | None) -> list[tuple[str, dict]]:
    items = list(catalog.SUITE)
    if filter_text is not None:
        wanted = {w.strip() for w in filter_text.split(",") if w.strip()}
        unknown = wanted - set(catalog.entry_ids())
        if unknown:
            raise UsageError(f"unknown entries in filter: {', '.join(sorted(unknown))}")
        items = [it for it in items if it[0] in wanted]
    if not items:
        raise UsageError("entry filter selects nothing")
    return items


def suite_entry(entry_id: str, params: dict, cfg: RunConfig) -> dict:
    entry = _build(entry_id, params)
    v = verify_entry(entry, cfg)
    c = classify_entry(entry, cfg)
    exp = entry.expected
    mres = v["measured"]
    checks = {
        "identities": v["passed"],
        "R": abs(mres["R"] - exp.R) <= 1e-8 * (1 + abs(exp.R)),
        "case_label": c["matched_case"] == exp.case_label,
        "kappa": c["kappa"] == exp.kappa,
    }
    if "mu" in mres:
        checks["mu"] = abs(mres["mu"] - exp.mu) <= 1e-8 * (1 + abs(exp.mu))
    if exp.t_flat is not None and "t_flat" in c["invariants"]:
        checks["t_flat"] = c["invariants"]["t_flat"] == exp.t_flat
    controls = _controls(entry, cfg)
    checks["negative_controls"] = all(x["detected"] for x in controls.values())
    failing = [r for r in v["reports"] if not r["pass"]]
    return {
        "entry": entry_id,
        "params": entry.params,
        "case_label": c["matched_case"],
        "expected_case_label": exp.case_label,
        "kappa": c["kappa"],
        "measured": mres,
        "checks": checks,
        "passed": all(checks.values()),
        "failures": [{"identity_id": r["identity_id"], "max_residual": r["max_residual"],
                      "failure_kind": r["failure_kind"]} for r in failing],
        "worst_residual": max((r["max_residual"] for r in v["reports"]), default=0.0),
        "negative_controls": controls,
        "notes": list(entry.notes),
    }


def cmd_suite(cfg: RunConfig, filter_text: str | None = None, list_only: bool = False) -> int:
    items = _suite_items(filter_text)
    if list_only:
        _emit("".join(f"{eid} {_params_str(p)}\n" for eid, p in items), cfg)
        return EXIT_OK
    rows = [suite_entry(eid, p, cfg) for eid, p in items]
    rows.sort(key=lambda r: (r["entry"], _params_str(r["params"])))
    doc = {"schema_version": SCHEMA_VERSION, "command": "suite", "points": cfg.points,
           "seed": cfg.seed,
           "tolerance": cfg.tol if cfg.tol is not None else verify.DEFAULT_TOL,
           "entries": rows, "passed": all(r["passed"] for r in rows)}
    if cfg.fmt == "json":
        _emit(to_json(doc) + "\n", cfg)
    elif cfg.fmt == "csv":
        names = sorted({k for r in rows for k in r["checks"]})
        _emit(_csv([{"entry": r["entry"], "params": _params_str(r["params"]),
                     "case_label": r["case_label"], "kappa": r["kappa"],
                     **{k: r["checks"].get(k, "") for k in names},
                     "worst_residual": r["worst_residual"], "passed": r["passed"]}
                    for r in rows]), cfg)
    else:
        lines = []
        for r in rows:
            bad = [k for k, ok in r["checks"].items() if not ok]
            kinds = sorted({f["failure_kind"] for f in r["failures"]})
            status = "ok" if r["passed"] else "FAIL " + ",".join(bad)
            if kinds:
                status += " [" + ",".join(kinds) + "]"
            lines.append(f"{r['entry']:20s} {_params_str(r['params']):24s} "
                         f"{r['case_label']:14s} kappa={str(r['kappa']):5s} "
                         f"worst={r['worst_residual']:.1e}  {status}")
        lines.append(f"{sum(r['passed'] for r in rows)}/{len(rows)} entries met expectations")
        _emit("\n".join(lines) + "\n", cfg)
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def _params_str(p: dict) -> str:
    return ",".join(f"{k}={v}" for k, v in p.items())


# argument handling ---------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qemlab", description="Quasi-Einstein verification toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, entry=True):
        if entry:
            p.add_argument("--entry", help="catalog entry id")
            p.add_argument("--params", help="comma separated key=value pairs")
        p.add_argument("--points", type=int, default=DEFAULT_POINTS)
        p.add_argument("--seed", type=int, default=None,
                       help=f"sampling seed (default $QEMLAB_SEED or {DEFAULT_SEED})")
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--format", choices=("text", "json", "csv"), default="text")
        p.add_argument("--output", help="write the report to a file")

    p = sub.add_parser("verify", help="check the QE system and its identities")
    common(p)
    p.add_argument("--perturb", help="lambda=+0.1, u=+0.01 or fiber=1.05")
    common(sub.add_parser("classify", help="match an entry against the classification"))
    p = sub.add_parser("spectrum", help="admissible scalar curvature values")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", required=True)
    p.add_argument("--lambda", dest="lam", required=True)
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--output")
    p = sub.add_parser("suite", help="run every catalog entry")
    common(p, entry=False)
    p.add_argument("--entries", help="comma separated entry ids to keep")
    p.add_argument("--list", action="store_true", help="list suite entries and exit")
    return ap


def _seed(arg) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("QEMLAB_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"QEMLAB_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "spectrum":
            return cmd_spectrum(args.n, args.m, args.lam,
                                RunConfig(fmt=args.format, output=args.output))
        cfg = RunConfig(
            entry=getattr(args, "entry", None),
            params=parse_params(getattr(args, "params", None)),
            points=args.points,
            seed=_seed(args.seed),
            tol=args.tol,
            perturb=verify.parse_perturbation(args.perturb) if getattr(args, "perturb", None) else None,
            fmt=args.format,
            output=args.output,
        )
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "classify":
            return cmd_classify(cfg)
        return cmd_suite(cfg, args.entries, args.list)
    except (NumericError, DomainError, MetricSignatureError, InconsistencyError,
            np.linalg.LinAlgError) as exc:
        print(f"qemlab: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ValueError) as exc:
        print(f"qemlab: {exc}", file=sys.stderr)
        return EXIT_USAGE

if __name__ == "__main__":
    sys.exit(main())
