"""``swkblab <command> --config run.toml [--out PATH] [--format csv|json] [--threads N]``."""
import argparse
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import complexscan, residual, swkb
from .config import COMMANDS, FORMATS, RECIPES, RunConfig, parse_config, recipe_config
from .errors import ConfigError, MultipleBrackets, SwkbLabError
from .output import csv_text, json_text, write_text
from .systems import SystemSpec, build_system

THREADS_ENV = "SWKBLAB_THREADS"


class Outcome:
    """What a command produced: a flat table and/or a nested report."""

    def __init__(self, columns=(), rows=(), report=None, summary="", ok=True, sidecar=None):
        self.columns = list(columns)
        self.rows = list(rows)
        self.report = report
        self.summary = summary
        self.ok = ok
        # extra JSON written next to a CSV table (e.g. domain boundaries)
        self.sidecar = sidecar


def _pmap(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _status(exc):
    kind = "skipped" if isinstance(exc, (MultipleBrackets, SwkbLabError)) else "error"
    return f"{kind}:{type(exc).__name__}: {exc}"


def _max_dev(rows, key="I_over_pi"):
    devs = [abs(r[key] - r["n"]) for r in rows if r.get("status", "ok") == "ok" and r.get(key) is not None]
    return max(devs) if devs else float("nan")


# commands ------------------------------------------------------------------------


def run_swkb(cfg: RunConfig, threads):
    system = build_system(cfg.system)
    p = cfg.params

    def one(n):
        try:
            res = swkb.swkb_integral(system, n, p["multi_bracket"])
        except SwkbLabError as exc:
            return {"n": n, "status": _status(exc)}
        tp = res.turning_points
        return {
            "n": n,
            "I_over_pi": res.I_over_pi,
            "err": res.err,
            "brackets_used": res.brackets_used,
            "a_left": tp[0][0] if tp else None,
            "a_right": tp[-1][1] if tp else None,
        }

    rows = _pmap(one, p["levels"], threads)
    cols = ["n", "I_over_pi", "err", "brackets_used", "a_left", "a_right"]
    return Outcome(cols, rows, summary=f"max |I/pi - n| = {_max_dev(rows):.3e} over {len(rows)} levels")


def run_sweep(cfg: RunConfig, threads):
    p = cfg.params
    axis = p["axis"]
    table = swkb.swkb_sweep(cfg.system, axis, p["values"], p["levels"], p["multi_bracket"], threads)
    rows = []
    for r in table:
        row = {"n": r.n, "I_over_pi": r.I_over_pi, "err": r.err, "brackets_used": r.brackets_used, "status": r.status}
        if axis != "n":
            row[axis] = r.value
        rows.append(row)
    cols = ([axis] if axis != "n" else []) + ["n", "I_over_pi", "err", "brackets_used"]
    skipped = sum(r["status"] != "ok" for r in rows)
    errs = [r["err"] for r in rows if r["status"] == "ok" and r["n"] > 0]
    extra = f"; max Err = {max(errs):.4g}" if errs else ""
    return Outcome(cols, rows, summary=f"{len(rows)} points, {skipped} skipped; max |I/pi - n| = {_max_dev(rows):.3e}{extra}")


def _residual_row(template, axis, value, n, K):
    row = {axis: value, "n": n}
    try:
        system = build_system(template.replace(**{axis: float(value)}))
        rep = residual.residual_report(system, n, K)
    except SwkbLabError as exc:
        row["status"] = _status(exc)
        return row
    row.update(delta_numeric=rep.delta_numeric, sup_ratio=rep.sup_ratio, inside_radius=rep.inside_radius)
    for k, d in enumerate(rep.delta_series):
        row[f"delta_s{k}"] = d
    return row


def run_residual(cfg: RunConfig, threads):
    p = cfg.params
    n, K = p["n"], p["K"]
    axis = p.get("axis")
    if axis:
        if axis == "n":
            raise ConfigError("residual sweeps run over b or beta", field="params.axis")
        rows = _pmap(lambda v: _residual_row(cfg.system, axis, v, n, K), p["values"], threads)
        cols = [axis, "n", "delta_numeric", "sup_ratio", "inside_radius"] + [f"delta_s{k}" for k in range(K + 1)]
        inside = sum(bool(r.get("inside_radius")) for r in rows)
        return Outcome(cols, rows, summary=f"{len(rows)} points, {inside} inside the convergence radius")
    system = build_system(cfg.system)
    rep = residual.residual_report(system, n, K)
    rows = [
        {"k": k, "term": t, "partial_sum": s, "delta_series": d}
        for k, (t, s, d) in enumerate(zip(rep.terms, rep.partial_sums, rep.delta_series))
    ]
    summary = (
        f"delta = {rep.delta_numeric:.10g}, S_{K} - I = {rep.partial_sums[-1] - rep.integral:.3e}, "
        f"sup_ratio = {rep.sup_ratio:.6g}{' (diverging)' if rep.diverging else ''}"
    )
    return Outcome(["k", "term", "partial_sum", "delta_series"], rows, report=rep.as_dict(), summary=summary)


def run_domain(cfg: RunConfig, threads):
    p = cfg.params
    b_values = np.linspace(*p["b_range"], p["num_b"])
    beta_values = np.linspace(*p["beta_range"], p["num_beta"])
    rows, boundaries = [], {}
    for n in p["levels"]:
        dm = residual.domain_map(cfg.system, n, b_values, beta_values, threads)
        for b, beta, ratio, label in dm.rows():
            status = "ok"
            if label == "invalid":
                status = "skipped:parameter constraints"
            elif not math.isfinite(ratio):
                status = "skipped:more than two turning points"
            rows.append({"n": n, "b": b, "beta": beta, "sup_ratio": ratio, "inside": label == "inside", "label": label, "status": status})
        boundaries[str(n)] = [list(pt) for pt in dm.boundary]
    counts = ", ".join(f"D{n}: {sum(r['inside'] for r in rows if r['n'] == n)} cells" for n in p["levels"])
    report = {"levels": p["levels"], "boundary": boundaries}
    return Outcome(["n", "b", "beta", "sup_ratio", "inside", "label"], rows, report=report, summary=counts, sidecar=report)


def run_poles(cfg: RunConfig, threads):
    p = cfg.params
    b_list = p.get("b_values") or [None]
    targets = ("qmf", "integrand") if p["target"] == "both" else (p["target"],)
    jobs = [(b, t) for b in b_list for t in targets]

    def one(job):
        b, target = job
        spec = cfg.system if b is None else cfg.system.replace(b=float(b))
        system = build_system(spec)
        scan = complexscan.cell_residue_scan if target == "qmf" else complexscan.swkb_integrand_singularities
        return scan(system, p["n"], p["region"], tuple(p["resolution"]))

    reports = _pmap(one, jobs, threads)
    rows, out = [], []
    for (b, target), rep in zip(jobs, reports):
        d = rep.as_dict()
        d.update(target=target, n=p["n"])
        if b is not None:
            d["b"] = b
        out.append(d)
        base = {"b": b, "target": target}
        for z, r in rep.poles:
            rows.append({**base, "kind": "pole", "re": z.real, "im": z.imag, "res_re": r.real, "res_im": r.imag})
        for z in rep.zeros:
            rows.append({**base, "kind": "zero", "re": z.real, "im": z.imag})
        for z in rep.branch_points:
            rows.append({**base, "kind": "branch_point", "re": z.real, "im": z.imag})
        for cell in rep.unresolved_cells:
            x0, x1, y0, y1 = cell
            rows.append({**base, "kind": "cell", "re": 0.5 * (x0 + x1), "im": 0.5 * (y0 + y1), "status": "error:unresolved cell"})
    npoles = sum(len(r["poles"]) for r in out)
    nunres = sum(len(r["unresolved_cells"]) for r in out)
    cols = (["b"] if p.get("b_values") else []) + ["target", "kind", "re", "im", "res_re", "res_im"]
    return Outcome(cols, rows, report={"reports": out}, summary=f"{npoles} poles in {len(out)} scans, {nunres} unresolved cells")


def run_qhj(cfg: RunConfig, threads):
    p = cfg.params
    system = build_system(cfg.system)
    rows, contours, cancel = [], [], []
    for n in p["levels"]:
        try:
            rect = complexscan.qhj_contour(system, n, p["height"], p["margin"])
            res = complexscan.qhj_action(system, n, rect)
        except SwkbLabError as exc:
            rows.append({"n": n, "contour": "qhj", "status": _status(exc)})
            continue
        contours.append({"n": n, **res.as_dict()})
        dev = res.deviation
        rows.append({"n": n, "contour": "qhj", "J_re": res.J.real, "J_im": res.J.imag, "dev_re": dev.real, "dev_im": dev.imag})
        for R in p["radii"]:
            try:
                dev, r_used = complexscan.cancellation_check(system, n, R)
            except SwkbLabError as exc:
                rows.append({"n": n, "contour": "square", "R": R, "status": _status(exc)})
                continue
            cancel.append({"n": n, "R": R, "R_used": r_used, "deviation": dev})
            rows.append({"n": n, "contour": "square", "R": r_used, "dev_re": dev.real, "dev_im": dev.imag})
    worst = max((abs(r["dev_re"]) for r in rows if r["contour"] == "qhj" and "dev_re" in r), default=float("nan"))
    report = {"contours": contours, "cancellation": cancel}
    cols = ["n", "contour", "R", "J_re", "J_im", "dev_re", "dev_im"]
    return Outcome(cols, rows, report=report, summary=f"max |J_QHJ - n| = {worst:.3e} over {len(contours)} levels")


def run_spectrum(cfg: RunConfig, threads):
    p = cfg.params
    system = build_system(cfg.system)

    def one(n):
        try:
            e = swkb.spectrum_from_swkb(system, n, p.get("e_hi"))
        except SwkbLabError as exc:
            return {"n": n, "status": _status(exc)}
        exact = system.energy(n)
        return {"n": n, "energy": e, "exact": exact, "deviation": e - exact}

    rows = _pmap(one, p["levels"], threads)
    devs = [abs(r["deviation"]) for r in rows if "deviation" in r]
    return Outcome(["n", "energy", "exact", "deviation"], rows, summary=f"max |E_swkb - E_n| = {max(devs, default=float('nan')):.3e}")


# verify ------------------------------------------------------------------------------


def _si_exactness():
    worst = 0.0
    for spec, top in (
        (SystemSpec("H"), 10),
        *((SystemSpec("L", g=g), 8) for g in (0.8, 1.5, 3.0)),
        *((SystemSpec("J", g=g, h=h), 8) for g in (1.0, 2.5) for h in (1.0, 2.5)),
    ):
        system = build_system(spec)
        for n in range(1, top + 1):
            worst = max(worst, abs(swkb.swkb_integral(system, n).I_over_pi - n))
    return worst


def _ground_exact():
    specs = (SystemSpec("H", "CES", b=0.7, beta=0.2), SystemSpec("H", "KA", d=1), SystemSpec("L", "CES", b=0.5, g=1.2))
    return max(abs(swkb.swkb_integral(build_system(s), 0).I_over_pi) for s in specs)


def _spectrum_si():
    system = build_system(SystemSpec("H"))
    return max(abs(swkb.spectrum_from_swkb(system, n) - system.energy(n)) for n in (1, 2, 3))


def _ka_err_shape():
    system = build_system(SystemSpec("H", "KA", d=1))
    errs = [swkb.swkb_integral(system, n).err for n in range(1, 9)]
    decreasing = all(a > b > 0 for a, b in zip(errs, errs[1:]))
    return errs[0] if decreasing else -1.0


def _hbar():
    specs = (SystemSpec("H"), SystemSpec("H", "CES", b=1.0, beta=0.2))
    return 0.0 if all(swkb.hbar_invariance_check(s, (0.5, 1.0, 2.0)) for s in specs) else 1.0


def _exact_point():
    system = build_system(SystemSpec("H", "CES"))
    terms = [residual.expansion_term(system, 1, k) for k in range(4)]
    return max(abs(terms[0] - math.pi), *(abs(t) for t in terms[1:]))


def _sign_structure():
    up = swkb.swkb_integral(build_system(SystemSpec("H", "CES", b=0.5)), 1).I_over_pi
    down = swkb.swkb_integral(build_system(SystemSpec("H", "CES", b=-0.5)), 1).I_over_pi
    return 0.0 if up > 1 > down else 1.0


def _qhj_exact():
    worst = 0.0
    for spec, levels in ((SystemSpec("H"), (1, 2)), (SystemSpec("H", "KA", d=1), (1,))):
        system = build_system(spec)
        for n in levels:
            worst = max(worst, abs(complexscan.qhj_action(system, n).deviation))
    return worst


def _qhj_residual():
    system = build_system(SystemSpec("H"))
    return complexscan.qhj_residual_check(system, 3, complexscan.default_qhj_grid(system, 3))


def _binomial():
    worst = 0
    for k in range(16):
        closed = Fraction((-1) ** k * math.factorial(2 * k), (1 - 2 * k) * math.factorial(k) ** 2 * 4**k)
        worst = max(worst, abs(residual.binomial_half_coeff(k, exact=True) - closed))
    return float(worst)


VERIFY_CHECKS = (
    ("si_exactness", _si_exactness, 1e-8),
    ("ground_state_exact", _ground_exact, 1e-14),
    ("spectrum_si_h", _spectrum_si, 1e-8),
    ("ka_err_decreasing", None, None),
    ("hbar_invariance", _hbar, 0.0),
    ("exact_point_annihilation", _exact_point, 1e-10),
    ("ces_sign_structure", _sign_structure, 0.0),
    ("qhj_exactness", _qhj_exact, 1e-7),
    ("qhj_equation_residual", _qhj_residual, 1e-6),
    ("binomial_identity", _binomial, 0.0),
)


def run_verify(cfg: RunConfig, threads):
    rows = []
    for name, fn, tol in VERIFY_CHECKS:
        if name == "ka_err_decreasing":
            # value is Err(1), which must also sit in the quoted band
            fn, check = _ka_err_shape, lambda v: abs(v - 0.11) <= 0.005
            tol_txt = "0.11 +- 0.005, decreasing"
        else:
            check = lambda v, tol=tol: v <= tol
            tol_txt = tol
        try:
            value = fn()
            status = "ok" if check(value) else "error:failed"
        except SwkbLabError as exc:
            value, status = None, f"error:{type(exc).__name__}: {exc}"
        rows.append({"check": name, "value": value, "tolerance": tol_txt, "status": status})
    failed = [r["check"] for r in rows if r["status"] != "ok"]
    summary = "all checks passed" if not failed else f"{len(failed)} failed: {', '.join(failed)}"
    return Outcome(["check", "value", "tolerance"], rows, summary=f"{len(rows) - len(failed)}/{len(rows)} ok; {summary}", ok=not failed)


RUNNERS = {
    "swkb": run_swkb,
    "sweep": run_sweep,
    "residual": run_residual,
    "domain": run_domain,
    "poles": run_poles,
    "qhj": run_qhj,
    "spectrum": run_spectrum,
    "verify": run_verify,
}


# driver -----------------------------------------------------------------------------


def default_threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}", field=THREADS_ENV)


def _payload(cfg: RunConfig, outcome: Outcome):
    doc = {"command": cfg.command}
    if cfg.recipe:
        doc["recipe"] = cfg.recipe
    doc["system"] = cfg.system.as_dict()
    doc["params"] = cfg.params
    doc["summary"] = outcome.summary
    if outcome.report is not None:
        doc.update(outcome.report)
    if outcome.rows and cfg.command not in ("poles", "qhj"):
        doc["rows"] = outcome.rows
    return doc


def run(cfg: RunConfig, out=None, fmt=None, threads=1):
    """Execute one configuration; returns (exit_status, summary, written paths)."""
    fmt = fmt or cfg.format
    path = Path(out or cfg.output_path or f"{cfg.recipe or cfg.command}.{fmt}")
    outcome = RUNNERS[cfg.command](cfg, threads)
    written = [path]
    if fmt == "csv":
        write_text(path, csv_text(outcome.columns, outcome.rows))
        if outcome.sidecar is not None:
            side = path.with_name(path.stem + "_boundary.json")
            write_text(side, json_text(outcome.sidecar))
            written.append(side)
    else:
        write_text(path, json_text(_payload(cfg, outcome)))
    return (0 if outcome.ok else 1), outcome.summary, written


def _load(args):
    if args.config and args.recipe:
        raise ConfigError("give --config or --recipe, not both")
    if args.recipe:
        cfg = recipe_config(args.recipe)
    elif args.config:
        text = Path(args.config).read_text(encoding="utf-8")
        cfg = parse_config(text)
    elif args.command == "verify":
        cfg = parse_config('command = "verify"\n')
    else:
        raise ConfigError("--config or --recipe is required")
    if cfg.command != args.command:
        raise ConfigError(f"config is for {cfg.command!r}, but the command line asked for {args.command!r}", field="command")
    return cfg


def build_parser():
    ap = argparse.ArgumentParser(prog="swkblab", description="SWKB / QHJ numerical laboratory")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="TOML run configuration")
    ap.add_argument("--recipe", choices=sorted(RECIPES), help="named figure recipe instead of a config file")
    ap.add_argument("--out", help="output path (default: <recipe or command>.<format>)")
    ap.add_argument("--format", choices=FORMATS)
    ap.add_argument("--threads", type=int, help=f"worker threads (default: ${THREADS_ENV} or 1)")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        threads = args.threads if args.threads is not None else default_threads()
        if threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _load(args)
        status, summary, written = run(cfg, args.out, args.format, threads)
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        field = f" [{exc.field}]" if exc.field else ""
        print(f"swkblab: config error{where}{field}: {exc}", file=sys.stderr)
        return 2
    except (SwkbLabError, OSError) as exc:
        print(f"swkblab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    print(f"{args.command}: {summary} -> {', '.join(str(p) for p in written)}")
    return status


if __name__ == "__main__":
    sys.exit(main())
