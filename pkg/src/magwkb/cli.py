"""Command-line front end: ``magwkb expand|residual|validate --config job.json``.

Config document (JSON)::

    {"field": {"coeffs": [[i, j, value], ...]}   # or {"file": "field.json"}
     "ell": 0, "J_max": 2, "cap": 24,
     "h_sweep": [0.1, 0.07, 0.05, 0.035, 0.025],
     "grid": {"L": 1.0, "M": 512}, "seed": 0}

Every output document carries the hash of the effective configuration and
the package version; wall-clock data goes to ``run_info.json`` only.
"""

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DegenerateMinimum, MagWKBError

DEFAULTS = {"ell": 0, "J_max": 2, "cap": 24, "seed": 0, "grid": {"L": 1.0, "M": 512}}
RESIDUAL_SWEEP = (0.1, 0.05, 0.025, 0.0125)
TAMPER = 1e-3


def _fmt(x):
    return "" if x is None else format(float(x), ".17g")


def _parse_list(text, conv=float):
    try:
        return [conv(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse list {text!r}") from None


def load_config(path=None, overrides=None):
    """Read, merge overrides and validate; returns the effective config dict."""
    cfg = json.loads(json.dumps(DEFAULTS))
    base = Path(".")
    cap_given = (overrides or {}).get("cap") is not None
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {str(p)!r} not found")
        try:
            user = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        base = p.parent
        cap_given = cap_given or "cap" in user
        grid = dict(cfg["grid"], **user.pop("grid", {}))
        cfg.update(user)
        cfg["grid"] = grid
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        if k == "grid":
            cfg["grid"] = dict(cfg["grid"], **v)
        else:
            cfg[k] = v
    fld = cfg.get("field")
    if not isinstance(fld, dict):
        raise ConfigError("config needs a 'field' object with 'coeffs' or 'file'")
    if "file" in fld and "coeffs" not in fld:
        fp = Path(fld["file"])
        if not fp.is_absolute():
            fp = base / fp
        if not fp.is_file():
            raise ConfigError(f"field file {str(fp)!r} not found")
        try:
            doc = json.loads(fp.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"field file is not valid JSON: {exc}") from None
        if "coeffs" not in doc:
            raise ConfigError(f"field file {str(fp)!r} has no 'coeffs'")
        fld = {"coeffs": doc["coeffs"]}
        if "degree_cap" in doc and not cap_given:
            cfg["cap"] = int(doc["degree_cap"])
    if "coeffs" not in fld:
        raise ConfigError("field needs 'coeffs' ([[i, j, value], ...]) or 'file'")
    cfg["field"] = {"coeffs": [[int(i), int(j), float(v)] for i, j, v in fld["coeffs"]]}
    for key in ("ell", "J_max", "cap", "seed"):
        try:
            val = int(cfg[key])
        except (TypeError, ValueError):
            raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from None
        if val != cfg[key] or val < 0:
            raise ConfigError(f"{key} must be a nonnegative integer, got {cfg[key]!r}")
        cfg[key] = val
    floor = 2 * (cfg["J_max"] + cfg["ell"] + 2)
    if cfg["cap"] < floor:
        raise ConfigError(
            f"cap {cfg['cap']} is below the minimum {floor} = 2(J_max + ell + 2)")
    if "h_sweep" in cfg and cfg["h_sweep"] is not None:
        hs = [float(h) for h in cfg["h_sweep"]]
        if not hs or any(h <= 0 for h in hs) or any(a <= b for a, b in zip(hs, hs[1:])):
            raise ConfigError(f"h_sweep must be strictly decreasing and positive, got {hs}")
        cfg["h_sweep"] = hs
    L, M = cfg["grid"].get("L"), cfg["grid"].get("M")
    if not (isinstance(L, (int, float)) and L > 0):
        raise ConfigError(f"grid.L must be positive, got {L!r}")
    if not (isinstance(M, int) and M >= 64):
        raise ConfigError(f"grid.M must be an integer >= 64, got {M!r}")
    cfg["grid"] = {"L": float(L), "M": int(M), **{k: v for k, v in cfg["grid"].items()
                                                   if k not in ("L", "M")}}
    return cfg


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _provenance(cfg):
    return {"config_hash": config_hash(cfg), "version": __version__, "config": cfg}


def _write_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _write_json(path, doc):
    _write_atomic(path, json.dumps(doc, sort_keys=True, indent=1, allow_nan=True) + "\n")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) if (x is None or isinstance(x, (float, np.floating))) else x
                    for x in r])
    _write_atomic(path, buf.getvalue())


def _field(cfg):
    from .field import field_from_coeffs
    return field_from_coeffs(cfg["field"]["coeffs"], cfg["cap"])


def _expansion(cfg, field=None):
    from .wkb import expand
    return expand(field if field is not None else _field(cfg), ell=cfg["ell"],
                  J_max=cfg["J_max"])


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_expand(cfg, out, echo=print):
    from .wkb import expansion_to_dict
    exp = _expansion(cfg)
    doc = dict(_provenance(cfg), expansion=expansion_to_dict(exp))
    _write_json(Path(out) / "expansion.json", doc)
    echo(f"field: b0={exp.field.b0:.12g} alpha={exp.field.alpha:.12g} "
         f"gamma={exp.field.gamma:.12g} rotation={exp.field.rotation_angle:.12g}")
    echo(f"{'j':>3} {'mu_j':>24} {'|Im mu_j|/(1+|mu_j|)':>22}")
    for j, m in enumerate(exp.mu):
        echo(f"{j:>3} {m.real:>24.15g} {abs(m.imag) / (1 + abs(m)):>22.3e}")
    q = doc["expansion"]["phase"]["ReS_quadratic"]
    echo(f"Re S = {q['x1^2']:.12g} x1^2 + {q['x1x2']:.12g} x1 x2 + {q['x2^2']:.12g} x2^2 "
         f"+ O(|x|^3)")
    echo(f"validity radius: {doc['expansion']['validity_radius']:.6g}")
    return doc


def residual_grid(exp, points=51):
    """Square inscribed in the validity disc (with a 10% margin)."""
    from .wkb import validity_radius
    a = 0.9 * validity_radius(exp) / math.sqrt(2)
    return (-a, a, -a, a, 2 * a / (points - 1))


def _tamper(exp, J):
    mu = list(exp.mu_all[: J + 1])
    idx = 1 if J >= 1 else 0
    mu[idx] = mu[idx] + TAMPER
    return mu, idx


def residual_report(exp, hs=RESIDUAL_SWEEP, points=51):
    from .wkb import complex_residual, residual_slope, tamper_crossover
    J = exp.J_max
    cr = complex_residual(exp)
    grid = residual_grid(exp, points)
    fit = residual_slope(exp, hs, grid)
    mu_t, idx = _tamper(exp, J)
    fit_t = residual_slope(exp, hs, grid, mu=mu_t)
    # below the crossover the tamper term must dominate and pull the slope to idx + 1
    h_star = tamper_crossover(exp, grid, mu_index=idx, delta=TAMPER)
    hs_c = [h_star * 2.0 ** -k for k in range(2, 6)]
    ctrl = residual_slope(exp, hs_c, grid)
    ctrl_t = residual_slope(exp, hs_c, grid, mu=mu_t)
    band = 2 * fit["slope_stderr"]
    return {
        "J": J,
        "complex": {"order": list(range(1, J + 2)), "degree": list(cr.degree),
                    "absolute": list(cr.absolute), "relative": list(cr.relative)},
        "real": dict(fit, grid=list(grid), slope_band=[fit["slope"] - band, fit["slope"] + band],
                     required_slope=J + 1.8),
        "tamper": {"mu_index": idx, "delta": TAMPER, "sweep": fit_t, "crossover_h": h_star,
                   "control_sweep": ctrl_t, "control_untampered": ctrl},
    }


def cmd_residual(cfg, out, echo=print):
    exp = _expansion(cfg)
    hs = cfg.get("h_sweep") or list(RESIDUAL_SWEEP)
    rep = residual_report(exp, hs)
    doc = dict(_provenance(cfg), residual=rep)
    _write_json(Path(out) / "residual.json", doc)
    rows = []
    for m, d, a, r in zip(rep["complex"]["order"], rep["complex"]["degree"],
                          rep["complex"]["absolute"], rep["complex"]["relative"]):
        rows.append(["complex", rep["J"], m, "", float(a), float(r)])
    for kind, fit in (("real", rep["real"]), ("real_tampered", rep["tamper"]["sweep"]),
                      ("control", rep["tamper"]["control_untampered"]),
                      ("control_tampered", rep["tamper"]["control_sweep"])):
        for i, (h, v) in enumerate(zip(fit["h"], fit["max_residual"])):
            rows.append([kind, rep["J"], i, float(h), float(v), ""])
    _write_csv(Path(out) / "residual.csv", ["kind", "J", "index", "h", "value", "relative"], rows)
    echo("complex defects (relative): " + ", ".join(
        f"h^{m}: {r:.2e}" for m, r in zip(rep["complex"]["order"], rep["complex"]["relative"])))
    echo(f"real residual slope {rep['real']['slope']:.4f} (R^2 {rep['real']['r2']:.6f}); "
         f"required >= {rep['J'] + 1.8:.1f}")
    echo(f"tampered mu_{rep['tamper']['mu_index']} (+{TAMPER:g}): slope "
         f"{rep['tamper']['sweep']['slope']:.4f} on the sweep, "
         f"{rep['tamper']['control_sweep']['slope']:.4f} below the crossover "
         f"h={rep['tamper']['crossover_h']:.3g} "
         f"(untampered {rep['tamper']['control_untampered']['slope']:.4f})")
    return doc


def _degenerate_field(cfg):
    from .field import MagneticField, load_field, parse_coeff_list
    raw = load_field(parse_coeff_list(cfg["field"]["coeffs"]), cfg["cap"])
    c = raw.coeffs.real
    return MagneticField(b0=float(c[0, 0]), alpha=float(c[2, 0]), gamma=float(c[0, 2]),
                         rotation_angle=0.0, B_series=raw)


def cmd_validate(cfg, out, echo=print):
    from . import validator as V
    hs = cfg.get("h_sweep") or list(V.DEFAULT_SWEEP)
    L, M = cfg["grid"]["L"], cfg["grid"]["M"]
    refine = cfg["grid"].get("refine", "half")
    try:
        field = _field(cfg)
        degenerate = False
    except DegenerateMinimum as exc:
        field = _degenerate_field(cfg)
        degenerate = True
        echo(f"degenerate well ({exc}); WKB pipeline skipped")
    exp = None if degenerate else _expansion(cfg, field)
    pts = V.run_sweep(field, hs, L=L, M=M, k=2, refine=refine, seed=cfg["seed"],
                      expansion=exp, overlap_J=cfg["J_max"])
    if degenerate:
        rep = {"degenerate": True, "b0": field.b0, "h": [p.h for p in pts],
               "eigenvalues": [p.eigenvalues.tolist() for p in pts],
               "lambda0_over_b0h": [float(p.eigenvalues[0] / (field.b0 * p.h)) for p in pts],
               "refinement_deltas": [p.refinement_delta.tolist() for p in pts],
               "M": M, "M_ref": pts[0].M_ref, "L": L}
        fitted = [None, None]
    else:
        r = V.compare_eigenvalues(pts, field, expansion=exp, L=L)
        rep = dict(r.to_dict(), degenerate=False)
        fitted = r.fitted_mu1
    doc = dict(_provenance(cfg), spectral=rep)
    _write_json(Path(out) / "spectral.json", doc)
    rows = []
    for p in pts:
        for i, lam in enumerate(p.eigenvalues):
            rows.append([float(p.h), i, float(lam), float(lam / p.h),
                         None if fitted[i] is None else float(fitted[i]),
                         float(p.overlap) if (i == 0 and p.overlap is not None) else None])
    _write_csv(Path(out) / "spectral.csv",
               ["h", "index", "lambda", "lambda_over_h", "fitted_mu1", "overlap"],
               rows)
    for p in pts:
        echo(f"h={p.h:<7g} lambda={np.array2string(p.eigenvalues, precision=10)} "
             f"refinement delta={p.refinement_delta.max():.2e}"
             + (f" overlap={p.overlap:.6f}" if p.overlap is not None else ""))
    if not degenerate:
        echo(f"fitted mu1: {rep['fitted_mu1'][0]:.6g} (predicted {rep['predicted_mu1'][0]:.6g}); "
             f"gap coefficient {rep['gap_coefficient']:.6g} "
             f"(predicted {rep['gap_predicted']:.6g})")
    return doc


COMMANDS = {"expand": cmd_expand, "residual": cmd_residual, "validate": cmd_validate}


def build_parser():
    ap = argparse.ArgumentParser(prog="magwkb", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="JSON job configuration")
    ap.add_argument("--out", default=".", help="output directory (created if missing)")
    ap.add_argument("--ell", type=int)
    ap.add_argument("--order", type=int, help="J_max")
    ap.add_argument("--cap", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--h", help="comma-separated h sweep")
    ap.add_argument("--grid", help="L,M")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    t0 = time.time()
    try:
        over = {"ell": args.ell, "J_max": args.order, "cap": args.cap, "seed": args.seed}
        if args.h:
            over["h_sweep"] = _parse_list(args.h)
        if args.grid:
            parts = args.grid.split(",")
            if len(parts) != 2:
                raise ConfigError(f"--grid expects L,M, got {args.grid!r}")
            try:
                over["grid"] = {"L": float(parts[0]), "M": int(parts[1])}
            except ValueError:
                raise ConfigError(f"--grid expects L,M, got {args.grid!r}") from None
        cfg = load_config(args.config, over)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](cfg, out)
        _write_json(out / "run_info.json",
                    {"command": args.command, "config_hash": config_hash(cfg),
                     "version": __version__, "wall_seconds": time.time() - t0,
                     "finished": time.strftime("%Y-%m-%dT%H:%M:%S%z")})
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except MagWKBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
