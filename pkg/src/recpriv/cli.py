"""Command-line front end.

Problems are JSON documents; results are JSON documents on stdout with an
optional CSV sidecar for plotting. Exit codes: 0 success, 1 validation
error, 2 infeasible or over a sizing cap, 3 internal invariant violation.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .binaryexample import min_distortion_curve, saturation
from .codesim import SimParams, build_codebook, simulate
from .errors import ConfigError, DomainError, SizingError
from .frontier import OptOptions, trace_frontier
from .probcore import MAX_ALPHABET, Alphabet, CondPmf, JointPmf
from .regions import SETTINGS, AuxChannels, SourceSpec, check_cardinality, evaluate

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3

# canonical axis order of each flat channel array
CHANNEL_AXES = {
    "p_u_given_x": ("X", "U"),
    "p_t_given_u": ("U", "T"),
    "p_xhat_given_uy": ("U", "Y", "Xhat"),
    "p_vxhat_given_uy": ("U", "Y", "V", "Xhat"),
}
ROW_TOL = 1e-9


@dataclass
class Diagnostic:
    level: str      # "error" or "warning"
    path: str
    message: str

    def __str__(self):
        return f"{self.level}: {self.path}: {self.message}"


class ValidationFailed(Exception):
    def __init__(self, diagnostics):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


def _alphabet(cfg, name, diags, required=True) -> Optional[Alphabet]:
    entry = cfg.get("alphabets", {}).get(name)
    path = f"alphabets.{name}"
    if entry is None:
        if required:
            diags.append(Diagnostic("error", path, "missing"))
        return None
    if isinstance(entry, int):
        entry = {"size": entry}
    size = entry.get("size")
    if not isinstance(size, int) or isinstance(size, bool) or size < 1 or size > MAX_ALPHABET:
        diags.append(Diagnostic("error", f"{path}.size", f"must be an integer in [1, {MAX_ALPHABET}]"))
        return None
    labels = entry.get("labels")
    if labels is not None and (len(labels) != size or len(set(map(str, labels))) != size):
        diags.append(Diagnostic("error", f"{path}.labels", f"need {size} unique labels"))
        return None
    return Alphabet(name, size, tuple(labels) if labels is not None else None)


def _flat(value, path, n, diags):
    if isinstance(value, dict):
        value = value.get("values")
    try:
        arr = np.asarray(value, dtype=float).ravel()
    except (TypeError, ValueError):
        diags.append(Diagnostic("error", path, "must be a flat numeric array"))
        return None
    if arr.size != n:
        diags.append(Diagnostic("error", path, f"has {arr.size} entries, expected {n}"))
        return None
    if not np.all(np.isfinite(arr)):
        diags.append(Diagnostic("error", path, "contains non-finite entries"))
        return None
    return arr


def _check_rows(arr, n_rows, path, diags) -> bool:
    rows = arr.reshape(n_rows, -1)
    ok = True
    for i, r in enumerate(rows):
        if np.any(r < 0):
            diags.append(Diagnostic("error", f"{path}[row {i}]", "has negative entries"))
            ok = False
        elif abs(r.sum() - 1.0) > ROW_TOL:
            diags.append(Diagnostic("error", f"{path}[row {i}]", f"sums to {r.sum():.12g}, not 1"))
            ok = False
    return ok


def _channel(cfg, key, axes_by_name, diags):
    ch = cfg.get("channels", {})
    if key not in ch:
        return None
    path = f"channels.{key}"
    order = CHANNEL_AXES[key]
    entry = ch[key]
    if isinstance(entry, dict) and "axes" in entry and tuple(entry["axes"]) != order:
        diags.append(Diagnostic("error", f"{path}.axes", f"must be {list(order)}"))
        return None
    if any(axes_by_name.get(a) is None for a in order):
        missing = [a for a in order if axes_by_name.get(a) is None]
        diags.append(Diagnostic("error", path, f"needs alphabets {missing}"))
        return None
    sizes = [axes_by_name[a].size for a in order]
    arr = _flat(entry, path, int(np.prod(sizes)), diags)
    if arr is None:
        return None
    n_given = sizes[0] * (sizes[1] if len(order) > 2 else 1)
    if not _check_rows(arr, n_given, path, diags):
        return None
    n_given_axes = 2 if len(order) > 2 else 1
    given = tuple(axes_by_name[a] for a in order[:n_given_axes])
    target = tuple(axes_by_name[a] for a in order[n_given_axes:])
    return CondPmf(given, target, arr.reshape(sizes))


def _infer_size(cfg, name, key, other, diags):
    """Auxiliary alphabet size from ``alphabets`` or from the length of a channel array."""
    if name in cfg.get("alphabets", {}):
        return _alphabet(cfg, name, diags)
    entry = cfg.get("channels", {}).get(key)
    if entry is None or other is None:
        return None
    vals = entry.get("values") if isinstance(entry, dict) else entry
    n = len(np.asarray(vals, dtype=float).ravel()) if vals is not None else 0
    if n == 0 or n % other:
        diags.append(Diagnostic("error", f"channels.{key}", f"length {n} not a multiple of {other}"))
        return None
    size = n // other
    if size > MAX_ALPHABET:
        diags.append(Diagnostic("error", f"channels.{key}", f"implies |{name}|={size} > {MAX_ALPHABET}"))
        return None
    return Alphabet(name, size)


def load_problem(cfg: dict):
    """Parse a problem document; returns (setting, source, channels or None, diagnostics)."""
    diags = []
    if not isinstance(cfg, dict):
        return None, None, None, [Diagnostic("error", "$", "document must be a JSON object")]
    setting = cfg.get("setting", "eve")
    if setting not in SETTINGS:
        diags.append(Diagnostic("error", "setting", f"must be one of {list(SETTINGS)}"))
    ax = {n: _alphabet(cfg, n, diags) for n in ("X", "Y", "Z", "F", "Xhat")}
    if any(a is None for a in ax.values()):
        return setting, None, None, diags

    source = None
    nx, ny, nz = ax["X"].size, ax["Y"].size, ax["Z"].size
    pxyz = _flat(cfg.get("pxyz"), "pxyz", nx * ny * nz, diags)
    if pxyz is not None:
        if np.any(pxyz < 0):
            diags.append(Diagnostic("error", "pxyz", "has negative entries"))
            pxyz = None
        elif abs(pxyz.sum() - 1.0) > ROW_TOL:
            diags.append(Diagnostic("error", "pxyz", f"sums to {pxyz.sum():.12g}, not 1"))
            pxyz = None
    f = _flat(cfg.get("f_table"), "f_table", nx * ny, diags)
    if f is not None and (np.any(f != np.round(f)) or f.min() < 0 or f.max() >= ax["F"].size):
        diags.append(Diagnostic("error", "f_table", f"entries must be integers in [0, {ax['F'].size})"))
        f = None
    d = _flat(cfg.get("d_matrix"), "d_matrix", ax["F"].size * ax["Xhat"].size, diags)
    if d is not None and np.any(d < 0):
        diags.append(Diagnostic("error", "d_matrix", "entries must be nonnegative"))
        d = None
    if pxyz is not None and f is not None and d is not None:
        source = SourceSpec(
            pxyz=JointPmf((ax["X"], ax["Y"], ax["Z"]), (pxyz / pxyz.sum()).reshape(nx, ny, nz)),
            f_alphabet=ax["F"], xhat_alphabet=ax["Xhat"],
            f_table=f.astype(int).reshape(nx, ny), d_matrix=d.reshape(ax["F"].size, -1))

    channels = None
    if "channels" in cfg:
        axes = dict(ax)
        axes["U"] = _infer_size(cfg, "U", "p_u_given_x", nx, diags)
        u = axes["U"].size if axes["U"] else None
        axes["T"] = _infer_size(cfg, "T", "p_t_given_u", u, diags)
        axes["V"] = _infer_size(cfg, "V", "p_vxhat_given_uy",
                                u * ny * ax["Xhat"].size if u else None, diags)
        pux = _channel(cfg, "p_u_given_x", axes, diags)
        ptu = _channel(cfg, "p_t_given_u", axes, diags)
        phy = _channel(cfg, "p_xhat_given_uy", axes, diags)
        pvh = _channel(cfg, "p_vxhat_given_uy", axes, diags)
        t_of_u = cfg["channels"].get("t_of_u")
        if pux is None and "p_u_given_x" not in cfg["channels"]:
            diags.append(Diagnostic("error", "channels.p_u_given_x", "missing"))
        if phy is None and "p_xhat_given_uy" not in cfg["channels"]:
            diags.append(Diagnostic("error", "channels.p_xhat_given_uy", "missing"))
        if pux is not None and phy is not None and not any(x.level == "error" for x in diags):
            try:
                if pvh is not None:
                    pvh = CondPmf(phy.given_axes, pvh.target_axes, pvh.rows)
                channels = AuxChannels(p_u_given_x=pux, p_xhat_given_uy=phy, p_t_given_u=ptu,
                                       p_vxhat_given_uy=pvh, t_of_u=t_of_u)
            except ConfigError as exc:
                diags.append(Diagnostic("error", "channels", str(exc)))
        if channels is not None and setting in SETTINGS:
            for w in check_cardinality(setting, channels, nx):
                diags.append(Diagnostic("warning", "channels", w))
    return setting, source, channels, diags


def validate(cfg: dict) -> list:
    """All diagnostics for a problem document; an empty list means well-formed."""
    return load_problem(cfg)[3]


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationFailed([Diagnostic("error", path, f"cannot read JSON: {exc}")])


def _problem(cfg, need_channels=True):
    setting, source, channels, diags = load_problem(cfg)
    errors = [d for d in diags if d.level == "error"]
    if not errors and need_channels and channels is None:
        errors = [Diagnostic("error", "channels", "missing")]
    if errors:
        raise ValidationFailed(errors)
    for d in diags:
        print(d, file=sys.stderr)
    return setting, source, channels


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def result_document(command, inputs, seeds, result_type, result, wall_time=None) -> dict:
    """Results plus provenance; only ``metadata`` varies between identical runs."""
    return {
        "toolkit": "recpriv",
        "version": __version__,
        "command": command,
        "input_digest": digest(inputs),
        "seeds": seeds,
        "result_type": result_type,
        "result": result,
        "metadata": {
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "wall_time_s": wall_time,
        },
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False)


def read_result(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def parse_grid(text: str) -> list:
    """'a:b:step' (inclusive) or a comma-separated list."""
    try:
        if ":" in text:
            a, b, step = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            n = int(math.floor((b - a) / step + 1e-9))
            return [round(a + i * step, 12) for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ValidationFailed([Diagnostic("error", "--delta-grid",
                                           f"expected 'start:stop:step' or a list, got {text!r}")])


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else repr(float(v)) for v in r])


def _emit(doc, out):
    text = dumps(doc)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_region(args):
    cfg = _load(args.config)
    setting, source, channels = _problem(cfg)
    t0 = time.perf_counter()
    ch = channels
    if args.bound == "outer" and setting in ("eve", "helper") and ch.p_vxhat_given_uy is None:
        ch = ch.with_constant_v()
    pt = evaluate(source, ch, setting, args.bound)
    result = dict(pt.as_dict(), setting=setting, bound=args.bound)
    _emit(result_document("region", cfg, {}, "RegionPoint", result, time.perf_counter() - t0),
          args.out)
    return EXIT_OK


def _opt_options(cfg, args) -> OptOptions:
    block = dict(cfg.get("frontier", {}))
    for key in ("restarts", "max_iters", "seed", "u_size", "t_size"):
        v = getattr(args, key, None)
        if v is not None:
            block[key] = v
    known = {f for f in OptOptions.__dataclass_fields__}
    unknown = set(block) - known
    if unknown:
        raise ValidationFailed([Diagnostic("error", f"frontier.{sorted(unknown)[0]}", "unknown option")])
    return OptOptions(**block)


def cmd_frontier(args):
    cfg = _load(args.config)
    setting, source, _ = _problem(cfg, need_channels=False)
    grid = parse_grid(args.delta_grid)
    opts = _opt_options(cfg, args)
    curve = trace_frontier(source, setting, args.rate, grid, opts)
    if args.csv:
        _write_csv(args.csv, ["delta", "d_min"], [(p.delta_target, p.d_min) for p in curve.points])
    inputs = {"config": cfg, "rate": args.rate, "grid": grid, "options": opts.__dict__}
    doc = result_document("frontier", inputs, {"seed": opts.seed}, "FrontierCurve",
                          dict(curve.as_dict(), restarts=opts.restarts),
                          curve.metadata.get("wall_time_s"))
    _emit(doc, args.out)
    return EXIT_OK if any(p.feasible for p in curve.points) else EXIT_INFEASIBLE


def cmd_binary_example(args):
    grid = parse_grid(args.delta_grid)
    curve = min_distortion_curve(args.rate, args.pe, grid, deterministic=args.deterministic)
    d_sat, d_min = saturation(args.rate, args.pe)
    rows = [(p.delta_target, p.d_min, p.params.get("p_u"), p.params.get("p_2")) for p in curve.points]
    if args.csv:
        _write_csv(args.csv, ["delta", "d_min", "p_u", "p_2"], rows)
    result = {"rate": args.rate, "p_e": args.pe, "deterministic_decoder": args.deterministic,
              "delta_sat": d_sat, "d_min_sat": d_min,
              "rows": [dict(zip(("delta", "d_min", "p_u", "p_2"), r)) for r in rows]}
    inputs = {"rate": args.rate, "p_e": args.pe, "grid": grid, "deterministic": args.deterministic}
    doc = result_document("binary-example", inputs, {}, "BinaryExampleTable", result,
                          curve.metadata.get("wall_time_s"))
    _emit(doc, args.out)
    return EXIT_OK if any(p.feasible for p in curve.points) else EXIT_INFEASIBLE


def cmd_simulate(args):
    cfg = _load(args.config)
    setting, source, channels = _problem(cfg)
    block = dict(cfg.get("sim", {}))
    block.pop("trials", None)
    block.update(n=args.n, seed=args.seed)
    if args.epsilon is not None:
        block["epsilon"] = args.epsilon
    if args.delta is not None:
        block["delta"] = args.delta
    params = SimParams(**block)
    t0 = time.perf_counter()
    cb = build_codebook(source, channels, params)
    res = simulate(cb, args.trials, args.seed, exact=not args.no_exact)
    result = dict(res.as_dict(), n_t_codewords=int(cb.t_codewords.shape[0]),
                  n_u_codewords=int(cb.u_codewords.shape[1]), n_t_bins=cb.n_t_bins,
                  n_u_bins=cb.n_u_bins)
    inputs = {"config": cfg, "params": params.__dict__, "trials": args.trials}
    doc = result_document("simulate", inputs, {"seed": args.seed}, "SimResult", result,
                          time.perf_counter() - t0)
    _emit(doc, args.out)
    return EXIT_OK


def cmd_validate(args):
    cfg = _load(args.config)
    diags = validate(cfg)
    for d in diags:
        print(d)
    if not diags:
        print("ok")
    return EXIT_INVALID if any(d.level == "error" for d in diags) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="recpriv", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"recpriv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("region", help="evaluate one bound for the configured channels")
    r.add_argument("--config", required=True)
    r.add_argument("--bound", choices=("inner", "outer"), default="inner")
    r.add_argument("--out")
    r.set_defaults(func=cmd_region)

    f = sub.add_parser("frontier", help="trace minimum distortion versus equivocation")
    f.add_argument("--config", required=True)
    f.add_argument("--rate", type=float, required=True)
    f.add_argument("--delta-grid", required=True)
    f.add_argument("--csv")
    f.add_argument("--restarts", type=int)
    f.add_argument("--max-iters", dest="max_iters", type=int)
    f.add_argument("--seed", type=int)
    f.add_argument("--u-size", dest="u_size", type=int)
    f.add_argument("--t-size", dest="t_size", type=int)
    f.add_argument("--out")
    f.set_defaults(func=cmd_frontier)

    b = sub.add_parser("binary-example", help="closed-form binary erasure example")
    b.add_argument("--rate", type=float, required=True)
    b.add_argument("--pe", type=float, required=True)
    b.add_argument("--delta-grid", required=True)
    b.add_argument("--deterministic", action="store_true", help="restrict the decoder to p_2 = 0")
    b.add_argument("--csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_binary_example)

    s = sub.add_parser("simulate", help="finite-blocklength simulation of the binned scheme")
    s.add_argument("--config", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--epsilon", type=float)
    s.add_argument("--delta", type=float)
    s.add_argument("--no-exact", action="store_true", help="skip the exact equivocation oracle")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("validate", help="check a problem document")
    v.add_argument("--config", required=True)
    v.set_defaults(func=cmd_validate)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_INVALID
    try:
        return args.func(args)
    except ValidationFailed as exc:
        for d in exc.diagnostics:
            print(d, file=sys.stderr)
        return EXIT_INVALID
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SizingError as exc:
        print(f"sizing error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
