"""Command-line front end.

Every subcommand resolves its configuration from built-in defaults, an
optional JSON config file and command-line flags (flags win), writes the
resolved configuration to ``<out>/resolved_config.json`` and then its
outputs.  Rerunning with ``--config <out>/resolved_config.json`` reproduces
the outputs byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .errors import NUMERIC_ERRORS, LyapbifError
from .experiments import (EpsRule, compare_mass, delta_statistics, empirical_measure, locus_box,
                          measure_settings, pair_separation_stats, random_trace_measure,
                          trace_ld_statistics, type_change_locus)
from .family import FamilySpec, load_family, preset
from .io import dumps, write_field, write_json, write_mask, write_mass
from .lyapunov import ParamGrid, chi_field
from .potential import MassField, bif_measure
from .words import WalkSampler, WordMeasure, parse_measure
from .zeros import collision_loci, trace_loci

DEFAULT_SEED = 20240917
COMMANDS = ("lyap", "bif", "zeros", "collide", "stats", "typechange")

DEFAULTS = {
    "family": {"preset": "riley", "params": {}},
    "measure": None,
    "grid": None,
    "seed": DEFAULT_SEED,
    "out": "lyapbif-out",
    "n": 50,
    "m": 200,
    "shared_words": True,
    "t": [4.0, 0.0],
    "word": None,
    "k": 10,
    "tol": 1e-10,
    "compare": {"n": 60, "m": 400, "coarsen": 8},
    "cache": None,
    "lam": None,
    "eps_rule": {"kind": "power", "rate": 1.0, "c": 1.0},
    "eps": 0.2,
    "gamma": 0.1,
    "n_list": [25, 50, 100, 200],
}

COMMAND_DEFAULTS = {
    "zeros": {"n": 20},
    "collide": {"n": 10},
    "stats": {"n": 100, "m": 1000},
    "typechange": {"n": 20, "m": 10},
}

DEFAULT_PIXELS = 128


class ConfigError(LyapbifError):
    def __init__(self, field: str, message: str):
        super().__init__(f"config error in field '{field}': {message}")
        self.field = field


# ------------------------------------------------------------ config

def _csv_floats(text: str, count: int, name: str) -> list:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(name, f"expected {count} comma-separated numbers, got {text!r}") from None
    if len(vals) != count:
        raise ConfigError(name, f"expected {count} comma-separated numbers, got {text!r}")
    return vals


def _parse_t(text: str) -> list:
    parts = text.split(",")
    if len(parts) == 1:
        return _csv_floats(text, 1, "t") + [0.0]
    return _csv_floats(text, 2, "t")


def _parse_grid(text: str) -> dict:
    cx, cy, w, h, nx, ny = _csv_floats(text, 6, "grid")
    if nx != int(nx) or ny != int(ny):
        raise ConfigError("grid", "nx and ny must be integers")
    return {"center": [cx, cy], "width": w, "height": h, "nx": int(nx), "ny": int(ny)}


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    cfg.update(copy.deepcopy(COMMAND_DEFAULTS.get(command, {})))
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError("config", f"file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"{path}: invalid JSON ({exc})") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config", f"{path}: expected a JSON object")
        unknown = sorted(set(loaded) - set(cfg) - {"command"})
        if unknown:
            raise ConfigError(unknown[0], "unknown field")
        cfg.update({k: v for k, v in loaded.items() if k != "command"})
    if args.preset is not None:
        cfg["family"] = {"preset": args.preset, "params": {}}
    if args.family is not None:
        cfg["family"] = {"file": args.family}
    if args.grid is not None:
        cfg["grid"] = _parse_grid(args.grid)
    if args.t is not None:
        cfg["t"] = _parse_t(args.t)
    if args.lam is not None:
        cfg["lam"] = _parse_t(args.lam)
    for key in ("seed", "out", "n", "m", "word", "k", "eps", "gamma"):
        v = getattr(args, key)
        if v is not None:
            cfg[key] = v
    cfg["command"] = command
    return cfg


def _int_field(cfg, key, lo=1):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        raise ConfigError(key, f"expected an integer >= {lo}, got {v!r}")
    return v


def _pair(cfg, key) -> complex:
    v = cfg[key]
    try:
        re, im = (float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected [re, im], got {v!r}") from None
    return complex(re, im)


def build_family(cfg) -> FamilySpec:
    fam = cfg["family"]
    if not isinstance(fam, dict):
        raise ConfigError("family", "expected an object with 'preset' or 'file'")
    if "file" in fam:
        path = Path(fam["file"])
        if not path.is_file():
            raise ConfigError("family.file", f"file not found: {path}")
        try:
            return load_family(path)
        except (LyapbifError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError("family.file", f"{path}: {exc}") from None
    try:
        return preset(str(fam.get("preset")), **(fam.get("params") or {}))
    except (LyapbifError, TypeError, ValueError) as exc:
        raise ConfigError("family.preset", str(exc)) from None


def build_measure(cfg, spec: FamilySpec) -> WordMeasure:
    if cfg["measure"] is None:
        return spec.default_measure()
    try:
        return parse_measure(cfg["measure"], spec.names)
    except (LyapbifError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError("measure", str(exc)) from None


def build_grid(cfg, spec: FamilySpec) -> ParamGrid:
    g = cfg["grid"]
    if g is None:
        w = spec.window
        nx = DEFAULT_PIXELS
        ny = max(8, round(nx * w.height / w.width))
        g = {"center": [w.center.real, w.center.imag], "width": w.width,
             "height": w.width * ny / nx, "nx": nx, "ny": ny}
        cfg["grid"] = g
    try:
        c = complex(float(g["center"][0]), float(g["center"][1]))
        return ParamGrid(c, float(g["width"]), float(g["height"]), int(g["nx"]), int(g["ny"]))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError("grid", str(exc)) from None


def _parse_words(cfg, spec, count):
    text = cfg["word"]
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != count:
        raise ConfigError("word", f"expected {count} comma-separated word(s), got {text!r}")
    try:
        return [spec.parse(p) for p in parts]
    except LyapbifError as exc:
        raise ConfigError("word", str(exc)) from None


# ------------------------------------------------------------ commands

def _settings(cfg, spec, mu) -> dict:
    return {**measure_settings(spec, mu), "seed": cfg["seed"], "command": cfg["command"]}


def cmd_lyap(cfg, out: Path) -> int:
    spec = build_family(cfg)
    mu = build_measure(cfg, spec)
    grid = build_grid(cfg, spec)
    n, m = _int_field(cfg, "n"), _int_field(cfg, "m")
    f = chi_field(spec, mu, grid, n, m, cfg["seed"], shared_words=bool(cfg["shared_words"]))
    f.metadata.update(_settings(cfg, spec, mu))
    side = write_field(out / "chi", f)
    print(f"chi: min {side['min']:.6g}  max {side['max']:.6g}  -> {out / 'chi.csv'}")
    return 0


def cmd_bif(cfg, out: Path) -> int:
    spec = build_family(cfg)
    mu = build_measure(cfg, spec)
    grid = build_grid(cfg, spec)
    n, m = _int_field(cfg, "n"), _int_field(cfg, "m")
    mf = bif_measure(spec, mu, grid, n, m, cfg["seed"])
    mf.metadata.update(_settings(cfg, spec, mu))
    s = write_mass(out / "bif", mf)
    print(f"bif: total {s['total']:.6g}  min {s['min']:.3g}  max {s['max']:.3g}  "
          f"negative_fraction {s['negative_fraction']:.3g}")
    return 0


def _cached_bif(cfg, spec, mu, grid, out: Path) -> MassField:
    comp = cfg["compare"]
    n, m = int(comp["n"]), int(comp["m"])
    key = hashlib.sha256(dumps({"fp": spec.fingerprint(), "mu": measure_settings(spec, mu)["measure"],
                                "grid": grid.to_dict(), "n": n, "m": m, "seed": cfg["seed"]}).encode())
    cache = Path(cfg["cache"]) if cfg["cache"] else out / "cache"
    cache.mkdir(parents=True, exist_ok=True)
    path = cache / f"bif-{key.hexdigest()[:20]}.npy"
    if path.is_file():
        cells = np.load(path)
        return MassField(grid, cells, {"kind": "bif_measure", "n": n, "m": m, "seed": cfg["seed"]})
    mf = bif_measure(spec, mu, grid, n, m, cfg["seed"])
    np.save(path, mf.cells)
    return mf


def _cloud_records(clouds, labels):
    recs = []
    for lab, cl in zip(labels, clouds):
        recs.append({"word": lab, "constant": bool(cl.metadata.get("constant")),
                     "total_multiplicity": cl.total_multiplicity, "points": cl.to_json()})
    return recs


def _warn_constant(clouds, labels):
    for lab, cl in zip(labels, clouds):
        if cl.metadata.get("constant"):
            print(f"warning: {lab!r} gives a constant function on the window; its locus is taken as empty",
                  file=sys.stderr)


def _compare(cfg, spec, mu, grid, emp: MassField, out: Path) -> None:
    comp = cfg["compare"]
    if not comp or int(comp.get("n", 0)) <= 0:
        return
    ref = _cached_bif(cfg, spec, mu, grid, out)
    rep = compare_mass(emp, ref, int(comp["coarsen"]))
    rep.settings.update(_settings(cfg, spec, mu))
    write_json(out / "comparison.json", rep.to_json())
    print(f"comparison: TV {rep.tv:.4f}  correlation {rep.correlation:.4f}")


def _loci_command(cfg, out: Path, collide: bool) -> int:
    spec = build_family(cfg)
    mu = build_measure(cfg, spec)
    grid = build_grid(cfg, spec)
    box = locus_box(grid)
    tol = float(cfg["tol"])
    name = "collide" if collide else "zeros"
    t = _pair(cfg, "t")
    if cfg["word"]:
        words = _parse_words(cfg, spec, 2 if collide else 1)
        if collide:
            clouds = collision_loci(spec, [tuple(words)], box, tol)
        else:
            clouds = trace_loci(spec, words, t, box, tol)
        labels = [",".join(w.format(spec.names) for w in words)]
        _warn_constant(clouds, labels)
        doc = {"mode": "explicit", "loci": _cloud_records(clouds, labels), "settings": _settings(cfg, spec, mu)}
        if not collide:
            doc["t"] = [t.real, t.imag]
        write_json(out / f"{name}.json", doc)
        for p in clouds[0].points:
            print(f"{p.lam.real:+.12g} {p.lam.imag:+.12g}i  mult {p.mult}")
        return 0
    n, k = _int_field(cfg, "n"), _int_field(cfg, "k")
    if collide:
        ws = WalkSampler(mu, cfg["seed"], 0).walks(k, n)
        hs = WalkSampler(mu, cfg["seed"], 1).walks(k, n)
        clouds = collision_loci(spec, list(zip(ws, hs)), box, tol)
        labels = [f"{w.format(spec.names)},{h.format(spec.names)}" for w, h in zip(ws, hs)]
        emp = empirical_measure(clouds, 1.0 / (4.0 * n * k), grid)
        emp.metadata.update({"n": n, "k": k, "seed": cfg["seed"]})
    else:
        emp, clouds, ws = random_trace_measure(spec, mu, grid, n, k, t, cfg["seed"])
        labels = [w.format(spec.names) for w in ws]
    _warn_constant(clouds, labels)
    doc = {"mode": "random", "loci": _cloud_records(clouds, labels), "settings": _settings(cfg, spec, mu)}
    write_json(out / f"{name}.json", doc)
    s = write_mass(out / f"{name}_empirical", emp)
    print(f"{name}: {sum(len(c) for c in clouds)} points, binned mass {s['total']:.6g}, "
          f"overflow {emp.metadata['overflow']:.6g}")
    _compare(cfg, spec, mu, grid, emp, out)
    return 0


def cmd_zeros(cfg, out: Path) -> int:
    return _loci_command(cfg, out, collide=False)


def cmd_collide(cfg, out: Path) -> int:
    return _loci_command(cfg, out, collide=True)


def cmd_stats(cfg, out: Path) -> int:
    spec = build_family(cfg)
    mu = build_measure(cfg, spec)
    lam = _pair(cfg, "lam") if cfg["lam"] is not None else spec.window.center
    cfg["lam"] = [lam.real, lam.imag]
    n, m = _int_field(cfg, "n"), _int_field(cfg, "m")
    ns = cfg["n_list"]
    if not isinstance(ns, list) or not ns or any(not isinstance(x, int) or x < 1 for x in ns):
        raise ConfigError("n_list", f"expected a list of positive integers, got {ns!r}")
    er = cfg["eps_rule"]
    try:
        rule = EpsRule(str(er["kind"]), float(er["rate"]), float(er.get("c", 1.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("eps_rule", str(exc)) from None
    eps, gamma = float(cfg["eps"]), float(cfg["gamma"])
    if not eps > 0:
        raise ConfigError("eps", "must be positive")
    if not gamma > 0:
        raise ConfigError("gamma", "must be positive")
    seed = cfg["seed"]
    dt = delta_statistics(spec, mu, lam, ns, rule, m, seed)
    lt = trace_ld_statistics(spec, mu, lam, eps, ns, m, seed)
    ps = pair_separation_stats(spec, mu, lam, gamma, n, m, seed)
    doc = {"delta": dt.to_json(), "trace_ld": lt.to_json(),
           "pair_separation": {"gamma": gamma, "n": n, "m": m, "violation_fraction": ps},
           "settings": _settings(cfg, spec, mu)}
    write_json(out / "stats.json", doc)
    text = (f"delta < eps_n  ({rule.kind}, rate {rule.rate}, c {rule.c})\n{dt.format()}\n\n"
            f"|log|tr|/n - chi| > {eps}  (chi_ref {lt.settings['chi_ref']:.6f})\n{lt.format()}\n"
            f"log-probability slope per unit n: {lt.log_slope():.5g}\n\n"
            f"pair separation gamma={gamma} n={n}: violation fraction {ps:.5f}\n")
    (out / "stats.txt").write_text(text)
    print(text, end="")
    return 0


def cmd_typechange(cfg, out: Path) -> int:
    spec = build_family(cfg)
    mu = build_measure(cfg, spec)
    grid = build_grid(cfg, spec)
    n, m = _int_field(cfg, "n"), _int_field(cfg, "m")
    mask = type_change_locus(spec, mu, grid, n, m, cfg["seed"])
    meta = {**_settings(cfg, spec, mu), "n_max": n, "m": m}
    side = write_mask(out / "typechange", grid, mask, meta)
    print(f"typechange: {side['flagged']} of {grid.nx * grid.ny} pixels flagged")
    return 0


HANDLERS = {"lyap": cmd_lyap, "bif": cmd_bif, "zeros": cmd_zeros, "collide": cmd_collide,
            "stats": cmd_stats, "typechange": cmd_typechange}


# ------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int, help="random seed (default %d)" % DEFAULT_SEED)
    common.add_argument("--out", help="output directory")
    common.add_argument("--grid", help='"cx,cy,w,h,nx,ny" with square pixels')
    common.add_argument("--n", type=int, help="walk / word length")
    common.add_argument("--m", type=int, help="number of sampled walks")
    common.add_argument("--t", help='"re,im" trace-squared target (zeros)')
    common.add_argument("--word", help="explicit word (zeros) or comma-separated pair (collide)")
    common.add_argument("--preset", help="riley | schottky | constant | linear-custom")
    common.add_argument("--family", help="family spec JSON file (instead of a preset)")
    common.add_argument("--k", type=int, help="number of random words (zeros, collide)")
    common.add_argument("--lam", help='"re,im" parameter for stats')
    common.add_argument("--eps", type=float, help="deviation threshold (stats)")
    common.add_argument("--gamma", type=float, help="separation rate (stats)")
    p = argparse.ArgumentParser(prog="lyapbif", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    helps = {"lyap": "Lyapunov exponent field", "bif": "bifurcation measure (dd^c of the field)",
             "zeros": "trace loci and their empirical measure", "collide": "common-fixed-point loci",
             "stats": "tail statistics of random products", "typechange": "type-change pixel mask"}
    for c in COMMANDS:
        sub.add_parser(c, parents=[common], help=helps[c])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        if isinstance(cfg["seed"], bool) or not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2**64:
            raise ConfigError("seed", f"expected an unsigned 64-bit integer, got {cfg['seed']!r}")
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        handler = HANDLERS[args.command]
        # resolve the family, measure and grid up front so the persisted config is complete
        spec = build_family(cfg)
        build_measure(cfg, spec)
        if args.command != "stats":
            build_grid(cfg, spec)
        write_json(out / "resolved_config.json", cfg)
        code = handler(cfg, out)
        write_json(out / "resolved_config.json", cfg)
        return code
    except ConfigError as exc:
        print(f"lyapbif: {exc}", file=sys.stderr)
        return 2
    except NUMERIC_ERRORS as exc:
        print(f"lyapbif: numeric failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
