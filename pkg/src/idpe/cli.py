"""Command line entry point: ``idpe COMMAND --config PATH [options]``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import ergodicity as erg
from .config import ExperimentConfig, load_config
from .errors import ConfigError, IDPError
from .finite_exact import check_double_ergodicity_equivalence
from .groups import element, folner_window
from .integrals import empirical_charfn
from .poisson import RngStream
from .processes import build_process, iter_leaves, marginal_charfn, simulate_trace, simulate_values

COMMANDS = ("simulate", "charfn", "ergodicity", "weakmixing", "codifference", "probe-invariant",
            "decompose", "finite-bruteforce", "nullity")

EXIT_OK, EXIT_ERROR, EXIT_EXPECT = 0, 1, 2


def _model(cfg: ExperimentConfig, key: str = "model"):
    spec = {"model": cfg.model, "modelA": cfg.model_a, "modelB": cfg.model_b}[key]
    if spec is None:
        raise ConfigError(f"configuration lacks {key!r}")
    if cfg.group is None:
        raise ConfigError("configuration lacks 'group'")
    return build_process(spec, cfg.group, cfg.cells)


def _observables(cfg, group):
    specs = cfg.observables or [{"type": "indicator", "lo": 0.0, "loOpen": True}]
    out = []
    for o in specs:
        kind = o.get("type", "indicator")
        coord = o.get("coord")
        if kind == "indicator":
            lo = o.get("lo")
            hi = o.get("hi")
            out.append(erg.box_indicator(group, coord, -math.inf if lo is None else float(lo),
                                         math.inf if hi is None else float(hi), int(o.get("component", 0)),
                                         bool(o.get("loOpen", False)), bool(o.get("hiOpen", False))))
        elif kind == "cos":
            out.append(erg.cos_observable(group, coord, float(o.get("t", 1.0)), int(o.get("component", 0))))
        else:
            raise ConfigError(f"unknown observable type {kind!r}")
    return out


def _thresholds(cfg):
    t = cfg.thresholds
    return erg.Thresholds(float(t.get("consistentSE", 4.0)), float(t.get("inconsistentSE", 6.0)),
                          float(t.get("atol", 1e-12)))


def _write(out_dir, name, text):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(type(x).__name__)


def cmd_simulate(cfg, rng, out):
    model = _model(cfg)
    trace = simulate_trace(model, folner_window(model.group, cfg.window), rng, cfg.epsilon)
    path = _write(out, "trace.csv", trace.to_csv())
    return {"command": "simulate", "trace": path, "n": len(trace.coords), "seeds": rng.to_json()}, None


def cmd_charfn(cfg, rng, out):
    model = _model(cfg)
    if model.dim != 1:
        raise ConfigError("charfn needs a scalar model")
    coord = element(model.group, cfg.coord if cfg.coord is not None else model.group.identity)
    t = cfg.tgrid
    vals = simulate_values(model, [coord], rng, cfg.replicas, cfg.epsilon)[:, 0, 0]
    phi_hat, _ = empirical_charfn(vals, t)
    phi = marginal_charfn(model, [coord], t[:, None])
    gap = np.abs(phi_hat - phi)
    rows = ["t,re_analytic,im_analytic,re_empirical,im_empirical,abs_gap"]
    rows += [",".join(repr(float(v)) for v in (a, b.real, b.imag, c.real, c.imag, d))
             for a, b, c, d in zip(t, phi, phi_hat, gap)]
    path = _write(out, "charfn.csv", "\n".join(rows) + "\n")
    sup = float(gap.max())
    tol = 5.0 / math.sqrt(cfg.replicas)
    return {"command": "charfn", "table": path, "supGap": sup, "tolerance": tol, "withinTolerance": sup <= tol,
            "n": cfg.replicas, "seeds": rng.to_json()}, None


def _ergo(cfg, rng, out, kind):
    model = _model(cfg)
    obs = _observables(cfg, model.group)
    fn = erg.ergodicity_report if kind == "ergodicity" else erg.weak_mixing_report
    rep = fn(model, obs, cfg.radii, cfg.replicas, rng, cfg.epsilon, _thresholds(cfg))
    _write(out, f"{kind}.csv", rep.to_csv())
    _write(out, f"{kind}.json", _dump(rep.to_json()))
    return {"command": kind, "verdict": rep.verdict, "pairVerdicts": rep.pair_verdicts,
            "seeds": rep.seeds}, rep.verdict


def cmd_codifference(cfg, rng, out):
    model = _model(cfg)
    rows = ["lag,re_analytic,im_analytic,re_mc,im_mc,se"]
    summary = []
    for i, lag in enumerate(cfg.lags):
        g = element(model.group, lag)
        tau = erg.codifference(model, g)
        tau_hat, se = erg.codifference_mc(model, g, cfg.replicas, rng.child(i), cfg.epsilon)
        rows.append(";".join(str(c) for c in g) + ","
                    + ",".join(repr(float(v)) for v in (tau.real, tau.imag, tau_hat.real, tau_hat.imag, se)))
        summary.append({"lag": list(g), "analytic": [tau.real, tau.imag], "mc": [tau_hat.real, tau_hat.imag],
                        "se": se})
    path = _write(out, "codifference.csv", "\n".join(rows) + "\n")
    return {"command": "codifference", "table": path, "values": summary, "seeds": rng.to_json()}, None


def cmd_probe(cfg, rng, out):
    model = _model(cfg)
    rep = erg.invariant_event_probe(model, cfg.radii, cfg.replicas, rng, cfg.epsilon,
                                    float(cfg.probe.get("tol", 0.01)), float(cfg.probe.get("delta", 0.01)))
    _write(out, "probe.json", _dump(rep.to_json()))
    return {"command": "probe-invariant", **rep.to_json()}, erg.INCONSISTENT if rep.passed else None


def cmd_decompose(cfg, rng, out):
    a, b = _model(cfg, "modelA"), _model(cfg, "modelB")
    coord = cfg.coord if cfg.coord is not None else None
    rep = erg.mixture_decomposition_check(a, b, cfg.tgrid, cfg.replicas, rng, cfg.epsilon, coord)
    _write(out, "decompose.json", _dump(rep.to_json()))
    return {"command": "decompose", **rep.to_json()}, None


def cmd_finite(cfg, rng, out, args):
    fin = cfg.finite if cfg is not None else {}
    ms = args.max_states if args.max_states is not None else int(fin.get("maxStates", 3))
    mm = args.max_maps if args.max_maps is not None else int(fin.get("maxMaps", 2))
    md = int(fin.get("maxDenominator", 4))
    rep = check_double_ergodicity_equivalence(ms, mm, md)
    _write(out, "finite_bruteforce.json", _dump(rep.to_json()))
    return {"command": "finite-bruteforce", **rep.to_json()}, None


def cmd_nullity(cfg, rng, out):
    model = _model(cfg)
    leaves = []
    for path, lf in iter_leaves(model):
        v = lf.nullity
        leaves.append({"path": list(path), "null": v.null, "witness": list(v.witness),
                       "mass": v.mass, "reason": v.reason})
    null = all(x["null"] for x in leaves)
    report = {"command": "nullity", "null": null, "leaves": leaves}
    _write(out, "nullity.json", _dump(report))
    return report, erg.CONSISTENT if null else erg.INCONSISTENT


def _expect_mismatch(expect, command, verdict) -> bool:
    if expect is None or verdict is None:
        return False
    if expect in ("ergodic", "wm"):
        return verdict == erg.INCONSISTENT
    return verdict == erg.CONSISTENT


def build_parser():
    p = argparse.ArgumentParser(prog="idpe", description="Simulation and ergodicity diagnostics "
                                "for stationary infinitely divisible fields.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="experiment configuration (JSON)")
    p.add_argument("--seed", type=int, help="overrides the configured seed")
    p.add_argument("--out", help="output directory (overrides outDir)")
    p.add_argument("--expect", choices=("ergodic", "nonergodic", "wm", "notwm"))
    p.add_argument("--replicas", type=int)
    p.add_argument("--max-states", type=int, dest="max_states")
    p.add_argument("--max-maps", type=int, dest="max_maps")
    return p


def run(command: str, config_path=None, seed=None, out=None, expect=None, replicas=None,
        max_states=None, max_maps=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    args = argparse.Namespace(max_states=max_states, max_maps=max_maps)
    try:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        cfg = None
        if config_path is not None:
            cfg = load_config(config_path)
        elif command != "finite-bruteforce":
            raise ConfigError("--config is required")
        if cfg is not None:
            if seed is not None:
                if not 0 <= seed < 2**64:
                    raise ConfigError("seed must be an unsigned 64-bit integer")
                cfg.seed = seed
            if replicas is not None:
                if replicas < 1:
                    raise ConfigError("replicas must be positive")
                cfg.replicas = replicas
        out_dir = out if out is not None else (cfg.out_dir if cfg is not None else ".")
        rng = RngStream(cfg.seed) if cfg is not None else None
        handlers = {"simulate": cmd_simulate, "charfn": cmd_charfn,
                    "ergodicity": lambda c, r, o: _ergo(c, r, o, "ergodicity"),
                    "weakmixing": lambda c, r, o: _ergo(c, r, o, "weakmixing"),
                    "codifference": cmd_codifference, "probe-invariant": cmd_probe,
                    "decompose": cmd_decompose,
                    "finite-bruteforce": lambda c, r, o: cmd_finite(c, r, o, args),
                    "nullity": cmd_nullity}
        summary, verdict = handlers[command](cfg, rng, out_dir)
    except IDPError as exc:
        stderr.write(json.dumps(exc.to_json()) + "\n")
        return EXIT_ERROR
    except (ValueError, KeyError, TypeError) as exc:
        stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EXIT_ERROR
    stdout.write(_dump(summary))
    return EXIT_EXPECT if _expect_mismatch(expect, command, verdict) else EXIT_OK


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    return run(a.command, a.config, a.seed, a.out, a.expect, a.replicas, a.max_states, a.max_maps)


if __name__ == "__main__":
    sys.exit(main())
