"""Command-line front end.

    bvkit <command> [--config job.json] [--out DIR] [--seed N] [--m N] [--kappa k,d,lam,p,q]

Settings come from three layers, later ones winning: built-in defaults, the
JSON config file, then command-line flags.  Exit codes: 0 success, 1 the norm
was computed for a degenerate parameter pack, 2 configuration error, 3 runtime
error, 4 oracle mismatch.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import builtins
from .atoms import SearchConfig, duality_gap, make_atom
from .approx import convergence_study, mollifier_bound_check
from .dyadic import DyadicCube
from .grid import GridFunction, atomic_write, from_csv, load
from .params import Kappa, classify
from .variation import (bmo_seminorm, interval_packing_sup, little_v_profile, morrey_norm,
                        v_seminorm, var_1d)

log = logging.getLogger("bvkit")

EXIT_OK, EXIT_DEGENERATE, EXIT_CONFIG, EXIT_RUNTIME, EXIT_ORACLE = 0, 1, 2, 3, 4

COMMANDS = ("vnorm", "duality", "mollify-study", "little-v", "classical", "oracle")


class ConfigError(ValueError):
    pass


@dataclass
class JobConfig:
    """Everything a command needs; serialises to and from one JSON object."""

    command: str = "vnorm"
    kappa: str = "1,1,0,1,inf"
    m: int = 8
    input: str = "linear"
    params: dict = field(default_factory=dict)
    seed: int = 0
    out: Optional[str] = None
    max_level: Optional[int] = None
    n_list: list = field(default_factory=lambda: [2, 4, 8, 16])
    levels: Optional[list] = None
    count: int = 20
    ensemble: str = "random"
    exact: Optional[bool] = None
    strategy: str = "convex"
    classical: str = "var1d"
    p: str = "1"
    lam: float = 0.0
    q: float = 2.0
    s: float = 0.25
    oracle_d: int = 1
    oracle_L: int = 2
    svg: bool = False

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "JobConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "JobConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def parsed_kappa(self) -> Kappa:
        try:
            return Kappa.parse(self.kappa)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad kappa {self.kappa!r}: {exc}") from None

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.m, int) or self.m < 0:
            raise ConfigError("m must be a nonnegative integer")
        self.parsed_kappa()
        if self.max_level is not None and not 0 <= self.max_level <= self.m:
            raise ConfigError("max_level must lie in [0, m]")
        if self.count < 1:
            raise ConfigError("count must be positive")


def load_input(cfg: JobConfig, d: int) -> GridFunction:
    path = Path(cfg.input)
    if path.exists():
        f = from_csv(path) if path.suffix == ".csv" else load(path)
        if f.d != d:
            raise ConfigError(f"input has d={f.d} but kappa has d={d}")
        return f
    try:
        return builtins.make(cfg.input, d, cfg.m, cfg.seed, **cfg.params)
    except TypeError as exc:
        raise ConfigError(f"bad params for builtin {cfg.input!r}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _svg_plot(xs, ys, title: str, logx: bool = True, logy: bool = True) -> str:
    """Minimal line chart; decorative only."""
    pts = [(x, y) for x, y in zip(xs, ys) if (not logx or x > 0) and (not logy or y > 0)]
    W, H, pad = 480, 320, 40
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}">'
            f'<text x="{W // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    if len(pts) < 2:
        return head + "</svg>\n"
    tx = [math.log10(x) if logx else x for x, _ in pts]
    ty = [math.log10(y) if logy else y for _, y in pts]
    x0, x1 = min(tx), max(tx)
    y0, y1 = min(ty), max(ty)
    sx = (W - 2 * pad) / ((x1 - x0) or 1.0)
    sy = (H - 2 * pad) / ((y1 - y0) or 1.0)
    path = " ".join(f"{pad + (a - x0) * sx:.2f},{H - pad - (b - y0) * sy:.2f}" for a, b in zip(tx, ty))
    return (head + f'<rect x="{pad}" y="{pad}" width="{W - 2 * pad}" height="{H - 2 * pad}" '
            f'fill="none" stroke="#999"/><polyline points="{path}" fill="none" stroke="#1f5fa8" '
            f'stroke-width="2"/></svg>\n')


class Output:
    def __init__(self, out: Optional[str]):
        self.dir = Path(out) if out else None

    def write(self, name: str, text: str) -> None:
        if self.dir is not None:
            atomic_write(self.dir / name, text)


def cmd_vnorm(cfg: JobConfig, out: Output) -> int:
    kappa = cfg.parsed_kappa()
    regime = classify(kappa)
    f = load_input(cfg, kappa.d)
    rep = v_seminorm(f, kappa, cfg.max_level)
    print(f"value {rep.value!r}")
    print(f"certificate {json.dumps(rep.certificate_json())}")
    print(f"regime {json.dumps(regime.to_dict(), sort_keys=True)}")
    out.write("vnorm.json", rep.to_json() + "\n")
    if regime.degenerate:
        log.warning("s(kappa) = %s > k = %d: the space holds only polynomials; the value grows "
                    "with resolution", regime.smoothness, kappa.k)
        return EXIT_DEGENERATE
    return EXIT_OK


def _g_ensemble(cfg: JobConfig, kappa: Kappa, rng: np.random.Generator):
    d, m = kappa.d, cfg.m
    for i in range(cfg.count):
        raw = GridFunction(rng.normal(size=(1 << m,) * d))
        if cfg.ensemble == "atoms":
            level = int(rng.integers(0, max(1, m - 1)))
            idx = tuple(int(x) for x in rng.integers(0, 1 << level, size=d))
            atom, _ = make_atom(raw, DyadicCube(level, idx), kappa)
            yield i, atom.values
        else:
            # the moment-free part of white noise
            atom, scale = make_atom(raw, DyadicCube.root(d), kappa)
            yield i, atom.values * scale


def cmd_duality(cfg: JobConfig, out: Output) -> int:
    kappa = cfg.parsed_kappa()
    regime = classify(kappa)
    if not regime.duality_valid:
        raise ConfigError(f"duality needs q > 1 and s(kappa) <= k; got {kappa} "
                          f"(s = {regime.smoothness})")
    if cfg.ensemble not in ("random", "atoms"):
        raise ConfigError("ensemble must be 'random' or 'atoms'")
    rng = np.random.default_rng(cfg.seed)
    witnesses = builtins.witness_basis(kappa.d, cfg.m)
    budget = SearchConfig(strategy=cfg.strategy)
    rows = []
    for i, g in _g_ensemble(cfg, kappa, rng):
        lo, up, gap = duality_gap(g, kappa, witnesses, cfg.exact, budget)
        rows.append((i, lo, up, gap))
    text = _csv_text(["g", "lower", "upper", "gap"], rows)
    out.write("duality.csv", text)
    summary = {"kappa": kappa.to_dict(), "m": cfg.m, "count": len(rows),
               "max_gap": max(r[3] for r in rows), "max_upper": max(r[2] for r in rows)}
    out.write("duality_summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n")
    sys.stdout.write(text)
    print(f"max_gap {summary['max_gap']!r}")
    return EXIT_OK


def cmd_mollify_study(cfg: JobConfig, out: Output) -> int:
    kappa = cfg.parsed_kappa()
    f = load_input(cfg, kappa.d)
    study = convergence_study(f, kappa, cfg.n_list, max_level=cfg.max_level)
    bounds = [mollifier_bound_check(f, kappa, n, cfg.max_level) for n in cfg.n_list]
    text = study.to_csv()
    rows = [(n, lhs, rhs, int(ok)) for n, (lhs, rhs, ok) in zip(cfg.n_list, bounds)]
    bound_text = _csv_text(["n", "lhs", "rhs", "ok"], rows)
    out.write("mollify.csv", text)
    out.write("mollify_bound.csv", bound_text)
    if cfg.svg:
        out.write("mollify.svg", _svg_plot([r[0] for r in study.rows], study.errors(),
                                            "error vs n"))
    sys.stdout.write(text)
    sys.stdout.write(bound_text)
    print(f"seminorm_f {study.seminorm!r}")
    return EXIT_OK


def cmd_little_v(cfg: JobConfig, out: Output) -> int:
    kappa = cfg.parsed_kappa()
    f = load_input(cfg, kappa.d)
    levels = cfg.levels or list(range(1, max(2, cfg.m - 2)))
    prof = little_v_profile(f, kappa, levels, cfg.max_level)
    regime = classify(kappa)
    text = _csv_text(["level", "eps", "value"], [(l, e, v) for l, (e, v) in zip(levels, prof.rows())])
    out.write("little_v.csv", text)
    if cfg.svg:
        out.write("little_v.svg", _svg_plot(prof.eps, prof.values, "restricted sup vs mesh"))
    sys.stdout.write(text)
    print(f"slope {prof.slope!r}")
    if regime.smoothness < kappa.k:
        print(f"predicted_slope {float((kappa.k - regime.smoothness) / kappa.d)!r}")
    return EXIT_OK


def cmd_classical(cfg: JobConfig, out: Output) -> int:
    kappa = cfg.parsed_kappa()
    f = load_input(cfg, kappa.d)
    rows = []
    if cfg.classical == "var1d":
        if kappa.d != 1:
            raise ConfigError("var1d needs d = 1")
        var = var_1d(f, 1, cfg.lam, cfg.p)
        sup = interval_packing_sup(f, cfg.lam, cfg.p)
        rows = [("var1d", var), ("packing_sup", sup), ("ratio", var / sup if sup else math.nan)]
    elif cfg.classical == "bmo":
        rep = bmo_seminorm(f, cfg.p, cfg.max_level)
        rows = [("bmo", rep.value)]
    elif cfg.classical == "morrey":
        rep = morrey_norm(f, cfg.q, cfg.s, cfg.max_level)
        rows = [("morrey", rep.value)]
    else:
        raise ConfigError("classical must be one of var1d, bmo, morrey")
    text = _csv_text(["quantity", "value"], rows)
    out.write("classical.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_oracle(cfg: JobConfig, out: Output) -> int:
    from .oracles import dp_vs_enumeration, lp_vs_bruteforce

    rng = np.random.default_rng(cfg.seed)
    d, L = cfg.oracle_d, cfg.oracle_L
    kappas = [Kappa(k, d, lam, p, q) for k in (1, 2) for lam in (0, "1/4")
              for p in (1, 2, "inf") for q in (1, 2, "inf")]
    results = [dp_vs_enumeration(d, L, kappas, 2, rng),
               lp_vs_bruteforce(d, 3 if d == 1 else 2, (1, 2), 4, rng)]
    rows = [(r.name, r.checked, len(r.mismatches)) for r in results]
    text = _csv_text(["suite", "checked", "mismatches"], rows)
    out.write("oracle.csv", text)
    sys.stdout.write(text)
    return EXIT_OK if all(r.ok for r in results) else EXIT_ORACLE


HANDLERS = {
    "vnorm": cmd_vnorm,
    "duality": cmd_duality,
    "mollify-study": cmd_mollify_study,
    "little-v": cmd_little_v,
    "classical": cmd_classical,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bvkit", description=__doc__.split("\n\n")[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON job description")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--m", type=int, help="grid resolution (2^m cells per side)")
    ap.add_argument("--kappa", help="k,d,lambda,p,q")
    ap.add_argument("--input", help="builtin id or path to a grid file")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def resolve_config(args: argparse.Namespace) -> JobConfig:
    cfg = JobConfig()
    if args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        cfg = JobConfig.from_json(text)
    cfg.command = args.command
    for name in ("out", "seed", "m", "kappa", "input"):
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg, Output(cfg.out))
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - the exit code contract covers everything else
        log.debug("runtime failure", exc_info=True)
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
