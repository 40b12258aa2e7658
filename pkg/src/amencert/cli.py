"""Command-line interface: ``amencert <command> [options]``.

Options come from flags and, optionally, a key=value config file
(``--config``); flags win over file values.  Exit codes: 0 success,
1 verification failure, 2 usage error, 3 resource guard.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__, lp
from .certificates import (
    FOLNER,
    INFEASIBLE,
    PONZI,
    CertificateError,
    FolnerCertificate,
    TransferMap,
    boundary_folner,
    folner_optimize,
    load_certificate,
    ponzi_optimize,
    save_certificate,
    tent_certificate,
    transfer_chain,
    verify_certificate,
    verify_ponzi,
)
from .chains import EXACT, MODES, ChainError, defect, evaluation_functional, format_value, sigma_functional
from .groups import GroupSpecError, ResourceGuardError, make_group
from .homology import fundamental_class_status, residual_lp
from .spaces import DepthCapError, SpaceSpecError, make_map, make_space

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_GUARD = 3

COMMANDS = ("folner", "ponzi", "sweep", "tent", "boundary", "transfer", "verify", "residual")


class ConfigError(ValueError):
    """Bad flags or config file contents (exit code 2)."""


@dataclass
class RunConfig:
    command: str = ""
    group: str | None = None
    space: str = "point"
    radii: list = field(default_factory=list)
    n: int | None = None
    mode: str = EXACT
    eps_vanish: float = 1e-3
    flat_window: int = 3
    flat_ratio: float = 1e-2
    tol: float | None = None
    pivot_rule: str = lp.HYBRID
    signed: bool = False
    ponzi: bool = True
    ponzi_method: str = "auto"
    out: str | None = None
    csv: str | None = None
    json: str | None = None
    out_dir: str | None = None
    jobs: int = 1
    size_guard: int | None = None
    rank: int = 2
    depth_cap: int | None = None
    g1: str | None = None
    target: str | None = None
    map: list = field(default_factory=list)
    cert: str | None = None
    certs: list = field(default_factory=list)
    against: list = field(default_factory=list)
    functional: str = "sigma"
    support_radius: int = 1
    budget: str = "1"
    report: str | None = None


# ---------------------------------------------------------------------------
# parsing


def parse_radii(text: str) -> list[int]:
    """``1..4``, ``1,3,5`` or ``7``; the result must be strictly increasing."""
    text = str(text).strip()
    out: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            m = re.fullmatch(r"(\d+)\s*\.\.\s*(\d+)", part)
            if m:
                lo, hi = int(m.group(1)), int(m.group(2))
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise ConfigError(f"malformed radii {text!r}; use e.g. 1..4 or 1,2,5") from None
    if not out:
        raise ConfigError("radii must be non-empty")
    if any(r < 0 for r in out) or any(b <= a for a, b in zip(out, out[1:])):
        raise ConfigError(f"radii {text!r} must be non-negative and strictly increasing")
    return out


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _parse_list(text: str) -> list[str]:
    return [p.strip() for p in str(text).split(",") if p.strip()]


_FIELD_TYPES = {f.name: f for f in fields(RunConfig)}
_CONVERTERS = {
    "radii": parse_radii,
    "n": int,
    "eps_vanish": float,
    "flat_window": int,
    "flat_ratio": float,
    "tol": float,
    "signed": _parse_bool,
    "ponzi": _parse_bool,
    "jobs": int,
    "size_guard": int,
    "rank": int,
    "depth_cap": int,
    "map": lambda t: [int(x) for x in _parse_list(t)],
    "certs": _parse_list,
    "against": _parse_list,
    "support_radius": int,
}


def _convert(key: str, value):
    conv = _CONVERTERS.get(key)
    if conv is None or not isinstance(value, str):
        return value
    try:
        return conv(value)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad value {value!r} for {key}") from None


def read_config_file(path: str | Path) -> dict:
    """Line-based ``key=value`` pairs; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELD_TYPES or key == "command":
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _convert(key, value)
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amencert",
        description="Finite-scale certificates for amenability of group actions.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value config file; flags override its values")
    common.add_argument("--mode", choices=MODES, default=None)
    common.add_argument("--pivot-rule", dest="pivot_rule", choices=lp.PIVOT_RULES, default=None)
    common.add_argument("--size-guard", dest="size_guard", default=None,
                        help="ball-size cap (overrides AMENCERT_SIZE_GUARD)")
    common.add_argument("--tol", default=None, help="verification tolerance (float mode only)")
    common.add_argument("--out", default=None, help="write the certificate JSON here")

    action = argparse.ArgumentParser(add_help=False)
    action.add_argument("--group", default=None, help="e.g. Z^2, F_2, perm:[(0 1 2)], prod(Z^1,F_2)")
    action.add_argument("--space", default=None, help="point, onepoint, boundary or finite:a->(0 1 2);...")

    p = sub.add_parser("folner", parents=[common, action], help="optimal Følner certificate at radius n")
    p.add_argument("--n", default=None)
    p.add_argument("--signed", action="store_const", const="true", default=None,
                   help="drop the positivity constraint (comparison variant)")

    p = sub.add_parser("ponzi", parents=[common, action], help="optimal Ponzi certificate at radius n")
    p.add_argument("--n", default=None)
    p.add_argument("--ponzi-method", dest="ponzi_method", choices=("auto", "direct", "dual"), default=None)

    p = sub.add_parser("sweep", parents=[common, action], help="Følner/Ponzi optima over a range of radii")
    p.add_argument("--radii", default=None, help="e.g. 1..10")
    p.add_argument("--csv", default=None, help="trend table output")
    p.add_argument("--json", default=None, help="report output")
    p.add_argument("--out-dir", dest="out_dir", default=None, help="directory for per-radius certificates")
    p.add_argument("--eps-vanish", dest="eps_vanish", default=None)
    p.add_argument("--flat-window", dest="flat_window", default=None)
    p.add_argument("--flat-ratio", dest="flat_ratio", default=None)
    p.add_argument("--no-ponzi", dest="ponzi", action="store_const", const="false", default=None)
    p.add_argument("--jobs", default=None, help="worker processes across radii")

    p = sub.add_parser("tent", parents=[common, action], help="tent chain on the one-point compactification")
    p.add_argument("--n", default=None)
    p.add_argument("--g1", default=None, help="group element other than the identity (default: first generator)")

    p = sub.add_parser("boundary", parents=[common], help="prefix-averaging chain on the boundary of F_k")
    p.add_argument("--rank", default=None)
    p.add_argument("--n", default=None)
    p.add_argument("--depth-cap", dest="depth_cap", default=None)

    p = sub.add_parser("transfer", parents=[common, action], help="push a Følner chain along X -> Y")
    p.add_argument("--target", default=None, help="finite target space")
    p.add_argument("--map", default=None, help="image of each source point, comma separated")
    p.add_argument("--cert", default=None, help="source Følner certificate (default: solve at --n)")
    p.add_argument("--n", default=None)

    p = sub.add_parser("verify", parents=[common], help="re-verify certificate files")
    p.add_argument("certs", nargs="*", default=None)
    p.add_argument("--against", default=None, help="Følner certificates for the weak-duality replay")
    p.add_argument("--report", default=None, help="write the full verification report here")

    p = sub.add_parser("residual", parents=[common, action], help="budgeted distance to the image of delta*")
    p.add_argument("--n", default=None)
    p.add_argument("--support-radius", dest="support_radius", default=None)
    p.add_argument("--budget", default=None)
    p.add_argument("--functional", default=None, help="sigma, ev, or ev:<element>:<cell>")
    return parser


def parse_config(argv: Sequence[str] | None = None) -> RunConfig:
    """Flags, optionally layered over ``--config FILE``; raises ConfigError."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    values = read_config_file(ns.config) if getattr(ns, "config", None) else {}
    for key, value in vars(ns).items():
        if key in ("config", "command") or value is None:
            continue
        if key == "certs":
            if value:
                values["certs"] = list(value)
            continue
        values[key] = _convert(key, value)
    cfg = RunConfig(command=ns.command, **values)
    validate_config(cfg, explicit=values)
    return cfg


def validate_config(cfg: RunConfig, explicit: dict | None = None) -> None:
    explicit = explicit or {}
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.pivot_rule not in lp.PIVOT_RULES:
        raise ConfigError(f"unknown pivot rule {cfg.pivot_rule!r}")
    exact_requested = cfg.command != "verify" or explicit.get("mode") == EXACT
    if cfg.mode == EXACT and cfg.tol is not None and exact_requested:
        raise ConfigError("--tol applies to float mode only; exact mode verifies with zero tolerance")
    if cfg.tol is not None and cfg.tol < 0:
        raise ConfigError("--tol must be non-negative")
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if cfg.size_guard is not None and cfg.size_guard < 1:
        raise ConfigError("--size-guard must be positive")
    if cfg.ponzi_method not in ("auto", "direct", "dual"):
        raise ConfigError(f"unknown Ponzi method {cfg.ponzi_method!r}")
    if cfg.signed and cfg.command not in ("folner", "sweep"):
        raise ConfigError("--signed only applies to folner")
    needs_group = ("folner", "ponzi", "sweep", "tent", "transfer", "residual")
    if cfg.command in needs_group and not cfg.group:
        raise ConfigError(f"{cfg.command} needs --group")
    needs_n = ("folner", "ponzi", "tent", "boundary", "residual")
    if cfg.command in needs_n and cfg.n is None:
        raise ConfigError(f"{cfg.command} needs --n")
    if cfg.n is not None and cfg.n < 0:
        raise ConfigError("--n must be non-negative")
    if cfg.command == "sweep" and not cfg.radii:
        raise ConfigError("sweep needs --radii")
    if cfg.command == "transfer":
        if not cfg.target or not cfg.map:
            raise ConfigError("transfer needs --target and --map")
        if cfg.cert is None and cfg.n is None:
            raise ConfigError("transfer needs --cert or --n")
    if cfg.command == "verify" and not cfg.certs:
        raise ConfigError("verify needs at least one certificate file")
    if cfg.command == "residual" and cfg.support_radius < 0:
        raise ConfigError("--support-radius must be non-negative")


# ---------------------------------------------------------------------------
# commands


def _summary(*parts) -> None:
    print(" ".join(str(p) for p in parts if p != ""), flush=True)


def _write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit(cfg: RunConfig, cert, seconds: float, path: str | None = None) -> None:
    target = path or cfg.out
    if target is None:
        return
    meta = {
        "command": cfg.command,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "seconds": round(seconds, 3),
        "version": __version__,
    }
    save_certificate(cert, target, meta)


def _action(cfg: RunConfig):
    G = make_group(cfg.group)
    return G, make_space(G, cfg.space)


def _value(v, mode: str) -> str:
    return "none" if v is None else format_value(v, mode)


def cmd_folner(cfg: RunConfig) -> int:
    G, X = _action(cfg)
    start = time.perf_counter()
    cert = folner_optimize(G, X, cfg.n, cfg.mode, signed=cfg.signed, pivot_rule=cfg.pivot_rule)
    _emit(cfg, cert, time.perf_counter() - start)
    _summary("folner", f"group={G.spec}", f"space={X.spec}", f"n={cfg.n}", f"t_star={_value(cert.defect, cfg.mode)}")
    return EXIT_OK


def cmd_ponzi(cfg: RunConfig) -> int:
    G, X = _action(cfg)
    start = time.perf_counter()
    cert = ponzi_optimize(G, X, cfg.n, cfg.mode, pivot_rule=cfg.pivot_rule, method=cfg.ponzi_method)
    _emit(cfg, cert, time.perf_counter() - start)
    if cert.status == INFEASIBLE:
        _summary("ponzi", f"group={G.spec}", f"space={X.spec}", f"n={cfg.n}", "status=infeasible")
    else:
        _summary("ponzi", f"group={G.spec}", f"space={X.spec}", f"n={cfg.n}",
                 f"m_star={_value(cert.norm_bound, cfg.mode)}", f"D={_value(cert.constant, cfg.mode)}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    G, X = _action(cfg)
    certs: list = []
    report = fundamental_class_status(G, X, cfg.radii, cfg.eps_vanish, cfg.flat_window, cfg.flat_ratio,
                                      cfg.mode, ponzi=cfg.ponzi, pivot_rule=cfg.pivot_rule,
                                      certificates=certs, jobs=cfg.jobs)
    if cfg.csv:
        _write_text(cfg.csv, report.to_csv())
    if cfg.json:
        _write_text(cfg.json, json.dumps(report.to_json(), sort_keys=True, indent=2) + "\n")
    if cfg.out_dir:
        out = Path(cfg.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        seconds = dict(zip(report.radii, report.seconds))
        for cert in certs:
            _emit(cfg, cert, seconds[cert.radius], str(out / f"{cert.kind}_n{cert.radius}.json"))
    radii = f"{cfg.radii[0]}..{cfg.radii[-1]}" if len(cfg.radii) > 1 else str(cfg.radii[0])
    _summary("sweep", f"group={G.spec}", f"space={X.spec}", f"radii={radii}",
             f"t_star={_value(report.t_star[-1], cfg.mode)}", f"verdict={report.verdict}")
    return EXIT_OK


def cmd_tent(cfg: RunConfig) -> int:
    G = make_group(cfg.group)
    X = make_space(G, cfg.space if cfg.space != "point" else "onepoint")
    g1 = G.parse(cfg.g1) if cfg.g1 else G.gens[0]
    start = time.perf_counter()
    cert = tent_certificate(X, g1, cfg.n, cfg.mode)
    _emit(cfg, cert, time.perf_counter() - start)
    _summary("tent", f"group={G.spec}", f"g1={G.format(g1)}", f"n={cfg.n}", f"pairing={_value(cert.pairing, cfg.mode)}",
             f"norm={_value(cert.norm, cfg.mode)}", f"defect={_value(cert.defect, cfg.mode)}")
    return EXIT_OK


def cmd_boundary(cfg: RunConfig) -> int:
    start = time.perf_counter()
    cert = boundary_folner(cfg.rank, cfg.n, cfg.mode, cfg.depth_cap)
    _emit(cfg, cert, time.perf_counter() - start)
    _summary("boundary", f"rank={cfg.rank}", f"n={cfg.n}", f"defect={_value(cert.defect, cfg.mode)}")
    return EXIT_OK


def cmd_transfer(cfg: RunConfig) -> int:
    G, X = _action(cfg)
    Y = make_space(G, cfg.target)
    mu = TransferMap(make_map(X, Y, cfg.map))
    start = time.perf_counter()
    if cfg.cert:
        source = load_certificate(cfg.cert)
        if source.kind != FOLNER or source.space.spec != X.spec or source.group != G:
            raise CertificateError("--cert must be a Følner certificate over the source action")
    else:
        source = folner_optimize(G, X, cfg.n, cfg.mode, pivot_rule=cfg.pivot_rule)
    eta = transfer_chain(mu, source.chain)
    d_src, d_tgt = defect(source.chain), defect(eta)
    cert = FolnerCertificate(G, Y, source.radius, source.mode, d_tgt, eta,
                             {"pivot_rule": "none", "iterations": 0, "method": "transfer"}, {})
    _emit(cfg, cert, time.perf_counter() - start)
    ok = d_tgt <= d_src
    _summary("transfer", f"group={G.spec}", f"source={X.spec}", f"target={Y.spec}",
             f"defect_source={_value(d_src, source.mode)}", f"defect_target={_value(d_tgt, source.mode)}",
             "" if ok else "status=defect-increased")
    return EXIT_OK if ok else EXIT_VERIFY


def _violations(report: dict, prefix: str = "") -> list[str]:
    out = []
    for key, val in report.items():
        if isinstance(val, dict):
            if val.get("ok") is False and "violation" in val:
                out.append(f"{prefix}{key}: violation {val['violation']}")
            out.extend(_violations(val, f"{prefix}{key}."))
        elif isinstance(val, list):
            for i, item in enumerate(val):
                if isinstance(item, dict) and item.get("ok") is False:
                    out.append(f"{prefix}{key}[{i}]: failed")
    return out


def cmd_verify(cfg: RunConfig) -> int:
    from .certificates import _jsonable

    against = [load_certificate(p) for p in cfg.against]
    failures = 0
    reports = {}
    tol = cfg.tol
    for path in cfg.certs:
        try:
            cert = load_certificate(path)
        except (CertificateError, ChainError, GroupSpecError, SpaceSpecError) as exc:
            reports[path] = {"ok": False, "error": str(exc)}
            failures += 1
            _summary("verify", path, "status=fail", f"error={exc}")
            continue
        if cert.kind == PONZI:
            relevant = [c for c in against if c.kind == FOLNER and c.group == cert.group
                        and c.space.spec == cert.space.spec]
            report = verify_ponzi(cert, tol, relevant)
        else:
            report = verify_certificate(cert, tol)
        reports[path] = report
        status = "pass" if report["ok"] else "fail"
        _summary("verify", path, f"kind={cert.kind}", f"n={cert.radius}", f"status={status}")
        if not report["ok"]:
            failures += 1
            for line in _violations(report):
                print(f"  {line}", file=sys.stderr)
    if cfg.report:
        _write_text(cfg.report, json.dumps(_jsonable(reports), sort_keys=True, indent=2) + "\n")
    return EXIT_VERIFY if failures else EXIT_OK


def _functional(cfg: RunConfig, G, X):
    spec = cfg.functional.strip()
    if spec == "sigma":
        return sigma_functional(G, X, cfg.mode)
    if spec == "ev":
        cell = G.identity if X.kind == "onepoint" else 0
        return evaluation_functional(G, X, G.identity, cell, cfg.mode)
    m = re.fullmatch(r"ev:(.+):(.+)", spec)
    if m:
        return evaluation_functional(G, X, G.parse(m.group(1)), X.parse_cell(m.group(2)), cfg.mode)
    raise ConfigError(f"unknown functional {spec!r}; use sigma, ev or ev:<element>:<cell>")


def cmd_residual(cfg: RunConfig) -> int:
    from fractions import Fraction

    G, X = _action(cfg)
    phi = _functional(cfg, G, X)
    try:
        budget = Fraction(cfg.budget)
    except ValueError:
        raise ConfigError(f"bad budget {cfg.budget!r}") from None
    res = residual_lp(phi, G, X, cfg.n, cfg.support_radius, budget, cfg.mode, cfg.pivot_rule)
    _summary("residual", f"group={G.spec}", f"space={X.spec}", f"functional={cfg.functional}", f"n={cfg.n}",
             f"support_radius={cfg.support_radius}", f"budget={budget}", f"value={_value(res.value, cfg.mode)}")
    return EXIT_OK


_DISPATCH = {
    "folner": cmd_folner,
    "ponzi": cmd_ponzi,
    "sweep": cmd_sweep,
    "tent": cmd_tent,
    "boundary": cmd_boundary,
    "transfer": cmd_transfer,
    "verify": cmd_verify,
    "residual": cmd_residual,
}


def run_command(cfg: RunConfig) -> int:
    """Run one subcommand; returns the process exit status."""
    if cfg.size_guard is not None:
        os.environ["AMENCERT_SIZE_GUARD"] = str(cfg.size_guard)
    try:
        return _DISPATCH[cfg.command](cfg)
    except (ResourceGuardError, DepthCapError) as exc:
        print(f"amencert: resource guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ConfigError, GroupSpecError, SpaceSpecError, CertificateError, ChainError) as exc:
        print(f"amencert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (lp.LpError, lp.NumericalError) as exc:
        print(f"amencert: solver failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except (ConfigError, GroupSpecError, SpaceSpecError) as exc:
        print(f"amencert: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse: --help, --version or bad flags
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    return run_command(cfg)


if __name__ == "__main__":
    sys.exit(main())
