"""Command-line front end.

Every command reads ``key=value`` parameters from an optional ``--config``
file, overrides them with command-line flags, checks the size caps and then
writes a CSV whose first lines echo the resolved parameters as ``# key=value``.

Exit codes: 0 success, 2 usage error, 3 resource cap, 4 invariant failure.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import catalan, kernels, montecarlo, perturbation, stationary
from .core import MAX_MC_L, ModelParams, check_exact_size, config_string
from .errors import ConvergenceError, InvariantViolation, ResourceError, SpinChainError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_RESOURCE = 3
EXIT_INVARIANT = 4

KINDS = ("irreversible", "glauber", "zero-temperature", "delta-p")
BOUNDARIES = ("empty", "plus")
MAX_THEOREM3_L = 2000


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


@dataclass(frozen=True)
class Param:
    name: str
    type: Callable[[str], Any]
    default: Any = None
    required: bool = False
    choices: tuple[str, ...] | None = None
    help: str = ""


@dataclass
class ExperimentConfig:
    """A command name with its fully resolved parameters."""

    command: str
    params: dict[str, Any]

    def header_lines(self) -> list[str]:
        lines = [f"# command={self.command}"]
        for k, v in self.params.items():
            if isinstance(v, list):
                v = ",".join(str(x) for x in v)
            lines.append(f"# {k}={v}")
        return lines


_MODEL = [
    Param("L", int, required=True, help="chain length"),
    Param("J", float, 1.0, help="coupling"),
    Param("bc", str, "plus", choices=BOUNDARIES, help="boundary condition"),
]

COMMANDS: dict[str, list[Param]] = {
    "stationary": _MODEL[:2] + [
        Param("bc", str, "empty", choices=BOUNDARIES, help="boundary condition"),
        Param("kind", str, "irreversible", choices=KINDS),
        Param("method", str, "auto", choices=("auto", "gth", "krylov", "splu", "power")),
        Param("compare", str, "none", choices=("none", "gibbs"), help="measure to compare against"),
    ],
    "theorem1": [
        Param("L", int, 8),
        Param("c", _float_list, [0.6, 0.8, 1.0, 1.2, 1.5], help="comma-separated values of c in J = c log L"),
    ],
    "theorem2": [
        Param("m", _int_list, [1, 2, 3], help="comma-separated block lengths"),
        Param("i", _int_list, [100, 1000, 10000, 40000], help="comma-separated increasing positions"),
    ],
    "theorem3": [
        Param("L", _int_list, [50, 100, 200, 400], help="comma-separated lengths"),
        Param("J", float, None, help="coupling; defaults to log L"),
    ],
    "tunnel": [
        Param("L", int, required=True),
        Param("J", float, 2.5),
        Param("bc", str, "empty", choices=BOUNDARIES),
        Param("kind", str, "irreversible", choices=("irreversible", "glauber")),
        Param("replicas", int, 50),
        Param("seed", int, 0),
        Param("budget", int, montecarlo.DEFAULT_BUDGET, help="step budget per replica"),
    ],
    "currents": _MODEL + [
        Param("kind", str, "irreversible", choices=("irreversible", "glauber")),
        Param("kolmogorov", int, 0, help="search loops up to this length (0 disables)"),
    ],
    "catalan": [
        Param("triangle", int, None, help="print rows 0..n of the Catalan triangle"),
        Param("m", int, None, help="block length for the partial sums of the series"),
        Param("l_max", _int_list, [10, 100, 1000], help="comma-separated truncation points"),
    ],
    "expansion": _MODEL[:2] + [Param("k", int, 1, help="highest order")],
    "kernel": _MODEL + [Param("kind", str, "irreversible", choices=KINDS)],
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinchain", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, params in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="file of key=value lines; flags take precedence")
        p.add_argument("--output", "-o", help="write CSV here instead of stdout")
        for prm in params:
            flag = "--" + prm.name.replace("_", "-")
            kw = dict(dest=prm.name, default=None, help=prm.help or None)
            if prm.choices:
                kw["choices"] = prm.choices
            kw["type"] = str if prm.type in (_float_list, _int_list) else prm.type
            p.add_argument(flag, **kw)
    return parser


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file and flags; reject unknown keys and bad values."""
    params = COMMANDS[args.command]
    known = {p.name: p for p in params}
    raw: dict[str, Any] = {}
    if args.config:
        file_values = read_config_file(args.config)
        unknown = sorted(set(file_values) - set(known))
        if unknown:
            raise UsageError(f"unknown keys in {args.config}: {', '.join(unknown)}")
        raw.update(file_values)
    for name in known:
        v = getattr(args, name)
        if v is not None:
            raw[name] = v
    resolved = {}
    for p in params:
        if p.name in raw:
            try:
                v = p.type(raw[p.name])
            except ValueError as exc:
                raise UsageError(f"bad value for {p.name}: {raw[p.name]!r}") from exc
            if p.choices and v not in p.choices:
                raise UsageError(f"{p.name} must be one of {', '.join(p.choices)}")
        elif p.required:
            raise UsageError(f"missing required parameter {p.name}")
        else:
            v = p.default
        resolved[p.name] = v
    config = ExperimentConfig(args.command, resolved)
    check_caps(config)
    return config


def check_caps(config: ExperimentConfig) -> None:
    """Fail before any 2^L allocation."""
    p = config.params
    cmd = config.command
    if cmd in ("stationary", "currents", "kernel"):
        check_exact_size(p["L"], stationary.MAX_STATIONARY_L)
    elif cmd == "theorem1":
        check_exact_size(p["L"], perturbation.MAX_HIGHER_ORDER_L)
    elif cmd == "expansion":
        cap = perturbation.MAX_HIGHER_ORDER_L if p["k"] >= 2 else perturbation.MAX_EXPANSION_L
        check_exact_size(p["L"], cap)
    elif cmd == "tunnel" and p["L"] > MAX_MC_L:
        raise ResourceError(f"L={p['L']} exceeds the Monte Carlo cap {MAX_MC_L}")
    elif cmd == "theorem2" and max(p["i"], default=0) > 10**7:
        raise ResourceError("theorem2 positions are capped at 10^7")
    elif cmd == "theorem3" and max(p["L"], default=0) > MAX_THEOREM3_L:
        raise ResourceError(f"theorem3 lengths are capped at {MAX_THEOREM3_L} (the closed-form table is L x L)")


# -- commands --------------------------------------------------------------------------


def _model(p) -> ModelParams:
    return ModelParams(p["L"], p["J"], p["bc"])


def cmd_stationary(p, out):
    params = _model(p)
    pi = stationary.exact_stationary(p["kind"], params, method=p["method"])
    res = stationary.stationary_residual(pi, kernels.assemble(p["kind"], params))
    stationary.write_distribution_csv(pi, out, params.L)
    summary = f"# residual={res!r}"
    if p["compare"] == "gibbs":
        summary += f" tv={stationary.tv_distance(pi, stationary.gibbs(params))!r}"
    out.write(summary + "\n")


def cmd_theorem1(p, out):
    rows = perturbation.theorem1_scan(p["L"], p["c"])
    perturbation.write_theorem1_csv(rows, out)
    if len(rows) > 1:
        slope = np.polyfit([r.J for r in rows], np.log([r.dtv for r in rows]), 1)[0]
        out.write(f"# slope_log_dtv_vs_J={float(slope)!r}\n")


def cmd_theorem2(p, out):
    for k, m in enumerate(p["m"]):
        rows = catalan.theorem2_constant(m, p["i"])
        for i, d, _ in rows:
            if 1.0 - d > catalan.piuno_bound(i, m):
                raise InvariantViolation(f"pi1({i};{m}) exceeds its bound")
        if k:
            # one header per file
            buf = io.StringIO()
            catalan.write_theorem2_csv(m, rows, buf)
            out.write(buf.getvalue().split("\n", 1)[1])
        else:
            catalan.write_theorem2_csv(m, rows, out)


def cmd_theorem3(p, out):
    rows = [catalan.theorem3_row(L, p["J"]) for L in p["L"]]
    catalan.write_theorem3_csv(rows, out)


def cmd_tunnel(p, out):
    stats = montecarlo.tunneling_time(p["kind"], _model(p), p["replicas"], seed=p["seed"], budget=p["budget"])
    montecarlo.write_tunneling_csv(stats, out)


def cmd_currents(p, out):
    params = _model(p)
    pi = stationary.exact_stationary(p["kind"], params)
    rep = stationary.currents(pi, p["kind"], params)
    div = float(np.abs(rep.divergence).max())
    if div > 1e-12:
        raise InvariantViolation(f"current divergence {div:.3e} at a stationary measure")
    out.write("config,site,target,current\n")
    L = params.L
    for x in range(rep.edges.shape[0]):
        for k in range(L):
            y = x ^ (1 << k)
            if x < y:
                out.write(f"{config_string(x, L)},{k + 1},{config_string(y, L)},{float(rep.edges[x, k])!r}\n")
    out.write(f"# max_divergence={div!r} max_current={float(np.abs(rep.edges).max())!r}\n")
    if p["kolmogorov"]:
        loop = stationary.kolmogorov_check(p["kind"], params, p["kolmogorov"])
        if loop is None:
            out.write(f"# kolmogorov: no violating loop up to length {p['kolmogorov']}\n")
        else:
            out.write("# kolmogorov_violation=" + " -> ".join(str(s) for s in loop) + "\n")


def cmd_catalan(p, out):
    if p["triangle"] is None and p["m"] is None:
        raise UsageError("catalan needs --triangle N or --m M")
    if p["triangle"] is not None:
        n_max = p["triangle"]
        if n_max < 0:
            raise UsageError("--triangle must be non-negative")
        out.write("n," + ",".join(f"k{k}" for k in range(n_max + 1)) + "\n")
        for n in range(n_max + 1):
            row = [str(catalan.catalan_triangle(n, k)) for k in range(n + 1)]
            out.write(f"{n}," + ",".join(row + [""] * (n_max - n)) + "\n")
    if p["m"] is not None:
        rows = [(p["m"], l, catalan.lemma41_partial(p["m"], l)) for l in p["l_max"]]
        catalan.write_lemma41_csv(rows, out)


def cmd_expansion(p, out):
    params = ModelParams(p["L"], p["J"], "plus")
    terms = perturbation.expansion_terms(params, p["k"])
    perturbation.write_terms_csv(terms, out, params.L)


def cmd_kernel(p, out):
    kernels.dump_triplets(p["kind"], _model(p), out)


HANDLERS = {
    "stationary": cmd_stationary,
    "theorem1": cmd_theorem1,
    "theorem2": cmd_theorem2,
    "theorem3": cmd_theorem3,
    "tunnel": cmd_tunnel,
    "currents": cmd_currents,
    "catalan": cmd_catalan,
    "expansion": cmd_expansion,
    "kernel": cmd_kernel,
}


def run(config: ExperimentConfig, out) -> None:
    for line in config.header_lines():
        out.write(line + "\n")
    HANDLERS[config.command](config.params, out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        config = resolve(args)
        with contextlib.ExitStack() as stack:
            out = stack.enter_context(open(args.output, "w")) if args.output else sys.stdout
            run(config, out)
    except UsageError as exc:
        print(f"spinchain {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"spinchain {args.command}: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvariantViolation, ConvergenceError) as exc:
        print(f"spinchain {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (SpinChainError, ValueError) as exc:
        print(f"spinchain {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
