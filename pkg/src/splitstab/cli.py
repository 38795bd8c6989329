"""Command line front end and the JSON problem format.

Problem file::

    {
      "kind": "SEP",                      # or "SFP"
      "A": [[0.0]], "B": [[1.0]],         # B only for SEP
      "C": {"type": "box", "lower": [-1], "upper": [1]},
      "Q": {"type": "box", "lower": [0], "upper": ["inf"]},
      "xbar": [0.5], "ybar": [0.0],       # ybar only for SEP
      "description": "free text, ignored"
    }

Set objects: ``box`` (``lower``/``upper``, with ``"inf"``/``"-inf"`` strings
for infinite bounds), ``polyhedron`` (``G``, ``g``), ``singleton``
(``point``), ``ball`` (``center``, ``radius``), ``whole_space`` (``dim``).

Exit codes of ``check``: 0 lipschitz_like, 1 not_lipschitz_like,
2 inconclusive, 3 invalid input, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .certify import (INCONCLUSIVE, LIPSCHITZ_LIKE, NOT_LIPSCHITZ_LIKE, SEP, SFP, Certificate,
                      ProblemSpec, certify)
from .errors import (DimensionError, EmptySetError, LpStalled, NotASolutionError,
                     ProjectionError, SpecFormatError, SplitStabError)
from .numerics import DEFAULT_TOL
from .probe import ProbeConfig, ProbeReport, run_probe
from .sets import Ball, Box, HPolyhedron, Singleton, WholeSpace
from .solve import SolveResult, solve_sep, solve_sfp

logger = logging.getLogger(__name__)

EXIT_CODES = {LIPSCHITZ_LIKE: 0, NOT_LIPSCHITZ_LIKE: 1, INCONCLUSIVE: 2}
EXIT_INPUT = 3
EXIT_NUMERIC = 4

_INF = {"inf": math.inf, "+inf": math.inf, "-inf": -math.inf}


# -- parsing ----------------------------------------------------------------

def _number(value, where, allow_inf=False):
    if isinstance(value, str) and allow_inf and value.strip().lower() in _INF:
        return _INF[value.strip().lower()]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecFormatError(f"{where}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SpecFormatError(f"{where}: non-finite number (use \"inf\"/\"-inf\" for box bounds)")
    return value


def _vector(value, where, allow_inf=False):
    if not isinstance(value, list) or not value:
        raise SpecFormatError(f"{where}: expected a non-empty array of numbers")
    return np.array([_number(v, f"{where}[{i}]", allow_inf) for i, v in enumerate(value)])


def _matrix(value, where):
    if not isinstance(value, list) or not value:
        raise SpecFormatError(f"{where}: expected a non-empty array of rows")
    rows = [_vector(r, f"{where}[{i}]") for i, r in enumerate(value)]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise SpecFormatError(f"{where}: rows have different lengths {sorted(widths)}")
    return np.vstack(rows)


def _field(obj, key, where):
    if key not in obj:
        raise SpecFormatError(f"{where}: missing field {key!r}")
    return obj[key]


def set_from_dict(obj, where="set"):
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{where}: expected an object with a 'type' field")
    kind = _field(obj, "type", where)
    try:
        if kind == "box":
            return Box(_vector(_field(obj, "lower", where), f"{where}.lower", True),
                       _vector(_field(obj, "upper", where), f"{where}.upper", True))
        if kind == "polyhedron":
            return HPolyhedron(_matrix(_field(obj, "G", where), f"{where}.G"),
                               _vector(_field(obj, "g", where), f"{where}.g"))
        if kind == "singleton":
            return Singleton(_vector(_field(obj, "point", where), f"{where}.point"))
        if kind == "ball":
            return Ball(_vector(_field(obj, "center", where), f"{where}.center"),
                        _number(_field(obj, "radius", where), f"{where}.radius"))
        if kind == "whole_space":
            dim = _field(obj, "dim", where)
            if isinstance(dim, bool) or not isinstance(dim, int):
                raise SpecFormatError(f"{where}.dim: expected an integer")
            return WholeSpace(dim)
    except (DimensionError, EmptySetError, ValueError) as exc:
        if isinstance(exc, SpecFormatError):
            raise
        raise SpecFormatError(f"{where}: {exc}") from exc
    raise SpecFormatError(f"{where}.type: unknown set type {kind!r}")


def _json_number(v):
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def set_to_dict(S):
    if isinstance(S, Box):
        return {"type": "box", "lower": [_json_number(v) for v in S.lower],
                "upper": [_json_number(v) for v in S.upper]}
    if isinstance(S, HPolyhedron):
        return {"type": "polyhedron", "G": S.G.tolist(), "g": S.g.tolist()}
    if isinstance(S, Singleton):
        return {"type": "singleton", "point": S.point.tolist()}
    if isinstance(S, Ball):
        return {"type": "ball", "center": S.center.tolist(), "radius": S.radius}
    if isinstance(S, WholeSpace):
        return {"type": "whole_space", "dim": S.dim}
    raise TypeError(f"cannot serialize {type(S).__name__}")


def spec_from_dict(obj, tol=DEFAULT_TOL, require_point=True):
    """Build and validate a :class:`ProblemSpec` from its JSON object."""
    if not isinstance(obj, dict):
        raise SpecFormatError("top level: expected a JSON object")
    kind = _field(obj, "kind", "top level")
    if kind not in (SEP, SFP):
        raise SpecFormatError(f"kind: expected 'SEP' or 'SFP', got {kind!r}")
    A = _matrix(_field(obj, "A", "top level"), "A")
    C = set_from_dict(_field(obj, "C", "top level"), "C")
    Q = set_from_dict(_field(obj, "Q", "top level"), "Q")
    xbar = _vector(obj["xbar"], "xbar") if "xbar" in obj else None
    if require_point and xbar is None:
        raise SpecFormatError("top level: missing field 'xbar'")
    try:
        if kind == SEP:
            B = _matrix(_field(obj, "B", "top level"), "B")
            ybar = None
            if xbar is not None:
                ybar = _vector(_field(obj, "ybar", "top level"), "ybar")
            spec = ProblemSpec.sep(A, B, C, Q, xbar, ybar)
        else:
            for key in ("B", "ybar"):
                if key in obj:
                    raise SpecFormatError(f"{key}: not allowed for an SFP spec")
            spec = ProblemSpec.sfp(A, C, Q, xbar)
    except DimensionError as exc:
        raise SpecFormatError(f"dimension mismatch: {exc}") from exc
    if spec.has_point:
        spec.check_solution(tol)
    return spec


def spec_to_dict(spec):
    out = {"kind": spec.kind, "A": spec.A.tolist()}
    if spec.kind == SEP:
        out["B"] = spec.B.tolist()
    out["C"] = set_to_dict(spec.C)
    out["Q"] = set_to_dict(spec.Q)
    if spec.has_point:
        out["xbar"] = spec.xbar.tolist()
        if spec.kind == SEP:
            out["ybar"] = spec.ybar.tolist()
    return out


def parse_spec(path, tol=DEFAULT_TOL, require_point=True):
    path = Path(path)
    text = path.read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return spec_from_dict(obj, tol, require_point)
    except SpecFormatError as exc:
        raise SpecFormatError(f"{path}: {exc}") from exc


def spec_digest(spec):
    canonical = json.dumps(spec_to_dict(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def corpus_dir():
    return Path(str(resources.files("splitstab") / "corpus"))


def corpus_path(name):
    if not name.endswith(".json"):
        name += ".json"
    return corpus_dir() / name


# -- reports ----------------------------------------------------------------

@dataclass
class RunReport:
    spec_digest: str
    certificate: Optional[Certificate] = None
    probe: Optional[ProbeReport] = None
    solve: Optional[SolveResult] = None
    tool_version: str = __version__
    wall_time: float = 0.0
    settings: Optional[dict] = None

    def to_dict(self):
        return {
            "spec_digest": self.spec_digest,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "probe": None if self.probe is None else self.probe.to_dict(),
            "solve": None if self.solve is None else self.solve.to_dict(),
            "tool_version": self.tool_version,
            "wall_time": self.wall_time,
            "settings": self.settings or {},
        }


def _write(report, out, spec_path, suffix):
    text = json.dumps(report.to_dict(), indent=2)
    if out == "-":
        print(text)
        return None
    target = Path(out) if out else Path.cwd() / f"{Path(spec_path).stem}.{suffix}.json"
    target.write_text(text + "\n")
    return target


# -- commands ---------------------------------------------------------------

def cmd_check(path, tol=DEFAULT_TOL, debug_both=False, out=None):
    """Certify one spec file. Returns ``(exit_code, report)``."""
    t0 = time.perf_counter()
    spec = parse_spec(path, tol)
    cert = certify(spec, tol, debug=debug_both)
    report = RunReport(spec_digest(spec), certificate=cert,
                       wall_time=time.perf_counter() - t0,
                       settings={"tol": tol, "debug_both": debug_both})
    target = _write(report, out, path, "certificate")
    print(f"{Path(path).name}: {cert.verdict}"
          + (f" (shortcut {cert.shortcut})" if cert.shortcut else "")
          + (" [marginal]" if cert.marginal else "")
          + (f" -> {target}" if target else ""), file=sys.stderr)
    return EXIT_CODES[cert.verdict], report


def cmd_probe(path, tol=DEFAULT_TOL, seed=0, samples=64, r0=0.1, out=None):
    t0 = time.perf_counter()
    spec = parse_spec(path, tol)
    cert = certify(spec, tol)
    cfg = ProbeConfig.geometric(r0=r0, samples_per_radius=samples, seed=seed)
    rep = run_probe(spec, cfg)
    report = RunReport(spec_digest(spec), certificate=cert, probe=rep,
                       wall_time=time.perf_counter() - t0,
                       settings={"tol": tol, "seed": seed, "samples": samples, "r0": r0})
    target = _write(report, out, path, "probe")
    print(f"{Path(path).name}: certificate {cert.verdict}; probe (heuristic) "
          f"modulus_estimate={rep.modulus_estimate:.4g} diverging={rep.diverging}"
          + (f" -> {target}" if target else ""), file=sys.stderr)
    return 0, report


def _load_start(start, spec):
    n, m = spec.C.dim, spec.Q.dim
    if start is None:
        return np.zeros(n), (np.zeros(m) if spec.kind == SEP else None)
    obj = json.loads(Path(start).read_text())
    if not isinstance(obj, dict):
        raise SpecFormatError(f"{start}: expected an object with 'x' (and 'y' for SEP)")
    x = _vector(_field(obj, "x", str(start)), f"{start}: x")
    y = None
    if spec.kind == SEP:
        y = _vector(_field(obj, "y", str(start)), f"{start}: y")
    if x.shape[0] != n or (y is not None and y.shape[0] != m):
        raise SpecFormatError(f"{start}: start point has the wrong dimension")
    return x, y


def cmd_solve(path, tol=DEFAULT_TOL, start=None, max_iters=100_000, out=None):
    t0 = time.perf_counter()
    spec = parse_spec(path, tol, require_point=False)
    x0, y0 = _load_start(start, spec)
    if spec.kind == SEP:
        res = solve_sep(spec.A, spec.B, spec.C, spec.Q, x0, y0, max_iters=max_iters, tol=tol)
    else:
        res = solve_sfp(spec.A, spec.C, spec.Q, x0, max_iters=max_iters, tol=tol)
    report = RunReport(spec_digest(spec), solve=res, wall_time=time.perf_counter() - t0,
                       settings={"tol": tol, "max_iters": max_iters, "start": start})
    target = _write(report, out, path, "solution")
    print(f"{Path(path).name}: converged={res.converged} residual={res.residual:.3e} "
          f"iterations={res.iterations}" + (f" -> {target}" if target else ""), file=sys.stderr)
    return (0 if res.converged else 1), report


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splitstab",
        description="Certify Lipschitz-like stability of split feasibility/equality solution maps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("spec", help="problem file (JSON), or corpus:<name> for a shipped example")
        p.add_argument("--tol", type=float, default=DEFAULT_TOL)
        p.add_argument("--out", default=None, help="output file, '-' for stdout")

    p = sub.add_parser("check", help="issue a stability certificate")
    common(p)
    p.add_argument("--debug-both", action="store_true",
                   help="run the LP battery even when a shortcut applies")
    p = sub.add_parser("probe", help="certificate plus empirical perturbation probe")
    common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--r0", type=float, default=0.1)
    p = sub.add_parser("solve", help="find a solution with a projection method")
    common(p)
    p.add_argument("--start", default=None, help="JSON file with 'x' (and 'y' for SEP)")
    p.add_argument("--max-iters", type=int, default=100_000)
    sub.add_parser("corpus", help="list the shipped example problems")
    return parser


def _resolve(spec):
    if spec.startswith("corpus:"):
        return corpus_path(spec.split(":", 1)[1])
    return Path(spec)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if args.command == "corpus":
        for p in sorted(corpus_dir().glob("*.json")):
            desc = json.loads(p.read_text()).get("description", "")
            print(f"{p.stem:20s} {desc}")
        return 0
    if args.tol <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    path = _resolve(args.spec)
    try:
        if args.command == "check":
            code, _ = cmd_check(path, args.tol, args.debug_both, args.out)
        elif args.command == "probe":
            code, _ = cmd_probe(path, args.tol, args.seed, args.samples, args.r0, args.out)
        else:
            code, _ = cmd_solve(path, args.tol, args.start, args.max_iters, args.out)
    except (OSError, SpecFormatError, NotASolutionError, DimensionError, EmptySetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (LpStalled, ProjectionError, SplitStabError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return code


if __name__ == "__main__":
    sys.exit(main())
