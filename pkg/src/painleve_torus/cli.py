"""Command-line interface.

One subcommand per capability: lattice data, Weierstrass evaluation, Green
critical points, the Hitchin and Okamoto closed forms, the elliptic
Painleve-VI residual check, the isomonodromic flow, monodromy computation,
region membership tests and scans, and solution synthesis.  Output is JSON
(default) or CSV for grids, formatted with 17 significant digits so repeated
runs are bit-identical.

Exit codes: 0 success, 1 usage error, 2 numerical non-convergence,
3 infeasible request (synthesis from non-unitary monodromy).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import elliptic as el
from . import green, lame, pvi, region, synth
from .errors import (
    DegenerateParameterError,
    HalfPeriodError,
    InvalidTauError,
    NotUnitaryError,
    PainleveTorusError,
    UnsupportedIndexError,
)

__all__ = ["RunConfig", "parse_args", "run", "main"]

USAGE_EXIT = 1
NUMERIC_EXIT = 2
INFEASIBLE_EXIT = 3


@dataclass(frozen=True)
class RunConfig:
    tolerance: float = 1e-10
    ode_rel_tol: float = 1e-10
    clearance: float | None = None
    newton_max_iter: int = 50
    series_tol: float = 1e-10
    output_format: str = "json"
    out: str | None = None
    threads: int = 1

    def validate(self):
        if self.tolerance <= 0 or self.ode_rel_tol <= 0 or self.series_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.clearance is not None and self.clearance <= 0:
            raise ValueError("clearance must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton-max-iter must be >= 1")
        if self.output_format not in ("json", "csv"):
            raise ValueError(f"unknown output format {self.output_format}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits 2 by default; the contract is 1
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _complex_pair(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except Exception as exc:
        raise argparse.ArgumentTypeError(
            f"expected 're,im' pair, got {text!r}"
        ) from exc


def _fmt(x) -> object:
    if isinstance(x, float):
        return float(format(x, ".17g"))
    return x


def _cnum(z: complex) -> list[float]:
    return [_fmt(float(z.real)), _fmt(float(z.imag))]


def _matrix(m: np.ndarray) -> list[list[float]]:
    return [_cnum(complex(v)) for v in np.asarray(m).ravel()]


def _read_config_file(path: str) -> dict[str, str]:
    """key = value lines; '#' starts a comment; unknown keys are rejected."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (t.strip() for t in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


_CONFIG_KEYS = {
    "tolerance": float,
    "ode_rel_tol": float,
    "clearance": float,
    "newton_max_iter": int,
    "series_tol": float,
    "output_format": str,
    "threads": int,
}


def _build_parser() -> _Parser:
    p = _Parser(prog="painleve-torus",
                description="Solvability of the singular curvature equation on "
                            "flat tori via elliptic Painleve VI and Lame monodromy.")
    p.add_argument("--config", help="key=value config file merged below flag precedence")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", dest="tolerance", type=float, default=None,
                        help="base tolerance (default 1e-10)")
    common.add_argument("--ode-rtol", dest="ode_rel_tol", type=float, default=None,
                        help="relative tolerance of the adaptive integrator")
    common.add_argument("--clearance", type=float, default=None,
                        help="path clearance from singular points")
    common.add_argument("--newton-max-iter", type=int, default=None)
    common.add_argument("--series-tol", type=float, default=None,
                        help="theta-series truncation tolerance")
    common.add_argument("--format", dest="output_format", choices=("json", "csv"),
                        default=None, help="output format (default json; csv for grids)")
    common.add_argument("--out", default=None, help="write output to this file")
    common.add_argument("--threads", type=int, default=None,
                        help="worker cap (also PAINLEVE_TORUS_THREADS)")

    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text,
                              description=help_text)

    sp = add("ctx",
                        "lattice data for one tau: quasi-periods eta_k, "
                             "branch values e_k, invariants g2, g3")
    sp.add_argument("--tau", type=_complex_pair, required=True, help="tau as re,im")

    sp = add("eval",
                        "Weierstrass wp, wp', zeta at a point")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--z", type=_complex_pair, required=True)

    sp = add("green-crit",
                        "critical points of the torus Green function G, or of "
                             "G_p when --p is given, with Hessian classification")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--p", type=_complex_pair, default=None)
    sp.add_argument("--seeds", type=int, default=12, help="Newton seeds per axis")

    sp = add("hitchin",
                        "Hitchin's closed-form solution p of the elliptic "
                             "Painleve VI equation for monodromy data (r,s)")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)

    sp = add("okamoto",
                        "the n=(1,0,0,0) Okamoto lift of the Hitchin solution")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)

    sp = add("epvi-check",
                        "finite-difference residual of the elliptic Painleve VI "
                             "equation for the closed-form solution")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--n", default="0", help="index: 0 or 1000")
    sp.add_argument("--h", type=float, default=1e-3, help="stencil step")

    sp = add("pvi-flow",
                        "integrate the isomonodromic Hamiltonian system (p, A) "
                             "from tau to tau1, seeded by the Hitchin solution")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--tau1", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--n", default="0")
    sp.add_argument("--steps", type=int, default=8)

    sp = add("mono",
                        "monodromy of the generalized Lame equation for the "
                             "Hitchin solution: N1, N2, local loops, classification")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--n", default="0")
    sp.add_argument("--q0", type=_complex_pair, default=None, help="basepoint override")

    sp = add("omega-test",
                        "does p belong to the solvability region Omega_tau^n? "
                             "(existence of even solutions of the curvature equation)")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--p", type=_complex_pair, required=True)
    sp.add_argument("--n", default="0")

    sp = add("omega-scan",
                        "membership heatmap of Omega_tau^n over the fundamental cell")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--n", default="0")
    sp.add_argument("--res", type=int, default=64)

    sp = add("synth",
                        "synthesize the curvature-equation solution u from "
                             "unitary Lame monodromy and report its diagnostics")
    sp.add_argument("--tau", type=_complex_pair, required=True)
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--s", type=float, required=True)
    sp.add_argument("--n", default="0")
    sp.add_argument("--beta", type=float, default=1.0)
    sp.add_argument("--res", type=int, default=64)
    sp.add_argument("--meta", default=None,
                    help="write the JSON header here (default stdout)")
    return p


def parse_args(argv):
    parser = _build_parser()
    ns = parser.parse_args(argv)

    fields = {}
    if ns.config:
        try:
            raw = _read_config_file(ns.config)
        except OSError as exc:
            parser.error(f"cannot read config file: {exc}")
        for key, val in raw.items():
            if key not in _CONFIG_KEYS:
                parser.error(f"unknown config key {key!r}")
            try:
                fields[key] = _CONFIG_KEYS[key](val)
            except ValueError:
                parser.error(f"bad value for config key {key!r}: {val!r}")

    env_threads = os.environ.get("PAINLEVE_TORUS_THREADS")
    if env_threads is not None and "threads" not in fields:
        try:
            fields["threads"] = int(env_threads)
        except ValueError:
            parser.error("PAINLEVE_TORUS_THREADS must be an integer")

    for key in ("tolerance", "ode_rel_tol", "clearance", "newton_max_iter",
                "series_tol", "output_format", "threads"):
        flag = getattr(ns, key, None)
        if flag is not None:
            fields[key] = flag
    if getattr(ns, "out", None) is not None:
        fields["out"] = ns.out
        if "output_format" not in fields and str(ns.out).endswith(".csv"):
            fields["output_format"] = "csv"

    config = RunConfig(**fields)
    try:
        config.validate()
    except ValueError as exc:
        parser.error(str(exc))

    if getattr(ns, "tau", None) is not None and not ns.tau.imag > 0:
        parser.error(f"Im(tau) must be positive, got {ns.tau}")
    if getattr(ns, "tau1", None) is not None and not ns.tau1.imag > 0:
        parser.error(f"Im(tau1) must be positive, got {ns.tau1}")
    if hasattr(ns, "n"):
        try:
            ns.index = pvi.PVIIndex.parse(ns.n)
        except ValueError as exc:
            parser.error(str(exc))
    return ns.command, config, ns


def _emit(config: RunConfig, text: str):
    if config.out:
        with open(config.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _json_dump(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=True)


def _mono_payload(ctx, params, rep):
    cls = lame.classify(rep)
    unit = lame.is_unitary(rep)
    if isinstance(cls, lame.CompletelyReducible):
        cls_doc = {"variant": "completely_reducible",
                   "r": _cnum(cls.r), "s": _cnum(cls.s)}
    else:
        cls_doc = {"variant": "not_completely_reducible",
                   "eps1": cls.eps1, "eps2": cls.eps2,
                   "C": "inf" if cls.c_is_infinite else _cnum(cls.c)}
    eye = np.eye(2)
    return {
        "tau": _cnum(params.tau),
        "p": _cnum(params.p),
        "A": _cnum(params.A),
        "B": _cnum(params.B),
        "basepoint": _cnum(rep.basepoint),
        "N1": _matrix(rep.N1),
        "N2": _matrix(rep.N2),
        "gamma_plus": _matrix(rep.gamma_plus),
        "gamma_minus": _matrix(rep.gamma_minus),
        "det_N1": _cnum(complex(np.linalg.det(rep.N1))),
        "det_N2": _cnum(complex(np.linalg.det(rep.N2))),
        "commutator_norm": _fmt(float(np.linalg.norm(rep.N1 @ rep.N2 - rep.N2 @ rep.N1))),
        "gamma_plus_defect": _fmt(float(np.linalg.norm(rep.gamma_plus + eye))),
        "gamma_minus_defect": _fmt(float(np.linalg.norm(rep.gamma_minus + eye))),
        "class": cls_doc,
        "unitary": None if unit is None else {"r": _fmt(unit[0]), "s": _fmt(unit[1])},
    }


def run(command: str, config: RunConfig, ns) -> int:
    if command == "ctx":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        _emit(config, _json_dump({
            "tau": _cnum(ctx.tau), "nome_q": _cnum(ctx.nome_q),
            "eta1": _cnum(ctx.eta1), "eta2": _cnum(ctx.eta2),
            "e1": _cnum(ctx.e1), "e2": _cnum(ctx.e2), "e3": _cnum(ctx.e3),
            "g2": _cnum(ctx.g2), "g3": _cnum(ctx.g3),
            "series_cutoff": ctx.series_cutoff,
        }))
        return 0

    if command == "eval":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        w, wprime = el.wp(ctx, ns.z)
        zeta = el.wzeta(ctx, ns.z)
        pt = el.lattice_reduce(ctx, ns.z)
        _emit(config, _json_dump({
            "z": _cnum(ns.z), "r": _fmt(pt.r), "s": _fmt(pt.s),
            "wp": _cnum(w), "wp_prime": _cnum(wprime), "zeta": _cnum(zeta),
        }))
        return 0

    if command == "green-crit":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        pts = green.find_critical_points(
            ctx, ns.p, seeds_per_axis=ns.seeds,
            tol=max(config.tolerance * 0.01, 1e-13),
            max_iter=config.newton_max_iter)
        doc = {
            "tau": _cnum(ctx.tau),
            "p": None if ns.p is None else _cnum(ns.p),
            "critical_points": [
                {"z": _cnum(c.location.z), "r": _fmt(c.location.r),
                 "s": _fmt(c.location.s), "kind": c.kind,
                 "residual": _fmt(c.residual), "hessian_det": _fmt(c.hessian_det)}
                for c in pts
            ],
        }
        _emit(config, _json_dump(doc))
        return 0

    if command in ("hitchin", "okamoto"):
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        fn = pvi.hitchin_p if command == "hitchin" else pvi.okamoto_p_1000
        pt, val = fn(ctx, ns.r, ns.s)
        _emit(config, _json_dump({
            "tau": _cnum(ctx.tau), "r": _fmt(ns.r), "s": _fmt(ns.s),
            "p": _cnum(pt.z), "p_r": _fmt(pt.r), "p_s": _fmt(pt.s),
            "wp_p": _cnum(val),
        }))
        return 0

    if command == "epvi-check":
        res = pvi.epvi_residual(ns.index, ns.r, ns.s, ns.tau, ns.h)
        _emit(config, format(res, ".17g"))
        return 0

    if command == "pvi-flow":
        state0 = pvi.hitchin_state(ns.r, ns.s, ns.tau)
        states = pvi.hamiltonian_flow(ns.index, state0, ns.tau1, steps=ns.steps,
                                      rtol=config.ode_rel_tol)
        _emit(config, _json_dump({
            "r": _fmt(ns.r), "s": _fmt(ns.s), "index": list(ns.index.nk),
            "states": [
                {"tau": _cnum(st.tau), "p": _cnum(st.p),
                 "A": _cnum(st.A), "B": _cnum(st.B)}
                for st in states
            ],
        }))
        return 0

    if command == "mono":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        state = pvi.hitchin_state(ns.r, ns.s, ns.tau, index=ns.index)
        params = lame.gle_params(ctx, ns.index, state.p, state.A)
        rep = lame.monodromy(ctx, params, q0=ns.q0, rtol=config.ode_rel_tol * 0.1,
                             clearance=config.clearance)
        _emit(config, _json_dump(_mono_payload(ctx, params, rep)))
        return 0

    if command == "omega-test":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        wit = region.omega_membership(ctx, ns.p, ns.index)
        _emit(config, _json_dump({
            "tau": _cnum(ns.tau), "p": _cnum(ns.p), "index": list(ns.index.nk),
            "member": wit is not None,
            "witness": None if wit is None else
            {"r": _fmt(wit.r), "s": _fmt(wit.s), "residual": _fmt(wit.residual)},
        }))
        return 0

    if command == "omega-scan":
        sample = region.omega_scan(ns.tau, ns.index, ns.res)
        if config.output_format == "csv":
            _emit(config, sample.to_csv())
        else:
            _emit(config, sample.to_json())
        return 0

    if command == "synth":
        ctx = el.make_context(ns.tau, tol=config.series_tol)
        state = pvi.hitchin_state(ns.r, ns.s, ns.tau, index=ns.index)
        params = lame.gle_params(ctx, ns.index, state.p, state.A)
        rep = lame.monodromy(ctx, params, rtol=config.ode_rel_tol * 0.1,
                             clearance=config.clearance)
        basis = synth.eigenbasis(ctx, params, rep)  # raises NotUnitaryError -> exit 3
        fld = synth.u_field(ctx, params, basis, ns.res, beta=ns.beta,
                            rtol=config.ode_rel_tol)
        header = synth.field_header(fld, params)
        if config.output_format == "csv" or config.out:
            _emit(config, synth.field_to_csv(fld))
        else:
            _emit(config, _json_dump({"header": header}))
            return 0
        meta_text = _json_dump(header)
        if ns.meta:
            with open(ns.meta, "w") as fh:
                fh.write(meta_text)
        else:
            sys.stdout.write(meta_text + "\n")
        return 0

    raise AssertionError(f"unhandled command {command}")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        command, config, ns = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return run(command, config, ns)
    except NotUnitaryError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return INFEASIBLE_EXIT
    except (InvalidTauError, HalfPeriodError, DegenerateParameterError,
            UnsupportedIndexError) as exc:
        # bad input values rather than failed numerics
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except PainleveTorusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
