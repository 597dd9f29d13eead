"""Command-line interface.

Four subcommands operate on model files::

    hjmech derive MODEL {cartan|energy|field|legendre|hamiltonian|hamfield}
    hjmech check MODEL CANDIDATE [--tol T] [--samples N] [--seed S]
    hjmech simulate MODEL FIELD INITIAL T0 T1 DT [--out F] [--lift NAME] [--tol T]
    hjmech involution MODEL FAMILY [--tol T] [--samples N] [--seed S]

Reports go to standard output: human-readable text plus a tab-separated
machine block (see hjmech.report).  Exit codes: 0 when every requested
verdict passes, 1 when a verdict fails (a candidate classified
not-a-solution, a nonzero bracket, a failed lifting check), 2 for usage
and parse errors, 3 when a mathematical precondition is violated (a
singular Hessian, a missing Legendre inverse, a degenerate family, or a
trajectory leaving a domain of definition).

``check`` runs the full residual battery on both formalisms whenever the
Legendre map is invertible, transporting the candidate across it
automatically; machine-block equation ids carry a ``lag:``/``ham:``
prefix naming the side they were computed on.
"""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional, Tuple

from . import model as model_io
from .hamiltonian import (
    HamiltonianError,
    hamiltonian,
    hamiltonian_field,
    legendre,
)
from .hj import (
    DEFAULT_SAMPLES,
    DEFAULT_SEED,
    DEFAULT_TOL,
    DegenerateFamilyError,
    GeneratingFunction,
    NOT_A_SOLUTION,
    OneForm,
    Section,
    associated_field,
    classify,
    combine,
    gen_ham_residuals,
    gen_lag_residuals,
    ham_closedness,
    ham_energy_residuals,
    hj_equation,
    involution_check,
    lag_closedness,
    lag_energy_residuals,
    lag_genfunc_residuals,
    transport,
)
from .lagrangian import LagrangianError
from .numeric import NumericError, integrate, verify_lifting
from .report import Report, format_float, format_setting

DEFAULT_LIFT_TOL = 1e-6


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hjmech",
        description="Derive, check, and integrate higher-order mechanical "
                    "systems described by model files.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("derive", help="print derived geometric objects")
    d.add_argument("model")
    d.add_argument("what", choices=["cartan", "energy", "field", "legendre",
                                    "hamiltonian", "hamfield"])
    d.set_defaults(func=cmd_derive)

    c = sub.add_parser("check", help="run the residual battery on a candidate")
    c.add_argument("model")
    c.add_argument("candidate")
    c.add_argument("--tol", type=float, default=DEFAULT_TOL)
    c.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    c.add_argument("--seed", type=int, default=DEFAULT_SEED)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("simulate", help="integrate a field and export CSV")
    s.add_argument("model")
    s.add_argument("field",
                   help="lagrangian | hamiltonian | associated:CANDIDATE")
    s.add_argument("initial",
                   help="a [state NAME] from the model, or comma-separated numbers")
    s.add_argument("t0", type=float)
    s.add_argument("t1", type=float)
    s.add_argument("dt", type=float)
    s.add_argument("--out", default="trajectory.csv")
    s.add_argument("--lift", metavar="NAME", default=None,
                   help="also verify that the candidate NAME lifts the flow")
    s.add_argument("--tol", type=float, default=DEFAULT_LIFT_TOL,
                   help="lifting tolerance")
    s.set_defaults(func=cmd_simulate)

    i = sub.add_parser("involution", help="pairwise brackets of a family")
    i.add_argument("model")
    i.add_argument("family")
    i.add_argument("--tol", type=float, default=DEFAULT_TOL)
    i.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    i.add_argument("--seed", type=int, default=DEFAULT_SEED)
    i.set_defaults(func=cmd_involution)
    return p


def _header(rep: Report, m: model_io.ModelFile, subtitle: str, settings: str):
    rep.text("model '%s' (k = %d, n = %d)" % (m.name, m.k, m.n))
    rep.text(subtitle)
    rep.text("settings: " + settings)
    rep.text()


def _standard_settings(tol, samples, seed) -> str:
    return "tol = %s, samples = %s, seed = %s" % (
        format_setting(tol), format_setting(samples), format_setting(seed))


def _matrix_text(matrix) -> str:
    rows = ("[%s]" % ", ".join(str(e) for e in row) for row in matrix)
    return "[%s]" % ", ".join(rows)


# -- derive -----------------------------------------------------------------


def cmd_derive(args) -> Tuple[Report, bool]:
    m = model_io.load(args.model)
    sys_ = m.system()
    rep = Report()
    _header(rep, m, "derive %s" % args.what,
            _standard_settings(DEFAULT_TOL, DEFAULT_SAMPLES, DEFAULT_SEED))

    if args.what == "cartan":
        hess = sys_.hessian()
        rep.object_line("hessian", _matrix_text(hess.matrix))
        rep.object_line("hessian determinant", str(hess.determinant))
        rep.text("regular: %s" % ("yes" if hess.invertible else "no"))
        cart = sys_.cartan()
        rep.object_line("theta_L", str(cart.theta))
        rep.object_line("omega_L", str(cart.omega))
    elif args.what == "energy":
        rep.object_line("E_L", str(sys_.cartan().energy))
    elif args.what == "field":
        rep.object_line("X_L", str(sys_.euler_lagrange_field()))
    elif args.what == "legendre":
        fl = legendre(sys_)
        for i in range(m.k):
            for A in range(1, m.n + 1):
                rep.object_line("FL:p%d_%d" % (i, A),
                                str(fl.momentum_rule(i, A)))
        rep.text("hyperregular: %s" % ("yes" if fl.hyperregular else "no"))
        if fl.inverse is None:
            rep.text("inverse: unavailable (%s)" % fl.diagnostic)
        else:
            for j in range(m.k, 2 * m.k):
                for A in range(1, m.n + 1):
                    rep.object_line("FLinv:q%d_%d" % (j, A),
                                    str(fl.inverse_rule(j, A)))
    elif args.what == "hamiltonian":
        hs = hamiltonian(sys_, legendre(sys_))
        rep.object_line("h", str(hs.h))
    else:  # hamfield
        hs = hamiltonian(sys_, legendre(sys_))
        rep.object_line("X_h", str(hamiltonian_field(hs)))
    return rep, False


# -- check ------------------------------------------------------------------


def _classification_line(rep: Report, verdicts: List[str],
                         combined, symbolic: bool):
    if symbolic:
        rep.text("  classification: skipped (placeholder components)")
    else:
        verdict = classify(combined)
        verdicts.append(verdict)
        rep.text("  classification: %s" % verdict)


def cmd_check(args) -> Tuple[Report, bool]:
    if args.tol <= 0:
        raise ValueError("--tol must be positive")
    if args.samples < 1:
        raise ValueError("--samples must be at least 1")
    knobs = dict(tol=args.tol, samples=args.samples, seed=args.seed)

    m = model_io.load(args.model)
    kind, obj = m.candidate(args.candidate)
    if kind == "family":
        raise ValueError(
            "'%s' is a complete-solution family; use the involution command"
            % args.candidate)

    sys_ = m.system()
    fl = legendre(sys_)
    hs = hamiltonian(sys_, fl) if fl.inverse is not None else None

    rep = Report()
    _header(rep, m, "check candidate '%s' (%s)" % (args.candidate, kind),
            _standard_settings(args.tol, args.samples, args.seed))

    verdicts: List[str] = []
    contexts = []

    def lag_side(section: Section, gf: Optional[GeneratingFunction]):
        parts = [
            gen_lag_residuals(sys_, section, **knobs),
            lag_closedness(sys_, section, **knobs),
            lag_energy_residuals(sys_, section, **knobs),
        ]
        if gf is not None:
            parts.append(lag_genfunc_residuals(sys_, section, gf, **knobs))
        combined = combine(parts)
        rep.text("lagrangian side:")
        rep.add_residuals(combined, id_prefix="lag:")
        _classification_line(rep, verdicts, combined,
                             section.has_placeholders)
        rep.text()
        contexts.append(combined)

    def ham_side(alpha: OneForm, gf: Optional[GeneratingFunction]):
        parts = [
            gen_ham_residuals(hs, alpha, **knobs),
            ham_closedness(alpha, constant_values=hs.constant_values(), **knobs),
            ham_energy_residuals(hs, alpha, **knobs),
        ]
        if not alpha.has_placeholders:
            closed = all(
                e.verdict in ("exact-zero", "numeric-zero")
                for e in parts[1].entries
            )
            if gf is not None:
                parts.append(hj_equation(hs, gf, **knobs))
            elif closed:
                parts.append(hj_equation(hs, alpha, **knobs))
        combined = combine(parts)
        rep.text("hamiltonian side:")
        rep.add_residuals(combined, id_prefix="ham:")
        _classification_line(rep, verdicts, combined,
                             alpha.has_placeholders)
        rep.text()
        contexts.append(combined)

    if kind == "section":
        gf = (GeneratingFunction.generic(m.k, m.n)
              if obj.has_placeholders else None)
        lag_side(obj, gf)
        if hs is None:
            rep.text("hamiltonian side: skipped (%s)" % fl.diagnostic)
            rep.text()
        else:
            ham_side(transport(fl, obj), None)
    elif kind == "oneform":
        if hs is None:
            raise HamiltonianError(
                "the Legendre map has no symbolic inverse: %s" % fl.diagnostic)
        ham_side(obj, None)
        lag_side(transport(fl, obj), None)
    else:  # genfunc
        if hs is None:
            raise HamiltonianError(
                "the Legendre map has no symbolic inverse: %s" % fl.diagnostic)
        grad = obj.gradient()
        ham_side(grad, obj)
        lag_side(transport(fl, grad), obj)

    rep.add_context(combine(contexts))
    return rep, NOT_A_SOLUTION in verdicts


# -- simulate ---------------------------------------------------------------


def _parse_initial(m: model_io.ModelFile, text: str):
    if text in m.states:
        return m.states[text], "state '%s'" % text
    try:
        values = tuple(float(v.strip()) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(
            "initial must name a [state] from the model or be "
            "comma-separated numbers, got %r" % text)
    if not values:
        raise ValueError("empty initial state")
    return values, "state (%s)" % ", ".join(format_setting(v) for v in values)


def _resolve_candidate_pair(m, sys_, hs, fl, name):
    """(system-like, solution) pairing for associated fields and lifting."""
    kind, obj = m.candidate(name)
    if kind == "section":
        return sys_, obj
    if hs is None:
        raise HamiltonianError(
            "the Legendre map has no symbolic inverse: %s" % fl.diagnostic)
    if kind == "oneform":
        return hs, obj
    if kind == "genfunc":
        return hs, obj.gradient()
    raise ValueError("'%s' is a family; simulate one of its members" % name)


def cmd_simulate(args) -> Tuple[Report, bool]:
    if args.tol <= 0:
        raise ValueError("--tol must be positive")
    m = model_io.load(args.model)
    sys_ = m.system()
    fl = legendre(sys_)
    hs = hamiltonian(sys_, fl) if fl.inverse is not None else None
    constants = sys_.constant_values()

    z0, initial_label = _parse_initial(m, args.initial)

    if args.field == "lagrangian":
        X = sys_.euler_lagrange_field()
    elif args.field == "hamiltonian":
        if hs is None:
            raise HamiltonianError(
                "the Legendre map has no symbolic inverse: %s" % fl.diagnostic)
        X = hamiltonian_field(hs)
    elif args.field.startswith("associated:"):
        system_like, sol = _resolve_candidate_pair(
            m, sys_, hs, fl, args.field[len("associated:"):])
        X = associated_field(system_like, sol)
    else:
        raise ValueError(
            "field must be lagrangian, hamiltonian, or associated:CANDIDATE")

    if args.lift is not None and args.field != "associated:" + args.lift:
        raise ValueError(
            "--lift %s requires field associated:%s (the lifted flow is "
            "compared against the candidate's own base flow)"
            % (args.lift, args.lift))

    rep = Report()
    _header(rep, m, "simulate field '%s' from %s" % (args.field, initial_label),
            "dt = %s, lift-tol = %s" % (format_setting(args.dt),
                                        format_setting(args.tol)))

    traj = integrate(X, z0, args.t0, args.t1, args.dt,
                     constants=constants, provenance=args.field)
    with open(args.out, "w", encoding="utf-8") as f:
        f.write(traj.to_csv())
    rep.text("wrote %s (%d points, %d columns)"
             % (args.out, traj.times.size, 1 + traj.states.shape[1]))
    final = [traj.times[-1]] + list(traj.states[-1])
    rep.text("final: t = %s, state = (%s)"
             % (format_setting(traj.times[-1]),
                ", ".join(format_float(v) for v in traj.states[-1])))
    rep.row("trajectory", "final", ", ".join(format_float(v) for v in final))

    failed = False
    if args.lift is not None:
        system_like, sol = _resolve_candidate_pair(m, sys_, hs, fl, args.lift)
        result = verify_lifting(system_like, sol, z0, args.t0, args.t1,
                                args.dt, tol=args.tol, constants=constants)
        verdict = "pass" if result.passed else "fail"
        rep.text("lifting check '%s': max deviation = %s (tol = %s) -> %s"
                 % (args.lift, format_setting(result.max_deviation),
                    format_setting(args.tol), verdict))
        rep.row("lifting", args.lift, "-", result.max_deviation, verdict)
        failed = not result.passed
    return rep, failed


# -- involution ---------------------------------------------------------------


def cmd_involution(args) -> Tuple[Report, bool]:
    if args.tol <= 0:
        raise ValueError("--tol must be positive")
    if args.samples < 1:
        raise ValueError("--samples must be at least 1")
    m = model_io.load(args.model)
    kind, fam = m.candidate(args.family)
    if kind != "family":
        raise ValueError("'%s' is a %s, not a family" % (args.family, kind))

    sys_ = m.system()
    fl = legendre(sys_)
    if fl.inverse is None:
        raise HamiltonianError(
            "the Legendre map has no symbolic inverse: %s" % fl.diagnostic)
    hs = hamiltonian(sys_, fl)

    rep = Report()
    _header(rep, m,
            "involution family '%s' (parameters: %s)"
            % (args.family, ", ".join(fam.parameters)),
            _standard_settings(args.tol, args.samples, args.seed))

    rr = involution_check(hs, fam, samples=args.samples, seed=args.seed,
                          tol=args.tol)
    rep.text("pairwise brackets:")
    rep.add_residuals(rr)
    rep.text()
    rep.add_context(rr)
    failed = any(e.verdict == "nonzero" for e in rr.entries)
    return rep, failed


# -- entry point --------------------------------------------------------------


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        rep, failed = args.func(args)
    except DegenerateFamilyError as err:
        print("hjmech: error: %s" % err, file=sys.stderr)
        return 3
    except (LagrangianError, HamiltonianError) as err:
        print("hjmech: error: %s" % err, file=sys.stderr)
        return 3
    except NumericError as err:
        print("hjmech: error: %s" % err, file=sys.stderr)
        return 3 if err.time is not None else 2
    except (ValueError, OSError) as err:
        print("hjmech: error: %s" % err, file=sys.stderr)
        return 2
    sys.stdout.write(rep.render())
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
