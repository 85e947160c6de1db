"""Command-line front end.

Subcommands map one-to-one onto library entry points: gamma and maps wrap the
closed-form layer, modulus/quad/oracle wrap single solves, sweep and verify
wrap the stretch-ladder harness.  Exit codes are stable: 0 success, 1 a
verification verdict failed, 2 usage, 3 bad config or domain, 4 solver
failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from .analytic import (ShearParams, annulus_modulus, gamma as channel_gamma,
                       grotzsch_mu, halfplane_to_U, mobius_psi, r_of_rho,
                       teichmuller_modulus)
from .config import load_domain
from .errors import (ConfigError, ConfmodError, DomainValidationError,
                     SolverError, VerificationError)
from .fixtures import FIXTURE_NAMES, annulus_problem, named_domain
from .geometry import (ChannelDomain, has_straight_channel,
                       is_updown_symmetric, stretch)
from .modsolver import (SolverOptions, channel_quad_problems,
                        channel_ring_problem, quad_modulus,
                        resistor_network_modulus, ring_condenser, ring_modulus,
                        solve_condenser)
from .verify import (DEFAULT_H_LADDER, Tolerances, dilatation_audit, sweep,
                     verify_domain, write_csv, write_report)

EXIT_OK = 0
EXIT_VERIFICATION = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_SOLVER = 4


def _apply_thread_cap() -> None:
    """CONFMOD_THREADS caps numeric-library parallelism for reproducibility."""
    cap = os.environ.get("CONFMOD_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _parse_h_list(text: str) -> list[float]:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --H list {text!r}: {exc}") from None
    if not values:
        raise ConfigError("--H list is empty")
    return values


def _resolve_domain(spec: str) -> tuple[ChannelDomain, dict]:
    """A --domain value is a config file path or a builtin fixture name."""
    if spec in FIXTURE_NAMES and not Path(spec).exists():
        return named_domain(spec), {}
    return load_domain(spec)


def _solver_options(args, file_opts: dict) -> SolverOptions:
    """Config-file options first, command-line flags override."""
    merged = dict(file_opts)
    if args.grid_h0 is not None:
        merged["h0"] = args.grid_h0
    if args.levels is not None:
        merged["levels"] = args.levels
    if args.cg_tol is not None:
        merged["cg_tol"] = args.cg_tol
    return SolverOptions.from_flat(merged)


def _emit(args, payload: dict, lines: list[str]) -> None:
    """Print human lines, or the same numbers as JSON under --json."""
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)


def _cmd_gamma(args) -> int:
    dom, _ = _resolve_domain(args.domain)
    g = channel_gamma(dom)
    _emit(args, {"gamma": g.value, "error": g.error},
          [f"gamma = {g.value:.12g} (quadrature error <= {g.error:.3g})"])
    return EXIT_OK


def _cmd_modulus(args) -> int:
    if args.annulus:
        try:
            r, big_r = (float(v) for v in args.annulus.split(","))
        except ValueError:
            raise ConfigError(f"bad --annulus {args.annulus!r}, want r,R")
        est = ring_modulus(annulus_problem(r, big_r),
                           _solver_options(args, {}))
        exact = annulus_modulus(r, big_r)
        _emit(args, {"modulus": est.value, "error": est.error,
                     "closed_form": exact, "order": est.order},
              [f"m = {est.value:.8f} +/- {est.error:.2g} "
               f"(closed form {exact:.8f})"])
        return EXIT_OK
    dom, file_opts = _resolve_domain(args.domain)
    opts = _solver_options(args, file_opts)
    h_values = _parse_h_list(args.H) if args.H else [1.0]
    payload = []
    lines = []
    for H in h_values:
        est = ring_modulus(channel_ring_problem(stretch(dom, H)), opts)
        payload.append({"H": H, "modulus": est.value, "error": est.error})
        lines.append(f"H={H:g}: m = {est.value:.8f} +/- {est.error:.2g}")
    _emit(args, {"rows": payload}, lines)
    return EXIT_OK


def _cmd_quad(args) -> int:
    dom, file_opts = _resolve_domain(args.domain)
    opts = _solver_options(args, file_opts)
    h_values = _parse_h_list(args.H) if args.H else [1.0]
    payload = []
    lines = []
    for H in h_values:
        quad_prob, outer_prob = channel_quad_problems(
            stretch(dom, H), box_factor=opts.box_factor)
        m_q = quad_modulus(quad_prob, opts)
        m_p = quad_modulus(outer_prob, opts)
        payload.append({"H": H, "m_Q": m_q.value, "m_Q_err": m_q.error,
                        "m_P": m_p.value, "m_P_err": m_p.error})
        lines.append(f"H={H:g}: m_Q = {m_q.value:.6f} +/- {m_q.error:.2g}, "
                     f"m_P = {m_p.value:.6f} +/- {m_p.error:.2g}")
    _emit(args, {"rows": payload}, lines)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    dom, file_opts = _resolve_domain(args.domain)
    opts = _solver_options(args, file_opts)
    h_values = _parse_h_list(args.H) if args.H else list(DEFAULT_H_LADDER)
    records = sweep(dom, h_values, opts)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(records, out / "sweep.csv")
        print(f"wrote {out / 'sweep.csv'}")
    else:
        from .verify import CSV_HEADER, _cell
        print(CSV_HEADER)
        for r in records:
            print(",".join(_cell(v) for v in (
                r.H, r.m_omega, r.m_omega_err, r.gamma, r.ratio, r.bound_ok,
                r.m_Q, r.m_P, r.grotzsch_gap, r.additivity_ratio,
                r.mP_over_logH)))
    failed = [r for r in records if r.error]
    for r in failed:
        print(f"warning: H={r.H:g} failed: {r.error}", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    dom, file_opts = _resolve_domain(args.domain)
    opts = _solver_options(args, file_opts)
    h_values = _parse_h_list(args.H) if args.H else list(DEFAULT_H_LADDER)
    tol = Tolerances(ratio_floor=args.ratio_floor,
                     additivity_gain=args.additivity_gain)
    symmetric = (args.symmetric or has_straight_channel(dom)
                 or is_updown_symmetric(dom))
    report = verify_domain(dom, h_values, opts, tol, symmetric=symmetric)
    for line in report.summary_lines():
        print(line)
    print("overall: " + ("PASS" if report.passed else "FAIL"))
    if args.out:
        csv_path, json_path = write_report(report, args.out)
        print(f"wrote {csv_path} and {json_path}")
    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True)
              .replace(": NaN", ": null"))
    return EXIT_OK if report.passed else EXIT_VERIFICATION


def _cmd_oracle(args) -> int:
    dom, file_opts = _resolve_domain(args.domain)
    opts = _solver_options(args, file_opts)
    h_values = _parse_h_list(args.H) if args.H else [1.0]
    worst = 0.0
    payload = []
    lines = []
    for H in h_values:
        prob = channel_ring_problem(stretch(dom, H))
        cond = ring_condenser(prob, prob.min_gap / args.gap_cells, opts)
        _, energy, _, _ = solve_condenser(cond, opts)
        pde = 1.0 / energy
        net = resistor_network_modulus(cond, opts)
        rel = abs(pde - net) / net
        worst = max(worst, rel)
        payload.append({"H": H, "pde": pde, "network": net, "rel_diff": rel})
        lines.append(f"H={H:g}: pde = {pde:.6f}, network = {net:.6f}, "
                     f"rel diff = {rel:.2e}")
    ok = worst <= args.tol
    lines.append(f"oracle agreement: {'PASS' if ok else 'FAIL'} "
                 f"(worst {worst:.2e} vs {args.tol:g})")
    _emit(args, {"rows": payload, "worst": worst, "tol": args.tol,
                 "passed": ok}, lines)
    return EXIT_OK if ok else EXIT_VERIFICATION


def _cmd_maps(args) -> int:
    # Closed-form layer round-up: special values plus the shear audit.
    mu_half = grotzsch_mu(1.0 / math.sqrt(2.0))
    t = 1e6
    teich = teichmuller_modulus(t)
    teich_ratio = 2.0 * math.pi * teich / math.log(16.0 * t)
    big_m = 1.0
    g1 = complex(halfplane_to_U(big_m, 1.0))
    gm1 = complex(halfplane_to_U(big_m, -1.0))
    far = complex(halfplane_to_U(big_m, 1e6)) * math.pi / (big_m * 1e6)
    rows = []
    psi_dev = 0.0
    for rho in (1.5, 3.0):
        r = r_of_rho(rho)
        # Boundary circles must land on |w|=1 and |w|=rho.
        z_outer = complex(mobius_psi(rho, 1.0j))
        z_inner = complex(mobius_psi(rho, -0.5j * r + 0.5 * r))
        psi_dev = max(psi_dev, abs(abs(z_outer) - rho), abs(abs(z_inner) - 1.0))
        rows.append({"rho": rho, "r": r})
    shear = ShearParams(lines=((0.5, 0.0), (-0.25, 0.1), (0.4, -0.05)),
                        offset=1.0, break_lo=-0.3, break_hi=0.4)
    audit = dilatation_audit(shear, [1.0, 10.0, 100.0, 1000.0])
    payload = {
        "mu_at_inv_sqrt2": mu_half,
        "teichmuller_log_ratio_at_1e6": teich_ratio,
        "halfplane_g_at_1": [g1.real, g1.imag],
        "halfplane_g_at_minus_1": [gm1.real, gm1.imag],
        "halfplane_far_field_ratio": [far.real, far.imag],
        "mobius_rows": rows,
        "mobius_worst_circle_deviation": psi_dev,
        "dilatation": [asdict(r) for r in audit.rows],
        "dilatation_monotone_ok": audit.monotone_ok,
    }
    lines = [
        f"mu(1/sqrt 2)          = {mu_half:.12f}  (pi/2 = {math.pi/2:.12f})",
        f"2*pi*m_T/log(16t)     = {teich_ratio:.9f} at t=1e6",
        f"g(1)                  = {g1.real:.3e}{g1.imag:+.3e}i",
        f"g(-1)                 = {gm1.real:.3e}{gm1.imag:+.3e}i  (target -iM)",
        f"g(zeta)*pi/(M*zeta)   = {far.real:.8f}{far.imag:+.2e}i at zeta=1e6",
        f"Mobius circle fit     = {psi_dev:.2e} worst deviation",
        "shear dilatation K(H): " + ", ".join(
            f"K({r.H:g})={r.K:.6f}" for r in audit.rows),
        f"K(H) <= K(1) for H >= 1: {audit.monotone_ok}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="confmod",
        description="Conformal modulus of channel domains: solves, sweeps, "
                    "and claim verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, domain_required=True):
        p.add_argument("--domain", required=domain_required,
                       help="domain config file, or a builtin fixture name "
                            f"({', '.join(FIXTURE_NAMES)})")
        p.add_argument("--H", help="comma-separated stretch factors")
        p.add_argument("--grid-h0", type=float, default=None,
                       help="coarsest cell height (default: auto from gap)")
        p.add_argument("--levels", type=int, default=None,
                       help="refinement ladder depth")
        p.add_argument("--cg-tol", type=float, default=None,
                       help="linear solver relative tolerance")
        p.add_argument("--json", action="store_true",
                       help="machine-readable output on stdout")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; all computations are deterministic")

    p = sub.add_parser("gamma", help="reciprocal-gap integral of a domain")
    add_common(p)
    p.set_defaults(func=_cmd_gamma)

    p = sub.add_parser("modulus", help="ring modulus of a stretched domain")
    add_common(p, domain_required=False)
    p.add_argument("--annulus", help="solve the annulus anchor, e.g. 1,2")
    p.set_defaults(func=_cmd_modulus)

    p = sub.add_parser("quad", help="channel and outer quadrilateral moduli")
    add_common(p)
    p.set_defaults(func=_cmd_quad)

    p = sub.add_parser("sweep", help="emit the stretch-ladder table")
    add_common(p)
    p.add_argument("--out", help="directory for sweep.csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="sweep plus per-claim verdicts")
    add_common(p)
    p.add_argument("--out", help="directory for sweep.csv and report.json")
    p.add_argument("--ratio-floor", type=float, default=0.7,
                   help="asymptotics floor at the largest H")
    p.add_argument("--additivity-gain", type=float, default=0.05,
                   help="required additivity-ratio gain on nonsymmetric runs")
    p.add_argument("--symmetric", action="store_true",
                   help="force the symmetric additivity mode "
                        "(auto-detected from the domain by default)")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("oracle",
                       help="PDE vs resistor-network cross-check")
    add_common(p)
    p.add_argument("--gap-cells", type=int, default=32,
                   help="cells across the channel gap for the matched grid")
    p.add_argument("--tol", type=float, default=0.02,
                   help="allowed relative difference")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("maps", help="closed-form map and special value audit")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_maps)

    return parser


def run(argv: list[str] | None = None) -> int:
    _apply_thread_cap()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "modulus" and not args.annulus and not args.domain:
        parser.error("modulus needs --domain or --annulus")
    try:
        return args.func(args)
    except (ConfigError, DomainValidationError, VerificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error [{exc.kind}]: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ConfmodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
