"""Command-line front end.

    aosd optimize     --priors 0.76,0.2,0.04 --gamma 0.3
    aosd verify       --priors ... --overlaps 0.3,0.6,0.4 [--grid-n 24] [--no-refine]
    aosd correlations --priors ... --gamma ...
    aosd decompose    --priors ... --gamma ...
    aosd simulate     --priors ... --gamma ... --shots 100000 --seed 42
    aosd sweep        --priors 0.5,0.3,0.2 --priors 0.76,0.2,0.04 --gamma-min 0.05 --gamma-max 0.9 --points 50

Numbers are printed with 17 significant digits.  Exit codes: 0 success,
1 verification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys
from typing import Sequence

import numpy as np

from .correlations import (
    CorrelationReport,
    RegimeMismatch,
    correlation_report,
    gmqd_closed_form,
    negativity,
    zero_discord_commutator,
)
from .ensemble import EnsembleError, OverlapSet, Priors, validate_ensemble
from .jointstate import EtaBasis, build_rho, dump_matrix
from .montecarlo import ShotReport, simulate
from .oracle import NoFeasiblePoint, classify, numeric_optimize
from .protocol import Regime, critical_gammas, optimize
from .separability import DecompositionError, build_decomposition

SWEEP_HEADER = "p0,p1,p2,gamma,regime,p_success,delta_p,gmqd2,negativity"
EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2


class InputError(ValueError):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _floats(text: str, n: int, name: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise InputError(f"{name}: expected {n} comma-separated numbers, got {text!r}") from None
    if len(vals) != n:
        raise InputError(f"{name}: expected {n} comma-separated numbers, got {len(vals)}")
    return vals


def _ensemble(priors_text: str, args):
    priors = Priors.from_seq(_floats(priors_text, 3, "--priors"), renormalize=args.renormalize)
    if args.overlaps is not None:
        overlaps = OverlapSet(*_floats(args.overlaps, 3, "--overlaps"))
    else:
        overlaps = OverlapSet.equal(args.gamma)
    return validate_ensemble(priors, overlaps)


def _separable(ensemble, params):
    """Optimal rho_SA on the basis that makes it separable."""
    dec = build_decomposition(ensemble, params)
    return dec, build_rho(params, ensemble, dec.eta_basis)


# --- subcommands --------------------------------------------------------------


def cmd_optimize(args, out) -> int:
    e = _ensemble(args.priors, args)
    r = optimize(e)
    out.write(f"regime: {r.regime.value}\n")
    out.write(f"p_success: {fmt(r.p_success)}\n")
    out.write("alpha: " + ",".join(fmt(a) for a in r.alpha) + "\n")
    out.write("angles: " + ",".join(fmt(a) for a in r.angles) + "\n")
    out.write("canonical_perm: " + ",".join(str(i) for i in r.perm) + "\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    e = _ensemble(args.priors, args)
    analytic = optimize(e)
    try:
        res = numeric_optimize(e, grid_n=args.grid_n, refine=not args.no_refine)
    except NoFeasiblePoint as exc:
        out.write(f"status: WARN ({exc})\n")
        return EXIT_VERIFY
    diff = res.p_success - analytic.p_success
    oracle_regime = classify(res)
    out.write(f"analytic: {fmt(analytic.p_success)}\n")
    out.write(f"oracle: {fmt(res.p_success)}\n")
    out.write(f"difference: {fmt(diff)}\n")
    out.write(f"regime_analytic: {analytic.regime.value}\n")
    out.write(f"regime_oracle: {oracle_regime}\n")
    out.write(f"regime_agree: {oracle_regime == analytic.regime.value}\n")
    if diff > args.tol:
        out.write("status: FAIL (oracle beats the analytic optimum)\n")
        return EXIT_VERIFY
    if diff < -args.tol:
        out.write(
            f"status: WARN (oracle below analytic; grid_n={args.grid_n}"
            f"{'' if not args.no_refine else ' without refinement'} under-resolves the optimum)\n"
        )
        return EXIT_VERIFY
    out.write("status: PASS\n")
    return EXIT_OK


def cmd_correlations(args, out) -> int:
    e = _ensemble(args.priors, args)
    params = optimize(e)
    if args.basis == "computational":
        rho = build_rho(params, e, EtaBasis.computational())
    else:
        _, rho = _separable(e, params)
    comm = None
    if args.overlaps is None and params.regime is Regime.I:
        with contextlib.suppress(RegimeMismatch):
            comm = zero_discord_commutator(e.priors, args.gamma)
    rep = correlation_report(rho, n_starts=args.n_starts, commutator_coefficient=comm)
    out.write(CorrelationReport.CSV_HEADER + "\n")
    out.write(rep.csv_row() + "\n")
    if args.dump_rho:
        with open(args.dump_rho, "w") as fh:
            dump_matrix(rho, fh)
    return EXIT_OK


def cmd_decompose(args, out) -> int:
    e = _ensemble(args.priors, args)
    params = optimize(e)
    dec, rho = _separable(e, params)
    out.write(f"regime: {params.regime.value}\n")
    for i, row in enumerate(dec.C):
        out.write(f"C[{i}]: " + ",".join(fmt(v) for v in row) + "\n")
    for name in ("kappa1", "kappa2", "kappa3", "beta"):
        v = getattr(dec, name)
        out.write(f"{name}: {'' if v is None else fmt(v)}\n")
    for i, eta in enumerate(dec.eta_basis.vectors):
        out.write(f"eta{i}: " + ",".join(fmt(v.real) for v in eta) + "\n")
    out.write("schmidt_residuals: " + ",".join(fmt(v) for v in dec.schmidt_residuals) + "\n")
    out.write(f"reconstruction_error: {fmt(np.max(np.abs(dec.reconstruct() - rho)))}\n")
    out.write(f"negativity: {fmt(negativity(rho))}\n")
    return EXIT_OK


def cmd_simulate(args, out) -> int:
    e = _ensemble(args.priors, args)
    params = optimize(e)
    basis = EtaBasis.computational() if args.basis == "computational" else build_decomposition(e, params).eta_basis
    rep = simulate(
        e, params, basis, shots=args.shots, seed=args.seed, workers=args.workers, full_born=args.full_born
    )
    out.write(ShotReport.CSV_HEADER + "\n")
    out.write(rep.csv_row() + "\n")
    return EXIT_OK


def gamma_grid(gmin: float, gmax: float, step: float | None = None, points: int | None = None) -> np.ndarray:
    if not (0 < gmin <= gmax < 1):
        raise InputError(f"gamma range must satisfy 0 < gamma-min <= gamma-max < 1, got [{gmin}, {gmax}]")
    if points is not None:
        if points < 1:
            raise InputError(f"--points must be positive, got {points}")
        return np.linspace(gmin, gmax, points)
    if step is None or step <= 0:
        raise InputError(f"--gamma-step must be positive, got {step}")
    n = int(math.floor((gmax - gmin) / step + 1e-9)) + 1
    return np.round(gmin + step * np.arange(n), 12)


def sweep_row(priors: Priors, gamma: float) -> str:
    e = validate_ensemble(priors, OverlapSet.equal(float(gamma)))
    params = optimize(e)
    _, rho = _separable(e, params)
    cells = [
        *(fmt(v) for v in priors.as_tuple()),
        fmt(gamma),
        params.regime.value,
        fmt(params.p_success),
        fmt(params.p_success - (1 - gamma)),
        fmt(2 * gmqd_closed_form(rho)),
        fmt(negativity(rho)),
    ]
    return ",".join(cells)


def cmd_sweep(args, out) -> int:
    grid = gamma_grid(args.gamma_min, args.gamma_max, args.gamma_step, args.points)
    settings = [Priors.from_seq(_floats(t, 3, "--priors"), renormalize=args.renormalize) for t in args.priors]
    out.write(SWEEP_HEADER + "\n")
    for priors in settings:
        for g in grid:
            out.write(sweep_row(priors, float(g)) + "\n")
    if args.boundaries:
        for priors in settings:
            b = critical_gammas(priors)
            out.write(f"# {','.join(fmt(v) for v in priors.as_tuple())}: gamma_c1={fmt(b.gamma_c1)} gamma_c2={fmt(b.gamma_c2)}\n")
    return EXIT_OK


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aosd", description="Assisted optimal discrimination of three qutrit states.")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: standard output)")
    common.add_argument("--renormalize", action="store_true", help="rescale priors to sum to one")

    single = argparse.ArgumentParser(add_help=False, parents=[common])
    single.add_argument("--priors", required=True, help="p0,p1,p2")
    ov = single.add_mutually_exclusive_group(required=True)
    ov.add_argument("--gamma", type=float, help="equal pairwise overlap")
    ov.add_argument("--overlaps", help="g01,g12,g20")

    sub.add_parser("optimize", parents=[single], help="analytic optimum")

    p = sub.add_parser("verify", parents=[single], help="compare analytic and brute-force optima")
    p.add_argument("--grid-n", type=int, default=24)
    p.add_argument("--no-refine", action="store_true")
    p.add_argument("--tol", type=float, default=1e-4)

    p = sub.add_parser("correlations", parents=[single], help="discord and negativity of the optimal joint state")
    p.add_argument("--basis", choices=("separable", "computational"), default="separable")
    p.add_argument("--n-starts", type=int, default=500)
    p.add_argument("--dump-rho", help="also write rho to this file")

    sub.add_parser("decompose", parents=[single], help="product-state decomposition")

    p = sub.add_parser("simulate", parents=[single], help="Monte Carlo shots")
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--full-born", action="store_true")
    p.add_argument("--basis", choices=("separable", "computational"), default="separable")

    p = sub.add_parser("sweep", parents=[common], help="CSV over equal overlaps")
    p.add_argument("--priors", action="append", required=True, help="p0,p1,p2 (repeatable)")
    p.add_argument("--gamma-min", type=float, default=0.05)
    p.add_argument("--gamma-max", type=float, default=0.9)
    p.add_argument("--gamma-step", type=float, default=0.05)
    p.add_argument("--points", type=int, help="number of evenly spaced gammas (overrides --gamma-step)")
    p.add_argument("--boundaries", action="store_true", help="append critical overlaps as comment lines")
    p.add_argument("--seed", type=int, help="accepted for uniformity; the sweep is deterministic")
    return parser


COMMANDS = {
    "optimize": cmd_optimize,
    "verify": cmd_verify,
    "correlations": cmd_correlations,
    "decompose": cmd_decompose,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.out:
            with open(args.out, "w") as fh:
                return COMMANDS[args.command](args, fh)
        return COMMANDS[args.command](args, sys.stdout)
    except (EnsembleError, InputError, DecompositionError, ValueError) as exc:
        print(f"aosd {args.command}: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
