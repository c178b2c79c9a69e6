"""Command-line front end.

Four subcommands: ``solve`` (one market, human report plus optional JSON),
``sweep`` (one scalar parameter over a range, CSV out), ``check``
(independent certification of a solved market) and ``welfare`` (equilibrium
versus social optimum).  Exit codes are part of the interface: 0 success,
1 bad input, 2 no equilibrium exists, 3 certification failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .market import (
    DataBuyer,
    DataSource,
    EstimatorSpec,
    MarketInstance,
    ValueDistribution,
    validate_market,
)
from .estimators import (
    GammaNegativeError,
    SingularDesignError,
    compute_weights,
    loo_weight_tensor,
)
from .equilibrium import (
    RHO_EXISTENCE_THRESHOLD,
    CouplingSystem,
    InfeasibleCError,
    NoEquilibriumError,
    NumericFailure,
    build_coupling_system,
    complete_solution,
    coupling_matrix,
    solution_from_d,
    solve_equilibrium_d,
    spectral_radius,
)
from .welfare import (
    DegenerateSourceError,
    EtaNotOneError,
    UndefinedPoaError,
    price_of_anarchy,
)
from .oracle import (
    TrueFunction,
    best_response_check,
    monte_carlo_payments,
    neumann_dynamics,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_EQUILIBRIUM = 2
EXIT_CERTIFICATION = 3


class ConfigError(Exception):
    """Malformed configuration document."""


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


# ---------------------------------------------------------------------------
# config documents
# ---------------------------------------------------------------------------

def _as_float(doc, key, where):
    try:
        return float(doc[key])
    except KeyError:
        raise ConfigError(f"{where}: missing key {key!r}") from None
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: {key!r} must be a number, got {doc[key]!r}") from None


def _dist_from_config(doc, where) -> ValueDistribution:
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ConfigError(f"{where}: value_dist needs a 'kind' field")
    kind = doc["kind"]
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError(f"{where}: value_dist params must be an object")
    if kind == "uniform":
        return ValueDistribution.uniform(_as_float(params, "lo", where), _as_float(params, "hi", where))
    if kind == "point-mass":
        return ValueDistribution.point_mass(_as_float(params, "x0", where))
    if kind == "discrete":
        pts = params.get("points")
        wts = params.get("weights")
        if not isinstance(pts, list) or not isinstance(wts, list):
            raise ConfigError(f"{where}: discrete value_dist needs 'points' and 'weights' lists")
        return ValueDistribution.discrete(pts, wts)
    raise ConfigError(f"{where}: unknown value_dist kind {kind!r}")


def market_from_config(doc: dict) -> MarketInstance:
    """Build a MarketInstance from a plain configuration document."""
    if not isinstance(doc, dict):
        raise ConfigError("top level must be an object")
    for key in ("sources", "buyers", "feature_domain"):
        if key not in doc:
            raise ConfigError(f"missing top-level key {key!r}")
    fd = doc["feature_domain"]
    if not isinstance(fd, list) or len(fd) != 2:
        raise ConfigError("feature_domain must be a two-element list [lo, hi]")

    sources = []
    if not isinstance(doc["sources"], list):
        raise ConfigError("sources must be a list")
    for i, s in enumerate(doc["sources"]):
        where = f"sources[{i}]"
        if not isinstance(s, dict):
            raise ConfigError(f"{where}: must be an object")
        sources.append(DataSource(x=_as_float(s, "x", where), alpha=_as_float(s, "alpha", where)))

    buyers = []
    if not isinstance(doc["buyers"], list):
        raise ConfigError("buyers must be a list")
    for j, b in enumerate(doc["buyers"]):
        where = f"buyers[{j}]"
        if not isinstance(b, dict):
            raise ConfigError(f"{where}: must be an object")
        est_doc = b.get("estimator")
        if not isinstance(est_doc, dict) or "kind" not in est_doc:
            raise ConfigError(f"{where}: estimator needs a 'kind' field")
        kind = est_doc["kind"]
        degree = est_doc.get("degree", 1)
        if not isinstance(degree, int) or isinstance(degree, bool):
            raise ConfigError(f"{where}: estimator degree must be an integer")
        est = EstimatorSpec(kind=kind, degree=degree)
        dist = _dist_from_config(b.get("value_dist"), where)
        delta = b.get("delta")
        if not isinstance(delta, list):
            raise ConfigError(f"{where}: delta must be a list")
        try:
            delta = tuple(float(v) for v in delta)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: delta entries must be numbers") from None
        eta = float(b.get("eta", 1.0))
        buyers.append(DataBuyer(estimator=est, value_dist=dist, delta_row=delta, eta=eta))

    try:
        fd = (float(fd[0]), float(fd[1]))
    except (TypeError, ValueError):
        raise ConfigError("feature_domain entries must be numbers") from None
    return MarketInstance(sources=tuple(sources), buyers=tuple(buyers), feature_domain=fd)


def market_to_config(m: MarketInstance) -> dict:
    """Inverse of market_from_config, up to float identity."""
    dists = []
    for b in m.buyers:
        d = b.value_dist
        if d.kind == "uniform":
            params = {"lo": d.lo, "hi": d.hi}
        elif d.kind == "point-mass":
            params = {"x0": d.x0}
        else:
            params = {"points": list(d.points), "weights": list(d.weights)}
        dists.append({"kind": d.kind, "params": params})
    return {
        "sources": [{"x": s.x, "alpha": s.alpha} for s in m.sources],
        "buyers": [
            {
                "estimator": {"kind": b.estimator.kind, "degree": b.estimator.degree},
                "value_dist": dist,
                "delta": list(b.delta_row),
                "eta": b.eta,
            }
            for b, dist in zip(m.buyers, dists)
        ],
        "feature_domain": list(m.feature_domain),
    }


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path} is not valid JSON: {err}") from None


def _load_market(path: str) -> MarketInstance:
    m = market_from_config(_load_json(path))
    violations = validate_market(m)
    if violations:
        lines = [f"  [{v.code}] {v.where}: {v.message}" for v in violations]
        raise ConfigError("invalid market:\n" + "\n".join(lines))
    return m


# ---------------------------------------------------------------------------
# shared pipeline pieces
# ---------------------------------------------------------------------------

def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _rho_without_losses(m: MarketInstance) -> float | None:
    """Spectral radius from the leave-one-out tensor alone.

    The coupling matrix never involves the full-design weights, so existence
    can still be decided when those are unavailable.
    """
    try:
        return spectral_radius(coupling_matrix(loo_weight_tensor(m)))
    except SingularDesignError:
        return None


def _solve_pipeline(m: MarketInstance):
    """Returns (weights, system, solution) or raises toward the exit codes."""
    w = compute_weights(m)
    system = build_coupling_system(w, m)
    sol = solve_equilibrium_d(system)
    return w, system, sol


def _print_matrix(label: str, arr: np.ndarray):
    print(f"{label}:")
    for j, row in enumerate(np.atleast_2d(arr)):
        cells = "  ".join(_fmt(v) for v in row)
        print(f"  buyer {j + 1}: {cells}")


def _print_vector(label: str, vec: np.ndarray):
    cells = "  ".join(_fmt(v) for v in vec)
    print(f"{label}: {cells}")


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def _cmd_solve(args) -> int:
    try:
        m = _load_market(args.config)
    except ConfigError as err:
        return _fail(str(err), EXIT_INPUT)

    try:
        w, system, sol = _solve_pipeline(m)
    except SingularDesignError as err:
        if err.dropped_source is None:
            # the coupling may still certify nonexistence even when the
            # full-design losses cannot be computed
            rho = _rho_without_losses(m)
            if rho is not None and rho >= RHO_EXISTENCE_THRESHOLD:
                print(f"no equilibrium: spectral radius {_fmt(rho)} >= 1 - 1e-9", file=sys.stderr)
                return EXIT_NO_EQUILIBRIUM
        return _fail(str(err), EXIT_INPUT)
    except GammaNegativeError as err:
        return _fail(str(err), EXIT_INPUT)
    except NoEquilibriumError as err:
        print(f"no equilibrium: spectral radius {_fmt(err.rho)} >= 1 - 1e-9", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except (NumericFailure, ValueError) as err:
        return _fail(str(err), EXIT_INPUT)

    infeasible_c = None
    try:
        sol = complete_solution(sol, w, m)
    except InfeasibleCError as err:
        infeasible_c = err

    welfare = None
    welfare_note = None
    try:
        welfare = price_of_anarchy(sol, w, m)
    except (EtaNotOneError, DegenerateSourceError, UndefinedPoaError) as err:
        welfare_note = str(err)

    print(f"market: {m.n_sources} sources, {m.n_buyers} buyers")
    print(f"spectral radius: {_fmt(system.rho)}")
    print(f"solve residual: {_fmt(sol.residual)}")
    print()
    _print_matrix("gamma (per source)", w.gamma)
    _print_matrix("equilibrium slopes d", sol.d)
    _print_vector("total slope per source", sol.d_total)
    _print_vector("efforts", sol.efforts)
    _print_vector("variances", sol.variances)
    if infeasible_c is None:
        _print_matrix("canonical flat payments c", sol.c_canonical)
        _print_vector("required total payment E", sol.c_polytope.E)
    else:
        print(f"flat payments: infeasible ({infeasible_c})")
    if welfare is not None:
        _print_vector("socially optimal efforts", welfare.efforts_opt)
        print(f"social loss at equilibrium: {_fmt(welfare.loss_eq)}")
        print(f"social loss at optimum: {_fmt(welfare.loss_opt)}")
        print(f"price of anarchy: {_fmt(welfare.poa)}")
    elif welfare_note:
        print(f"welfare: skipped ({welfare_note})")

    if args.json_out:
        payload = {
            "n_sources": m.n_sources,
            "n_buyers": m.n_buyers,
            "rho": system.rho,
            "beta": w.beta.tolist(),
            "xi": w.xi.tolist(),
            "gamma": w.gamma.tolist(),
            "d": sol.d.tolist(),
            "d_total": sol.d_total.tolist(),
            "efforts": sol.efforts.tolist(),
            "variances": sol.variances.tolist(),
            "residual": sol.residual,
            "status": "ok",
        }
        if infeasible_c is None:
            payload["c"] = {
                "E": sol.c_polytope.E.tolist(),
                "L": sol.c_polytope.L.tolist(),
                "slack": sol.c_polytope.slack.tolist(),
                "canonical": sol.c_canonical.tolist(),
                "feasible": True,
            }
        else:
            payload["c"] = {"feasible": False, "reason": str(infeasible_c)}
        if welfare is not None:
            payload["welfare"] = {
                "efforts_opt": welfare.efforts_opt.tolist(),
                "loss_eq": welfare.loss_eq,
                "loss_opt": welfare.loss_opt,
                "poa": welfare.poa,
            }
        else:
            payload["welfare"] = None
        try:
            with open(args.json_out, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
        except OSError as err:
            return _fail(f"cannot write {args.json_out}: {err}", EXIT_INPUT)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_PARAM_RE = re.compile(r"^(sources|buyers)\[(\d+)\]\.([a-z_]+)$")
_SWEEPABLE = {("sources", "x"), ("sources", "alpha"), ("buyers", "eta")}


def _apply_param(doc: dict, path: str, value: float):
    match = _PARAM_RE.match(path)
    if not match:
        raise ConfigError(f"unsupported sweep parameter {path!r}")
    section, idx, field = match.group(1), int(match.group(2)), match.group(3)
    if (section, field) not in _SWEEPABLE:
        raise ConfigError(f"unsupported sweep parameter {path!r}")
    try:
        doc[section][idx][field] = value
    except (IndexError, KeyError, TypeError):
        raise ConfigError(f"sweep parameter {path!r} does not exist in the base config") from None


def _sweep_columns(n: int, mm: int) -> list:
    cols = ["param"]
    cols += [f"gamma_{i + 1}_{j + 1}" for i in range(n) for j in range(mm)]
    cols += [f"xi_{i + 1}_{l + 1}_{j + 1}"
             for i in range(n) for l in range(n) if l != i for j in range(mm)]
    cols.append("rho")
    cols += [f"d_{i + 1}_{j + 1}" for i in range(n) for j in range(mm)]
    cols += [f"e_star_{i + 1}" for i in range(n)]
    cols += [f"e_hat_{i + 1}" for i in range(n)]
    cols += ["loss_eq", "loss_opt", "poa", "status"]
    return cols


def _sweep_row(m: MarketInstance, value: float) -> list:
    n, mm = m.n_sources, m.n_buyers
    gamma_cells = [""] * (n * mm)
    xi_cells = [""] * (n * (n - 1) * mm)
    d_cells = [""] * (n * mm)
    e_star = [""] * n
    e_hat = [""] * n
    losses = ["", "", ""]

    w = None
    try:
        w = compute_weights(m)
        xi = w.xi
    except (SingularDesignError, GammaNegativeError):
        try:
            xi = loo_weight_tensor(m)
        except SingularDesignError:
            xi = None

    if xi is None:
        return [_fmt(value)] + gamma_cells + xi_cells + [""] + d_cells + e_star + e_hat + losses + ["error"]

    rho = spectral_radius(coupling_matrix(xi))
    xi_cells = [_fmt(xi[j, i, l])
                for i in range(n) for l in range(n) if l != i for j in range(mm)]
    if w is not None:
        gamma_cells = [_fmt(w.gamma[j, i]) for i in range(n) for j in range(mm)]

    status = "ok"
    if w is None or rho >= RHO_EXISTENCE_THRESHOLD:
        status = "no_equilibrium" if rho >= RHO_EXISTENCE_THRESHOLD else "error"
        return [_fmt(value)] + gamma_cells + xi_cells + [_fmt(rho)] + d_cells + e_star + e_hat + losses + [status]

    system = CouplingSystem(
        A=coupling_matrix(xi), gamma_vec=w.gamma.T.reshape(-1).copy(), rho=rho,
        n_sources=n, n_buyers=mm, alphas=np.asarray(m.alphas(), dtype=float),
    )
    try:
        sol = solve_equilibrium_d(system)
    except (NoEquilibriumError, NumericFailure, ValueError):
        return [_fmt(value)] + gamma_cells + xi_cells + [_fmt(rho)] + d_cells + e_star + e_hat + losses + ["error"]

    d_cells = [_fmt(sol.d[j, i]) for i in range(n) for j in range(mm)]
    e_star = [_fmt(v) for v in sol.efforts]
    try:
        report = price_of_anarchy(sol, w, m)
        e_hat = [_fmt(v) for v in report.efforts_opt]
        losses = [_fmt(report.loss_eq), _fmt(report.loss_opt), _fmt(report.poa)]
    except (EtaNotOneError, DegenerateSourceError, UndefinedPoaError):
        pass
    return [_fmt(value)] + gamma_cells + xi_cells + [_fmt(rho)] + d_cells + e_star + e_hat + losses + [status]


def _cmd_sweep(args) -> int:
    try:
        spec = _load_json(args.spec)
    except ConfigError as err:
        return _fail(str(err), EXIT_INPUT)

    if not isinstance(spec, dict):
        return _fail("sweep spec must be an object", EXIT_INPUT)
    param = spec.get("param")
    rng_doc = spec.get("range")
    base = spec.get("base")
    if not isinstance(param, str) or not isinstance(rng_doc, dict) or base is None:
        return _fail("sweep spec needs 'param', 'range' and 'base'", EXIT_INPUT)

    try:
        lo = float(rng_doc["from"])
        hi = float(rng_doc["to"])
        steps = rng_doc["steps"]
    except (KeyError, TypeError, ValueError):
        return _fail("range needs numeric 'from', 'to' and integer 'steps'", EXIT_INPUT)
    if not isinstance(steps, int) or isinstance(steps, bool) or steps < 2:
        return _fail(f"range.steps must be an integer >= 2, got {steps!r}", EXIT_INPUT)
    if not (np.isfinite(lo) and np.isfinite(hi)):
        return _fail("range bounds must be finite", EXIT_INPUT)

    if isinstance(base, str):
        base_path = base
        if not os.path.isabs(base_path):
            base_path = os.path.join(os.path.dirname(os.path.abspath(args.spec)), base_path)
        try:
            base = _load_json(base_path)
        except ConfigError as err:
            return _fail(str(err), EXIT_INPUT)
    if not isinstance(base, dict):
        return _fail("sweep base must be a config object or a path to one", EXIT_INPUT)

    values = np.linspace(lo, hi, steps)
    markets = []
    for v in values:
        doc = copy.deepcopy(base)
        try:
            _apply_param(doc, param, float(v))
            m = market_from_config(doc)
        except ConfigError as err:
            return _fail(str(err), EXIT_INPUT)
        violations = validate_market(m)
        if violations:
            v0 = violations[0]
            return _fail(
                f"sweep value {param}={_fmt(v)} yields an invalid market: [{v0.code}] {v0.where}: {v0.message}",
                EXIT_INPUT,
            )
        markets.append(m)

    n, mm = markets[0].n_sources, markets[0].n_buyers
    try:
        threads = int(os.environ.get("DM_THREADS", "1"))
    except ValueError:
        threads = 1
    threads = max(1, threads)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_sweep_row, markets, [float(v) for v in values]))
    else:
        rows = [_sweep_row(m, float(v)) for m, v in zip(markets, values)]

    lines = [",".join(_sweep_columns(n, mm))]
    lines += [",".join(r) for r in rows]
    try:
        with open(args.out, "wb") as fh:
            fh.write(("\n".join(lines) + "\n").encode("utf-8"))
    except OSError as err:
        return _fail(f"cannot write {args.out}: {err}", EXIT_INPUT)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _cmd_check(args) -> int:
    try:
        m = _load_market(args.config)
    except ConfigError as err:
        return _fail(str(err), EXIT_INPUT)

    try:
        coeffs = tuple(float(v) for v in args.f_coeffs.split(","))
        f = TrueFunction(coeffs)
    except ValueError as err:
        return _fail(f"bad --f-coeffs: {err}", EXIT_INPUT)

    try:
        w, system, sol = _solve_pipeline(m)
        sol = complete_solution(sol, w, m)
    except NoEquilibriumError as err:
        print(f"no equilibrium: spectral radius {_fmt(err.rho)} >= 1 - 1e-9", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except (SingularDesignError, GammaNegativeError, InfeasibleCError,
            NumericFailure, ValueError) as err:
        return _fail(str(err), EXIT_INPUT)

    direct_d = sol.d.copy()
    if args.perturb:
        try:
            j_s, i_s, amt_s = args.perturb.split(",")
            j, i, amt = int(j_s) - 1, int(i_s) - 1, float(amt_s)
            if not (0 <= j < m.n_buyers and 0 <= i < m.n_sources):
                raise ValueError("index out of range")
        except ValueError as err:
            return _fail(f"bad --perturb (expected BUYER,SOURCE,DELTA): {err}", EXIT_INPUT)
        d_mod = sol.d.copy()
        d_mod[j, i] += amt
        try:
            sol = solution_from_d(d_mod, w, m, system=system)
        except (InfeasibleCError, ValueError) as err:
            return _fail(f"perturbed slopes are not checkable: {err}", EXIT_INPUT)
        print(f"perturbed d[{j + 1},{i + 1}] by {_fmt(amt)}")

    print(f"spectral radius: {_fmt(system.rho)}")
    failures = []

    for k in range(m.n_buyers):
        rep = best_response_check(sol, k, w, m, radius=args.radius, steps=args.steps)
        verdict = "certified" if rep.certified else "IMPROVABLE"
        print(f"best response buyer {k + 1}: max improvement {rep.max_improvement:.3g} "
              f"(tolerance {rep.tolerance:.3g}) {verdict}")
        if not rep.certified:
            failures.append(f"buyer {k + 1} can improve by {rep.max_improvement:.3g}")

    neu = neumann_dynamics(system)
    if neu.converged:
        rel = float(np.abs(neu.d - direct_d).max()) / (1.0 + float(np.abs(direct_d).max()))
        print(f"fixed-point iteration: converged in {neu.iters} sweeps, "
              f"relative gap to direct solve {rel:.3g}")
        if system.rho < 0.99 and rel > 1e-8:
            failures.append(f"iterative and direct solutions disagree ({rel:.3g})")
    else:
        print(f"fixed-point iteration: no convergence in {neu.iters} sweeps "
              f"(last step {neu.last_step:.3g})")
        if system.rho < 0.99:
            failures.append("fixed-point iteration failed to converge despite rho < 0.99")

    checks = monte_carlo_payments(sol, w, m, f, n_samples=args.samples, seed=args.seed)
    worst = 0.0
    for chk in checks:
        worst = max(worst, abs(chk.z_score))
        print(f"payment buyer {chk.buyer + 1} source {chk.source + 1}: "
              f"empirical {_fmt(chk.empirical_mean)} analytic {_fmt(chk.analytic_mean)} "
              f"z {chk.z_score:+.2f}")
    if worst >= 4.0:
        failures.append(f"payment simulation disagrees with closed form (|z| = {worst:.2f})")

    if failures:
        print("certification: FAIL")
        for msg in failures:
            print(f"  - {msg}", file=sys.stderr)
        return EXIT_CERTIFICATION
    print("certification: PASS")
    return EXIT_OK


# ---------------------------------------------------------------------------
# welfare
# ---------------------------------------------------------------------------

def _cmd_welfare(args) -> int:
    try:
        m = _load_market(args.config)
    except ConfigError as err:
        return _fail(str(err), EXIT_INPUT)
    try:
        w, system, sol = _solve_pipeline(m)
    except NoEquilibriumError as err:
        print(f"no equilibrium: spectral radius {_fmt(err.rho)} >= 1 - 1e-9", file=sys.stderr)
        return EXIT_NO_EQUILIBRIUM
    except (SingularDesignError, GammaNegativeError, NumericFailure, ValueError) as err:
        return _fail(str(err), EXIT_INPUT)
    try:
        report = price_of_anarchy(sol, w, m)
    except (EtaNotOneError, DegenerateSourceError, UndefinedPoaError) as err:
        return _fail(str(err), EXIT_INPUT)

    _print_vector("equilibrium efforts", report.efforts_eq)
    _print_vector("socially optimal efforts", report.efforts_opt)
    print(f"social loss at equilibrium: {_fmt(report.loss_eq)}")
    print(f"social loss at optimum: {_fmt(report.loss_opt)}")
    print(f"price of anarchy: {_fmt(report.poa)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="datamarket",
        description="Equilibrium and welfare analysis for data markets with quadratic contracts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one market and report the equilibrium")
    p_solve.add_argument("config", help="market config JSON")
    p_solve.add_argument("--json-out", default=None, help="also write the full solution as JSON")

    p_sweep = sub.add_parser("sweep", help="sweep one scalar parameter, write a CSV")
    p_sweep.add_argument("spec", help="sweep spec JSON (param, range, base)")
    p_sweep.add_argument("--out", required=True, help="output CSV path")

    p_check = sub.add_parser("check", help="certify a solved market with independent oracles")
    p_check.add_argument("config", help="market config JSON")
    p_check.add_argument("--seed", type=int, default=42, help="simulation seed")
    p_check.add_argument("--samples", type=int, default=100000, help="simulation rounds")
    p_check.add_argument("--radius", type=float, default=0.5, help="deviation box half-width")
    p_check.add_argument("--steps", type=int, default=41, help="grid points per coordinate")
    p_check.add_argument("--f-coeffs", default="0,1",
                         help="ground-truth polynomial coefficients, low order first")
    p_check.add_argument("--perturb", default=None, metavar="BUYER,SOURCE,DELTA",
                         help="nudge one slope before checking (diagnostic)")

    p_welfare = sub.add_parser("welfare", help="equilibrium welfare versus the social optimum")
    p_welfare.add_argument("config", help="market config JSON")

    args = parser.parse_args(argv)
    handler = {
        "solve": _cmd_solve,
        "sweep": _cmd_sweep,
        "check": _cmd_check,
        "welfare": _cmd_welfare,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())
