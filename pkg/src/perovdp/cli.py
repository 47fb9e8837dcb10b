"""Command-line front end: spectral | solve | check | simulate.

Exit codes: 0 success, 2 input error, 3 divergence (rho >= 1), 4
verification failure, 1 unexpected.  PEROV_THREADS caps internal (BLAS)
parallelism and must be honored before NumPy loads, so the numeric
modules are imported lazily inside the commands.

All outputs are canonical JSON/CSV: reruns with identical inputs and
seeds are byte-identical.
"""

import os
import sys

import click

EXIT_INPUT = 2
EXIT_DIVERGENCE = 3
EXIT_VERIFICATION = 4

_THREAD_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def _apply_thread_cap():
    raw = os.environ.get("PEROV_THREADS", "").strip()
    if not raw:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise click.UsageError(f"PEROV_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise click.UsageError("PEROV_THREADS must be >= 0 (0 means auto)")
    if cap > 0:
        for var in _THREAD_VARS:
            os.environ.setdefault(var, str(cap))


def _echo_json(obj):
    from .io import canonical_json

    click.echo(canonical_json(obj), nl=False)


def _fail(exc, code):
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guarded(body):
    """Run a command body under the package exit-code policy."""
    from .errors import DivergenceError, InvalidInputError, VerificationError

    try:
        body()
    except InvalidInputError as exc:
        _fail(exc, EXIT_INPUT)
    except DivergenceError as exc:
        if exc.certificate is not None:
            _echo_json({"status": "divergent", "spectral": exc.certificate.to_dict()})
        _fail(exc, EXIT_DIVERGENCE)
    except VerificationError as exc:
        _fail(exc, EXIT_VERIFICATION)
    except click.ClickException:
        raise
    except Exception as exc:  # pragma: no cover - defensive
        _fail(exc, 1)


@click.group()
@click.version_option(package_name="perovdp")
def main():
    """Fixed-point solvers for Markov models with state-dependent discounting."""
    _apply_thread_cap()


@main.command()
@click.argument("matrix_file", type=click.Path(exists=True, dir_okay=False))
def spectral(matrix_file):
    """Spectral radius, sup operator norm and a Gelfand table for a matrix.

    MATRIX_FILE holds a bare row-major JSON array of arrays.
    """

    def body():
        from .io import load_matrix_file
        from .ndmatrix import NonnegativeMatrix, gelfand_estimate, spectral_radius, sup_operator_norm

        arr = load_matrix_file(matrix_file)
        B = NonnegativeMatrix(arr)
        cert = spectral_radius(B)
        table = []
        n = 1
        while n <= 256:
            table.append([n, gelfand_estimate(B, n)])
            n *= 2
        _echo_json({
            "rho": cert.rho,
            "method": cert.method,
            "iterations": cert.iterations,
            "residual": cert.residual,
            "sup_norm": sup_operator_norm(B),
            "gelfand": table,
        })

    _guarded(body)


def _solve_dp(mf, tol, max_iter, out, validate):
    from . import io, markov_dp, mc_oracle

    solution = markov_dp.solve_dp(mf.model, tol=tol, max_iter=max_iter)
    converged = solution.report.terminated == "tolerance_met"
    result = {
        "kind": "dp",
        "status": "solved" if converged else "not_converged",
        "spectral": solution.certificate.to_dict(),
        "convergence": io.convergence_summary(solution.report),
        "solution": {
            "V": solution.V,
            "policy_indices": solution.policy,
        },
    }
    if validate is not None:
        n_paths, horizon, seed = validate
        est = mc_oracle.simulate_dp_value(
            mf.model, solution.policy, 0, 0,
            mc_oracle.SimulationConfig(seed=seed, n_paths=n_paths, horizon=horizon),
        )
        exact = markov_dp.policy_value(mf.model, solution.policy)
        result["validation"] = {
            "estimate": est.to_dict(),
            "policy_value": float(exact[0, 0]),
            "start": {"i0": 0, "x0": 0},
        }
    if out:
        io.write_dp_solution_csv(os.path.join(out, "solution.csv"),
                                 mf.model, solution.V, solution.policy)
        solution.report.to_csv(os.path.join(out, "convergence.csv"))
        io.write_json(os.path.join(out, "result.json"), result)
    _echo_json(result)


def _solve_asset(mf, tol, max_iter, out, validate):
    from . import asset_pricing, io, mc_oracle
    from .ndmatrix import spectral_radius

    check = asset_pricing.existence_check(mf.model)
    if check.status == "divergent":
        result = {
            "kind": "asset",
            "status": "divergent",
            "rho": check.certificate.spectral.rho,
            "near_boundary": check.near_boundary,
            "certificate": check.certificate.to_dict(),
            "v": None,
        }
        if out:
            io.write_json(os.path.join(out, "result.json"), result)
        _echo_json(result)
        sys.exit(EXIT_DIVERGENCE)
    v_iter, report = asset_pricing.pd_ratio_iterative(mf.model, tol=tol, max_iter=max_iter)
    converged = report.terminated == "tolerance_met"
    result = {
        "kind": "asset",
        "status": "finite" if converged else "not_converged",
        "rho": spectral_radius(asset_pricing.pricing_matrix(mf.model)).rho,
        "v": check.v,
        "v_iterative": v_iter,
        "convergence": io.convergence_summary(report),
    }
    if validate is not None:
        n_paths, horizon, seed = validate
        est = mc_oracle.simulate_pd_ratio(
            mf.model, 0,
            mc_oracle.SimulationConfig(seed=seed, n_paths=n_paths, horizon=horizon),
        )
        result["validation"] = {"estimate": est.to_dict(), "start": {"i0": 0}}
    if out:
        io.write_asset_solution_csv(os.path.join(out, "solution.csv"), check.v)
        report.to_csv(os.path.join(out, "convergence.csv"))
        io.write_json(os.path.join(out, "result.json"), result)
    _echo_json(result)


def _solve_savings(mf, tol, max_iter, out, validate):
    from . import io, mc_oracle, savings

    solution = savings.solve_savings(mf.model, tol=tol, max_iter=max_iter)
    converged = solution.report.terminated == "tolerance_met"
    result = {
        "kind": "savings",
        "status": "solved" if converged else "not_converged",
        "spectral": solution.certificate.to_dict(),
        "convergence": io.convergence_summary(solution.report),
        "solution": {
            "asset_grid": mf.model.asset_grid,
            "consumption": solution.consumption,
            "max_euler_residual": float(solution.euler_residuals.max()),
        },
    }
    if validate is not None:
        n_paths, horizon, seed = validate
        a0 = float(mf.model.asset_grid[mf.model.M // 2])
        est = mc_oracle.simulate_savings_value(
            mf.model, solution.consumption, 0, a0,
            mc_oracle.SimulationConfig(seed=seed, n_paths=n_paths, horizon=horizon),
        )
        result["validation"] = {"estimate": est.to_dict(), "start": {"i0": 0, "a0": a0}}
    if out:
        io.write_savings_solution_csv(os.path.join(out, "solution.csv"), mf.model, solution)
        solution.report.to_csv(os.path.join(out, "convergence.csv"))
        io.write_json(os.path.join(out, "result.json"), result)
    _echo_json(result)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--tol", type=float, default=1e-10, show_default=True,
              help="Certified sup-norm error bound at termination.")
@click.option("--max-iter", type=int, default=100_000, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None,
              help="Directory for solution.csv, convergence.csv, result.json.")
@click.option("--validate", type=(int, int, int), default=None,
              metavar="N_PATHS HORIZON SEED",
              help="Cross-check the solution with a Monte Carlo estimate.")
def solve(model_file, tol, max_iter, out, validate):
    """Solve a dp, asset or savings model file."""

    def body():
        from .io import load_model_file

        mf = load_model_file(model_file)
        if out:
            os.makedirs(out, exist_ok=True)
        dispatch = {"dp": _solve_dp, "asset": _solve_asset, "savings": _solve_savings}
        dispatch[mf.kind](mf, tol, max_iter, out, validate)

    _guarded(body)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--samples", "-k", type=int, default=100, show_default=True,
              help="Number of sampled functions/pairs.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--self-test-broken", is_flag=True, hidden=True,
              help="Swap in a deliberately non-monotone operator (diagnostics).")
def check(model_file, samples, seed, self_test_broken):
    """Empirical monotonicity/discounting and contraction checks (dp or savings)."""

    def body():
        import numpy as np

        from . import markov_dp, savings
        from .errors import InvalidInputError, VerificationError
        from .io import load_model_file
        from .ndmatrix import spectral_radius
        from .perov import blackwell_check, grid_sup_metric, verify_contraction_empirical

        if samples < 1:
            raise InvalidInputError("--samples must be >= 1")
        mf = load_model_file(model_file)
        rng = np.random.default_rng(seed)

        if mf.kind == "dp":
            model = mf.model
            B = markov_dp.discount_matrix(model)
            scale = max(1.0, float(np.abs(model.utility[model.feasible]).max()))
            funcs = [rng.uniform(-scale, scale, size=(model.I, model.nx))
                     for _ in range(samples)]
            consts = [rng.uniform(0.0, scale, size=model.I) for _ in range(max(1, samples // 4))]
            operator = lambda V: markov_dp.bellman_operator(model, V)
            dim = model.I
        elif mf.kind == "savings":
            model = mf.model
            B = savings.contraction_matrix(model)
            grid = model.asset_grid

            def draw_candidate():
                alpha = rng.uniform(0.85, 1.0, size=(model.I, 1))
                share = rng.uniform(0.3, 0.95, size=(model.I, 1))
                c = np.minimum(share * grid[None, :] ** alpha, grid[None, :])
                return np.asarray(model.utility.marginal(c), dtype=float)

            funcs = [draw_candidate() for _ in range(samples)]
            base = float(np.asarray(model.utility.marginal(grid[-1:]))[0])
            consts = [rng.uniform(0.0, base, size=model.I) for _ in range(max(1, samples // 4))]
            operator = lambda F: savings.euler_update(model, F)
            dim = model.I
        else:
            raise InvalidInputError("check supports dp and savings models only")

        if self_test_broken:
            operator = lambda F: -np.asarray(F, dtype=float)

        bw = blackwell_check(operator, B, funcs, consts)
        pairs = [(funcs[i], funcs[(i + 1) % len(funcs)]) for i in range(len(funcs))]
        ce = verify_contraction_empirical(operator, grid_sup_metric(dim), B, pairs)
        _echo_json({
            "kind": mf.kind,
            "rho": spectral_radius(B).rho,
            "samples": samples,
            "seed": seed,
            "blackwell": bw.to_dict(),
            "contraction": ce.to_dict(),
        })
        if not (bw.passed and ce.passed):
            raise VerificationError(
                f"operator checks failed: worst blackwell gap {bw.worst:.3e}, "
                f"worst contraction gap {ce.worst:.3e}"
            )

    _guarded(body)


@main.command()
@click.argument("model_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--n-paths", type=int, default=10_000, show_default=True)
@click.option("--horizon", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--i0", type=int, default=0, show_default=True,
              help="Initial exogenous state index.")
@click.option("--x0", type=int, default=0, show_default=True,
              help="Initial endogenous grid index (dp models).")
@click.option("--a0", type=float, default=None,
              help="Initial assets (savings models; default: median grid point).")
@click.option("--tol", type=float, default=1e-10, show_default=True,
              help="Solver tolerance for the policy being simulated.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the estimate JSON to this file.")
def simulate(model_file, n_paths, horizon, seed, i0, x0, a0, tol, out):
    """Solve a model, then estimate its value by Monte Carlo simulation."""

    def body():
        from . import io, markov_dp, mc_oracle, savings
        from .io import load_model_file

        mf = load_model_file(model_file)
        config = mc_oracle.SimulationConfig(seed=seed, n_paths=n_paths, horizon=horizon)
        if mf.kind == "dp":
            solution = markov_dp.solve_dp(mf.model, tol=tol)
            est = mc_oracle.simulate_dp_value(mf.model, solution.policy, i0, x0, config)
            reference = float(markov_dp.policy_value(mf.model, solution.policy)[i0, x0])
            start = {"i0": i0, "x0": x0}
        elif mf.kind == "asset":
            from . import asset_pricing

            est = mc_oracle.simulate_pd_ratio(mf.model, i0, config)
            reference = float(asset_pricing.pd_ratio_closed_form(mf.model)[i0])
            start = {"i0": i0}
        else:
            solution = savings.solve_savings(mf.model, tol=max(tol, 1e-9))
            a_start = float(mf.model.asset_grid[mf.model.M // 2]) if a0 is None else a0
            est = mc_oracle.simulate_savings_value(
                mf.model, solution.consumption, i0, a_start, config
            )
            reference = None
            start = {"i0": i0, "a0": a_start}
        result = {
            "kind": mf.kind,
            "estimate": est.to_dict(),
            "reference": reference,
            "start": start,
            "config": {"n_paths": n_paths, "horizon": horizon, "seed": seed},
        }
        if out:
            io.write_json(out, result)
        _echo_json(result)

    _guarded(body)


if __name__ == "__main__":
    main()
