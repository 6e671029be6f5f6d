"""``copolymer-lab`` command-line front end.

Every subcommand writes into a fresh run directory under the output root
(``--out``, else ``$COPOLYMER_LAB_OUT``, else ``./runs``): a ``result.jsonl``
record, CSV tables where applicable, and ``manifest.json``.

Exit status: 0 success, 2 validation error, 3 experiment failure (estimation
failure or a ``check-*`` / ``oracle-verify`` criterion not met; the meander
check is exploratory and never fails the run), 4 budget exceeded (including
an exhausted disorder stream).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .. import __version__
from ..annealed import annealed_vs_quenched, supermartingale_diagnostic
from ..core.excursion import occupation_spectrum, partition, sample_occupations
from ..core.longrange import constrained_log_partition_longrange, free_log_partition_longrange
from ..core.params import ModelParams
from ..core.position import partition_position_engine
from ..disorder import DisorderLaw, _generator, critical_bounds, read_binary, sample, to_bytes, to_csv
from ..errors import BudgetExceeded, EstimationFailed, InvalidArgument, NeedsMoreDisorder
from ..experiments.common import result_record, to_jsonable
from ..experiments.concentration import concentration_experiment
from ..experiments.free_energy import critical_point_estimate, free_energy_estimate, slope_at_origin
from ..experiments.interpolation import interpolation_experiment
from ..experiments.meander import meander_endpoint_check
from ..experiments.stretch import stretch_growth_experiment
from ..experiments.tails import deloc_tail_experiment, deloc_tail_interior, last_exit_experiment, two_sided_experiment
from ..verification import annealed_enumeration_suite, engine_agreement, invariant_suite, oracle_suite
from .config import EXPERIMENTS, OUT_ENV, RunConfig, load_config
from .output import RunWriter

EXIT_OK, EXIT_INVALID, EXIT_FAILED, EXIT_BUDGET = 0, 2, 3, 4

HELP = {
    "gen-disorder": "sample disorder vectors (binary and/or CSV)",
    "partition": "log partition function for one disorder vector",
    "spectrum": "occupation spectrum log Z(m) for one disorder vector (O(N^3))",
    "free-energy": "disorder-averaged free energy over an N grid and localization flag",
    "critical-point": "bisection estimate of the critical asymmetry at fixed lambda",
    "slope-origin": "critical-curve ratio h_c(lambda)/lambda on a lambda grid",
    "check-deloc-tail": "occupation tail vs the annealed envelope (or interior exponential decay)",
    "check-last-exit": "last-exit tail decay (free) or two-sided exits (constrained)",
    "check-concentration": "Lipschitz bound and sub-Gaussian concentration of F(m)",
    "check-interpolation": "law-interpolation bound: slope of |E1 F - E2 F| in lambda",
    "check-stretch": "growth of N^(1/2) Z^f along atypical-stretch stopping times",
    "check-meander": "endpoint law vs the meander marginal (exploratory)",
    "check-annealed": "annealed identity vs Monte-Carlo quenched average",
    "sample-paths": "draw occupation / last-exit samples from the polymer measure",
    "oracle-verify": "enumeration oracle, engine agreement, annealed enumeration and invariant suites",
}

SPECTRUM_COMMANDS = {"spectrum", "check-deloc-tail", "check-concentration"}


# ---------------------------------------------------------------------------
# helpers


def _params(cfg: RunConfig, **changes) -> ModelParams:
    kw = dict(lam=cfg.lam, h=cfg.h, N=cfg.N, endpoint=cfg.endpoint, variant=cfg.variant)
    kw.update(changes)
    return ModelParams(**kw)


def _omega(cfg: RunConfig) -> np.ndarray:
    if cfg.disorder:
        vec = read_binary(cfg.disorder)
        if vec.N < cfg.N:
            raise InvalidArgument(f"disorder file holds {vec.N} values, need N={cfg.N}", field="disorder")
        return vec.values[: cfg.N]
    return sample(cfg.law, cfg.N, cfg.seed, cfg.replica).values


def _curve_rows(curve):
    ref = curve.reference if curve.reference is not None else [None] * len(curve.grid)
    return [(int(x), float(m), float(s), None if r is None else float(r))
            for x, m, s, r in zip(curve.grid, curve.mean, curve.se, ref)]


def _emit(w: RunWriter, cfg: RunConfig, payload, passed: bool | None) -> None:
    w.write_jsonl("result.jsonl", [result_record(cfg.experiment, payload, cfg.seed, passed)])


# ---------------------------------------------------------------------------
# subcommands; each returns None (no pass/fail criterion) or a bool


def cmd_gen_disorder(cfg: RunConfig, w: RunWriter):
    summary = []
    for r in range(cfg.replica, cfg.replica + cfg.replicas):
        vec = sample(cfg.law, cfg.N, cfg.seed, r)
        if cfg.format in ("bin", "both"):
            w.write_bytes(f"omega-r{r}.bin", to_bytes(vec))
        if cfg.format in ("csv", "both"):
            w.write_bytes(f"omega-r{r}.csv", to_csv(vec).encode())
        summary.append({"replica": r, "mean": float(vec.values.mean()), "var": float(vec.values.var())})
    _emit(w, cfg, {"law": DisorderLaw.parse(cfg.law).value, "N": cfg.N, "vectors": summary}, None)
    print(f"wrote {len(summary)} disorder vector(s) of length {cfg.N}")


def cmd_partition(cfg: RunConfig, w: RunWriter):
    om = _omega(cfg)
    p = _params(cfg)
    if cfg.engine == "longrange":
        if cfg.variant != "copolymer":
            raise InvalidArgument("the long-range engine supports the copolymer only", field="engine")
        logZ_c = constrained_log_partition_longrange(om, cfg.lam, cfg.h, cfg.N)
        logZ = (free_log_partition_longrange(om, cfg.lam, cfg.h, cfg.N, logZ_c) if cfg.endpoint == "free"
                else float(logZ_c[-1]))
    else:
        pt = partition(p, om) if cfg.engine == "excursion" else partition_position_engine(p, om)
        logZ_c, logZ = pt.logZ_c, pt.logZ
    w.write_csv("partition.csv", ["k", "log_value"], [(2 * i, float(v)) for i, v in enumerate(logZ_c)])
    _emit(w, cfg, {"params": p, "engine": cfg.engine, "logZ": logZ, "free_energy": logZ / cfg.N}, None)
    print(f"log Z = {logZ:.15g}   F_N = {logZ / cfg.N:.15g}")


def cmd_spectrum(cfg: RunConfig, w: RunWriter):
    p = _params(cfg)
    spec = occupation_spectrum(p, _omega(cfg), budget=cfg.spectrum_cap)
    prob = spec.probabilities()
    w.write_csv("spectrum.csv", ["m", "log_value", "probability"],
                [(int(m), float(l), float(q)) for m, l, q in zip(spec.m, spec.logZ_by_m, prob)])
    _emit(w, cfg, {"params": p, "logZ": spec.logZ, "mean_occupation": spec.mean()}, None)
    print(f"log Z = {spec.logZ:.15g}   mean occupation = {spec.mean():.6g}")


def cmd_free_energy(cfg: RunConfig, w: RunWriter):
    est = free_energy_estimate(cfg.lam, cfg.h, cfg.law, cfg.N_grid, cfg.replicas, cfg.seed, cfg.resolved_workers())
    w.write_csv("free_energy.csv", ["N", "mean_Fc", "se_Fc", "mean_Ff", "se_Ff"],
                zip(est.N_grid.tolist(), est.mean_Fc.tolist(), est.se_Fc.tolist(),
                    est.mean_Ff.tolist(), est.se_Ff.tolist()))
    payload = {**to_jsonable(est), "lower_bound": est.lower_bound, "constrained_bound_ok": est.constrained_bound_ok()}
    _emit(w, cfg, payload, None)
    state = "localized" if est.localized_flag else ("indeterminate" if est.indeterminate else "delocalized")
    print(f"F_inf = {est.F_inf:.6g} +- {est.F_inf_se:.2g}   {state}")


def cmd_critical_point(cfg: RunConfig, w: RunWriter):
    est = critical_point_estimate(cfg.lam, cfg.law, cfg.N_grid, cfg.replicas, cfg.tol_h, cfg.seed,
                                  cfg.resolved_workers())
    w.write_csv("evaluations.csv", ["h", "F_inf", "F_inf_se", "localized", "indeterminate"], est.evaluations)
    _emit(w, cfg, {**to_jsonable(est), "intersects_bounds": est.intersects_bounds()}, None)
    print(f"h_c in [{est.interval[0]:.4f}, {est.interval[1]:.4f}]   bounds [{est.h_lower:.4f}, {est.h_upper:.4f}]")


def cmd_slope_origin(cfg: RunConfig, w: RunWriter):
    rep = slope_at_origin(cfg.law, cfg.lambda_grid, cfg.N_grid, cfg.replicas, cfg.tol_h, cfg.seed,
                          cfg.resolved_workers())
    w.write_csv("slope.csv", ["lambda", "ratio", "ratio_lo", "ratio_hi", "in_band"],
                zip(rep.lam.tolist(), rep.ratio.tolist(), rep.ratio_lo.tolist(), rep.ratio_hi.tolist(),
                    rep.in_band.tolist()))
    _emit(w, cfg, rep, None)
    print("h_c/lambda: " + ", ".join(f"{l:g}:{r:.3f}" for l, r in zip(rep.lam, rep.ratio)))


def cmd_check_deloc_tail(cfg: RunConfig, w: RunWriter):
    p = _params(cfg)
    if cfg.interior:
        curve = deloc_tail_interior(p, cfg.law, cfg.m_grid, cfg.replicas, cfg.seed, cfg.q_hat,
                                    workers=cfg.resolved_workers())
    else:
        curve = deloc_tail_experiment(p, cfg.law, cfg.m_grid, cfg.replicas, cfg.seed, workers=cfg.resolved_workers())
    return _finish_curve(cfg, w, curve)


def cmd_check_last_exit(cfg: RunConfig, w: RunWriter):
    if cfg.two_sided:
        curve = two_sided_experiment(_params(cfg, endpoint="constrained"), cfg.law, cfg.ell_grid, cfg.replicas,
                                     cfg.seed, workers=cfg.resolved_workers())
    else:
        curve = last_exit_experiment(_params(cfg, endpoint="free"), cfg.law, cfg.ell_grid, cfg.replicas, cfg.seed,
                                     workers=cfg.resolved_workers())
    return _finish_curve(cfg, w, curve)


def _finish_curve(cfg: RunConfig, w: RunWriter, curve):
    w.write_csv("curve.csv", ["x", "mean", "stderr", "reference"], _curve_rows(curve))
    _emit(w, cfg, curve, curve.passed)
    print(f"{curve.kind}: fit slope {curve.fit_slope:.4g} +- {curve.fit_slope_se:.2g}   passed={curve.passed}")
    return curve.passed


def cmd_check_concentration(cfg: RunConfig, w: RunWriter):
    rep = concentration_experiment(_params(cfg), cfg.law, cfg.m, cfg.replicas, cfg.seed, n_pairs=cfg.pairs,
                                   workers=cfg.resolved_workers())
    w.write_csv("tail.csv", ["u_sd", "empirical", "envelope"],
                zip(rep.tail_u.tolist(), rep.tail_empirical.tolist(), rep.tail_envelope.tolist()))
    _emit(w, cfg, rep, rep.passed)
    print(f"Lipschitz violations {rep.lipschitz.violations}/{rep.lipschitz.n_trials}   sd {rep.sd:.3g} "
          f"(envelope {rep.sd_envelope:.3g})   kappa {rep.kappa:.3g}   passed={rep.passed}")
    return rep.passed


def cmd_check_interpolation(cfg: RunConfig, w: RunWriter):
    cur = interpolation_experiment(cfg.v, cfg.lambda_grid, cfg.law, cfg.law2, cfg.N, cfg.replicas, cfg.seed,
                                   endpoint=cfg.endpoint, workers=cfg.resolved_workers())
    w.write_csv("interpolation.csv", ["lambda", "mean1", "mean2", "diff", "stderr", "significant"],
                zip(cur.lam.tolist(), cur.mean1.tolist(), cur.mean2.tolist(), cur.diff.tolist(), cur.se.tolist(),
                    cur.significant.tolist()))
    _emit(w, cfg, cur, cur.status == "pass")
    print(f"slope {cur.slope}   status {cur.status}")
    return cur.status == "pass"


def cmd_check_stretch(cfg: RunConfig, w: RunWriter):
    rep = stretch_growth_experiment(cfg.lam, cfg.h, cfg.law, cfg.q, cfg.N_grid, cfg.replicas, cfg.seed,
                                    cfg.delta_prime, workers=cfg.resolved_workers())
    w.write_csv("stretch.csv", ["N", "median_log_statistic", "median_log_tau_ratio"],
                zip(rep.N_grid.tolist(), rep.median_log_statistic.tolist(), rep.median_log_tau_ratio.tolist()))
    _emit(w, cfg, {**to_jsonable(rep), "passed": rep.passed}, rep.passed)
    print(f"median log statistic {np.round(rep.median_log_statistic, 3).tolist()}   "
          f"log tau/log N {np.round(rep.median_log_tau_ratio, 3).tolist()}   passed={rep.passed}")
    return rep.passed


def cmd_check_meander(cfg: RunConfig, w: RunWriter):
    rep = meander_endpoint_check(_params(cfg, endpoint="free"), cfg.law, cfg.replicas, cfg.seed,
                                 workers=cfg.resolved_workers())
    bounds = critical_bounds(cfg.law, cfg.lam) if cfg.lam > 0 else None
    payload = {**to_jsonable(rep), "exploratory": True,
               "above_h_upper": bool(bounds is not None and cfg.h > bounds.h_upper)}
    _emit(w, cfg, payload, rep.passed)
    print(f"KS {rep.ks:.4f} (lattice {rep.ks_lattice:.4f})   threshold {rep.threshold}   passed={rep.passed}"
          "   (exploratory, does not affect the exit status)")
    return None


def cmd_check_annealed(cfg: RunConfig, w: RunWriter):
    p = _params(cfg)
    rep = annealed_vs_quenched(p, cfg.law, None, cfg.replicas, cfg.seed, workers=cfg.resolved_workers())
    sm = supermartingale_diagnostic(p, cfg.law, None, cfg.N_grid)
    w.write_csv("annealed.csv", ["m", "log_annealed", "mc_mean", "mc_stderr", "z"],
                zip(rep.m.tolist(), rep.log_annealed_by_m.tolist(), rep.mc_mean.tolist(), rep.mc_stderr.tolist(),
                    rep.z_scores.tolist()))
    passed = bool(rep.max_abs_z() <= 3.0 and sm.ok)
    _emit(w, cfg, {"annealed": rep.to_record(), "supermartingale": to_jsonable(sm), "max_abs_z": rep.max_abs_z()},
          passed)
    print(f"beta {rep.beta:.4g}   max |z| {rep.max_abs_z():.3f}   supermartingale ok={sm.ok}   passed={passed}")
    return passed


def cmd_sample_paths(cfg: RunConfig, w: RunWriter):
    p = _params(cfg)
    occ, last = sample_occupations(p, _omega(cfg), _generator(cfg.seed, 10**9 + cfg.replica), cfg.samples)
    w.write_csv("samples.csv", ["sample", "occupation", "last_exit"],
                zip(range(cfg.samples), occ.tolist(), last.tolist()))
    _emit(w, cfg, {"params": p, "samples": cfg.samples, "mean_occupation": float(occ.mean()),
                   "mean_last_exit": float(last.mean())}, None)
    print(f"{cfg.samples} samples   mean occupation {occ.mean():.4g}")


def cmd_oracle_verify(cfg: RunConfig, w: RunWriter):
    Ns = tuple(range(2, cfg.N + 1, 2))
    suites = [
        oracle_suite(Ns, cfg.configs, cfg.seed),
        engine_agreement(seed=cfg.seed + 1),
        annealed_enumeration_suite(tuple(n for n in Ns if n <= 12), seed=cfg.seed + 2),
        invariant_suite(seed=cfg.seed + 3),
    ]
    rows = [(s.name, k, v, s.tolerances[k], v <= s.tolerances[k]) for s in suites for k, v in s.deviations.items()]
    w.write_csv("oracle.csv", ["suite", "quantity", "max_deviation", "tolerance", "ok"], rows)
    passed = all(s.passed for s in suites)
    payload = {s.name: {"passed": s.passed, "configs": s.configs, "max_deviation": s.max_deviation,
                        "deviations": s.deviations, "failures": s.failures} for s in suites}
    _emit(w, cfg, payload, passed)
    for s in suites:
        print(f"{s.name:22s} {'PASS' if s.passed else 'FAIL'}   max deviation {s.max_deviation:.3g}"
              + (f"   failures: {', '.join(s.failures)}" if s.failures else ""))
    return passed


COMMANDS = {
    "gen-disorder": cmd_gen_disorder,
    "partition": cmd_partition,
    "spectrum": cmd_spectrum,
    "free-energy": cmd_free_energy,
    "critical-point": cmd_critical_point,
    "slope-origin": cmd_slope_origin,
    "check-deloc-tail": cmd_check_deloc_tail,
    "check-last-exit": cmd_check_last_exit,
    "check-concentration": cmd_check_concentration,
    "check-interpolation": cmd_check_interpolation,
    "check-stretch": cmd_check_stretch,
    "check-meander": cmd_check_meander,
    "check-annealed": cmd_check_annealed,
    "sample-paths": cmd_sample_paths,
    "oracle-verify": cmd_oracle_verify,
}
assert set(COMMANDS) == set(EXPERIMENTS)


def run(cfg: RunConfig) -> int:
    """Execute one configured experiment; returns the exit status."""
    if cfg.experiment in SPECTRUM_COMMANDS and cfg.N > cfg.spectrum_cap:
        print(f"error: N={cfg.N} exceeds the spectrum cap {cfg.spectrum_cap}; "
              "use sample-paths for Monte-Carlo estimates at this size", file=sys.stderr)
        return EXIT_BUDGET
    if cfg.experiment == "oracle-verify" and cfg.N > cfg.enum_cap:
        print(f"error: enumeration at N={cfg.N} exceeds the enumeration cap {cfg.enum_cap}", file=sys.stderr)
        return EXIT_BUDGET
    w = RunWriter(cfg.output_root(), cfg.experiment, cfg.seed)
    status, code, message = "ok", EXIT_OK, None
    try:
        passed = COMMANDS[cfg.experiment](cfg, w)
        if passed is False:
            status, code = "failed", EXIT_FAILED
    except InvalidArgument as exc:
        status, code, message = "invalid", EXIT_INVALID, _describe(exc)
    except EstimationFailed as exc:
        status, code, message = "failed", EXIT_FAILED, str(exc)
        w.write_jsonl("diagnostics.jsonl", [to_jsonable(exc.diagnostics)])
    except (BudgetExceeded, NeedsMoreDisorder) as exc:
        status, code, message = "budget", EXIT_BUDGET, str(exc)
    if message:
        print(f"error: {message}", file=sys.stderr)
    w.finish(cfg.echo(), status, message)
    print(f"run directory: {w.dir}")
    return code


def _describe(exc: InvalidArgument) -> str:
    field = getattr(exc, "field", None)
    return f"invalid {field}: {exc}" if field else str(exc)


# ---------------------------------------------------------------------------
# argument parsing


def _common_options() -> argparse.ArgumentParser:
    d = RunConfig("partition")
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("model and run options (flags override --config values)")
    g.add_argument("--config", metavar="PATH", help="key = value config file with [experiment] sections")
    g.add_argument("--lambda", dest="lam", type=float, help=f"coupling lambda >= 0 (default {d.lam})")
    g.add_argument("--h", type=float, help=f"asymmetry h (default {d.h})")
    g.add_argument("--N", type=str, help=f"even chain length; a range a:b:s sets the N grid (default {d.N})")
    g.add_argument("--endpoint", choices=("free", "constrained"), help=f"endpoint condition (default {d.endpoint})")
    g.add_argument("--variant", choices=("copolymer", "pinning"), help=f"model variant (default {d.variant})")
    laws = [l.value for l in DisorderLaw]
    g.add_argument("--law", help=f"disorder law: {', '.join(laws)} or bernoulli/gaussian/uniform (default {d.law})")
    g.add_argument("--law2", help=f"second law for check-interpolation (default {d.law2})")
    g.add_argument("--replicas", type=int, help=f"number of disorder replicas (default {d.replicas})")
    g.add_argument("--replica", type=int, help="replica index for single-vector commands (default 0)")
    g.add_argument("--seed", type=int, help=f"master seed (default {d.seed})")
    g.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./runs)")
    g.add_argument("--workers", type=int, help="worker processes (default: available CPUs)")
    g.add_argument("--N-grid", dest="N_grid", help="N grid, a:b:s or comma list")
    g.add_argument("--m-grid", dest="m_grid", help="occupation grid")
    g.add_argument("--ell-grid", dest="ell_grid", help="last-exit grid")
    g.add_argument("--lambda-grid", dest="lambda_grid", help="coupling grid")
    g.add_argument("--m", type=int, help=f"occupation value for check-concentration (default {d.m})")
    g.add_argument("--q", type=float, help=f"stretch threshold q < h for check-stretch (default {d.q})")
    g.add_argument("--q-hat", dest="q_hat", type=float, help=f"interior-tail window factor (default {d.q_hat})")
    g.add_argument("--tol-h", dest="tol_h", type=float, help=f"bisection tolerance in h (default {d.tol_h})")
    g.add_argument("--v", type=float, help=f"h = v * lambda for check-interpolation (default {d.v})")
    g.add_argument("--delta-prime", dest="delta_prime", type=float,
                   help=f"exponent offset for check-stretch (default {d.delta_prime})")
    g.add_argument("--samples", type=int, help=f"draws for sample-paths (default {d.samples})")
    g.add_argument("--pairs", type=int, help=f"Lipschitz trials for check-concentration (default {d.pairs})")
    g.add_argument("--configs", type=int, help=f"random configurations for oracle-verify (default {d.configs})")
    g.add_argument("--engine", choices=("excursion", "position", "longrange"),
                   help=f"partition engine (default {d.engine})")
    g.add_argument("--disorder", metavar="PATH", help="binary disorder file instead of sampling")
    g.add_argument("--format", choices=("bin", "csv", "both"), help=f"gen-disorder output format (default {d.format})")
    g.add_argument("--interior", action="store_const", const=True, help="check-deloc-tail: interior decay test")
    g.add_argument("--two-sided", dest="two_sided", action="store_const", const=True,
                   help="check-last-exit: constrained two-sided exits")
    g.add_argument("--enum-cap", dest="enum_cap", type=int, help=f"enumeration cap (default {d.enum_cap})")
    g.add_argument("--spectrum-cap", dest="spectrum_cap", type=int,
                   help=f"largest N for the O(N^3) spectrum (default {d.spectrum_cap})")
    return p


OPTION_KEYS = ("lam", "h", "N", "endpoint", "variant", "law", "law2", "replicas", "replica", "seed", "out", "workers",
               "N_grid", "m_grid", "ell_grid", "lambda_grid", "m", "q", "q_hat", "tol_h", "v", "delta_prime",
               "samples", "pairs", "configs", "engine", "disorder", "format", "interior", "two_sided", "enum_cap",
               "spectrum_cap")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copolymer-lab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    common = _common_options()
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common], help=HELP[name], description=HELP[name])
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: getattr(args, k) for k in OPTION_KEYS}
    try:
        cfg = load_config(args.command, args.config, overrides)
    except InvalidArgument as exc:
        print(f"error: {_describe(exc)}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
