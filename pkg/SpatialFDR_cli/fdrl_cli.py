"""
SpatialFDR command line interface.

Runs the FDR and FDR_L procedures on lattice files, simulates the synthetic
scenarios, analyzes the lack of identification phenomenon and sweeps
replicates for sensitivity/specificity/FDP comparisons.

### Usage:

```bash
spatialfdr <command> [OPTIONS]
```

### Commands:
    - `simulate`: Draw a scenario; writes y.lat, truth.lat and truth.pgm.
    - `pvalues`: Turn y.lat into p-values under a null model; writes p.lat.
    - `aggregate`: Median/mean filter p-values; writes pstar.lat.
    - `fdr`: Threshold raw p-values; writes fdr_curve.csv, fdr_summary.json
      and fdr_mask.{lat,pgm,csv}.
    - `fdrl`: Aggregate, estimate the null and threshold p*-values; writes
      fdrl_curve.csv, fdrl_summary.json, gstar.json and
      fdrl_mask.{lat,pgm,csv}.
    - `alpha-inf`: alpha_inf and endurance for a distribution model; writes
      alpha_inf.json and prints a table with one column per C.
    - `score`: Compare a mask with the truth; writes metrics.json.
    - `sweep`: Replicates x alphas x lambdas; writes sweep.csv,
      sweep_summary.json and, with --curves, curves.csv.

### Common parameters:
    - `--out-dir`: Output directory; default '.'.
    - `--seed`: Run seed; default 0.
    - `--alpha`: Target FDR level; default 0.05.
    - `--lambda`: Tuning constant; default 0.1.
    - `--neighborhood`: cross5, cross7, knn:K or radius:R; default cross5
      for 2D and cross7 for 3D inputs.
    - `--border`: truncate or mirror; default truncate.
    - `--filter`: median or mean; default median.
    - `--method`: 1 (Method I), 1n (normal approximation), 2 (Method II)
      or beta (analytic null of the interior neighborhood size); default 1.
    - `--reps`: Method II resampling draws; default 1.
    - `-D, --debug`: Enable debug logging.
    - `--log-file`: Also log to this file.

Every run writes manifest.json next to its outputs. Errors are reported as
a JSON object {"error": <code>, "message": ...} on stderr; library errors
exit with status 2, unexpected failures with status 1.
"""

from dataclasses import asdict, dataclass, field
import argparse
import json
import logging
import os
import sys

import numpy as np
from colorama import Fore, Style, init
import halo

import SpatialFDR
from SpatialFDR.aggregate import FilterKind, aggregate
from SpatialFDR.errors import (ConfigError, DimsMismatchError,
                               InvalidLatticeError, SpatialFDRError)
from SpatialFDR.fdr_core import INIT_ALPHA, INIT_LAMBDA, RejectionMask
from SpatialFDR.lattice_grid import (BORDERS, BooleanLattice,
                                     NeighborhoodSpec, build_neighborhoods)
from SpatialFDR.lattice_io import (atomic_write, read_any, write_csv,
                                   write_json, write_lattice, write_pgm)
from SpatialFDR.lip_analysis import (INIT_K, INIT_PI0, INIT_TGRID_POINTS,
                                     DEFAULT_SHIFTS, DistModel,
                                     alpha_inf_exponential,
                                     alpha_inf_numeric, format_table,
                                     parse_shift, shift_label)
from SpatialFDR.log_config import configure_logging
from SpatialFDR.procedures import (INIT_METHOD, METHODS, null_cdf_for,
                                   run_fdr, run_fdrl_on_pstar)
from SpatialFDR.simulation import (SCENARIOS, generate, metrics,
                                   pvalues_one_sided, pvalues_two_sided,
                                   scenario_from_name)
from SpatialFDR.sweep import (CURVE_FIELDS, rows_to_csv, run_sweep,
                              summarize)

logger = logging.getLogger("spatialfdr.cli")

COMMANDS = ("simulate", "pvalues", "aggregate", "fdr", "fdrl", "alpha-inf",
            "score", "sweep")
MODELS = ("exp", "normal", "t")


@dataclass
class RunConfig:
    """Validated settings of one command line run, dumped to the
    manifest."""
    command: str
    out_dir: str = "."
    seed: int = 0
    alpha: float = INIT_ALPHA
    lam: float = INIT_LAMBDA
    neighborhood: str = ""
    border: str = "truncate"
    filter: str = "median"
    method: str = INIT_METHOD
    reps: int = 1
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command '{self.command}'")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.lam < 1.0:
            raise ConfigError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.border not in BORDERS:
            raise ConfigError(f"Unknown border policy '{self.border}'")
        if self.method not in METHODS:
            raise ConfigError(f"Unknown method '{self.method}'")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        # fail early on a malformed neighborhood
        if self.neighborhood:
            NeighborhoodSpec.parse(self.neighborhood, 2, self.border)

    @classmethod
    def from_args(cls, args):
        common = {"command", "out_dir", "seed", "alpha", "lam",
                  "neighborhood", "border", "filter", "method", "reps",
                  "debug", "log_file"}
        options = {k: v for k, v in vars(args).items() if k not in common}
        return cls(command=args.command, out_dir=args.out_dir,
                   seed=args.seed, alpha=args.alpha, lam=args.lam,
                   neighborhood=args.neighborhood or "",
                   border=args.border, filter=args.filter,
                   method=str(args.method), reps=args.reps, options=options)

    def to_dict(self):
        return asdict(self)

    def path(self, name):
        return os.path.join(self.out_dir, name)

    def spec_for(self, ndim):
        return NeighborhoodSpec.parse(self.neighborhood, ndim, self.border)


def _say(text, color=""):
    print(f"{color}{text}{Style.RESET_ALL}" if color else text)


def _float_list(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected comma separated numbers, got '{text}'") from None


def _dims(text):
    try:
        return tuple(int(v) for v in str(text).lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected dims like 128x128, got '{text}'") from None


class ArgumentParser(argparse.ArgumentParser):
    """Raises usage errors as ConfigError instead of exiting."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def parse_arguments(argv=None):
    common = ArgumentParser(add_help=False)
    common.add_argument('--out-dir', dest='out_dir', type=str, default='.',
                        help='Directory receiving all output files and manifest.json. Created when missing. Default is the current directory.')
    common.add_argument('--seed', type=int, default=0,
                        help='Run seed. Noise fields, Method II resampling and Monte Carlo nulls draw from independent streams of this seed. Default is 0.')
    common.add_argument('--alpha', type=float, default=INIT_ALPHA,
                        help=f'Target FDR level in [0, 1]. Default is {INIT_ALPHA}.')
    common.add_argument('--lambda', dest='lam', type=float, default=INIT_LAMBDA,
                        help=f'Tuning constant in (0, 1) used to estimate the null mass from the upper tail. Default is {INIT_LAMBDA}.')
    common.add_argument('--neighborhood', type=str, default='',
                        help='Neighborhood shape: cross5, cross7, knn:K or radius:R. Default is cross5 for 2D and cross7 for 3D lattices.')
    common.add_argument('--border', type=str, choices=BORDERS, default='truncate',
                        help='Border policy. truncate drops neighbors outside the lattice, mirror reflects them back so every site keeps the full neighborhood. Default is truncate.')
    common.add_argument('--filter', type=str, choices=('median', 'mean', 'both'), default='median',
                        help='Aggregation filter. "both" is only meaningful for sweep, where it scores median and mean side by side. Default is median.')
    common.add_argument('--method', type=str, choices=METHODS, default=INIT_METHOD,
                        help='Null CDF of p*: 1 = Method I symmetric estimate, 1n = normal approximation, 2 = Method II composite estimate, beta = analytic median law of the interior neighborhood size (Monte Carlo for even sizes). Default is 1.')
    common.add_argument('--reps', type=int, default=1,
                        help='Number of independent Method II exclusion/resampling draws pooled into each component. Default is 1.')
    common.add_argument('-D', '--debug', action='store_true', help='Enable debug logging')
    common.add_argument('--log-file', dest='log_file', type=str, default=None,
                        help='Write a timestamped log to this file in addition to the console.')

    parser = ArgumentParser(
        prog='spatialfdr',
        description='Spatial FDR control with locally aggregated p-values (FDR_L).')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {SpatialFDR.__version__}')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help='Draw a synthetic scenario.')
    p.add_argument('--scenario', type=str, choices=SCENARIOS, default='exponential',
                   help='Scenario to draw. Default is exponential.')
    p.add_argument('--C', dest='shift', type=str, default='log8',
                   help='Signal shift of the exponential scenario, e.g. 2.08 or log8. Default is log8.')
    p.add_argument('--dims', type=_dims, default=None,
                   help='Override lattice dims, e.g. 128x128; signal regions scale proportionally.')

    p = sub.add_parser('pvalues', parents=[common], help='Compute p-values from observations.')
    p.add_argument('--input', required=True, help='Observation lattice (raw format or .csv).')
    p.add_argument('--model', choices=MODELS, default='exp',
                   help='Null model: exp = Exp(1) - 1, normal = N(0, 1), t = Student t with --d0 degrees of freedom. Default is exp.')
    p.add_argument('--d0', type=float, default=5.0,
                   help='Degrees of freedom of the Student t null. Default is 5.')
    p.add_argument('--sided', choices=('one', 'two'), default='one',
                   help='one: p = 1 - F0(Y); two: p = 2 min(F0(Y), 1 - F0(Y)). Default is one.')

    p = sub.add_parser('aggregate', parents=[common], help='Aggregate p-values over neighborhoods.')
    p.add_argument('--input', required=True, help='p-value lattice.')

    p = sub.add_parser('fdr', parents=[common], help='FDR procedure on raw p-values.')
    p.add_argument('--input', required=True, help='p-value lattice.')

    p = sub.add_parser('fdrl', parents=[common], help='FDR_L procedure on aggregated p-values.')
    p.add_argument('--input', required=True, help='p-value lattice.')
    p.add_argument('--pstar', default=None,
                   help='Precomputed p*-value lattice (output of aggregate). Aggregated from --input when omitted.')

    p = sub.add_parser('alpha-inf', parents=[common], help='alpha_inf and endurance of a model.')
    p.add_argument('--model', choices=MODELS, default='exp',
                   help='exp = shifted exponential, normal = N(0,1) vs N(C, sigma^2), t = t(d0) vs t(d1) + C. Default is exp.')
    p.add_argument('--C', dest='shifts', type=str, nargs='+', default=None,
                   help='One or more shifts, e.g. log8 log12 2.5. Default is the eight values log8 ... log36.')
    p.add_argument('--pi0', type=float, default=INIT_PI0,
                   help=f'Null proportion in (0, 1]. Default is {INIT_PI0}.')
    p.add_argument('--k', type=int, default=INIT_K,
                   help=f'Odd neighborhood size of FDR_L. Default is {INIT_K}.')
    p.add_argument('--sigma', type=float, default=1.0,
                   help='Alternative standard deviation of the normal model. Default is 1.')
    p.add_argument('--d0', type=float, default=5.0, help='Null degrees of freedom of the t model. Default is 5.')
    p.add_argument('--d1', type=float, default=5.0, help='Alternative degrees of freedom of the t model. Default is 5.')
    p.add_argument('--numeric', action='store_true',
                   help='Use the grid infimum even where a closed form exists (exp model with k=5).')
    p.add_argument('--tgrid', type=int, default=INIT_TGRID_POINTS,
                   help=f'Points of the geometric t grid. Default is {INIT_TGRID_POINTS}.')

    p = sub.add_parser('score', parents=[common], help='Score a rejection mask against the truth.')
    p.add_argument('--mask', required=True, help='Rejection mask (u8 raw format).')
    p.add_argument('--truth', required=True, help='Truth mask (u8 raw format).')

    p = sub.add_parser('sweep', parents=[common], help='Replicate sweep over alphas and lambdas.')
    p.add_argument('--scenario', type=str, choices=SCENARIOS, default='example1-desk',
                   help='Scenario to draw. Default is example1-desk (128x128).')
    p.add_argument('--C', dest='shift', type=str, default='log8',
                   help='Signal shift of the exponential scenario. Default is log8.')
    p.add_argument('--dims', type=_dims, default=None, help='Override lattice dims, e.g. 64x64.')
    p.add_argument('--replicates', type=int, default=20,
                   help='Number of replicates; replicate r uses seed + r. Default is 20.')
    p.add_argument('--alphas', type=_float_list, default=[0.01, 0.05, 0.1],
                   help='Comma separated alpha levels. Default is 0.01,0.05,0.1.')
    p.add_argument('--lambdas', type=_float_list, default=[INIT_LAMBDA],
                   help=f'Comma separated lambda values. Default is {INIT_LAMBDA}.')
    p.add_argument('--sided', choices=('one', 'two'), default='one',
                   help='p-value rule. Default is one.')
    p.add_argument('--workers', type=int, default=1,
                   help='Worker processes. Results are ordered by replicate whatever the count. Default is 1.')
    p.add_argument('--curves', type=int, default=0, metavar='POINTS',
                   help='Also write average estimated FDR and realized FDP on a grid of this many t values to curves.csv. Default is 0 (off).')
    p.add_argument('--oracle', action='store_true',
                   help='Add the sup distance between the estimated null CDF and the oracle CDF over true null sites.')
    p.add_argument('--no-spinner', dest='no_spinner', action='store_true',
                   help='Disable the progress spinner.')

    return parser.parse_args(argv)


class Runner:
    """Executes one command of a RunConfig and records its outputs."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.outputs = []

    def _write(self, name, writer, obj):
        writer(self.config.path(name), obj)
        self.outputs.append(name)

    def _write_text(self, name, text):
        atomic_write(self.config.path(name), text)
        self.outputs.append(name)

    def _write_mask(self, stem, mask):
        self._write(f"{stem}.lat", write_lattice, mask)
        self._write(f"{stem}.pgm", write_pgm, mask)
        if mask.ndim == 2:
            self._write(f"{stem}.csv", write_csv, mask)

    def run(self):
        os.makedirs(self.config.out_dir, exist_ok=True)
        handler = getattr(self, "cmd_" + self.config.command.replace("-", "_"))
        result = handler()
        manifest = {
            "command": self.config.command,
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "version": SpatialFDR.__version__,
            "outputs": sorted(self.outputs),
        }
        write_json(self.config.path("manifest.json"), manifest)
        return result

    def _scenario(self):
        opts = self.config.options
        return scenario_from_name(opts["scenario"],
                                  C=parse_shift(opts.get("shift", "log8")),
                                  dims=opts.get("dims"))

    def cmd_simulate(self):
        scenario = self._scenario()
        y, truth = generate(scenario, self.config.seed)
        self._write("y.lat", write_lattice, y)
        self._write("truth.lat", write_lattice, truth)
        self._write("truth.pgm", write_pgm, truth)
        self._write("scenario.json", write_json, scenario.to_dict())
        _say(f"{scenario.kind}: {list(y.dims)} sites, {truth.count} signal",
             Fore.GREEN)
        return scenario.to_dict()

    def _null_model(self):
        opts = self.config.options
        if opts["model"] == "exp":
            return DistModel.exponential_shift(1.0)
        if opts["model"] == "normal":
            return DistModel.normal(1.0)
        return DistModel.student_t(1.0, opts["d0"], opts["d0"])

    def cmd_pvalues(self):
        y = read_any(self.config.options["input"])
        model = self._null_model()
        if self.config.options["sided"] == "two":
            p = pvalues_two_sided(y, model)
        else:
            p = pvalues_one_sided(y, model)
        self._write("p.lat", write_lattice, p)
        _say(f"p-values: min {p.values.min():.4g}, "
             f"{int(np.count_nonzero(p.values <= 0.05))} <= 0.05", Fore.GREEN)
        return {"sites": p.size}

    def _filter(self):
        if self.config.filter == "both":
            raise ConfigError("--filter both is only supported by sweep")
        return FilterKind.parse(self.config.filter)

    def cmd_aggregate(self):
        p = read_any(self.config.options["input"])
        nbrs = build_neighborhoods(p.dims, self.config.spec_for(p.ndim))
        pstar = aggregate(p, nbrs, self._filter())
        self._write("pstar.lat", write_lattice, pstar)
        _say(f"p*-values over {nbrs.spec.label()} ({nbrs.spec.border})",
             Fore.GREEN)
        return {"sites": pstar.size}

    def _report_curve(self, name, curve, extra=None):
        summary = curve.summary()
        summary.update(extra or {})
        self._write_text(f"{name}_curve.csv", curve.to_csv())
        self._write(f"{name}_summary.json", write_json, summary)
        _say(f"{name.upper()}: t_alpha={curve.t_alpha:.6g}, "
             f"{curve.rejections} rejections at alpha={curve.alpha:g}",
             Fore.GREEN if curve.rejections else Fore.YELLOW)
        return summary

    def cmd_fdr(self):
        p = read_any(self.config.options["input"]).check_unit_interval(
            "p-values")
        result = run_fdr(p, self.config.alpha, self.config.lam)
        self._write_mask("fdr_mask", result.mask)
        return self._report_curve("fdr", result.curve)

    def cmd_fdrl(self):
        opts = self.config.options
        p = read_any(opts["input"]).check_unit_interval("p-values")
        nbrs = build_neighborhoods(p.dims, self.config.spec_for(p.ndim))
        if opts.get("pstar"):
            pstar = read_any(opts["pstar"]).check_unit_interval("p*-values")
            if not pstar.same_dims(p):
                raise DimsMismatchError(
                    f"p* dims {list(pstar.dims)} differ from p dims "
                    f"{list(p.dims)}")
        else:
            pstar = aggregate(p, nbrs, self._filter())
        gstar = null_cdf_for(self.config.method, p, pstar, nbrs,
                             lam=self.config.lam, seed=self.config.seed,
                             reps=self.config.reps)
        result = run_fdrl_on_pstar(pstar, gstar, self.config.alpha,
                                   self.config.lam)
        self._write("gstar.json", write_json, gstar.to_dict())
        self._write_mask("fdrl_mask", result.mask)
        return self._report_curve("fdrl", result.curve, {
            "method": self.config.method,
            "neighborhood": nbrs.spec.label(),
            "fallback": bool(getattr(gstar, "fallback", False)),
        })

    def _lip_model(self, C):
        opts = self.config.options
        if opts["model"] == "exp":
            return DistModel.exponential_shift(C)
        if opts["model"] == "normal":
            return DistModel.normal(C, opts["sigma"])
        return DistModel.student_t(C, opts["d0"], opts["d1"])

    def cmd_alpha_inf(self):
        opts = self.config.options
        shifts = ([parse_shift(s) for s in opts["shifts"]]
                  if opts.get("shifts") else list(DEFAULT_SHIFTS))
        analytic = (opts["model"] == "exp" and opts["k"] == 5
                    and not opts["numeric"])
        entries = []
        for C in shifts:
            entry = {"C": C, "label": shift_label(C)}
            if analytic:
                a_fdr = alpha_inf_exponential(C, self.config.lam,
                                              opts["pi0"], "fdr")
                a_fdrl = alpha_inf_exponential(C, self.config.lam,
                                               opts["pi0"], "fdrl_k5")
                entry["source"] = "analytic"
            else:
                report = alpha_inf_numeric(self._lip_model(C),
                                           self.config.lam, opts["pi0"],
                                           opts["k"], tgrid=opts["tgrid"])
                a_fdr, a_fdrl = report.alpha_inf_fdr, report.alpha_inf_fdrl
                entry["source"] = "numeric"
                entry["report"] = report.to_dict()
            entry.update({
                "alpha_inf_fdr": a_fdr,
                "alpha_inf_fdrl": a_fdrl,
                "endurance_fdr": 1.0 - a_fdr,
                "endurance_fdrl": 1.0 - a_fdrl,
                "alpha_inf_fdr_4dp": f"{a_fdr:.4f}",
                "alpha_inf_fdrl_4dp": f"{a_fdrl:.4f}",
            })
            entries.append(entry)

        result = {"model": opts["model"], "lambda": self.config.lam,
                  "pi0": opts["pi0"], "k": opts["k"], "entries": entries}
        self._write("alpha_inf.json", write_json, result)
        table = format_table((e["C"], e["alpha_inf_fdr"],
                              e["alpha_inf_fdrl"]) for e in entries)
        self._write_text("alpha_inf.txt", table + "\n")
        _say(table, Fore.CYAN)
        return result

    def cmd_score(self):
        opts = self.config.options
        mask = read_any(opts["mask"], mask_type=RejectionMask)
        truth = read_any(opts["truth"])
        if not isinstance(mask, BooleanLattice) or not isinstance(
                truth, BooleanLattice):
            raise InvalidLatticeError("score needs u8 mask files")
        report = metrics(mask, truth).to_dict()
        self._write("metrics.json", write_json, report)
        _say(json.dumps({k: report[k] for k in
                         ("sensitivity", "specificity", "fdp")}), Fore.GREEN)
        return report

    def cmd_sweep(self):
        opts = self.config.options
        scenario = self._scenario()
        filters = (("median", "mean") if self.config.filter == "both"
                   else (self.config.filter,))
        spec = self.config.spec_for(len(scenario.dims))
        for value in opts["alphas"]:
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"alpha must lie in [0, 1], got {value}")
        for value in opts["lambdas"]:
            if not 0.0 < value < 1.0:
                raise ConfigError(f"lambda must lie in (0, 1), got {value}")

        spinner = None
        if not opts.get("no_spinner") and sys.stdout.isatty():
            spinner = halo.Halo(text=f"sweep 0/{opts['replicates']}")
            spinner.start()

        def progress(i, _):
            if spinner:
                spinner.text = f"sweep {i + 1}/{opts['replicates']}"

        try:
            result = run_sweep(
                scenario, self.config.seed, opts["replicates"],
                opts["alphas"], opts["lambdas"], spec, filters,
                method=self.config.method, reps=self.config.reps,
                sided=opts["sided"], oracle=opts["oracle"],
                curve_points=opts["curves"] or None,
                workers=opts["workers"], on_result=progress)
        finally:
            if spinner:
                spinner.stop()

        summary = summarize(result.rows)
        self._write_text("sweep.csv", rows_to_csv(result.rows))
        self._write("sweep_summary.json", write_json, summary)
        if opts["curves"]:
            self._write_text("curves.csv",
                             rows_to_csv(result.curves, CURVE_FIELDS))
        for row in summary:
            label = row["procedure"] + (f"/{row['filter']}"
                                        if row["filter"] else "")
            _say(f"{label:<12} lambda={row['lambda']:<5g} "
                 f"alpha={row['alpha']:<5g} "
                 f"sens={_fmt(row['sensitivity'])} "
                 f"spec={_fmt(row['specificity'])} fdp={_fmt(row['fdp'])}",
                 Fore.CYAN)
        return summary


def _fmt(value):
    return "n/a" if value is None else f"{value:.4f}"


def main(argv=None):
    init()
    try:
        args = parse_arguments(argv)
        configure_logging(logging.DEBUG if args.debug else logging.WARNING,
                          args.log_file)
        config = RunConfig.from_args(args)
        Runner(config).run()
    except SpatialFDRError as e:
        logger.debug("Run failed: %s", e)
        print(json.dumps(e.to_dict()), file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception("Unexpected error")
        print(json.dumps({"error": "internal", "message": str(e)}),
              file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
