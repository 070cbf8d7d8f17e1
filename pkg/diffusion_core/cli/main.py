"""
Command line entry point.

    diffusion-core run run.json
    diffusion-core verify runs/r1 --check keythm1
    diffusion-core export runs/r1 --format csv
    diffusion-core nhic saddle run.json
    diffusion-core geo scan run.json

Every command prints one JSON report and exits with 0 on success, 1 on a
stage failure and 2 on a usage or configuration error.
"""
import argparse
import logging
import os
import sys

import numpy as np

from diffusion_core import __version__
from diffusion_core.cache.artifact_store import canonical_json
from diffusion_core.cache.backends import OUTPUT_DIR_ENV
from diffusion_core.cli.export import FORMATS, export_report
from diffusion_core.cli.pipeline import GeodesicStage, NhicStage, PotentialStage, run_pipeline, run_stage
from diffusion_core.cli.verify import CHECKS, verify_command
from diffusion_core.diophantine.approximation import homogeneous_gap, inhomogeneous_dirichlet, is_diophantine
from diffusion_core.diophantine.params import DiophantineParams
from diffusion_core.diophantine.selection import select_resonance_vector
from diffusion_core.errors.exception_handler import exit_code_for, report_exception_handler
from diffusion_core.potential_shaper.averaged import AveragedPotential
from diffusion_core.potential_shaper.deformation import DeformationParams, deform_potential
from diffusion_core.potential_shaper.extrema import nondegeneracy_check, track_extrema
from diffusion_core.potential_shaper.measure import family_c3, find_good_sigma, measure_bad_set
from diffusion_core.response.mixins import ReportHandlerMixin

logger = logging.getLogger(__name__)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class CommandReport(ReportHandlerMixin):
    def __init__(self, name):
        self.stage_name = name


def _cosine_family(cosines, nodes, interval=(0.0, 1.0)):
    """f_t(θ) = Σ_m a_m cos 2πmθ, the same at every node."""
    t = np.linspace(interval[0], interval[1], nodes)
    cosines = np.tile(np.asarray(cosines, dtype=float), (nodes, 1))
    return AveragedPotential.from_cosine_sine(t, cosines, np.zeros_like(cosines), period=1.0)


def command_run(args):
    report = run_pipeline(args.config)
    return report.as_dict()


def command_verify(args):
    return verify_command(args.path, args.check)


def command_export(args):
    return CommandReport("export").success_report(data=export_report(args.run_dir, args.format), message="export complete")


def command_dioph(args):
    report = CommandReport(f"dioph {args.action}")
    omega = np.asarray(args.omega, dtype=float)
    if args.action == "check":
        params = DiophantineParams(eta=args.eta, tau=args.tau, cutoff_K=args.cutoff_K)
        return report.success_report(data=is_diophantine(omega, params).as_dict())
    if args.action == "approx":
        A = args.A if args.A is not None else 0.5 * homogeneous_gap(omega, args.X)
        return report.success_report(data=inhomogeneous_dirichlet(omega, args.alpha, A, args.X).as_dict())
    params = DiophantineParams(eta=args.eta, tau=args.tau, cutoff_K=args.cutoff_K)
    vector = select_resonance_vector(omega, args.R, None if args.k_prev is None else tuple(args.k_prev), params)
    return report.success_report(data={"k": list(vector.k), "certificate": vector.certificate})


def command_stage(stage_name):
    def handler(args):
        return run_stage(args.config, stage_name, until=args.action)

    return handler


def command_potential(args):
    if args.action in PotentialStage.steps:
        return run_stage(args.config, "potential", until=args.action)
    report = CommandReport(f"potential {args.action}")
    family = _cosine_family(args.cosines, args.nodes, args.interval)
    if args.action == "deform":
        params = DeformationParams(args.sigma, args.nu, args.lambda_star, c3=family_c3(family, args.nu))
        deformed = deform_potential(family, params)
        branch = track_extrema(deformed, orientation="min")
        certificate = nondegeneracy_check(branch, args.lambda_star)
        return report.success_report(data={"params": params, "branch": branch.rows(), "certificate": certificate})
    estimate = measure_bad_set(family, args.nu, args.lambda_star, samples=args.samples, seed=args.seed)
    data = {"estimate": estimate}
    if args.good:
        data["good_sigma"] = find_good_sigma(family, args.nu, args.lambda_star, max_tries=args.max_tries, seed=args.seed)
    return report.success_report(data=data)


def _config_argument(parser):
    parser.add_argument("config", help="pipeline configuration (JSON, schema version 1)")


def build_parser():
    parser = argparse.ArgumentParser(prog="diffusion-core", description="Numerical toolkit for resonance nets, normal forms, cylinders and geodesics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING", choices=LOG_LEVELS, help="root logger level")
    parser.add_argument("--output-dir", default=None, help=f"run directory; overrides the config and {OUTPUT_DIR_ENV}")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="run every configured stage and write the report")
    _config_argument(run)
    run.set_defaults(handler=command_run)

    verify = commands.add_parser("verify", help="re-check stored artifacts without recomputation")
    verify.add_argument("path", help="run directory or one of its artifacts")
    verify.add_argument("--check", action="append", default=[], help=f"one of {', '.join(sorted(CHECKS))}; repeatable")
    verify.set_defaults(handler=command_verify)

    export = commands.add_parser("export", help="consolidated report and plot-ready CSV files")
    export.add_argument("run_dir")
    export.add_argument("--format", default="json", choices=FORMATS)
    export.set_defaults(handler=command_export)

    dioph = commands.add_parser("dioph", help="Diophantine checks, approximation and resonance selection")
    dioph.add_argument("action", choices=("check", "approx", "select"))
    dioph.add_argument("--omega", type=float, nargs=2, required=True)
    dioph.add_argument("--eta", type=float, default=0.05)
    dioph.add_argument("--tau", type=float, default=0.2)
    dioph.add_argument("--cutoff-K", dest="cutoff_K", type=int, default=200)
    dioph.add_argument("--alpha", type=float, default=0.5)
    dioph.add_argument("--A", type=float, default=None, help="homogeneous gap; half the measured one by default")
    dioph.add_argument("--X", type=int, default=20)
    dioph.add_argument("--R", type=float, default=20.0)
    dioph.add_argument("--k-prev", dest="k_prev", type=int, nargs=3, default=None)
    dioph.set_defaults(handler=command_dioph)

    tree = commands.add_parser("tree", help="build, partition and verify the resonance net")
    _config_argument(tree)
    tree.set_defaults(handler=command_stage("tree"), action=None)

    nf = commands.add_parser("nf", help="single-resonance normal form")
    _config_argument(nf)
    nf.set_defaults(handler=command_stage("normal_form"), action=None)

    potential = commands.add_parser("potential", help="averaged potential branches, deformations and measure estimates")
    actions = potential.add_subparsers(dest="action", required=True)
    for name in PotentialStage.steps:
        _config_argument(actions.add_parser(name))
    for name in ("deform", "measure"):
        action = actions.add_parser(name)
        action.add_argument("--cosines", type=float, nargs="+", default=[0.0, 0.0, 1.0], help="a_0 a_1 ... of f_t = Σ a_m cos 2πmθ")
        action.add_argument("--interval", type=float, nargs=2, default=[0.0, 1.0])
        action.add_argument("--nodes", type=int, default=9)
        action.add_argument("--nu", type=float, default=0.1)
        action.add_argument("--lambda-star", dest="lambda_star", type=float, default=1e-8)
        action.add_argument("--seed", type=int, default=0)
    actions.choices["deform"].add_argument("--sigma", type=float, nargs=6, default=[0.0] * 6)
    actions.choices["measure"].add_argument("--samples", type=int, default=10_000)
    actions.choices["measure"].add_argument("--good", action="store_true", help="also search a good σ")
    actions.choices["measure"].add_argument("--max-tries", dest="max_tries", type=int, default=100)
    potential.set_defaults(handler=command_potential)

    for name, stage, help_text in (
        ("nhic", NhicStage, "saddle branch, isolating block and cylinder graph"),
        ("geo", GeodesicStage, "critical value, shortest geodesics, homology and saddle orbits"),
    ):
        command = commands.add_parser(name, help=help_text)
        command.add_argument("action", choices=stage.steps)
        _config_argument(command)
        command.set_defaults(handler=command_stage(stage.stage_name))
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    if args.output_dir:
        os.environ[OUTPUT_DIR_ENV] = args.output_dir
    context = {"command": args.command}
    try:
        report = args.handler(args)
        code = report["status_code"]
    except Exception as exc:
        report = report_exception_handler(exc, context)
        code = exit_code_for(exc)
    sys.stdout.write(canonical_json(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
