# src/pipeline/commands.py
import argparse
import os

# Absolute imports from the 'src' package
from common.errors import ConfigError
from common.logger_utils import set_log_level, setup_logger
from pipeline.config import RunConfig
from pipeline.operations import PipelineOperations

logger = setup_logger(__name__)


class PipelineCommands:
    """
    Manages the simulate, estimate, benchmark and analyze subcommands.
    """
    def __init__(self, cli_instance):
        self.cli = cli_instance
        self.operations = PipelineOperations(self.cli, self, logger)
        self.config = None

    def _add_common_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument(
            "-c", "--config",
            type=str,
            dest="config_file",
            default=None,
            help="Path to a YAML or JSON run configuration. Default: packaged defaults only."
        )
        parser.add_argument(
            "--env-file",
            type=str,
            dest="env_file",
            default=None,
            help="Path to the .env file to load environment variables. Default: searches for '.env' in CWD."
        )
        parser.add_argument(
            "--seed",
            type=int,
            default=None,
            help="Root random seed (overrides the configuration)."
        )
        parser.add_argument(
            "-o", "--out-dir",
            type=str,
            dest="out_dir",
            default=None,
            help="Directory for input/output files (overrides io.out_dir)."
        )
        parser.add_argument(
            "-v", "--verbose",
            action="store_true",
            help="Enable debug logging."
        )

    def _add_data_arguments(self, parser: argparse.ArgumentParser):
        parser.add_argument("--curves", type=str, default=None, help="Curves CSV (columns t_1..t_p).")
        parser.add_argument("--responses", type=str, default=None, help="Responses CSV (column 'y').")
        parser.add_argument("--metadata", type=str, default=None, help="Metadata JSON with the grid.")
        parser.add_argument(
            "--link",
            choices=["logit", "identity"],
            default=None,
            help="Link function of the quasi-likelihood model."
        )
        parser.add_argument(
            "--standardize",
            action="store_true",
            default=None,
            help="Center and scale the curves pointwise before estimation."
        )

    def add_subparser(self, subparsers: argparse._SubParsersAction, cli_command_name: str):
        """
        Adds the pipeline subcommands to the main parser.
        """
        # 'simulate' subcommand
        simulate_parser = subparsers.add_parser(
            "simulate",
            help="Simulates curves and responses from a DGP preset or a custom model.",
            description=f"""
Simulates a functional dataset and writes curves, responses and metadata.

Usage:
  {cli_command_name} simulate [-c <config.yaml>] [--dgp DGP1] [-n 100] [-p 100] [--seed 1] [-o <out_dir>]
            """,
            formatter_class=argparse.RawTextHelpFormatter
        )
        self._add_common_arguments(simulate_parser)
        simulate_parser.add_argument("--dgp", type=str, default=None, help="DGP preset (DGP1..DGP5).")
        simulate_parser.add_argument("-n", type=int, dest="n", default=None, help="Number of curves.")
        simulate_parser.add_argument("-p", type=int, dest="p", default=None, help="Number of grid points.")
        simulate_parser.set_defaults(func=self.handle_pipeline_operation)

        # 'estimate' subcommand
        estimate_parser = subparsers.add_parser(
            "estimate",
            help="Estimates points of impact and fits the model on them.",
            description=f"""
Runs the threshold (TRH) and/or BIC best-subset (POI) estimators and writes a JSON report.

Usage:
  {cli_command_name} estimate [-c <config.yaml>] [--estimator {{trh,poi,both}}] [--curves f.csv] [--responses y.csv]
            """,
            formatter_class=argparse.RawTextHelpFormatter
        )
        self._add_common_arguments(estimate_parser)
        self._add_data_arguments(estimate_parser)
        estimate_parser.add_argument(
            "--estimator",
            choices=["trh", "poi", "both"],
            default=None,
            help="Which estimator to run. Default: both."
        )
        estimate_parser.add_argument("--k-delta", type=int, dest="k_delta", default=None,
                                     help="Explicit delta in grid steps.")
        estimate_parser.add_argument("--c-delta", type=float, dest="c_delta", default=None,
                                     help="Rate rule constant: delta = c_delta / sqrt(n).")
        estimate_parser.add_argument("--order", type=int, choices=[2, 4], dest="difference_order", default=None,
                                     help="Order of the difference transform.")
        estimate_parser.add_argument("--center", action="store_true", default=None,
                                     help="Center the curves pointwise before estimation.")
        estimate_parser.add_argument("--nonparametric", action="store_true", default=None,
                                     help="Also fit a Nadaraya-Watson regression on the selected points.")
        estimate_parser.add_argument("--output", type=str, default=None,
                                     help="Report path. Default: <out_dir>/estimate.json.")
        estimate_parser.set_defaults(func=self.handle_pipeline_operation)

        # 'benchmark' subcommand
        benchmark_parser = subparsers.add_parser(
            "benchmark",
            help="Runs a Monte Carlo experiment.",
            description=f"""
Runs a Monte Carlo experiment over the (n, p) cells of a DGP and writes the report.

Usage:
  {cli_command_name} benchmark [-c <config.yaml>] [--dgp DGP2] [--reps 200] [--estimator {{trh,poi,lmck,both}}] [--threads 4] [--seed 1]
            """,
            formatter_class=argparse.RawTextHelpFormatter
        )
        self._add_common_arguments(benchmark_parser)
        benchmark_parser.add_argument("--dgp", type=str, default=None, help="DGP preset (DGP1..DGP5).")
        benchmark_parser.add_argument("--reps", type=int, default=None, help="Replications per cell.")
        benchmark_parser.add_argument("--n", type=int, nargs="+", dest="n_list", default=None, help="Sample sizes.")
        benchmark_parser.add_argument("--p", type=int, nargs="+", dest="p_list", default=None, help="Grid sizes.")
        benchmark_parser.add_argument(
            "--estimator",
            choices=["trh", "poi", "lmck", "both"],
            default=None,
            help="Which estimator to run; lmck needs a single point of impact. Default: from the configuration."
        )
        benchmark_parser.add_argument(
            "-j", "--threads",
            type=int,
            default=1,
            help="Number of worker processes (e.g., 4)."
        )
        benchmark_parser.set_defaults(func=self.handle_pipeline_operation)

        # 'analyze' subcommand
        analyze_parser = subparsers.add_parser(
            "analyze",
            help="Compares the impact-point model with the peak-and-end models.",
            description=f"""
Fits the BIC-selected impact-point model and the PER-1/PER-2 comparators.

Usage:
  {cli_command_name} analyze [-c <config.yaml>] [--curves f.csv] [--responses y.csv] [--standardize]
            """,
            formatter_class=argparse.RawTextHelpFormatter
        )
        self._add_common_arguments(analyze_parser)
        self._add_data_arguments(analyze_parser)
        analyze_parser.set_defaults(func=self.handle_pipeline_operation)

    def handle_pipeline_operation(self, args: argparse.Namespace):
        try:
            method = getattr(self, f"command_{args.command}")
        except AttributeError:
            raise ConfigError(f"Invalid command: {args.command}")

        if getattr(args, 'verbose', False):
            set_log_level('DEBUG')
        self._load_config(args)
        return method(args)

    def command_simulate(self, args: argparse.Namespace):
        for key in ('dgp', 'n', 'p'):
            self.config.set_value('simulate', key, getattr(args, key))
        return self.operations.simulate(self.config.section('simulate'), self.config.section('io'), self.config.seed)

    def command_estimate(self, args: argparse.Namespace):
        self._apply_data_arguments(args, 'estimate')
        for key in ('estimator', 'k_delta', 'c_delta', 'difference_order', 'center', 'nonparametric'):
            self.config.set_value('estimate', key, getattr(args, key))
        return self.operations.estimate(self.config.section('estimate'), self.config.section('io'), args.output)

    def command_benchmark(self, args: argparse.Namespace):
        for key in ('dgp', 'reps', 'n_list', 'p_list'):
            self.config.set_value('benchmark', key, getattr(args, key))
        if args.estimator:
            estimators = ['TRH', 'POI'] if args.estimator == 'both' else [args.estimator.upper()]
            self.config.set_value('benchmark', 'estimators', estimators)
        settings = self.config.section('benchmark')
        settings['out_dir'] = self.config.section('io').get('out_dir')
        return self.operations.benchmark(settings, self.config.seed, args.threads)

    def command_analyze(self, args: argparse.Namespace):
        self._apply_data_arguments(args, 'analyze')
        return self.operations.analyze(self.config.section('analyze'), self.config.section('io'))

    # -----------------------------------
    # Config methods
    # -----------------------------------
    def _apply_data_arguments(self, args: argparse.Namespace, section: str):
        for key in ('curves', 'responses', 'metadata'):
            self.config.set_value('io', key, getattr(args, key))
        for key in ('link', 'standardize'):
            self.config.set_value(section, key, getattr(args, key))

    def _load_config(self, args: argparse.Namespace):
        config_file_path = None
        if args.config_file:
            config_file_path = os.path.join(
                self.cli.execution_path,
                args.config_file
            ) if not os.path.isabs(args.config_file) else args.config_file

        self.config = RunConfig(config_file_path, env_path=args.env_file)
        self.config.load_config()
        self.config.set_value('io', 'out_dir', args.out_dir)
        if args.seed is not None:
            self.config.set_value('', 'seed', args.seed)
