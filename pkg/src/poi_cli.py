# src/poi_cli.py
import argparse
import os
import sys

# Absolute imports from the 'src' package
from common.cli_config import CLIConfig
from common.errors import PoiError
from common.logger_utils import setup_logger
from pipeline.commands import PipelineCommands

# Get CLI configuration for the program name
cli_config = CLIConfig()
CLI_COMMAND_NAME = cli_config.get_command_name()

# Configure the main logger
logger = setup_logger("CLI_Manager")


class PoiCli:
    """
    Main class for managing the command-line interface and dispatching commands.
    """
    def __init__(self):
        self.parser = argparse.ArgumentParser(
            prog=CLI_COMMAND_NAME,
            description="Points-of-impact estimation for functional data: simulation, estimation and benchmarks.",
            formatter_class=argparse.RawTextHelpFormatter
        )
        self.subparsers = self.parser.add_subparsers(
            dest="command",
            help="Available commands",
            required=True
        )
        self.execution_path = os.getcwd()
        self._register_commands()

    def _register_commands(self):
        """
        Registers the command handlers. Each handler adds its own subparsers.
        """
        pipeline_commands_handler = PipelineCommands(self)
        pipeline_commands_handler.add_subparser(
            self.subparsers,
            CLI_COMMAND_NAME
        )

    def run(self, argv=None):
        """
        Executes the parser and dispatches the corresponding command. Library
        errors end the process with their exit code.
        """
        args = self.parser.parse_args(argv)

        try:
            if hasattr(args, 'func'):
                args.func(args)
            else:
                logger.error(f"Command not implemented or incomplete arguments for: {args.command}")
                self.parser.print_help()
                sys.exit(1)
        except PoiError as e:
            logger.error(f"{type(e).__name__}: {e}")
            sys.exit(e.exit_code)
        except KeyboardInterrupt:
            logger.info("Keyboard interrupt detected. Exiting...")
            sys.exit(1)


def poi_cli():
    """
    Entry point function for the CLI, called by console_scripts.
    """
    cli = PoiCli()
    cli.run()


if __name__ == "__main__":
    poi_cli()
