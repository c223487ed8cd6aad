"""
Splat Dataflow Lab - Command-line interface
"""

from app.cli.commands import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, CommandHandler
from app.cli.manifest import write_manifest
from app.cli.parser import build_parser
from app.config import configure_logging

__all__ = [
    "EXIT_FAILURE",
    "EXIT_OK",
    "EXIT_USAGE",
    "CommandHandler",
    "build_parser",
    "main",
    "write_manifest",
]


def main(argv=None) -> int:
    """Parse, configure logging and dispatch; argparse exits 2 on usage errors"""
    args = build_parser().parse_args(argv)
    configure_logging(level=args.log_level)
    return CommandHandler().dispatch(args)
