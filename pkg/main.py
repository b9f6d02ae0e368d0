"""limsup-lab entry point."""
import sys

from config import get_config, setup_logging
from cli import run_command


def main(argv=None) -> int:
    config = get_config()
    setup_logging(config.LOG_LEVEL, config.LOGS_DIR)
    return run_command(argv, config)


if __name__ == "__main__":
    sys.exit(main())
