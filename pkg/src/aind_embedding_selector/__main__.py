"""Entry point for the embedding selector.

Run with:
    python -m aind_embedding_selector <command> ...
    embedding-selector <command> ...      (after pip install)
"""

import sys


def main() -> None:
    from aind_embedding_selector.cli import main as cli_main

    sys.exit(cli_main())


if __name__ == "__main__":
    main()
