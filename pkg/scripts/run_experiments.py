"""Run the example experiment configs and print how each compares with theory.

    python scripts/run_experiments.py                 # every experiment in configs/
    python scripts/run_experiments.py configs/max_term.ini --workers 4

Sweep configs (with a [sweep] section) are handed to ``wkde sweep``.
"""

import argparse
import configparser
import sys
from pathlib import Path

from wkde.cli import main as cli_main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def is_sweep(path: Path) -> bool:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read(path)
    return cp.has_section("sweep")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="*", type=Path)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)
    paths = args.configs or sorted(CONFIG_DIR.glob("*.ini"))
    status = 0
    for path in paths:
        print(f"== {path.name}")
        if is_sweep(path):
            code = cli_main(["sweep", str(path)])
        else:
            extra = ["--workers", str(args.workers)] if args.workers else []
            code = cli_main(["check", str(path)]) or cli_main(["run", str(path), *extra])
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
