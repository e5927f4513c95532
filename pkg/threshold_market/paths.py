"""Output-directory and config-file resolution for Threshold Market.

Output directory resolution order:

1. ``THRESHOLD_MARKET_OUT`` environment variable (if set and non-empty).
2. The directory given on the command line or in ``[output] dir``.

The directory is created on demand. The environment variable is the only
environment override the package honours.

Config file resolution: an explicit path wins; otherwise
``threshold-market.ini`` in the current working directory is used when it
exists, and pure defaults apply when it does not.
"""

from __future__ import annotations

from os import environ, getcwd, makedirs
from os.path import abspath, isfile, join

from .const import CONFIG_FILENAME, OUTPUT_DIR_ENV, REPLICA_DIR


def resolve_output_dir(configured: str) -> str:
    """Return the absolute output directory, honouring the env override."""
    env = environ.get(OUTPUT_DIR_ENV, "").strip()
    path = abspath(env or configured)
    makedirs(path, exist_ok=True)
    return path


def replica_dir(output_dir: str, index: int) -> str:
    """Return (and create) the per-replica output folder."""
    path = join(output_dir, REPLICA_DIR.format(index=index))
    makedirs(path, exist_ok=True)
    return path


def find_config_file(explicit: str | None = None) -> str | None:
    """Return the config file to load, or ``None`` for built-in defaults."""
    if explicit:
        return abspath(explicit)

    candidate = join(getcwd(), CONFIG_FILENAME)
    if isfile(candidate):
        return candidate
    return None
