"""CLI verbs.

Each module exposes ``NAME``, ``HELP``, ``NEEDS_DATASET``, ``add_arguments``
and ``run(args, config) -> int``.
"""

from app.commands import ablate, evaluate, features, ingest, report

COMMANDS = {module.NAME: module for module in (ingest, features, evaluate, ablate, report)}
