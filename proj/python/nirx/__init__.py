"""Kernel-pooling re-ranking explorer: scoring, ingest, analytics and the read-only API."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
