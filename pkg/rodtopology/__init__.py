#!/usr/bin/env python3

__version__ = "0.1.0"


class RodTopologyError(Exception):
    """Base class of every error raised by rodtopology."""


from . import cli  # noqa: E402
