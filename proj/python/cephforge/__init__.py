"""Synthetic cephalogram generation from CT/CBCT volumes."""

from ._core import *  # noqa: F401,F403
from ._core import IoError, ValidationError, Volume  # noqa: F401

__version__ = "0.1.0"
