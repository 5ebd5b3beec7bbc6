"""Parsers and canonical writers for the supported media containers."""

from . import pnm, wav, y4m

__all__ = ["pnm", "wav", "y4m"]
