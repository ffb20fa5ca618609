"""Exact computations on the G_m tower: normal forms, word metrics, avoidant paths and divergence data."""

__version__ = "0.1.0"

from .errors import DivlabError
from .groups import GroupElement, GroupModel, make_model

__all__ = ["DivlabError", "GroupElement", "GroupModel", "make_model", "__version__"]
