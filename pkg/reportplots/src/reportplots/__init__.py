"""Figures from detfield CSV artifacts; consumes the file contract only."""

from .contract import ContractError, EmptyData, SchemaMismatch, read_csv
from .figures import PLOT_KINDS, RenderInfo, render

__version__ = "0.1.0"
