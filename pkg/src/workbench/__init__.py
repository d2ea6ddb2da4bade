"""Retrieval workbench for software-engineering artifacts.

Four interchangeable similarity measures (VSM, BM25, LSI, WMD) over a
shared preprocessing pipeline and corpus index, plus two composite tools:
a project recommender and a bug localizer, both with swappable models.
"""

__version__ = "0.1.0"

from workbench.errors import ConfigError, DataError, WorkbenchError

__all__ = ["ConfigError", "DataError", "WorkbenchError", "__version__"]
