"""sparsescope: exploration engine for sparse tabular compound datasets.

The heavier surfaces stay behind their submodules: `sparsescope.service`
(HTTP app, pulls FastAPI), `sparsescope.cli` (click entry point), and
`sparsescope.layout` (scene assembly).  Only the core table/impute/model
API is re-exported here.
"""

from .boost import BoostParams, fit_ngb, predict_ngb, predict_ngb_batch, rsd
from .errors import SparseScopeError
from .impute import CamiParams, cami_impute
from .session import Session, SessionConfig
from .table import DataTable, dump_csv, load_csv

__version__ = "0.1.0"

__all__ = [
    "BoostParams",
    "CamiParams",
    "DataTable",
    "Session",
    "SessionConfig",
    "SparseScopeError",
    "__version__",
    "cami_impute",
    "dump_csv",
    "fit_ngb",
    "load_csv",
    "predict_ngb",
    "predict_ngb_batch",
    "rsd",
]
