"""Self-enhanced GNN: data-quality improvement for semi-supervised node
classification via topology update and training node augmentation, with
from-scratch SGC/GCN models, closed-form theory oracles and the split/seed
evaluation protocol.

The heavy lifting lives in the compiled extension `_seg`.
"""

try:
    from ._seg import *  # noqa: F401,F403  (installed wheel layout)
    from . import _seg as _impl
except ImportError:  # in-tree build: extension next to the package on sys.path
    from _seg import *  # noqa: F401,F403
    import _seg as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
__version__ = "0.1.0"
