"""Evans-function toolkit for hyperbolically regularized conservation laws."""

try:
    from ._evansflow import *  # noqa: F401,F403 installed layout
    from ._evansflow import __doc__  # noqa: F401
except ImportError:  # build-tree layout used by the test suite
    from _evansflow import *  # noqa: F401,F403
