"""Grid tabulation kernels, compiled when available.

``BACKEND`` is ``"compiled"`` if the Cython extension imported, otherwise
``"python"``.  :func:`backend` returns a specific implementation so tests and
benchmarks can compare the two.
"""

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _compiled if _compiled is not None else _kernels_py


def backend(name=None):
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")


def available():
    return ["python"] + (["compiled"] if _compiled is not None else [])


def mrf1_polarizer_table(n, tune, orth, alpha):
    return _impl.mrf1_polarizer_table(n, tune, orth, alpha)


def mrf2_polarizer_table(n, tune, alpha, projection=True):
    return _impl.mrf2_polarizer_table(n, tune, alpha, projection)
