"""LSTM kernel backend selection.

The compiled extension is preferred when importable; set MUSE_KERNEL to
"python" or "cython" to force a backend (anything else means auto).
"""

import os

from . import _lstm_py

_choice = os.environ.get("MUSE_KERNEL", "auto").lower()

if _choice == "python":
    _impl = _lstm_py
else:
    try:
        from . import _lstm_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "cython":
            raise ImportError(
                "MUSE_KERNEL=cython but the compiled kernel is not built; "
                "reinstall the package with Cython available"
            )
        _impl = _lstm_py

BACKEND = _impl.BACKEND
lstm_forward = _impl.lstm_forward
lstm_backward = _impl.lstm_backward


def get_backend(name):
    """Return (lstm_forward, lstm_backward) for an explicit backend name."""
    if name == "python":
        return _lstm_py.lstm_forward, _lstm_py.lstm_backward
    if name == "cython":
        from . import _lstm_cy
        return _lstm_cy.lstm_forward, _lstm_cy.lstm_backward
    raise ValueError(f"unknown kernel backend {name!r}")
