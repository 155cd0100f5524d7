"""Active eye-in-hand calibration with next-best-view selection."""

from ._core import *  # noqa: F401,F403
from ._core import CalibrationError, __version__  # noqa: F401
