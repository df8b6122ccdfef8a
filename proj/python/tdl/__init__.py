"""Top-push distance learning for video-based person re-identification."""

from tdl._core import *  # noqa: F401,F403
from tdl._core import __version__  # noqa: F401
