"""Holomorphic functional calculus."""

from .functions import *  # noqa: F401,F403
from .contour import *  # noqa: F401,F403
from .transforms import *  # noqa: F401,F403
