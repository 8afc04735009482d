from ._uavnet import *  # noqa: F401,F403
from ._uavnet import __doc__  # noqa: F401
