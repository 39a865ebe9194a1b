"""
All active unit tests for semabr, the suite `__main__.py` runs. Add or
remove test modules here.
"""

from .base_tests import *
from .command_line_tests import *
from .config_tests import *
from .error_tests import *
from .import_tests import *
from .metrics_tests import *
from .nn_tests import *
from .playback_tests import *
from .policy_tests import *
from .report_tests import *
from .rl_tests import *
from .traces_tests import *
from .utils_tests import *
from .validator_tests import *
