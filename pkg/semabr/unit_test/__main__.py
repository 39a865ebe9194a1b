"""All unit tests for semabr.

`python -m semabr.unit_test [buffer] [slow]`: `buffer` hides the output of
passing tests, `slow` also runs the long training checks.
"""

import os
import sys
import unittest


def main():
    flags = set(sys.argv[1:])
    if "slow" in flags:
        os.environ["SEMABR_SLOW_TESTS"] = "1"
    # The skip decorators read SEMABR_SLOW_TESTS when the test modules load.
    from . import active

    sys.argv = sys.argv[:1]
    unittest.main(module=active, buffer="buffer" in flags)


if __name__ == "__main__":
    main()
