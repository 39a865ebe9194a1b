"""
Utility functions for semabr.
"""

import importlib
import pkgutil
import shutil
from pathlib import Path
from typing import List, Union

import numpy as np
import quantities as pq
from quantities.quantity import Quantity

#: Stable integer identifiers for the streams a root seed fans out to.
SEED_PURPOSES = {
    "split": 1,
    "actor_init": 2,
    "critic_init": 3,
    "train": 4,
    "evaluate": 5,
    "compare": 6,
}


def deep_combine(*dict_list) -> dict:
    """Union of several dictionaries, later ones winning; nested dicts merge key by key."""
    result = {}
    for d in dict_list:
        for k, v in d.items():
            if isinstance(v, dict) and isinstance(result.get(k), dict):
                result[k] = deep_combine(result[k], v)
            elif isinstance(v, dict):
                result[k] = deep_combine(v)
            else:
                result[k] = v
    return result


def derive_seed(root: int, purpose: str, *extra: int) -> int:
    """Fan a root seed out to an independent seed for one purpose.

    Args:
        root (int): The root seed of a run.
        purpose (str): One of `SEED_PURPOSES`.
        extra (int): Further integers, e.g. an epoch or trace index.

    Returns:
        int: A 32-bit seed.
    """
    entropy = [int(root), SEED_PURPOSES[purpose]] + [int(x) for x in extra]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def to_seconds(value: Union[float, int, Quantity]) -> float:
    """Return the bare number of seconds in `value`.

    Plain numbers are taken to be seconds already.
    """
    if isinstance(value, Quantity):
        return float(value.rescale(pq.s).magnitude)
    return float(value)


def format_float(value: float) -> str:
    """Format a float with 17 significant digits (round-trip exact)."""
    return "%.17g" % value


class TmpTestFolder:
    """A class for creating and deleting a folder in "./unit_test/"."""

    path = Path(__file__).parent / "unit_test" / "delete_after_tests"

    def __init__(self, location: Union[str, Path, None] = None) -> None:
        if location:
            self.path = Path(location)

    def create(self) -> None:
        Path(self.path).mkdir(parents=True, exist_ok=True)

    def delete(self) -> None:
        if self.path.exists() and self.path.is_dir():
            shutil.rmtree(self.path)


def import_all_modules(package, skip: list = None) -> List[str]:
    """Recursively import every module of an imported `package`.

    Returns:
        list: The dotted names of the imported modules.
    """
    skip = [] if skip is None else skip
    imported = []
    for _, modname, ispkg in pkgutil.walk_packages(path=package.__path__, onerror=lambda x: None):
        if modname in skip:
            continue
        module = importlib.import_module("%s.%s" % (package.__name__, modname))
        imported.append(module.__name__)
        if ispkg:
            imported += import_all_modules(module, skip=skip)
    return imported
