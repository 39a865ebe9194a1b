"""The base class for many semabr objects."""

import hashlib
import inspect
import json
import logging
import sys
from pathlib import Path

try:
    from importlib.metadata import version

    __version__ = version("semabr")
except Exception:
    __version__ = None

import git
import jsonpickle
import jsonpickle.ext.numpy as jsonpickle_numpy
from deepdiff import DeepDiff
from git.exc import InvalidGitRepositoryError, NoSuchPathError

here = Path(__file__).resolve().parent

# Set up generic logger
logger = logging.getLogger("semabr")
handler = logging.StreamHandler()
formatter = logging.Formatter("%(name)s - %(levelname)s - %(message)s")
handler.setFormatter(formatter)
logger.addHandler(handler)
logger.setLevel(logging.WARNING)


class Config(dict):
    """User-level settings, kept as JSON at `~/.semabr/config.json`.

    Keys are case-insensitive. A key missing from memory is read from the
    file (created with the defaults on first use) and then cached.
    """

    default = {"log_level": logging.INFO}

    _path = Path.home() / ".semabr" / "config.json"

    @property
    def path(self) -> Path:
        return Path(self._path)

    @path.setter
    def path(self, val):
        self._path = Path(val)

    def __getitem__(self, key):
        return self.get(key)

    def __setitem__(self, key, val):
        super().__setitem__(key.lower(), val)

    def get(self, key, default=None, update_from_disk=True):
        key = key.lower()
        if key in self.keys():
            return super().__getitem__(key)
        fallback = self.default.get(key) if default is None else default
        val = self.get_from_disk().get(key, fallback)
        if update_from_disk:
            self[key] = val
        return val

    def set(self, key, val):
        self[key] = val

    def get_from_disk(self) -> dict:
        """The settings file merged over the defaults; rewritten if unreadable."""
        for attempt in range(2):
            try:
                with open(self.path, "r") as f:
                    return dict(self.default, **json.load(f))
            except FileNotFoundError:
                logger.info("No settings file at '%s'; writing the defaults" % self.path)
            except (json.JSONDecodeError, TypeError):
                logger.warning("Settings file '%s' is not a JSON object; rewriting it" % self.path)
            if attempt or not self.create():
                break
        return dict(self.default)

    def create(self, data: dict = None) -> bool:
        """Write `data` (the defaults if None) to the settings file.

        Returns:
            bool: Whether the file was written.
        """
        data = dict(data if data else self.default, semabr_version=__version__)
        try:
            self.path.parent.mkdir(exist_ok=True, parents=True)
            self.path.write_text(json.dumps(data, sort_keys=True))
        except OSError as e:
            logger.warning("Could not write settings file '%s': %s" % (self.path, e))
            return False
        return True

    def load(self):
        self.update({k.lower(): v for k, v in self.get_from_disk().items()})

    def save(self):
        self.create(data=self)


config = Config()


class Versioned(object):
    """A mixin providing the git commit of the code that produced an object."""

    def get_repo(self, cached: bool = True):
        """Get a git repository object for this instance, or None."""
        if hasattr(self.__class__, "_repo") and cached:
            return self.__class__._repo
        module = sys.modules[self.__module__]
        repo = None
        if hasattr(module, "__file__"):
            path = Path(module.__file__).resolve()
            try:
                repo = git.Repo(path, search_parent_directories=True)
            except (InvalidGitRepositoryError, NoSuchPathError):
                repo = None
        self.__class__._repo = repo
        return repo

    def get_version(self, cached: bool = True) -> str:
        """Get the commit hash (with '*' when dirty), or None outside git."""
        if cached and hasattr(self.__class__, "_version"):
            return self.__class__._version
        repo = self.get_repo()
        version = None
        if repo is not None:
            try:
                version = repo.head.commit.hexsha
                if repo.is_dirty():
                    version += "*"
            except ValueError:
                # A repository without any commit yet.
                version = None
        self.__class__._version = version
        return version

    version = property(get_version)


class SemABR(Versioned):
    """Abstract base class for traces, configs, policies, logs and reports."""

    #: Attributes hidden from state calculations.
    state_hide = ["version"]

    def __getstate__(self) -> dict:
        """The public, non-method attributes of this instance."""
        state = dict(self.__dict__)
        hidden = set(self.get_list_attr_with_bases("state_hide"))
        return {
            k: v
            for k, v in state.items()
            if k not in hidden and not k.startswith("_") and not inspect.ismethod(v)
        }

    def __setstate__(self, state: dict) -> None:
        self.__dict__.update(state)

    def json(self, string: bool = True, unpicklable: bool = False):
        """Serialize the state of this object.

        Args:
            string (bool, optional): Return a JSON string if True, a dict otherwise.
            unpicklable (bool, optional): Keep type information for decoding.

        Returns:
            The JSON encoding of `__getstate__()`.
        """
        result = jsonpickle.encode(
            self.__getstate__(), unpicklable=unpicklable, keys=True
        )
        if not string:
            result = json.loads(result)
        return result

    def diff(self, other: "SemABR") -> DeepDiff:
        return DeepDiff(self.json(string=False), other.json(string=False))

    def hash(self, serialization: str = None) -> str:
        """A stable identifier of the current state of this object."""
        if serialization is None:
            serialization = self.json()
        return hashlib.sha224(serialization.encode("utf-8")).hexdigest()

    def get_list_attr_with_bases(self, attr: str) -> list:
        """Concatenated list values of `attr` across all parent classes."""
        val = set()
        for cls in self.__class__.__mro__:
            val |= set(getattr(cls, attr, []))
        return sorted(val)


def log(*args, **kwargs):
    level = kwargs.get("level", config.get("log_level", default=logging.INFO))
    kwargs = {
        k: v
        for k, v in kwargs.items()
        if k in ["exc_info", "stack_info", "stacklevel", "extra"]
    }
    for arg in args:
        logger.log(level, arg, **kwargs)


# Register serialization handlers
jsonpickle_numpy.register_handlers()
