import abc
import json
import os

from ...config import RESOURCES_DIR
from ...errors import ConfigError


class ScenarioSource(abc.ABC):
    """
    Interface for reading scenario descriptions.

    Used by the Builder to access the records that describe a scenario: the
    metric block, the submersion block and the parameters of the checks.
    Scenarios can be stored in several ways, so the ScenarioSource wraps
    reading them in a consistent interface to be used by the builder.
    """

    @abc.abstractmethod
    def record(self, i: int) -> dict:
        """
        Method to access the description of the ith scenario.

        Parameters
        ----------
        i : int
            The index of the scenario.

        Returns
        -------
        dict
            The scenario record as parsed JSON.
        """
        pass

    @abc.abstractmethod
    def __len__(self) -> int:
        """The number of scenarios in the source.

        Returns
        -------
        int
            Scenarios available.
        """
        pass

    def names(self) -> list:
        """Names of the scenarios in order."""
        return [self.record(i)['name'] for i in range(len(self))]

    def find(self, name: str) -> dict:
        """The record called ``name``, case insensitive.

        Raises
        ------
        ConfigError
            If no scenario has that name.
        """

        for i in range(len(self)):
            r = self.record(i)
            if r.get('name', '').upper() == name.upper():
                return r
        raise ConfigError(f"unknown scenario '{name}', available: {', '.join(self.names())}")


class JSONScenarioSource(ScenarioSource):
    """Scenarios stored one per JSON file.

    Parameters
    ----------
    paths : list of str
        The files, read in the given order.
    """

    def __init__(self, paths: list):
        self._records = []
        for path in paths:
            try:
                with open(path, 'r') as f:
                    record = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read scenario file '{path}': {e}")
            if not isinstance(record, dict) or 'name' not in record:
                raise ConfigError(f"scenario file '{path}' has no 'name'")
            record.setdefault('path', os.path.abspath(path))
            self._records.append(record)

    @classmethod
    def directory(cls, path: str) -> "JSONScenarioSource":
        """Every ``*.json`` file of a directory, in file name order."""
        files = sorted(f for f in os.listdir(path) if f.endswith('.json'))
        return cls([os.path.join(path, f) for f in files])

    def record(self, i: int) -> dict:
        return self._records[i]

    def __len__(self) -> int:
        return len(self._records)


BUILTIN = ('fig1', 'fig2', 'xy', 'euclid', 'sphere', 'tilted')


def builtin_source() -> JSONScenarioSource:
    """The scenarios shipped in ``resources/scenarios``."""
    folder = os.path.join(RESOURCES_DIR, 'scenarios')
    return JSONScenarioSource([os.path.join(folder, name + '.json') for name in BUILTIN])
