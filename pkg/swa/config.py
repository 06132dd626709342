import os

import yaml

from .exceptions import ConfigError
from .storage import configStorage
from .utils import check_patterns

#: Every tunable of a run, with the type it is validated against.
#: Keys that are not held in the persistent store default to ``None``
#: or an empty list.
tunables = {
    "collapse_threshold": float,
    "conv_layout": str,
    "conv_weighting": str,
    "embedding_patterns": list,
    "embedding_q": float,
    "exclude": list,
    "format": str,
    "include": list,
    "jobs": int,
    "log_base": str,
    "min_size": int,
    "min_tail": int,
    "normalize_by_n": bool,
    "order_file": str,
    "pair_median_shift": float,
    "pair_threshold": float,
    "short_tail": int,
    "skip_embeddings": bool,
    "zero_tolerance": float,
}

choices = {
    "conv_layout": ["oikk", "kkio"],
    "conv_weighting": ["per-matrix", "per-layer"],
    "format": ["json", "csv", "both"],
    "log_base": ["10", "e"],
}


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, str):
        return [v for v in value.split(",") if v]
    return [str(v) for v in value]


class AnalysisConfig(dict):
    """ The ``AnalysisConfig`` holds every threshold and switch that
        influences an analysis run. Settings are resolved in this
        order (later wins):

        1. the persistent configuration store (``swa set <key> <value>``)
        2. a YAML file passed as ``config_file``
        3. the environmental variable ``SWA_JOBS`` (for ``jobs`` only)
        4. keyword arguments that are not ``None``

        .. code-block:: python

            config = AnalysisConfig(min_size=20, exclude=["embed.*"])
            config = AnalysisConfig(config_file="/path/to/run.yml", jobs=1)

        :raises ConfigError: on unknown keys or invalid values
    """
    def __init__(self, **kwargs):
        config_file = kwargs.pop("config_file", None)
        unknown = set(kwargs) - set(tunables)
        if unknown:
            raise ConfigError("Unknown settings: %s" % ", ".join(sorted(unknown)))

        values = {}
        for key in tunables:
            values[key] = configStorage[key] if key in configStorage.config_defaults else None

        if config_file:
            with open(config_file) as f:
                try:
                    contents = yaml.safe_load(f.read()) or {}
                except yaml.YAMLError as e:
                    raise ConfigError("Configuration file %s is not valid YAML: %s" % (config_file, e))
            if not isinstance(contents, dict):
                raise ConfigError("Configuration file %s must hold a mapping" % config_file)
            unknown = set(contents) - set(tunables)
            if unknown:
                raise ConfigError("Unknown settings in %s: %s" % (
                    config_file, ", ".join(sorted(unknown))))
            values.update(contents)

        if os.environ.get("SWA_JOBS"):
            values["jobs"] = os.environ["SWA_JOBS"]

        values.update({k: v for k, v in kwargs.items() if v is not None})
        super(AnalysisConfig, self).__init__(self._validate(values))

    def _validate(self, values):
        result = {}
        for key, kind in tunables.items():
            value = values.get(key)
            if kind is list:
                result[key] = check_patterns(_as_list(value), key)
                continue
            if value is None:
                result[key] = None
                continue
            try:
                if kind is bool and isinstance(value, str):
                    value = value.strip().lower() in ["1", "true", "yes", "on"]
                else:
                    value = kind(value)
            except (TypeError, ValueError):
                raise ConfigError("Invalid value %r for %s" % (value, key))
            if key in choices and value not in choices[key]:
                raise ConfigError("%s must be one of %s" % (key, ", ".join(choices[key])))
            result[key] = value

        if result["min_size"] is None or result["min_size"] < 2:
            raise ConfigError("min_size must be at least 2")
        if result["min_tail"] is None or result["min_tail"] < 2:
            raise ConfigError("min_tail must be at least 2")
        if result["jobs"] is None or result["jobs"] < 0:
            raise ConfigError("jobs must not be negative")
        if result["zero_tolerance"] is None or not 0 <= result["zero_tolerance"] < 1:
            raise ConfigError("zero_tolerance must lie in [0, 1)")
        return result

    def __getattr__(self, key):
        try:
            return self[key]
        except KeyError:
            raise AttributeError(key)

    def echo(self):
        """ Complete, JSON-serializable copy of the settings that
            determine the results. ``jobs`` is left out: the worker
            count never changes an output.
        """
        return {key: (list(value) if isinstance(value, list) else value)
                for key, value in sorted(self.items())
                if key != "jobs"}
