"""Behavior-log storage engine and layout optimizer."""

import json as _json

from . import _evlog
from ._evlog import EvlogError, max_weight_matching

__all__ = ["EvlogError", "Workload", "Pipeline", "default_params", "max_weight_matching",
           "init_workspace", "run_pipeline"]


def default_params():
    return _json.loads(_evlog.default_params())


class Workload:
    """Synthetic catalog plus event stream. Keyword arguments override defaults."""

    def __init__(self, **params):
        merged = default_params()
        unknown = set(params) - set(merged)
        if unknown:
            raise TypeError(f"unknown workload parameters: {sorted(unknown)}")
        merged.update(params)
        self._w = _evlog.Workload(_json.dumps(merged))

    @property
    def params(self):
        return _json.loads(self._w.params_json)

    @property
    def catalog(self):
        return _json.loads(self._w.catalog_json)

    @property
    def event_count(self):
        return self._w.event_count

    @property
    def days(self):
        return self._w.days

    def day(self, d):
        return _json.loads(self._w.day_json(d))

    def events(self):
        return _json.loads(self._w.events_json())

    def day_start_ms(self, d):
        return self._w.day_start_ms(d)

    def verification_times(self, per_day=3):
        return self._w.verification_times(per_day)


class Pipeline:
    """Baseline and optimized logs kept side by side across days."""

    def __init__(self, catalog, vhan=True):
        self._p = _evlog.Pipeline(_json.dumps(catalog), vhan)

    def run_day(self, day, events, check_rebuild=False):
        return _json.loads(self._p.run_day(day, _json.dumps(events), check_rebuild))

    def compute(self, feature, now, baseline=False):
        return _json.loads(self._p.compute(feature, now, baseline))

    def verify(self, nows):
        return _json.loads(self._p.verify(list(nows)))

    def sizes(self):
        return {"baseline": _json.loads(self._p.baseline_sizes()),
                "optimized": _json.loads(self._p.optimized_sizes())}

    def compression_ratio(self):
        return self._p.compression_ratio()

    def shard_count(self):
        return self._p.shard_count()

    def layout_kind(self):
        return self._p.layout_kind()

    def workload_stats(self, events):
        return _json.loads(self._p.workload_stats(_json.dumps(events)))

    def write(self, directory):
        self._p.write(directory)


def init_workspace(path, **params):
    merged = default_params()
    merged.update(params)
    _evlog.init_workspace(path, _json.dumps(merged))


def run_pipeline(path, day, vhan=True):
    return _json.loads(_evlog.run_pipeline(path, day, vhan))
