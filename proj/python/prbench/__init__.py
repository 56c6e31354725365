# SPDX-License-Identifier: Apache-2.0
"""Benchmark-driven latency modelling for DNN accelerators.

Structured arguments are plain dicts and lists in the JSON formats the
command line reads and writes.
"""

import json

from . import _prbench
from ._prbench import FORMAT_VERSION, Model, PrbenchError, run_cli

__all__ = [
    "FORMAT_VERSION",
    "Model",
    "PrbenchError",
    "derive_lattice",
    "determine_step_widths",
    "error_name",
    "estimate_network",
    "fit",
    "lattice_size",
    "load_model",
    "mac_count",
    "map_to_pr",
    "mape",
    "match_blocks",
    "measure",
    "mobilenet_v1",
    "resnet18",
    "rmspe",
    "run_cli",
    "sample",
    "sweep",
]


def _dump(value):
    return json.dumps(value)


def error_name(exc):
    """The error kind of a PrbenchError, e.g. "KindMismatch"."""
    return str(exc).split(":", 1)[0]


def map_to_pr(config, lattice):
    """Returns (representative config, clamped flag)."""
    out = json.loads(_prbench.map_to_pr(_dump(config), _dump(lattice)))
    return out["config"], out["clamped"]


def derive_lattice(description, bounds=None):
    return json.loads(_prbench.derive_lattice(_dump(description), _dump(bounds) if bounds else ""))


def sample(lattice, n, seed=0):
    return json.loads(_prbench.sample(_dump(lattice), n, seed))


def lattice_size(lattice):
    return _prbench.lattice_size(_dump(lattice))


def sweep(backend, bounds, param, repeats=1):
    return json.loads(_prbench.sweep(_dump(backend), _dump(bounds), param, repeats))


def determine_step_widths(sweeps, threshold=0.05, prominence=0.5, tolerance=1.0):
    return json.loads(_prbench.determine_step_widths(_dump(sweeps), threshold, prominence, tolerance))


def measure(backend, config, repeats=1):
    return _prbench.measure(_dump(backend), _dump(config), repeats)


def mac_count(config):
    return _prbench.mac_count(_dump(config))


def mape(measured, estimated):
    return _prbench.mape(list(measured), list(estimated))


def rmspe(measured, estimated):
    return _prbench.rmspe(list(measured), list(estimated))


def fit(configs, latencies, lattice=None, **hyperparams):
    return _prbench.fit(_dump(configs), list(latencies), lattice=_dump(lattice) if lattice else "", **hyperparams)


def load_model(text):
    return _prbench.load_model(text)


def match_blocks(network):
    return json.loads(_prbench.match_blocks(_dump(network)))


def estimate_network(network, models, zero_cost=(), profile=None):
    return json.loads(
        _prbench.estimate_network(_dump(network), list(models), list(zero_cost), _dump(profile) if profile else "")
    )


def mobilenet_v1(resolution=224, classes=1000):
    return json.loads(_prbench.mobilenet_v1(resolution, classes))


def resnet18(resolution=224, classes=1000):
    return json.loads(_prbench.resnet18(resolution, classes))
