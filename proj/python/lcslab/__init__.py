"""Python access to the lcslab core: experiment commands, window Betti numbers,
lift identities and Tamarkin energies."""

import json
import os

from . import _lcslab
from ._lcslab import LcsError, command_names, hamiltonian_names, identity_names

__all__ = [
    "LcsError",
    "command_names",
    "estimate_cj",
    "fibered_energy",
    "hamiltonian_names",
    "identity_names",
    "load_config",
    "module_energy",
    "run",
    "verify_identity",
    "window_betti",
]

EXIT_CODES = {"pass": 0, "fail": 1, "inconclusive": 2}


def load_config(path):
    """Reads a config file; returns (document, directory for relative references)."""
    with open(path) as fh:
        return json.load(fh), os.path.dirname(os.path.abspath(path))


def run(command, config, seed=None):
    """Runs a CLI command. `config` is a path or a dict; returns the JSON report with a
    `csv` entry holding the table."""
    if isinstance(config, (str, os.PathLike)):
        doc, base = load_config(config)
    else:
        doc, base = config, "."
    return json.loads(_lcslab.run(command, json.dumps(doc), base, seed))


def estimate_cj(model, k_max, field="F2"):
    return json.loads(_lcslab.estimate_cj(json.dumps(model), k_max, field))


def window_betti(model, k, field="F2"):
    return list(_lcslab.window_betti(json.dumps(model), k, field))


def verify_identity(name, model, hamiltonian, params=None, samples=20, t=1.0, steps=1000, seed=11):
    raw = _lcslab.verify_identity(
        name, json.dumps(model), hamiltonian, json.dumps(params or {}), samples, t, steps, seed
    )
    return json.loads(raw)


def module_energy(summands):
    """`summands` is a module document, e.g. {"summands": [{"left": 0, "right": 1}]}."""
    return json.loads(_lcslab.module_energy(json.dumps(summands)))


def fibered_energy(sheaf, samples=10000):
    return json.loads(_lcslab.fibered_energy(json.dumps(sheaf), samples))
