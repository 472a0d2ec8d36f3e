"""Recover mass-action reaction networks from concentration time series."""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    EmptyModelError,
    Error,
    NumericalError,
    dictionary,
    load_model,
    monomials,
    nnls,
    preset_model,
    recover_problem,
    spline_operators,
)

__all__ = [
    "ConfigError",
    "EmptyModelError",
    "Error",
    "NumericalError",
    "dictionary",
    "fit_graph",
    "load_model",
    "model_rhs",
    "monomials",
    "nnls",
    "preset_model",
    "recover_problem",
    "resolve_config",
    "run",
    "run_trial",
    "spline_operators",
]


def _dump(doc):
    return "" if doc is None else _json.dumps(doc)


def resolve_config(model="m1", file_doc=None, **overrides):
    """Preset defaults, then `file_doc`, then keyword overrides; returns a dict."""
    return _json.loads(_core.resolve_config(model, _dump(file_doc), _dump(overrides)))


def run_trial(model="m1", n_points=50, trial=0, **overrides):
    """One simulated realization recovered with both formulations."""
    return _core.run_trial(model, _dump(overrides), n_points, trial)


def run(command, model="m1", file_doc=None, **overrides):
    """Runs a CLI command (simulate, recover, sweep, mismatch, dump-operators)."""
    return _core.command(command, model, _dump(file_doc), _dump(overrides))


def model_rhs(model, x):
    """Mass-action right hand side for a model dict or JSON text."""
    text = model["json"] if isinstance(model, dict) else model
    return _core.model_rhs(text, x)


def fit_graph(C, species, degree=2, tau=1e-2, scheme="active_columns", edge_tol=1e-2):
    """Effective model and Kirchhoff fit for a coefficient matrix."""
    return _core.fit_graph(C, list(species), degree, tau, scheme, edge_tol)
