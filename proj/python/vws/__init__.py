"""Python access to the weighted estimates lab."""

import json

from . import _vws
from ._vws import ValidationError, commands, operator_ids

__all__ = ["ValidationError", "commands", "operator_ids", "mesh", "solve", "maximal_function",
           "ap_constant", "truncate", "validate", "run"]


def mesh(M):
    return _vws.mesh(M)


def solve(operator="prototype_smooth", rhs="grad_sin", M=32, tol=1e-8, operator_params=None, rhs_params=None):
    """Returns (vertex values, solve report dict)."""
    u, report = _vws.solve(operator, json.dumps(operator_params or {}), rhs, json.dumps(rhs_params or {}), M, tol)
    return u, json.loads(report)


def maximal_function(M, triangle_values):
    return _vws.maximal_function(M, list(map(float, triangle_values)))


def ap_constant(M, weight, p=2.0):
    return json.loads(_vws.ap_constant(M, list(map(float, weight)), p))


def truncate(M, seed, lam):
    """Returns (g, g_lambda, sidecar) for a seeded zero-boundary field."""
    g, gl, sidecar = _vws.truncate(M, seed, lam)
    return g, gl, json.loads(sidecar)


def validate(config):
    return _vws.validate(json.dumps(config))


def run(config, out):
    return json.loads(_vws.run(json.dumps(config), str(out)))
