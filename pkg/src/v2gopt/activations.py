"""Scalar activation functions and their derivatives.

Activations used on the convex path of an input-convex network must be
convex and nondecreasing, otherwise convexity of the output in the
designated input is lost.  The registry records which names qualify.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np


def _softplus(a):
    # max(a,0) + log1p(exp(-|a|)) never overflows, unlike log(1+exp(a))
    return np.maximum(a, 0.0) + np.log1p(np.exp(-np.abs(a)))


def _sigmoid(a):
    out = np.empty_like(a, dtype=float)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _relu(a):
    return np.maximum(a, 0.0)


def _relu_deriv(a):
    return (a > 0).astype(float)


def _tanh_deriv(a):
    t = np.tanh(a)
    return 1.0 - t * t


@dataclass(frozen=True)
class Activation:
    """An elementwise nonlinearity with its derivative.

    ``convex_ok`` marks functions that are convex and nondecreasing and
    therefore admissible on the convex path.
    """

    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    convex_ok: bool


ACTIVATIONS = {
    "softplus": Activation("softplus", _softplus, _sigmoid, convex_ok=True),
    "relu": Activation("relu", _relu, _relu_deriv, convex_ok=True),
    "identity": Activation("identity", lambda a: a, np.ones_like, convex_ok=True),
    "tanh": Activation("tanh", np.tanh, _tanh_deriv, convex_ok=False),
}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ValueError(
            f"unknown activation '{name}'; choose from {sorted(ACTIVATIONS)}"
        ) from None


def require_convex(name: str) -> Activation:
    """Look up an activation and reject it if it may break convexity."""
    act = get_activation(name)
    if not act.convex_ok:
        raise ValueError(
            f"activation '{name}' is not convex and nondecreasing; "
            "it cannot be used on the convex path"
        )
    return act
