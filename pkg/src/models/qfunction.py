"""Uniform forward/backward over plain networks and lateral experts."""

import numpy as np

from . import lateral, network
from .lateral import LateralExpertParams


def q_forward(params, obs):
    if isinstance(params, LateralExpertParams):
        return lateral.forward(params, obs)
    return network.forward(params, obs)


def q_backward(params, cache, dL_dq, dL_dfeatures=None):
    if isinstance(params, LateralExpertParams):
        return lateral.backward(params, cache, dL_dq, dL_dfeatures)
    return network.backward(params, cache, dL_dq, dL_dfeatures)


def q_values(params, obs):
    return q_forward(params, obs).q


def greedy_actions(params, obs, columns=None):
    """
    Argmax head positions for a batch of observations.
    @param columns Optional head columns to restrict to (e.g. a task subset of the AMN head).
    """
    q = q_values(params, obs)
    if columns is not None:
        q = q[..., list(columns)]
    return np.argmax(q, axis=-1)


def copy_params(params):
    return params.copy()
