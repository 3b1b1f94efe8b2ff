"""Bundled four-agent benchmark used by the experiment script and the tests.

Four identical third-order agents with two inputs each, coupled through the
Laplacian of a four-vertex graph whose nonzero coupling eigenvalues are
{1, 3, 4}.  A four-step input-state record from one agent is informative for
synchronizability; ``reference_gain`` is the certified gain built from the
bundled right-inverse family.  The individual agents are not stable under
the closed loop, but the network synchronizes onto a common growing
trajectory, which makes this a useful end-to-end regression case.
"""

from __future__ import annotations

import numpy as np

from .data import DataRecord, build_matrices
from .informativity import RightInverseFamily
from .network import LtiModel
from .topology import InterconnectionMatrix, laplacian_from_edges

EDGES = [(1, 2), (2, 3), (2, 4), (3, 4)]
AGENTS = 4
HORIZON = 190


def true_model() -> LtiModel:
    """The data-generating agent model (unknown to the data-driven design)."""
    A = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]])
    B = np.array([[1.0, 1.0], [1.0, 0.0], [0.0, 1.0]])
    return LtiModel(A=A, B=B)


def interconnection() -> InterconnectionMatrix:
    """Graph Laplacian coupling with spectrum {0, 1, 3, 4}."""
    return laplacian_from_edges(AGENTS, EDGES)


def data_record() -> DataRecord:
    """Four-step input-state record measured from one agent."""
    inputs = np.array([[1.0, -1.0], [-1.0, 1.0], [-1.0, 1.0], [-1.0, 1.0]])
    states = np.array(
        [
            [1.0, 0.0, 1.0],
            [1.0, 2.0, 0.0],
            [3.0, 1.0, 1.0],
            [4.0, 1.0, 2.0],
            [5.0, 2.0, 3.0],
        ]
    )
    return DataRecord(inputs=inputs, states=states)


def right_inverse_family() -> RightInverseFamily:
    """Right inverses of X_minus witnessing informativity for {1, 3, 4}."""
    G1 = np.array(
        [
            [5 / 12, 5 / 6, 29 / 36],
            [-1 / 3, 2 / 3, 1 / 3],
            [7 / 4, 1 / 6, -55 / 36],
            [-13 / 12, -1 / 2, 31 / 36],
        ]
    )
    G2 = np.array(
        [
            [7 / 12, 11 / 6, 37 / 12],
            [-1 / 3, 2 / 3, 1 / 3],
            [23 / 12, 7 / 6, 3 / 4],
            [-5 / 4, -3 / 2, -17 / 12],
        ]
    )
    G3 = np.array(
        [
            [2 / 3, 7 / 3, 38 / 9],
            [-1 / 3, 2 / 3, 1 / 3],
            [2.0, 5 / 3, 17 / 9],
            [-4 / 3, -2.0, -23 / 9],
        ]
    )
    return RightInverseFamily(inverses=(G1, G2, G3), lambdas=np.array([1.0, 3.0, 4.0]))


def reference_gain() -> np.ndarray:
    """The certified gain U_minus G_1 / lambda_1 for the bundled record."""
    return np.array(
        [
            [1 / 12, 1 / 2, 41 / 36],
            [-1 / 12, -1 / 2, -41 / 36],
        ]
    )


def initial_state() -> np.ndarray:
    """Stacked initial network state (agent-major) for the simulation run."""
    return np.array([3.0, 5, 2, 3, 4, 0, -2, 4, -2, 5, -4, 3])


def data_matrices():
    """Convenience: the (U_minus, X_minus, X_plus) slices of the bundled record."""
    return build_matrices(data_record())
