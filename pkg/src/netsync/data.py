"""Input-state records, data matrices, and the data-consistency set.

A record of T inputs u(0..T-1) and T+1 states x(0..T) from one agent defines

    U_minus = [u(0) ... u(T-1)],  X_minus = [x(0) ... x(T-1)],
    X_plus  = [x(1) ... x(T)],

and the set of data-consistent systems {(A, B) : X_plus = A X_minus + B U_minus}.
Membership is measured here as a Frobenius residual; whether the set is a
singleton is decided by the rank of the stacked matrix [X_minus; U_minus].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .network import LtiModel


@dataclass(frozen=True)
class DataRecord:
    """T inputs and T+1 states measured from one agent, row per time step."""

    inputs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        inputs = np.atleast_2d(np.array(self.inputs, dtype=float))
        states = np.atleast_2d(np.array(self.states, dtype=float))
        if inputs.shape[0] < 1:
            raise ValueError("a record needs at least one input sample (T >= 1)")
        if states.shape[0] != inputs.shape[0] + 1:
            raise ValueError(
                f"need T+1 states for T={inputs.shape[0]} inputs, got {states.shape[0]}"
            )
        inputs.setflags(write=False)
        states.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "states", states)

    @property
    def T(self) -> int:
        return self.inputs.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]


@dataclass(frozen=True)
class DataMatrices:
    """Column-per-sample slices (U_minus, X_minus, X_plus) of a record."""

    U_minus: np.ndarray
    X_minus: np.ndarray
    X_plus: np.ndarray

    def __post_init__(self):
        U = np.atleast_2d(np.array(self.U_minus, dtype=float))
        Xm = np.atleast_2d(np.array(self.X_minus, dtype=float))
        Xp = np.atleast_2d(np.array(self.X_plus, dtype=float))
        if not (U.shape[1] == Xm.shape[1] == Xp.shape[1]):
            raise ValueError("U_minus, X_minus, X_plus must have equal column counts")
        if Xm.shape[0] != Xp.shape[0]:
            raise ValueError("X_minus and X_plus must have equal row counts")
        for name, M in (("U_minus", U), ("X_minus", Xm), ("X_plus", Xp)):
            M.setflags(write=False)
            object.__setattr__(self, name, M)

    @property
    def T(self) -> int:
        return self.X_minus.shape[1]

    @property
    def n(self) -> int:
        return self.X_minus.shape[0]

    @property
    def m(self) -> int:
        return self.U_minus.shape[0]

    def stacked(self) -> np.ndarray:
        """The (n+m) x T matrix [X_minus; U_minus]."""
        return np.vstack([self.X_minus, self.U_minus])


def build_matrices(record: DataRecord) -> DataMatrices:
    """Slice a record into the data matrices (U_minus, X_minus, X_plus)."""
    return DataMatrices(
        U_minus=record.inputs.T,
        X_minus=record.states[:-1].T,
        X_plus=record.states[1:].T,
    )


def generate_data(model: LtiModel, x0, inputs) -> DataRecord:
    """Produce a record by iterating x(k+1) = A x(k) + B u(k) from x0."""
    inputs = np.atleast_2d(np.array(inputs, dtype=float))
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size != model.n:
        raise ValueError(f"x0 must have length {model.n}, got {x0.size}")
    if inputs.shape[1] != model.m:
        raise ValueError(f"inputs must have {model.m} columns, got {inputs.shape[1]}")
    states = np.empty((inputs.shape[0] + 1, model.n))
    states[0] = x0
    for k in range(inputs.shape[0]):
        states[k + 1] = model.A @ states[k] + model.B @ inputs[k]
    return DataRecord(inputs=inputs, states=states)


def consistency_residual(model: LtiModel, dm: DataMatrices) -> float:
    """Frobenius norm of X_plus - A X_minus - B U_minus.

    Zero (up to round-off) exactly when (A, B) is consistent with the data.
    """
    if model.n != dm.n or model.m != dm.m:
        raise ValueError(
            f"model is ({model.n},{model.m}) but data is ({dm.n},{dm.m})"
        )
    return float(
        np.linalg.norm(dm.X_plus - model.A @ dm.X_minus - model.B @ dm.U_minus, "fro")
    )


def numerical_rank(M: np.ndarray) -> tuple[int, float]:
    """Rank by singular values with threshold max(shape)*eps*sigma_max.

    Returns (rank, threshold); the threshold is reported so the cutoff a
    verdict was based on is always visible.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    sigma = np.linalg.svd(M, compute_uv=False)
    if sigma.size == 0:
        return 0, 0.0
    threshold = max(M.shape) * np.finfo(float).eps * float(sigma[0])
    return int(np.count_nonzero(sigma > threshold)), threshold


@dataclass(frozen=True)
class IdentifiabilityVerdict:
    """Rank of [X_minus; U_minus] and, when it is full, the unique system."""

    identifiable: bool
    rank: int
    required_rank: int
    threshold: float
    model: LtiModel | None

    def __bool__(self) -> bool:
        return self.identifiable


def is_identifiable(dm: DataMatrices) -> IdentifiabilityVerdict:
    """Decide whether the data pin down a unique (A, B).

    The consistency set is a singleton exactly when the stacked matrix
    [X_minus; U_minus] has full row rank n+m; in that case the unique system
    is recovered through a right inverse of the stacked matrix.
    """
    stacked = dm.stacked()
    rank, threshold = numerical_rank(stacked)
    required = dm.n + dm.m
    if rank < required:
        return IdentifiabilityVerdict(False, rank, required, threshold, None)
    solution, *_ = np.linalg.lstsq(stacked.T, dm.X_plus.T, rcond=None)
    AB = solution.T
    model = LtiModel(A=AB[:, : dm.n], B=AB[:, dm.n :])
    return IdentifiabilityVerdict(True, rank, required, threshold, model)


def write_data_csv(record: DataRecord, path) -> None:
    """Write a record as CSV with header ``k,u_1..u_m,x_1..x_n``.

    One row per step k = 0..T; the input cells of the final row are empty
    because u(T) is never measured.
    """
    header = ["k"]
    header += [f"u_{j}" for j in range(1, record.m + 1)]
    header += [f"x_{j}" for j in range(1, record.n + 1)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(record.T + 1):
            u_cells = (
                [repr(float(v)) for v in record.inputs[k]] if k < record.T else [""] * record.m
            )
            x_cells = [repr(float(v)) for v in record.states[k]]
            writer.writerow([k] + u_cells + x_cells)


def read_data_csv(path) -> DataRecord:
    """Read a record written by :func:`write_data_csv`.

    Input cells on the final row may be empty or ``-``.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty data file")
    header = [cell.strip() for cell in rows[0]]
    if not header or header[0] != "k":
        raise ValueError(f"{path}: first header column must be 'k'")
    m = sum(1 for cell in header[1:] if cell.startswith("u_"))
    n = sum(1 for cell in header[1:] if cell.startswith("x_"))
    expected = ["k"] + [f"u_{j}" for j in range(1, m + 1)] + [f"x_{j}" for j in range(1, n + 1)]
    if header != expected or m < 1 or n < 1:
        raise ValueError(f"{path}: header must be k,u_1..u_m,x_1..x_n, got {header}")
    body = [row for row in rows[1:] if row]
    if len(body) < 2:
        raise ValueError(f"{path}: need at least two rows (T >= 1)")
    T = len(body) - 1
    inputs = np.empty((T, m))
    states = np.empty((T + 1, n))
    for idx, row in enumerate(body):
        if len(row) != 1 + m + n:
            raise ValueError(f"{path}: row {idx + 1} has {len(row)} cells, expected {1 + m + n}")
        if int(row[0]) != idx:
            raise ValueError(f"{path}: time index must run 0..{T}, got {row[0]} at row {idx + 1}")
        u_cells, x_cells = row[1 : 1 + m], row[1 + m :]
        if idx < T:
            inputs[idx] = [float(cell) for cell in u_cells]
        elif any(cell.strip() not in ("", "-") for cell in u_cells):
            raise ValueError(f"{path}: input cells must be empty at the final step k={T}")
        states[idx] = [float(cell) for cell in x_cells]
    return DataRecord(inputs=inputs, states=states)
