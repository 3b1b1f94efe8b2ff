"""Interconnection matrices and their synchronization-relevant spectrum.

A coupling matrix C is admissible for the protocol when the all-ones vector
is an eigenvector of C, its eigenvalue mu is simple, and every remaining
eigenvalue is real and strictly positive.  Laplacians of connected undirected
graphs, symmetric row-stochastic matrices and random-walk Laplacians all
qualify.  ``validate_assumption`` checks these clauses numerically and
extracts the spectrum that the gain design and the spectral synchronization
test consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-9


class AssumptionViolation(Exception):
    """The coupling matrix fails one of the spectral admissibility clauses."""


class NotAnEigenvector(AssumptionViolation):
    """The all-ones vector is not an eigenvector of the coupling matrix."""


class ComplexSpectrum(AssumptionViolation):
    """Some eigenvalue has an imaginary part beyond tolerance."""


class MultiplicityViolation(AssumptionViolation):
    """The eigenvalue of the all-ones eigenvector is not simple."""


class NonPositiveEigenvalue(AssumptionViolation):
    """Some eigenvalue other than mu is not strictly positive."""


@dataclass(frozen=True)
class InterconnectionMatrix:
    """Square matrix of protocol couplings c_ij for p agents."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError(f"coupling matrix must be square, got shape {entries.shape}")
        if entries.shape[0] < 2:
            raise ValueError("a network needs at least two agents")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def p(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SpectrumSummary:
    """Spectrum of a validated coupling matrix, split off the sync eigenvalue.

    ``lambdas`` holds the p-1 eigenvalues other than ``mu``, ascending and
    with multiplicity; all of them are strictly positive.
    """

    mu: float
    lambdas: np.ndarray
    lambda_min: float = field(init=False)
    lambda_max: float = field(init=False)

    def __post_init__(self):
        lambdas = np.sort(np.array(self.lambdas, dtype=float).ravel())
        if lambdas.size == 0:
            raise ValueError("at least one coupling eigenvalue is required")
        if lambdas[0] <= 0:
            raise ValueError(f"coupling eigenvalues must be strictly positive, got {lambdas[0]}")
        lambdas.setflags(write=False)
        object.__setattr__(self, "lambdas", lambdas)
        object.__setattr__(self, "lambda_min", float(lambdas[0]))
        object.__setattr__(self, "lambda_max", float(lambdas[-1]))

    @property
    def gamma(self) -> float:
        """Ratio lambda_min/lambda_max used by the model-based gain design."""
        return self.lambda_min / self.lambda_max


def laplacian_from_edges(p: int, edges) -> InterconnectionMatrix:
    """Build the Laplacian (degree minus adjacency) of a simple undirected graph.

    Parameters
    ----------
    p : int
        Number of agents (vertices), p >= 2.
    edges : iterable of (int, int)
        Undirected edges with 1-based vertex indices.  Self-loops and
        duplicate edges are rejected.

    Returns
    -------
    InterconnectionMatrix
        Symmetric matrix with zero row sums.
    """
    if p < 2:
        raise ValueError(f"need at least two agents, got p={p}")
    entries = np.zeros((p, p))
    seen = set()
    for i, j in edges:
        if not (1 <= i <= p and 1 <= j <= p):
            raise ValueError(f"edge ({i},{j}) out of range for p={p} (indices are 1-based)")
        if i == j:
            raise ValueError(f"self-loop ({i},{j}) is not allowed")
        key = frozenset((i, j))
        if key in seen:
            raise ValueError(f"duplicate edge ({i},{j})")
        seen.add(key)
        a, b = i - 1, j - 1
        entries[a, a] += 1.0
        entries[b, b] += 1.0
        entries[a, b] -= 1.0
        entries[b, a] -= 1.0
    return InterconnectionMatrix(entries)


def complete_graph_laplacian(p: int) -> np.ndarray:
    """Laplacian of the complete undirected graph on p vertices.

    Diagonal entries equal p-1, off-diagonal entries equal -1; the kernel is
    spanned by the all-ones vector.  This matrix defines the disagreement
    output used to measure synchronization.
    """
    if p < 2:
        raise ValueError(f"need at least two vertices, got p={p}")
    return p * np.eye(p) - np.ones((p, p))


def validate_assumption(C, tol: float = DEFAULT_TOL) -> SpectrumSummary:
    """Check spectral admissibility of a coupling matrix and extract its spectrum.

    Verifies, in order: the all-ones vector is an eigenvector (its eigenvalue
    mu is recovered as the mean of the componentwise image), the whole
    spectrum is real, mu is a simple eigenvalue, and every other eigenvalue
    is strictly positive.  All comparisons are relative to the spectral scale
    max(1, ||C||_2); the tolerance semantics are a choice of this
    implementation, not part of the admissibility definition itself.

    Parameters
    ----------
    C : InterconnectionMatrix or array_like
        Square coupling matrix.
    tol : float
        Relative tolerance for all four clauses.

    Returns
    -------
    SpectrumSummary

    Raises
    ------
    NotAnEigenvector, ComplexSpectrum, MultiplicityViolation, NonPositiveEigenvalue
        Naming the violated clause.
    """
    if not isinstance(C, InterconnectionMatrix):
        C = InterconnectionMatrix(C)
    entries = C.entries
    p = C.p
    ones = np.ones(p)
    image = entries @ ones
    mu = float(image.mean())
    scale = max(1.0, float(np.linalg.norm(entries, 2)))
    defect = float(np.linalg.norm(image - mu * ones))
    if defect > tol * scale:
        raise NotAnEigenvector(
            f"the all-ones vector is not an eigenvector: ||C*1 - mu*1|| = {defect:.3e} "
            f"exceeds {tol:.1e} * {scale:.3e}"
        )

    symmetric = np.allclose(entries, entries.T, rtol=0.0, atol=1e-12 * scale)
    if symmetric:
        eigenvalues = np.linalg.eigvalsh(entries)
    else:
        raw = np.linalg.eigvals(entries)
        worst_imag = float(np.abs(raw.imag).max())
        if worst_imag > tol * scale:
            raise ComplexSpectrum(
                f"eigenvalues must be real: max imaginary part {worst_imag:.3e} "
                f"exceeds {tol:.1e} * {scale:.3e}"
            )
        eigenvalues = np.sort(raw.real)

    near_mu = np.abs(eigenvalues - mu) <= tol * scale
    count = int(near_mu.sum())
    if count == 0:
        raise NotAnEigenvector(
            f"recovered mu={mu:.6g} does not match any computed eigenvalue"
        )
    if count > 1:
        raise MultiplicityViolation(
            f"mu={mu:.6g} must be a simple eigenvalue but {count} eigenvalues lie "
            f"within {tol:.1e} * {scale:.3e} of it"
        )
    rest = np.delete(eigenvalues, int(np.argmin(np.abs(eigenvalues - mu))))
    smallest = float(rest.min())
    if smallest <= tol * scale:
        raise NonPositiveEigenvalue(
            f"all eigenvalues other than mu must be strictly positive, "
            f"smallest is {smallest:.6g}"
        )
    return SpectrumSummary(mu=mu, lambdas=rest)


def read_edge_list(path) -> list[tuple[int, int]]:
    """Parse a plain-text edge list: one 1-based ``i j`` pair per line.

    Blank lines and ``#`` comments are ignored.
    """
    edges = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'i j', got {line.rstrip()!r}")
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: vertex indices must be integers") from exc
    return edges


def read_matrix_csv(path) -> np.ndarray:
    """Load a dense real matrix from CSV (one row per line, comma-separated)."""
    try:
        return np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    except ValueError as exc:
        raise ValueError(f"{path}: not a valid matrix CSV: {exc}") from exc
