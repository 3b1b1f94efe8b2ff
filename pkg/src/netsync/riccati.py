"""Modified discrete algebraic Riccati equation and the model-based gain.

The design equation is

    P - A'PA + gamma * A'PB (B'PB + R)^{-1} B'PA - Q = 0,    gamma in (0, 1],

where gamma is the ratio lambda_min/lambda_max of the coupling spectrum.  A
positive definite solution P yields the synchronizing gain

    K = -(1/lambda_max) (B'PB + R)^{-1} B'PA,

which places A + lambda*B*K strictly inside the unit disc for every lambda in
[lambda_min, lambda_max].  The solver is plain fixed-point (value) iteration
started at Q; iterates stay symmetric positive definite, and divergence is
reported rather than decided, since no existence criterion is assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import LtiModel

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
DIVERGENCE_LIMIT = 1e12


class RiccatiError(Exception):
    """Failure of the modified Riccati solve."""


class NonConvergence(RiccatiError):
    """Fixed-point iteration diverged or hit the iteration cap.

    ``norm_history`` holds the Frobenius norm of every iterate produced.
    """

    def __init__(self, message: str, norm_history):
        super().__init__(message)
        self.norm_history = list(norm_history)


class IndefiniteIterate(RiccatiError):
    """An iterate lost positive definiteness; no P > 0 may exist here."""


def _symmetric(M, name: str) -> np.ndarray:
    M = np.atleast_2d(np.array(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.allclose(M, M.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(M).max())):
        raise ValueError(f"{name} must be symmetric")
    return (M + M.T) / 2.0


def _check_spd(M: np.ndarray, name: str) -> None:
    smallest = float(np.linalg.eigvalsh(M).min())
    if smallest <= 0:
        raise ValueError(f"{name} must be positive definite, smallest eigenvalue {smallest:.3e}")


@dataclass(frozen=True)
class RiccatiProblem:
    """Design data (A, B, Q, R, gamma) with Q > 0, R > 0 and gamma in (0, 1]."""

    model: LtiModel
    Q: np.ndarray
    R: np.ndarray
    gamma: float

    def __post_init__(self):
        Q = _symmetric(self.Q, "Q")
        R = _symmetric(self.R, "R")
        if Q.shape[0] != self.model.n:
            raise ValueError(f"Q must be {self.model.n}x{self.model.n}, got {Q.shape}")
        if R.shape[0] != self.model.m:
            raise ValueError(f"R must be {self.model.m}x{self.model.m}, got {R.shape}")
        _check_spd(Q, "Q")
        _check_spd(R, "R")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma}")
        Q.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "gamma", float(self.gamma))


@dataclass(frozen=True)
class RiccatiSolution:
    """Positive definite solution with its equation residual and iteration count."""

    P: np.ndarray
    residual: float
    iterations: int


def _iteration_map(problem: RiccatiProblem, P: np.ndarray) -> np.ndarray:
    A, B = problem.model.A, problem.model.B
    BPA = B.T @ P @ A
    gain_term = A.T @ P @ B @ np.linalg.solve(B.T @ P @ B + problem.R, BPA)
    nxt = problem.Q + A.T @ P @ A - problem.gamma * gain_term
    return (nxt + nxt.T) / 2.0


def riccati_residual(problem: RiccatiProblem, P) -> float:
    """Frobenius norm of P - A'PA + gamma*A'PB(B'PB+R)^{-1}B'PA - Q."""
    P = _symmetric(P, "P")
    A, B = problem.model.A, problem.model.B
    gain_term = A.T @ P @ B @ np.linalg.solve(B.T @ P @ B + problem.R, B.T @ P @ A)
    lhs = P - A.T @ P @ A + problem.gamma * gain_term - problem.Q
    return float(np.linalg.norm(lhs, "fro"))


def solve_modified_dare(
    problem: RiccatiProblem,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RiccatiSolution:
    """Solve the modified Riccati equation by fixed-point iteration from P0 = Q.

    Parameters
    ----------
    problem : RiccatiProblem
    tol : float
        Acceptance threshold on the Frobenius norm of the equation residual.
    max_iter : int
        Iteration cap.

    Returns
    -------
    RiccatiSolution

    Raises
    ------
    NonConvergence
        If iterates exceed the divergence guard or the cap is hit; carries
        the iterate norm history.
    IndefiniteIterate
        If an iterate stops being positive definite (defensive: for
        gamma <= 1 every iterate is Q plus a positive semidefinite term).
    """
    P = problem.Q.copy()
    norm_history = [float(np.linalg.norm(P, "fro"))]
    for iteration in range(1, max_iter + 1):
        P = _iteration_map(problem, P)
        norm = float(np.linalg.norm(P, "fro"))
        norm_history.append(norm)
        if norm > DIVERGENCE_LIMIT:
            raise NonConvergence(
                f"iterate norm {norm:.3e} exceeded {DIVERGENCE_LIMIT:.1e} at iteration "
                f"{iteration}; the equation may admit no positive definite solution",
                norm_history,
            )
        try:
            np.linalg.cholesky(P)
        except np.linalg.LinAlgError:
            raise IndefiniteIterate(
                f"iterate lost positive definiteness at iteration {iteration}"
            ) from None
        residual = riccati_residual(problem, P)
        if residual <= tol:
            return RiccatiSolution(P=P, residual=residual, iterations=iteration)
    raise NonConvergence(
        f"no solution with residual <= {tol:.1e} within {max_iter} iterations "
        f"(last residual {residual:.3e})",
        norm_history,
    )


def riccati_gain(model: LtiModel, P, R, lambda_max: float) -> np.ndarray:
    """Synchronizing gain K = -(1/lambda_max)(B'PB+R)^{-1}B'PA.

    P must be a positive definite solution of the modified Riccati equation
    built with gamma = lambda_min/lambda_max; callers should confirm the
    result with the spectral synchronization test.
    """
    P = _symmetric(P, "P")
    R = _symmetric(R, "R")
    if P.shape[0] != model.n:
        raise ValueError(f"P must be {model.n}x{model.n}, got {P.shape}")
    if R.shape[0] != model.m:
        raise ValueError(f"R must be {model.m}x{model.m}, got {R.shape}")
    if lambda_max <= 0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    A, B = model.A, model.B
    return -np.linalg.solve(B.T @ P @ B + R, B.T @ P @ A) / lambda_max
