"""Data-driven synchronizability: certificate verification and gain synthesis.

Noiseless input-state data are informative for synchronizability with respect
to a coupling spectrum {lambda_1, ..., lambda_l} exactly when (a) X_minus has
full row rank and (b) there are right inverses G_1, ..., G_l of X_minus such
that every X_plus G_i is Schur and U_minus (lambda_i G_j - lambda_j G_i) = 0
for all pairs.  The load-bearing identity behind both directions is

    A + lambda_i B K_i = (A X_minus + B U_minus) G_i = X_plus G_i,
    K_i = U_minus G_i / lambda_i,

which holds for every data-consistent (A, B) simultaneously, so an accepted
certificate is sound for the whole consistency set, not just the system that
generated the data.

Verification (``verify_certificate``) recovers the minimum-norm G_i for a
candidate gain by least squares and checks residuals and spectral radii.
Synthesis (``synthesize_gain``) searches for a gain constructively by convex
feasibility: with F_i = G_i P it needs

    X_minus F_i = P,   U_minus F_i = lambda_i L,
    [[P, X_plus F_i], [(X_plus F_i)', P]]  positive definite,

and recovers K = L P^{-1}.  All three constraint families are affine in
lambda, so enforcing the endpoint eigenvalues lambda_min and lambda_max
covers every eigenvalue in between; the solver's output is never trusted and
is always re-verified.  Synthesis failure is NOT evidence against
informativity — the existence conditions say nothing about how to find the
right inverses, and this route is one constructive choice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import DataMatrices, numerical_rank
from .network import spectral_radius
from .topology import SpectrumSummary

DEFAULT_TOL = 1e-8
DEFAULT_SCHUR_MARGIN = 1e-7
SOLVER_PREFERENCE = ("CLARABEL", "SCS", "CVXOPT")

CONCLUSIVENESS_NOTE = (
    "verification is sound for every data-consistent system; failure of the "
    "synthesis routine does not prove the data uninformative"
)


class InformativityError(Exception):
    """Certificate verification or synthesis failure."""


class RankDeficient(InformativityError):
    """X_minus lacks full row rank, which conclusively refutes informativity."""


class EquationInfeasible(InformativityError):
    """[X_minus; U_minus] G = [I; lambda K] has no solution for the candidate gain."""


class NotSchur(InformativityError):
    """Some certified closed loop X_plus G_i is not strictly inside the unit disc."""


class CouplingViolated(InformativityError):
    """U_minus G_i / lambda_i disagrees across the right-inverse family."""


class Infeasible(InformativityError):
    """The convex synthesis found no gain.  Inconclusive, not a refutation."""


@dataclass(frozen=True)
class RightInverseFamily:
    """Right inverses of X_minus, one per coupling eigenvalue."""

    inverses: tuple
    lambdas: np.ndarray

    def __post_init__(self):
        inverses = tuple(np.atleast_2d(np.array(G, dtype=float)) for G in self.inverses)
        lambdas = np.array(self.lambdas, dtype=float).ravel()
        if len(inverses) != lambdas.size:
            raise ValueError("need one right inverse per eigenvalue")
        if len(inverses) == 0:
            raise ValueError("family must not be empty")
        for G in inverses:
            G.setflags(write=False)
        lambdas.setflags(write=False)
        object.__setattr__(self, "inverses", inverses)
        object.__setattr__(self, "lambdas", lambdas)

    def __len__(self) -> int:
        return len(self.inverses)


@dataclass(frozen=True)
class GainCertificate:
    """Machine-checkable evidence that a gain synchronizes every consistent system.

    ``radii[i]`` is the spectral radius of X_plus G_i,
    ``equation_residuals[i]`` the Frobenius norm of [X_minus;U_minus] G_i - [I; lambda_i K],
    ``coupling_residuals[i, j]`` the Frobenius norm of U_minus (lambda_i G_j - lambda_j G_i).
    """

    K: np.ndarray
    family: RightInverseFamily
    radii: np.ndarray
    coupling_residuals: np.ndarray
    equation_residuals: np.ndarray
    tol: float
    schur_margin: float


@dataclass(frozen=True)
class LmiSolution:
    """Feasible point of the synthesis problem (P > 0, L, one F per enforced eigenvalue)."""

    P: np.ndarray
    L: np.ndarray
    F: tuple
    K: np.ndarray
    enforced_lambdas: np.ndarray
    margin: float
    solver: str


@dataclass(frozen=True)
class ImageInclusionResult:
    """Least-squares witness for im [I; lambda K] inside im [X_minus; U_minus]."""

    included: bool
    residual: float
    witness: np.ndarray

    def __bool__(self) -> bool:
        return self.included


def check_rank_condition(dm: DataMatrices) -> bool:
    """True iff X_minus has full row rank (informativity condition on the state data)."""
    rank, _ = numerical_rank(dm.X_minus)
    return rank == dm.n


def _as_gain(K, dm: DataMatrices) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.shape != (dm.m, dm.n):
        raise ValueError(f"gain must be {dm.m}x{dm.n}, got shape {K.shape}")
    return K


def _stacked_target(dm: DataMatrices, lam: float, K: np.ndarray) -> np.ndarray:
    return np.vstack([np.eye(dm.n), lam * K])


def image_inclusion(dm: DataMatrices, lam: float, K, tol: float = DEFAULT_TOL) -> ImageInclusionResult:
    """Check im [I; lambda K] against im [X_minus; U_minus] by least squares.

    The minimum-norm solution G of [X_minus; U_minus] G = [I; lambda K] is
    returned as the witness; inclusion holds when the residual is below
    tol times the target's norm.
    """
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    K = _as_gain(K, dm)
    stacked = dm.stacked()
    target = _stacked_target(dm, lam, K)
    witness, *_ = np.linalg.lstsq(stacked, target, rcond=None)
    residual = float(np.linalg.norm(stacked @ witness - target, "fro"))
    scale = max(1.0, float(np.linalg.norm(target, "fro")))
    return ImageInclusionResult(
        included=residual <= tol * scale, residual=residual, witness=witness
    )


def verify_certificate(
    dm: DataMatrices,
    spectrum: SpectrumSummary,
    K,
    tol: float = DEFAULT_TOL,
    schur_margin: float = DEFAULT_SCHUR_MARGIN,
) -> GainCertificate:
    """Verify a candidate gain and return the full certificate, or raise.

    For every coupling eigenvalue the minimum-norm right inverse G_i solving
    [X_minus; U_minus] G_i = [I; lambda_i K] is recovered by least squares;
    acceptance requires every stacked-equation residual and every pairwise
    coupling residual below tolerance, and every spectral radius of
    X_plus G_i below 1 - schur_margin.  Acceptance certifies synchronization
    for EVERY data-consistent system, because X_plus G_i equals
    A + lambda_i B K for all of them at once.

    Raises
    ------
    RankDeficient
        X_minus lacks full row rank (conclusive non-informativity).
    EquationInfeasible
        Some stacked equation is unsolvable or the coupling identity fails.
    NotSchur
        Some certified closed loop has spectral radius >= 1 - schur_margin.
    """
    K = _as_gain(K, dm)
    if not check_rank_condition(dm):
        rank, _ = numerical_rank(dm.X_minus)
        raise RankDeficient(
            f"X_minus has rank {rank} < {dm.n}; the data cannot be informative"
        )
    stacked = dm.stacked()
    lambdas = spectrum.lambdas
    inverses = []
    equation_residuals = np.empty(lambdas.size)
    for i, lam in enumerate(lambdas):
        target = _stacked_target(dm, float(lam), K)
        G, *_ = np.linalg.lstsq(stacked, target, rcond=None)
        residual = float(np.linalg.norm(stacked @ G - target, "fro"))
        scale = max(1.0, float(np.linalg.norm(target, "fro")))
        if residual > tol * scale:
            raise EquationInfeasible(
                f"[X_minus;U_minus] G = [I; {lam:.6g} K] has residual {residual:.3e} "
                f"(> {tol:.1e} * {scale:.3e}); the gain's image-inclusion requirement fails"
            )
        inverses.append(G)
        equation_residuals[i] = residual

    ell = lambdas.size
    coupling_residuals = np.zeros((ell, ell))
    for i in range(ell):
        for j in range(i + 1, ell):
            value = float(
                np.linalg.norm(
                    dm.U_minus @ (lambdas[i] * inverses[j] - lambdas[j] * inverses[i]), "fro"
                )
            )
            coupling_residuals[i, j] = coupling_residuals[j, i] = value
            scale = max(
                1.0,
                abs(lambdas[i]) * float(np.linalg.norm(inverses[j], "fro"))
                + abs(lambdas[j]) * float(np.linalg.norm(inverses[i], "fro")),
            )
            if value > tol * scale:
                raise EquationInfeasible(
                    f"coupling identity fails for eigenvalue pair ({lambdas[i]:.6g}, "
                    f"{lambdas[j]:.6g}): residual {value:.3e} > {tol:.1e} * {scale:.3e}"
                )

    radii = np.array([spectral_radius(dm.X_plus @ G) for G in inverses])
    worst = int(np.argmax(radii))
    if radii[worst] >= 1.0 - schur_margin:
        raise NotSchur(
            f"certified closed loop at eigenvalue {lambdas[worst]:.6g} has spectral "
            f"radius {radii[worst]:.9f} >= 1 - {schur_margin:.1e}"
        )
    family = RightInverseFamily(inverses=tuple(inverses), lambdas=lambdas)
    return GainCertificate(
        K=K,
        family=family,
        radii=radii,
        coupling_residuals=coupling_residuals,
        equation_residuals=equation_residuals,
        tol=tol,
        schur_margin=schur_margin,
    )


def gain_from_family(family: RightInverseFamily, dm: DataMatrices, tol: float = 1e-9) -> np.ndarray:
    """Gain K = U_minus G_1 / lambda_1 from a right-inverse family.

    Validates the family invariants against the data (each G_i is a right
    inverse of X_minus) and checks that U_minus G_i / lambda_i agrees across
    the family, which is what makes the gain well defined.
    """
    lambdas = family.lambdas
    if lambdas[0] == 0:
        raise ValueError("the first eigenvalue must be nonzero")
    eye = np.eye(dm.n)
    for lam, G in zip(lambdas, family.inverses):
        defect = float(np.linalg.norm(dm.X_minus @ G - eye, "fro"))
        if defect > tol * max(1.0, float(np.linalg.norm(G, "fro"))):
            raise ValueError(
                f"family member for eigenvalue {lam:.6g} is not a right inverse of "
                f"X_minus (defect {defect:.3e})"
            )
    candidates = [dm.U_minus @ G / lam for lam, G in zip(lambdas, family.inverses)]
    K = candidates[0]
    for i in range(len(candidates)):
        for j in range(i + 1, len(candidates)):
            gap = float(np.linalg.norm(candidates[i] - candidates[j], "fro"))
            scale = max(1.0, float(np.linalg.norm(candidates[i], "fro")))
            if gap > tol * scale:
                raise CouplingViolated(
                    f"U_minus G_i / lambda_i disagrees between eigenvalues "
                    f"{lambdas[i]:.6g} and {lambdas[j]:.6g} by {gap:.3e}"
                )
    return K


def _pick_solver(preferred: str | None):
    import cvxpy as cp

    available = cp.installed_solvers()
    if preferred is not None:
        if preferred not in available:
            raise Infeasible(f"requested solver {preferred} is not installed")
        return [preferred]
    choices = [name for name in SOLVER_PREFERENCE if name in available]
    if not choices:
        raise Infeasible(
            f"no semidefinite-capable solver among {available}; install one of "
            f"{SOLVER_PREFERENCE}"
        )
    return choices


def synthesize_gain(
    dm: DataMatrices,
    spectrum: SpectrumSummary,
    tol: float = DEFAULT_TOL,
    enforce_all: bool = False,
    schur_margin: float = DEFAULT_SCHUR_MARGIN,
    solver: str | None = None,
) -> tuple[LmiSolution, GainCertificate]:
    """Search for a synchronizing gain by convex feasibility over (P, L, {F_i}).

    The problem is normalized by trace(P) = n and solved as margin
    maximization: find the largest t with P >= t*I and every block
    [[P, X_plus F_i], [(X_plus F_i)', P]] >= t*I subject to X_minus F_i = P
    and U_minus F_i = lambda_i L.  With the normalization the acceptance
    threshold is exactly t >= tol.  By default only the endpoint eigenvalues
    are enforced (sufficient, since every constraint is affine in lambda);
    ``enforce_all`` enforces the whole list instead.  On success the gain
    K = L P^{-1} is re-verified over the FULL eigenvalue list and both the
    feasible point and the certificate are returned.

    Raises
    ------
    RankDeficient
        X_minus lacks full row rank (conclusive).
    Infeasible
        No gain found by this method.  Inconclusive: the existence conditions
        are existential and this is one constructive route.
    """
    import cvxpy as cp

    if not check_rank_condition(dm):
        rank, _ = numerical_rank(dm.X_minus)
        raise RankDeficient(
            f"X_minus has rank {rank} < {dm.n}; the data cannot be informative"
        )
    lambdas = spectrum.lambdas
    if enforce_all:
        enforced = np.unique(lambdas)
    else:
        enforced = np.unique([spectrum.lambda_min, spectrum.lambda_max])

    n, m, T = dm.n, dm.m, dm.T
    P = cp.Variable((n, n), symmetric=True)
    L = cp.Variable((m, n))
    t = cp.Variable()
    F = [cp.Variable((T, n)) for _ in enforced]
    constraints = [cp.trace(P) == n, P >> t * np.eye(n)]
    for lam, F_i in zip(enforced, F):
        closed = dm.X_plus @ F_i
        constraints += [
            dm.X_minus @ F_i == P,
            dm.U_minus @ F_i == float(lam) * L,
            cp.bmat([[P, closed], [closed.T, P]]) >> t * np.eye(2 * n),
        ]
    problem = cp.Problem(cp.Maximize(t), constraints)

    statuses = []
    chosen = None
    for name in _pick_solver(solver):
        try:
            problem.solve(solver=name)
        except cp.error.SolverError as exc:
            statuses.append(f"{name}: solver error ({exc})")
            continue
        if problem.status == cp.OPTIMAL and t.value is not None:
            chosen = name
            break
        statuses.append(f"{name}: {problem.status}")
    if chosen is None:
        raise Infeasible(
            f"no gain found by this method ({'; '.join(statuses)}); {CONCLUSIVENESS_NOTE}"
        )
    margin = float(t.value)
    if margin < tol:  # trace(P) = n makes tol the absolute threshold
        raise Infeasible(
            f"no gain found by this method: best feasibility margin {margin:.3e} is "
            f"below {tol:.1e}; {CONCLUSIVENESS_NOTE}"
        )

    P_value = (P.value + P.value.T) / 2.0
    L_value = np.atleast_2d(L.value)
    K = np.linalg.solve(P_value.T, L_value.T).T
    lmi = LmiSolution(
        P=P_value,
        L=L_value,
        F=tuple(np.atleast_2d(F_i.value) for F_i in F),
        K=K,
        enforced_lambdas=enforced,
        margin=margin,
        solver=chosen,
    )
    # acceptance at 10*tol absorbs the solver's equality slack; the
    # certificate itself is recomputed from scratch, never copied from cvxpy
    certificate = verify_certificate(
        dm, spectrum, K, tol=10.0 * tol, schur_margin=schur_margin
    )
    return lmi, certificate


def certificate_to_dict(certificate: GainCertificate) -> dict:
    """JSON-ready view of a certificate, sufficient for third-party re-verification."""
    return {
        "gain": certificate.K.tolist(),
        "lambdas": certificate.family.lambdas.tolist(),
        "right_inverses": [G.tolist() for G in certificate.family.inverses],
        "spectral_radii": certificate.radii.tolist(),
        "equation_residuals": certificate.equation_residuals.tolist(),
        "coupling_residuals": certificate.coupling_residuals.tolist(),
        "tolerance": certificate.tol,
        "schur_margin": certificate.schur_margin,
        "note": CONCLUSIVENESS_NOTE,
    }


def write_certificate_json(certificate: GainCertificate, path) -> None:
    with open(path, "w") as fh:
        json.dump(certificate_to_dict(certificate), fh, indent=2, sort_keys=True)
        fh.write("\n")
