"""Network assembly, spectral synchronization test, and trajectory simulation.

The closed-loop network of p identical agents x_i(k+1) = A x_i(k) + B u_i(k)
under the coupling protocol u_i = K * sum_j c_ij x_j evolves as

    x(k+1) = (I_p (x) A + C (x) B K) x(k)

with the agent states stacked agent-major.  Synchronization (all pairwise
state differences decaying to zero) is equivalent to A + lambda*B*K being
Schur for every coupling eigenvalue lambda other than the sync eigenvalue mu;
the disagreement signal used to observe it is (L (x) I_n) x with L the
complete-graph Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .topology import InterconnectionMatrix, SpectrumSummary, complete_graph_laplacian

BLOWUP_LIMIT = 1e12


class StateBlowUp(RuntimeError):
    """Simulation aborted: the network state norm exceeded the overflow guard."""

    def __init__(self, step: int, norm: float, limit: float):
        super().__init__(
            f"state norm {norm:.3e} exceeded {limit:.1e} at step {step}; "
            "the closed loop is unstable on the simulated horizon"
        )
        self.step = step
        self.norm = norm
        self.limit = limit


@dataclass(frozen=True)
class LtiModel:
    """State and input maps (A, B) of one agent."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.A, dtype=float))
        B = np.atleast_2d(np.array(self.B, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if B.ndim != 2 or B.shape[0] != A.shape[0]:
            raise ValueError(f"B must have {A.shape[0]} rows, got shape {B.shape}")
        if A.shape[0] < 1 or B.shape[1] < 1:
            raise ValueError("state and input dimensions must be at least 1")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]


@dataclass(frozen=True)
class NetworkModel:
    """Interconnected network: agent model, coupling matrix, gain.

    ``closed_loop`` is always rebuilt from the Kronecker expression at
    construction, never stored from elsewhere.
    """

    model: LtiModel
    C: InterconnectionMatrix
    K: np.ndarray
    closed_loop: np.ndarray = field(init=False)

    def __post_init__(self):
        K = _as_gain(self.K, self.model)
        object.__setattr__(self, "K", K)
        closed_loop = np.kron(np.eye(self.C.p), self.model.A) + np.kron(
            self.C.entries, self.model.B @ K
        )
        closed_loop.setflags(write=False)
        object.__setattr__(self, "closed_loop", closed_loop)

    @property
    def p(self) -> int:
        return self.C.p

    @property
    def n(self) -> int:
        return self.model.n


@dataclass(frozen=True)
class SynchronizationVerdict:
    """Outcome of the spectral test with the per-eigenvalue closed-loop radii."""

    synchronizing: bool
    lambdas: np.ndarray
    radii: np.ndarray

    def __bool__(self) -> bool:
        return self.synchronizing


@dataclass(frozen=True)
class TrajectoryRecord:
    """Time-indexed stacked network state with disagreement norms.

    ``states`` has shape (horizon+1, p*n); ``disagreement[k]`` is the
    Euclidean norm of (L (x) I_n) x(k) with L the complete-graph Laplacian.
    """

    states: np.ndarray
    disagreement: np.ndarray
    horizon: int
    agents: int
    state_dim: int

    def __post_init__(self):
        if self.states.shape[0] != self.horizon + 1 or self.disagreement.shape[0] != self.horizon + 1:
            raise ValueError("states and disagreement must have horizon+1 entries")

    def agent_states(self, k: int) -> np.ndarray:
        """States at step k as a (p, n) array, one row per agent."""
        return self.states[k].reshape(self.agents, self.state_dim)


def _as_gain(K, model: LtiModel) -> np.ndarray:
    K = np.atleast_2d(np.array(K, dtype=float))
    if K.shape != (model.m, model.n):
        raise ValueError(f"gain must be {model.m}x{model.n}, got shape {K.shape}")
    K.setflags(write=False)
    return K


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus of a square real matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.shape[0] != M.shape[1]:
        raise ValueError(f"matrix must be square, got shape {M.shape}")
    return float(np.abs(np.linalg.eigvals(M)).max())


def assemble_network(model: LtiModel, C: InterconnectionMatrix, K) -> NetworkModel:
    """Assemble the closed-loop network I_p (x) A + C (x) B K."""
    if not isinstance(C, InterconnectionMatrix):
        C = InterconnectionMatrix(C)
    return NetworkModel(model=model, C=C, K=K)


def is_synchronizing(model: LtiModel, spectrum: SpectrumSummary, K) -> SynchronizationVerdict:
    """Spectral synchronization test.

    The network synchronizes exactly when A + lambda*B*K is Schur for every
    coupling eigenvalue lambda other than mu; the verdict carries the
    spectral radius at each of them.
    """
    K = _as_gain(K, model)
    radii = np.array(
        [spectral_radius(model.A + lam * model.B @ K) for lam in spectrum.lambdas]
    )
    return SynchronizationVerdict(
        synchronizing=bool(np.all(radii < 1.0)),
        lambdas=spectrum.lambdas,
        radii=radii,
    )


def simulate(network: NetworkModel, x0, horizon: int, blowup_limit: float = BLOWUP_LIMIT) -> TrajectoryRecord:
    """Iterate the closed-loop network and record the disagreement norm.

    Parameters
    ----------
    network : NetworkModel
    x0 : array_like
        Stacked initial state of length p*n (agent-major).
    horizon : int
        Number of steps; the record holds horizon+1 states.
    blowup_limit : float
        Simulation aborts with :class:`StateBlowUp` once the state norm
        exceeds this guard instead of silently overflowing.
    """
    x0 = np.asarray(x0, dtype=float).ravel()
    p, n = network.p, network.n
    if x0.size != p * n:
        raise ValueError(f"initial state must have length {p * n}, got {x0.size}")
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")

    states = np.empty((horizon + 1, p * n))
    states[0] = x0
    closed_loop = network.closed_loop
    for k in range(horizon):
        nxt = closed_loop @ states[k]
        norm = float(np.linalg.norm(nxt))
        if not np.isfinite(norm) or norm > blowup_limit:
            raise StateBlowUp(step=k + 1, norm=norm, limit=blowup_limit)
        states[k + 1] = nxt

    L = complete_graph_laplacian(p)
    disagreement = np.array(
        [float(np.linalg.norm(L @ states[k].reshape(p, n))) for k in range(horizon + 1)]
    )
    return TrajectoryRecord(
        states=states, disagreement=disagreement, horizon=horizon, agents=p, state_dim=n
    )


def write_trajectory_csv(record: TrajectoryRecord, path) -> None:
    """Export a trajectory as CSV: header ``k,x_1_1,...,x_p_n,disagreement``."""
    header = ["k"]
    for agent in range(1, record.agents + 1):
        for comp in range(1, record.state_dim + 1):
            header.append(f"x_{agent}_{comp}")
    header.append("disagreement")
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k in range(record.horizon + 1):
            cells = [str(k)]
            cells += [repr(float(v)) for v in record.states[k]]
            cells.append(repr(float(record.disagreement[k])))
            fh.write(",".join(cells) + "\n")
