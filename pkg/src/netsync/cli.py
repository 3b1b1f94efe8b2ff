"""Command-line driver for end-to-end synchronization experiments.

Subcommands
-----------
validate-topology
    Check a coupling matrix against the spectral admissibility clauses and
    report its synchronization-relevant spectrum.
design
    Produce a gain artifact, either model-based (modified Riccati equation)
    or directly from measured data (certificate synthesis + verification).
simulate
    Run the closed-loop network with a previously designed gain and emit the
    trajectory CSV plus a metrics JSON.
report
    Aggregate metrics JSON files from several runs into one report.

Exit codes: 0 success, 1 I/O or parse error, 2 assumption violation,
3 design failure, 4 simulation blow-up.  All matrix payloads are referenced
from the config as CSV paths (resolved relative to the config file);
experiment outputs are deterministic for identical inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import riccati as riccati_mod
from .data import build_matrices, read_data_csv
from .informativity import (
    DEFAULT_SCHUR_MARGIN,
    DEFAULT_TOL as CERTIFICATE_TOL,
    InformativityError,
    certificate_to_dict,
    synthesize_gain,
)
from .network import (
    LtiModel,
    StateBlowUp,
    assemble_network,
    is_synchronizing,
    simulate,
    write_trajectory_csv,
)
from .riccati import RiccatiError, RiccatiProblem, riccati_gain, solve_modified_dare
from .topology import (
    DEFAULT_TOL as ASSUMPTION_TOL,
    AssumptionViolation,
    InterconnectionMatrix,
    laplacian_from_edges,
    read_edge_list,
    read_matrix_csv,
    validate_assumption,
)

DEFAULT_TOLERANCES = {
    "assumption": ASSUMPTION_TOL,
    "certificate": CERTIFICATE_TOL,
    "riccati": riccati_mod.DEFAULT_TOL,
    "schur_margin": DEFAULT_SCHUR_MARGIN,
}

TOLERANCE_NOTE = (
    "eigenvalue realness/positivity and multiplicity are decided relative to "
    "max(1, ||C||_2) with the tolerance reported here; the cutoff is a choice "
    "of this implementation"
)


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: topology and model sources, design method, run settings."""

    base_dir: Path
    method: str | None
    topology_matrix_csv: Path | None
    topology_edge_list: Path | None
    agents: int | None
    model_a_csv: Path | None
    model_b_csv: Path | None
    data_csv: Path | None
    q_csv: Path | None
    r_csv: Path | None
    initial_state: np.ndarray | None
    horizon: int | None
    tolerances: dict
    output_dir: Path


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    base = path.parent

    def resolve(value):
        return None if value is None else (base / value)

    topology = raw.get("topology", {})
    if not isinstance(topology, dict):
        raise ConfigError("'topology' must be an object")
    matrix_csv = topology.get("matrix_csv")
    edge_list = topology.get("edge_list")
    if (matrix_csv is None) == (edge_list is None):
        raise ConfigError("topology needs exactly one of 'matrix_csv' or 'edge_list'")
    agents = topology.get("agents")
    if edge_list is not None and agents is None:
        raise ConfigError("topology with 'edge_list' also needs 'agents'")

    method = raw.get("method")
    if method is not None and method not in ("riccati", "data"):
        raise ConfigError(f"method must be 'riccati' or 'data', got {method!r}")

    model = raw.get("model", {})
    weights = raw.get("weights", {})

    initial_state = raw.get("initial_state")
    initial_state_csv = raw.get("initial_state_csv")
    if initial_state is not None and initial_state_csv is not None:
        raise ConfigError("give either 'initial_state' or 'initial_state_csv', not both")
    if initial_state_csv is not None:
        initial_state = read_matrix_csv(resolve(initial_state_csv)).ravel()
    elif initial_state is not None:
        initial_state = np.asarray(initial_state, dtype=float).ravel()

    horizon = raw.get("horizon")
    if horizon is not None:
        horizon = int(horizon)
        if horizon < 0:
            raise ConfigError(f"horizon must be nonnegative, got {horizon}")

    tolerances = dict(DEFAULT_TOLERANCES)
    for key, value in raw.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance {key!r}; expected one of {sorted(DEFAULT_TOLERANCES)}")
        tolerances[key] = float(value)

    return ExperimentConfig(
        base_dir=base,
        method=method,
        topology_matrix_csv=resolve(matrix_csv),
        topology_edge_list=resolve(edge_list),
        agents=int(agents) if agents is not None else None,
        model_a_csv=resolve(model.get("a_csv")),
        model_b_csv=resolve(model.get("b_csv")),
        data_csv=resolve(raw.get("data_csv")),
        q_csv=resolve(weights.get("q_csv")),
        r_csv=resolve(weights.get("r_csv")),
        initial_state=initial_state,
        horizon=horizon,
        tolerances=tolerances,
        output_dir=base / raw.get("output_dir", "out"),
    )


def _load_topology(config: ExperimentConfig) -> InterconnectionMatrix:
    if config.topology_matrix_csv is not None:
        return InterconnectionMatrix(read_matrix_csv(config.topology_matrix_csv))
    edges = read_edge_list(config.topology_edge_list)
    return laplacian_from_edges(config.agents, edges)


def _load_model(config: ExperimentConfig) -> LtiModel:
    if config.model_a_csv is None or config.model_b_csv is None:
        raise ConfigError("this command needs model.a_csv and model.b_csv in the config")
    return LtiModel(A=read_matrix_csv(config.model_a_csv), B=read_matrix_csv(config.model_b_csv))


def _output_dir(args, config: ExperimentConfig) -> Path:
    out = Path(args.out) if args.out else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_validate_topology(args) -> int:
    config = load_config(args.config)
    out = _output_dir(args, config)
    tol = args.tol if args.tol is not None else config.tolerances["assumption"]
    C = _load_topology(config)
    report_path = out / "topology_report.json"
    try:
        spectrum = validate_assumption(C, tol=tol)
    except AssumptionViolation as exc:
        _write_json(
            {
                "valid": False,
                "violation": type(exc).__name__,
                "detail": str(exc),
                "agents": C.p,
                "tolerance": tol,
                "tolerance_note": TOLERANCE_NOTE,
            },
            report_path,
        )
        print(f"wrote {report_path}", file=sys.stderr)
        raise
    _write_json(
        {
            "valid": True,
            "agents": C.p,
            "mu": spectrum.mu,
            "lambdas": spectrum.lambdas.tolist(),
            "lambda_min": spectrum.lambda_min,
            "lambda_max": spectrum.lambda_max,
            "tolerance": tol,
            "tolerance_note": TOLERANCE_NOTE,
        },
        report_path,
    )
    print(f"topology OK: {C.p} agents, mu = {spectrum.mu:.6g}, "
          f"lambdas = {spectrum.lambdas.tolist()}")
    print(f"wrote {report_path}")
    return 0


def _design_riccati(config: ExperimentConfig, args, spectrum) -> dict:
    model = _load_model(config)
    Q = read_matrix_csv(config.q_csv) if config.q_csv else np.eye(model.n)
    R = read_matrix_csv(config.r_csv) if config.r_csv else np.eye(model.m)
    tol = args.tol if args.tol is not None else config.tolerances["riccati"]
    problem = RiccatiProblem(model=model, Q=Q, R=R, gamma=spectrum.gamma)
    solution = solve_modified_dare(problem, tol=tol)
    K = riccati_gain(model, solution.P, R, spectrum.lambda_max)
    verdict = is_synchronizing(model, spectrum, K)
    return {
        "method": "riccati",
        "gain": K.tolist(),
        "synchronizing": verdict.synchronizing,
        "closed_loop_radii": verdict.radii.tolist(),
        "riccati": {
            "P": solution.P.tolist(),
            "residual": solution.residual,
            "iterations": solution.iterations,
            "gamma": spectrum.gamma,
            "lambda_max": spectrum.lambda_max,
            "tolerance": tol,
        },
    }


def _design_data(config: ExperimentConfig, args, spectrum) -> dict:
    if config.data_csv is None:
        raise ConfigError("the data method needs 'data_csv' in the config")
    dm = build_matrices(read_data_csv(config.data_csv))
    tol = args.tol if args.tol is not None else config.tolerances["certificate"]
    lmi, certificate = synthesize_gain(
        dm,
        spectrum,
        tol=tol,
        enforce_all=args.enforce_all_eigenvalues,
        schur_margin=config.tolerances["schur_margin"],
    )
    return {
        "method": "data",
        "gain": certificate.K.tolist(),
        "synchronizing": True,
        "closed_loop_radii": certificate.radii.tolist(),
        "certificate": certificate_to_dict(certificate),
        "synthesis": {
            "solver": lmi.solver,
            "feasibility_margin": lmi.margin,
            "enforced_lambdas": lmi.enforced_lambdas.tolist(),
            "tolerance": tol,
        },
    }


def cmd_design(args) -> int:
    config = load_config(args.config)
    method = args.method or config.method
    if method not in ("riccati", "data"):
        raise ConfigError("design needs a method: pass --method or set 'method' in the config")
    out = _output_dir(args, config)
    spectrum = validate_assumption(_load_topology(config), tol=config.tolerances["assumption"])

    if method == "riccati":
        artifact = _design_riccati(config, args, spectrum)
    else:
        artifact = _design_data(config, args, spectrum)
    artifact["spectrum"] = {
        "mu": spectrum.mu,
        "lambdas": spectrum.lambdas.tolist(),
    }
    gain_path = out / "gain.json"
    _write_json(artifact, gain_path)
    radii = ", ".join(f"{r:.6f}" for r in artifact["closed_loop_radii"])
    print(f"{method} design: gain {np.array(artifact['gain']).shape}, radii [{radii}]")
    print(f"wrote {gain_path}")
    if not artifact["synchronizing"]:
        print("design failure: the gain fails the spectral synchronization test", file=sys.stderr)
        return 3
    return 0


def cmd_simulate(args) -> int:
    config = load_config(args.config)
    out = _output_dir(args, config)
    gain_path = Path(args.gain) if args.gain else out / "gain.json"
    try:
        with open(gain_path) as fh:
            artifact = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{gain_path}: invalid gain artifact: {exc}") from exc
    if "gain" not in artifact:
        raise ConfigError(f"{gain_path}: gain artifact has no 'gain' entry")
    K = np.asarray(artifact["gain"], dtype=float)

    if config.initial_state is None:
        raise ConfigError("simulate needs 'initial_state' (or 'initial_state_csv') in the config")
    if config.horizon is None:
        raise ConfigError("simulate needs 'horizon' in the config")
    model = _load_model(config)
    C = _load_topology(config)
    spectrum = validate_assumption(C, tol=config.tolerances["assumption"])

    network = assemble_network(model, C, K)
    record = simulate(network, config.initial_state, config.horizon)
    trajectory_path = out / "trajectory.csv"
    write_trajectory_csv(record, trajectory_path)

    verdict = is_synchronizing(model, spectrum, K)
    final = record.agent_states(record.horizon)
    max_pairwise = 0.0
    for i in range(record.agents):
        for j in range(i + 1, record.agents):
            max_pairwise = max(max_pairwise, float(np.linalg.norm(final[i] - final[j])))
    metrics = {
        "horizon": record.horizon,
        "disagreement_initial": float(record.disagreement[0]),
        "disagreement_final": float(record.disagreement[-1]),
        "max_pairwise_difference_final": max_pairwise,
        "max_agent_norm_final": float(max(np.linalg.norm(final[i]) for i in range(record.agents))),
        "lambdas": verdict.lambdas.tolist(),
        "closed_loop_radii": verdict.radii.tolist(),
        "synchronizing": verdict.synchronizing,
    }
    metrics_path = out / "metrics.json"
    _write_json(metrics, metrics_path)
    print(
        f"simulated {record.horizon} steps: disagreement "
        f"{metrics['disagreement_initial']:.6g} -> {metrics['disagreement_final']:.6g}"
    )
    print(f"wrote {trajectory_path} and {metrics_path}")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out) if args.out else Path(".")
    if args.metrics:
        paths = [Path(p) for p in args.metrics]
    else:
        paths = sorted(out.rglob("metrics.json"))
    runs = {}
    for path in paths:
        with open(path) as fh:
            try:
                runs[str(path)] = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid metrics file: {exc}") from exc
    if not runs:
        print(f"no metrics.json files found under {out}", file=sys.stderr)
        return 1
    finals = [m["disagreement_final"] for m in runs.values() if "disagreement_final" in m]
    report = {
        "runs": runs,
        "summary": {
            "count": len(runs),
            "synchronizing_count": sum(1 for m in runs.values() if m.get("synchronizing")),
            "min_disagreement_final": min(finals) if finals else None,
            "max_disagreement_final": max(finals) if finals else None,
        },
    }
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    _write_json(report, report_path)
    for name, m in runs.items():
        print(f"{name}: final disagreement {m.get('disagreement_final', 'n/a')}")
    print(f"wrote {report_path}")
    return 0


class _Parser(argparse.ArgumentParser):
    # usage problems are parse errors (exit 1), not assumption violations (exit 2)
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="netsync", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate-topology", help="check coupling-matrix admissibility")
    validate.add_argument("--config", required=True, help="experiment config JSON")
    validate.add_argument("--out", help="output directory (overrides config)")
    validate.add_argument("--tol", type=float, help="admissibility tolerance")
    validate.set_defaults(handler=cmd_validate_topology)

    design = sub.add_parser("design", help="design a synchronizing gain")
    design.add_argument("--config", required=True, help="experiment config JSON")
    design.add_argument("--out", help="output directory (overrides config)")
    design.add_argument("--tol", type=float, help="design tolerance for the chosen method")
    design.add_argument("--method", choices=("riccati", "data"), help="overrides config method")
    design.add_argument(
        "--enforce-all-eigenvalues",
        action="store_true",
        help="enforce every coupling eigenvalue in the synthesis instead of the endpoints",
    )
    design.set_defaults(handler=cmd_design)

    sim = sub.add_parser("simulate", help="simulate the closed-loop network")
    sim.add_argument("--config", required=True, help="experiment config JSON")
    sim.add_argument("--out", help="output directory (overrides config)")
    sim.add_argument("--gain", help="gain artifact path (default: <out>/gain.json)")
    sim.set_defaults(handler=cmd_simulate)

    report = sub.add_parser("report", help="aggregate metrics across runs")
    report.add_argument("metrics", nargs="*", help="metrics.json paths (default: scan --out)")
    report.add_argument("--out", help="directory to scan and write report.json into")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssumptionViolation as exc:
        print(f"assumption violation: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except (InformativityError, RiccatiError) as exc:
        print(f"design failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except StateBlowUp as exc:
        print(f"simulation blow-up: {exc}", file=sys.stderr)
        return 4
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
