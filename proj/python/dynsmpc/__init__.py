"""Stochastic MPC with dynamic chance constraints."""

from ._core import (
    ConfigError,
    InfeasibleError,
    ProblemInstance,
    RunConfig,
    SolveError,
    ClosedLoopOptions,
    MonteCarloOptions,
    SafetyResult,
    SimulationReport,
    StaticProbabilityResult,
    SynthesisContext,
    TighteningOptions,
    TighteningSchedule,
    Trajectory,
    chi2_quantile,
    dc_dc_converter_instance,
    load_config,
    min_static_probability,
    monte_carlo,
    parse_config,
    run_closed_loop,
    solve_dare,
    solve_lyapunov,
    solve_safety,
    synthesize,
    version,
)

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "ProblemInstance",
    "RunConfig",
    "SolveError",
    "ClosedLoopOptions",
    "MonteCarloOptions",
    "SafetyResult",
    "SimulationReport",
    "StaticProbabilityResult",
    "SynthesisContext",
    "TighteningOptions",
    "TighteningSchedule",
    "Trajectory",
    "chi2_quantile",
    "dc_dc_converter_instance",
    "load_config",
    "min_static_probability",
    "monte_carlo",
    "parse_config",
    "run_closed_loop",
    "solve_dare",
    "solve_lyapunov",
    "solve_safety",
    "synthesize",
    "version",
]
