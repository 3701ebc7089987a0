"""Power-flow solvability and voltage-stability margin for distribution feeders."""
from importlib.resources import files

from .cindex import IndexReport, bolognani_bound, c_index, index_report, kessel_condition, necessary_condition
from .netmodel import (
    Branch,
    Bus,
    CaseError,
    NetworkCase,
    ReducedNetwork,
    build_admittance,
    eliminate_ties,
    load_case,
    reduce,
    save_case,
)
from .pfsolve import Divergence, Snapshot, SolveOptions, residual, solve
from .sweep import (
    SweepConfig,
    SweepReport,
    apply_penetration,
    impedance_sensitivity,
    linearized_voltage,
    power_factor_sensitivity,
    run_sweep,
)
from .wjac import JacobianBundle, jacobian_bundle

__version__ = "0.1.0"

__all__ = [
    "Branch", "Bus", "CaseError", "CIndexMonitor", "Divergence", "IndexReport", "JacobianBundle",
    "NetworkCase", "ReducedNetwork", "Snapshot", "SolveOptions", "SweepConfig", "SweepReport",
    "apply_penetration", "bolognani_bound", "build_admittance", "c_index", "data_path",
    "eliminate_ties", "impedance_sensitivity", "index_report", "jacobian_bundle", "kessel_condition",
    "linearized_voltage", "load_case", "necessary_condition", "power_factor_sensitivity", "reduce",
    "residual", "run_sweep", "save_case", "solve",
]


def data_path(name: str):
    """Path of a bundled case file (``feeder56.case``, ``two_bus.case``, ...)."""
    return files(__name__) / "data" / name


def __getattr__(name):
    # sklearn is heavy; only import it when the estimator is asked for
    if name == "CIndexMonitor":
        from .estimator import CIndexMonitor

        return CIndexMonitor
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
