"""Population inversion in driven ladder systems with cascade spontaneous emission."""

__version__ = "0.1.0"

from ._kernels import BACKEND  # noqa: E402
from .dynamics import (  # noqa: E402
    DecayChannel,
    IntegrationError,
    Trajectory,
    lindblad_channels,
    master_rhs,
    propagate,
    propagate_expm,
    rwa_hamiltonian,
)
from .model import (  # noqa: E402
    DomainError,
    Envelope,
    LadderSystem,
    PulseSpec,
    Schedule,
    ground_state,
    ratios_to_durations,
    rb_default,
    validate_system,
)
from .oracle import cascade_populations, rabi_populations  # noqa: E402
from .protocol import (  # noqa: E402
    YieldReport,
    build_inversion_schedule,
    check_ratio_heuristic,
    occupancy,
    required_area,
    yield_metric,
)
from .sweep import SweepGrid, SweepResult, export_fig2, optimize_ratios, run_sweep  # noqa: E402
