"""Analysis and design-exploration toolkit for MGTR low-noise amplifiers."""

__version__ = "0.1.0"

from .device_model import (  # noqa: F401
    BulkTie,
    MosfetParams,
    Polarity,
    PowerSeries,
    TerminalVoltages,
    drain_current,
    thermal_voltage,
    threshold_voltage,
    transconductance_series,
    triode_resistance,
)
from .bias_network import (  # noqa: F401
    BiasNetwork,
    BranchOperatingPoint,
    CtBranch,
    compute_power,
    ct_size_for_target,
    effective_gm,
    solve_self_bias,
)
from .design import LnaDesign, Mode, emit_design, load_design  # noqa: F401
from .mgtr_core import (  # noqa: F401
    CancellationResult,
    composite_series,
    exhaustive_grid_search,
    find_sweet_spot,
    gm2_profile,
)
from .rf_analysis import (  # noqa: F401
    ImpedanceEnv,
    NoiseModel,
    cascode_z2,
    eps_term,
    g_ob,
    g_omega,
    noise_figure_approx,
    noise_figure_full,
    voltage_gain,
    volterra_iip3,
    volterra_iip3_raw,
)
from .twotone import (  # noqa: F401
    FullDeviceNonlinearity,
    PolynomialNonlinearity,
    SpectrumResult,
    TwoToneSpec,
    extract_iip3,
    gain_from_sweep,
    simulate_two_tone,
)
