"""ISRS GN model: numerical and closed-form NLI coefficients, multi-span links and scenarios."""
from .core import (Channel, ChannelPlan, FiberParams, LinkConfig, NliResult, SpanConfig,
                   ValidityWarning)
from .quadrature import QuadratureError, QuadratureSpec
from .raman import exact_normalizer, normalized_power_profile, uniform_spectrum_normalizer
from .integral import (eta_spm_integral, eta_total_integral, eta_xpm_integral, evaluate_plan,
                       link_function)
from .closed_form import (ClosedFormConstants, eta_spm_closed, eta_total_closed,
                          eta_xpm_closed_single, t_factor)
from .registry import NliModelHandle, UnknownModelError, lookup_model, register_model
from .link import (ChannelState, LinkReport, ase_power, gsnr_db, optimize_uniform_launch_power,
                   propagate_span, simulate_link)
from .scenario import ScenarioConfig, compare, generate_scenario, parse_config, run
from .kernels import BACKEND

__version__ = "0.1.0"
