"""diraclab: a numerical laboratory for a cubic Dirac equation with potential.

The solver evolves i du/dt + D u + V(x) u = <beta u, u> beta u on a radial
grid times an angular quadrature, through the partial-wave channel basis and
Strang splitting with exact substeps. Companion modules measure conserved
quantities, Lochak-Majorana preservation, dyadic mixed norms, scattering
profiles, and the decay/regularity assumptions placed on the potential.
"""

__version__ = "0.1.0"

from .algebra import (ALPHA, ALPHA5, BETA, GAMMA, SPIN, chiral_invariant,
                      dirac_constants, in_class_V, project_E, project_E_alt)
from .angular import (ChannelIndex, ChannelState, SphereBasis, analyze,
                      apply_K, apply_abs_K_pow, apply_dirac_channel,
                      channel_list, lambda_s_scalar, sph_harm, synthesize)
from .config import SimulationConfig, config_from_dict, preset
from .diagnostics import (DiagnosticsSeries, conserved_quantities, hardy_check,
                          lm_monitor, morawetz_residual, scattering_profile,
                          spectrum_probe)
from .evolution import (EvolutionState, Stepper, linear_flow_channels,
                        nonlinear_substep, simulate_channels, strang_step,
                        v0_substep)
from .grids import AngularQuadrature, GridField, RadialGrid
from .norms import (MixedNormSpec, SpaceTimeAccumulator, accumulate, h1_norm,
                    mixed_norm, smoothing_norm, x_norm)
from .potentials import (AssumptionReport, PotentialSpec, V0Term, WeightSpec,
                         check_A2, check_angular_assumptions,
                         check_condition_V, radial_profile)
from .radial_evolution import ChannelGenerator, assemble, propagate
