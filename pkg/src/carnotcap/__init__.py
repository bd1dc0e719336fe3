"""Capacity and distortion toolkit on abelian and Heisenberg Carnot groups.

The package verifies, numerically, a family of inequalities tying the
p-capacity of condensers to the distortion of the mapping transporting them:
capacity transformation under mappings of bounded (p,q)-distortion,
composition and push-forward norm bounds, the change-of-variables identity
with multiplicity, and the capacity-decay mechanism behind Liouville-type
rigidity. It ships a variational capacity solver on axis-aligned grids, a zoo
of analytic mappings with known distortion data, and a CLI that writes
delimited reports (optionally with rendered figures).
"""

from .groups import (
    GroupDescriptor,
    abelian,
    heisenberg,
    ball_volume,
    measure_triangle_constant,
)
from .grid import Box, GridFunction, horizontal_gradient, p_energy
from .maps import (
    MapSpec,
    DistortionReport,
    local_distortion,
    distortion_coefficient,
    change_of_variables_check,
    jacobian_from_hdiff,
    operator_norm_horizontal,
    validate_mapspec,
)
from .capacity import (
    Condenser,
    CapacityResult,
    DiscretizationError,
    ring_capacity_oracle,
    solve_capacity,
    solve_many,
    dilate_condenser,
    capacity_scaling_check,
    gauge_ring_condenser,
)
from .zoo import (
    ZooEntry,
    zoo_identity,
    zoo_left_translation,
    zoo_dilation,
    zoo_linear,
    zoo_winding,
    zoo_radial_power,
    zoo_anisotropic,
    zoo_table,
    zoo_from_name,
    linear_distortion_estimate,
    hpq_distortion_estimate,
    radial_bound_sequence,
)
from .pushforward import (
    Exponents,
    push_forward,
    multiplicity_floor,
    verify_capacity_inequality,
    verify_image_capacity_bound,
    verify_multiplicity_capacity_bound,
    verify_pushforward_norm,
    verify_composition_norm,
    liouville_decay,
)
from .reporting import VerificationReport, write_reports_csv

__version__ = "0.1.0"
