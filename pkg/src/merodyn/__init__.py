"""Parameter planes, attracting cycles and special parameters of meromorphic families."""
from .errors import (BadSeed, FamilyHasNoPoles, Inconclusive, LeftComponent, MerodynError,
                     NoConvergence, NotAttracting, NotRepelling, NumericalFailure,
                     OrbitThroughPole, ParameterSingularity, PeriodCollapse, SingularPoint,
                     Stalled, UnknownFamily)
from .families import (FAMILY_IDS, FamilySlice, all_families, get_family, make_exponential,
                       make_fixed_multiplier_slice, make_pi_slice, make_precomposed_slice,
                       make_tangent, make_tanh_sq_families, parse_complex)
from .orbit import (DEFAULT_BUDGET, CycleRecord, IterationBudget, OrbitResult, Status,
                    iterate_free_av, lyapunov, multiplier_at, refine_cycle)
from .render import (DEFAULT_PALETTE, ComponentMask, Palette, PlaneGrid, Window,
                     component_extract, emit_grid, emit_image, read_grid, read_ppm, render_plane,
                     symmetry_agreement)
from .schwarzian import AnalyticMap, check_cocycle, f2_normal_form, schwarzian
from .shell import (BoundaryTrace, InternalRay, Landing, StepControl, cycle_signature,
                    locate_virtual_center, multiplier_field, ray_start_at_angle,
                    trace_boundary_level, trace_internal_ray)
from .special import (MisiurewiczHit, ProbeResult, VirtualCycleHit, density_probe,
                      misiurewicz_seed, solve_misiurewicz, solve_virtual_cycle)

__version__ = "0.1.0"
