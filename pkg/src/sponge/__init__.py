"""Random self-affine sponges: dimension solver, martingale measures, probes."""

__version__ = "0.1.0"

from .config import load_spec, save_spec, spec_from_dict, spec_hash, spec_to_dict
from .dimension import (DimensionReport, expected_pressure,
                        expected_subsystem_pressure, phi_sigma_s, psi_s,
                        solve_s0, solve_sn)
from .distributions import (MaxSumConstraint, RatioLaw, RatioVectorLaw, atoms,
                            constant, convolution_smoothness_proxy, density_grid,
                            log_uniform, moment, sample_vector, uniform)
from .errors import (BudgetError, DegenerateFitError, NonContractionError,
                     NumericError, RejectionError, SchemaError, SpongeError)
from .estimator import (PointCloud, box_count, cylinder_cover_bound,
                        energy_estimate, energy_trend, estimate_box_dimension,
                        lebesgue_positivity_probe, make_transversality_pairs,
                        probe_transversality, sample_cloud)
from .measure import (MartingaleStats, WeightFamily, sample_cylinder_measure,
                      sample_point_from_measure, simulate_martingale,
                      weight_statistics, weights_from_dimension)
from .presets import PRESETS
from .render import render_cloud, render_iterates
from .rifs import (BoundingBox, RealizationTree, SpongeSpec, bounding_box,
                   cumulative_ratio, cylinder_rect, project, realize,
                   separation_margins)
from .symbolic import (SubsystemSpec, Tail, Word, build_subsystem_words,
                       enumerate_level, longest_common_prefix)
