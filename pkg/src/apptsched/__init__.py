"""Priority clustering and rolling-horizon appointment scheduling toolkit."""

from .clustering import (ClusteringResult, ElbowCurve, SilhouetteReport,
                         elbow_scan, kmeans, silhouette, ward_agglomerative)
from .dataset import (FeatureMatrix, FeatureSchema, PatientRecord,
                      encode_normalize, export_matrix_csv, load_dataset)
from .errors import ConfigError, RowError, SchemaError, SizeLimitError
from .feature_select import (EntropyRanking, ScatterStats, SubsetSelection,
                             entropy_rank, scatter_criterion, wrapper_select)
from .fluid import (BenchmarkPolicy, FluidProblem, FluidSolution,
                    build_fluid_lp, extract_policy, fluid_cost, solve_fluid)
from .mdp import (CostParams, MdpConfig, MdpState, ValueIterationResult,
                  enumerate_actions, sample_arrivals, stage_cost, transition,
                  value_iteration)
from .simplex import LinearProgram, LpSolution, lp_text, solve
from .simulate import (SimConfig, SimulationReport, compare_policies,
                       run_simulation)

__version__ = "0.1.0"
