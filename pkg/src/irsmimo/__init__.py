"""IRS-assisted THz massive MIMO link simulator.

Channel synthesis, hierarchical-codebook beam training, the two-phase
cooperative estimation protocol, closed-form IRS and hybrid transceiver
design with water-filling, and Monte Carlo experiment harnesses.
"""

from .arrays import (ArraySpec, BeamGrid, BeamVector, beam_gain, edge_energy,
                     grid_directions, nearest_direction, omni, pattern_gain,
                     steering)
from .channel import (CascadeChannel, IrsLink, LinkAngles, PhaseShiftMatrix,
                      PhysicalConstants, assemble, cascade_loss,
                      compensation_factor, make_link, path_loss)
from .codebook import (HierarchicalCodebook, build_codebook, num_stages,
                       projection_beam, selection_matrix, two_rf_factorization,
                       wide_beam)
from .harness import (ScenarioConfig, TrialRecord, make_config,
                      non_irs_benchmark, run_estimation_trace,
                      run_mp_experiment, run_rate_experiment, sample_scenario,
                      scenario_assets)
from .irs_control import absorbing, direction_mode, random_mode, return_mode
from .quantization import (QuantizationReport, average_error,
                           estimated_power_ratio, quantization_report,
                           worst_error)
from .training import (AngleEstimate, LinkScenario, MeasurementModel,
                       SlotCount, cooperative_estimate, hierarchical_search,
                       measure_power, misalignment_curve, phase1, phase2)
from .transmission import (HybridBeamformer, PowerAllocation,
                           build_beamformers, design_irs,
                           estimate_composite_loss, fdb_upper_bound,
                           parallel_rate, spectral_efficiency, water_filling)

__version__ = "0.1.0"
