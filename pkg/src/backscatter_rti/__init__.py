"""RFID backscatter link budgets, RSS simulation and radio tomographic imaging."""

from .geometry import Grid, Link, Point3, Scene, build_grid, cell_center, make_links
from .link_budget import (MISSING_READ, MISSING_READ_DBM, FadingModel, MaterialProfile,
                          RfParams, apply_material, backscatter_rx_power, path_loss,
                          pie_encode, sample_fading)
from .weight_model import (WeightMatrix, WeightParams, build_weight_matrix, link_membership_field,
                           link_weight)
from .rti_solver import (AttenuationImage, CovarianceMatrix, ProjectionOperator, RtiParams,
                         covariance_matrix, precompute_projection, reconstruct)
from .simulator import (RssFrame, ShadowModel, TargetPath, simulate_baseline, simulate_walk,
                        true_attenuation_field)
from .ingest import (Baseline, RssRecord, assemble_frames, compute_baseline, delta_rss,
                     parse_rssi_log, shadowing_vector, write_rssi_log)
from .detect import Detection, extract_trajectory, locate_peak, presence

__version__ = "0.1.0"
