"""Simultaneous synchronisation and signed-topology identification.

Agents x_i' = f_i(x_i) - sum_j a_ij (x_i - x_j) + u_i are coupled through an
unknown repelling signed Laplacian. The adaptive protocol drives every agent
onto an excited reference x_hat while estimating each edge weight of the
complete graph.
"""
__version__ = "0.1.0"

from .errors import DivergenceError, FormatError, NumericError, RangeError, ValidationError
from .graph import (SignedGraph, SpectralReport, build_complete_incidence, check_rayleigh_bound,
                    edge_index, edge_pair, embed_weights, benchmark_graph, laplacian_direct,
                    laplacian_from_weights, random_signed_graph, spectral_report)
from .protocol import (GainConfig, ProtocolState, SignalConfig, auxiliary_rhs, control_input,
                       pe_signal, phi_theta, required_gain, weight_update_rhs)
from .dynamics import NodeDynamics, PlantSpec, cross_validate, error_system_rhs, plant_rhs
from .integrate import rk4_step
from .sim import SimConfig, Trajectory, simulate
from .excitation import (DeltaPeReport, EdgeExcitation, GramWindow, delta_pe_check,
                         lemma1_frozen_check, pe_level, windowed_gram)
from .analysis import (MetricsSeries, RecoveredTopology, convergence_summary, lyapunov_series,
                       recover_topology)
