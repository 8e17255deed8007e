"""Semi-data-aided LMMSE channel estimation for MIMO links with lookahead virtual-pilot selection."""
from .core import FrameRealization, RngSpec, build_pilot_matrix, draw_channel, evolve_channel, generate_frame, transmit
from .detector import SymbolBook, bpsk, compute_app, enumerate_symbol_vectors, expected_symbol, map_detect, qam4
from .estimator import (
    AugmentedBlocks,
    ChannelEstimate,
    error_covariance,
    lmmse_augmented_estimate,
    lmmse_pilot_estimate,
    lmmse_pilot_mse,
    rank_one_update_inverse,
)

__version__ = "0.1.0"
