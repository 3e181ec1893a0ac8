"""Biased coins as oracles: estimation, bit extraction and oracle machines."""

from .numeric import BitStream, bits_to_rational, rational_to_bitstream, truncation_sequence
from .coinlab import (
    ConvergingCoin,
    ExactCoin,
    Flip,
    MixtureCoin,
    RandomBits,
    ScriptedBits,
    converging_from_target,
    flip,
)
from .estimator import AccuracySpec, Estimate, estimate_once, estimate_sequence, sample_count, sequence_sample_count
from .bitextract import BUDGET_EXHAUSTED, BitQuery, ExtractionTrace, extract_bit, extract_stream
from .oracle import CoinOracle, OracleSet, decode_query, encode_set, set_fixture
from .machines import MachineCatalog, OMachine, parse_machine, run_ground_truth, run_with_coin, universal_run

__version__ = "0.1.0"
