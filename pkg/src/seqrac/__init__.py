"""Simulation and analysis toolkit for sequential quantum random access codes."""
from .protocol import (
    WeakMeasurement,
    WitnessSet,
    eta_bounds,
    inverse_tradeoff_bound,
    joint_distribution,
    prepare_state,
    three_receiver_no_go,
    tradeoff_bound,
    witness_ab,
    witness_abc,
    witness_ac,
    witness_chain,
)

__version__ = "0.1.0"
