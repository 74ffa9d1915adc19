"""Two-tier rate-splitting optical wireless network toolkit."""

import os
import sys


def _load_core():
    try:
        from . import _core  # installed package layout
        return _core
    except ImportError:
        ext_dir = os.environ.get("OWCRS_EXT_DIR")
        if not ext_dir:
            raise
        if ext_dir not in sys.path:
            sys.path.insert(0, ext_dir)
        import _core
        return _core


_core = _load_core()

rayleigh_distance = _core.rayleigh_distance
beam_radius = _core.beam_radius
intensity = _core.intensity
received_power_onaxis = _core.received_power_onaxis
noise_variance = _core.noise_variance
random_scenario = _core.random_scenario
build_channel = _core.build_channel
group_scenario = _core.group_scenario
build_precoders = _core.build_precoders
power_split = _core.power_split
hrs_rates = _core.hrs_rates
oma_sum_rate = _core.oma_sum_rate
solve = _core.solve
kmeans_seed_for = _core.kmeans_seed_for
solver_seed_for = _core.solver_seed_for
load_weights = _core.load_weights
predict = _core.predict

PhysicalConstants = _core.PhysicalConstants
Scenario = _core.Scenario
ChannelMatrix = _core.ChannelMatrix
GroupingPlan = _core.GroupingPlan
PrecoderSet = _core.PrecoderSet
PowerAllocation = _core.PowerAllocation
RateReport = _core.RateReport
ConstraintSet = _core.ConstraintSet
SolveResult = _core.SolveResult
Prediction = _core.Prediction
NetworkWeights = _core.NetworkWeights
DisconnectedUserError = _core.DisconnectedUserError

__all__ = [
    "rayleigh_distance", "beam_radius", "intensity", "received_power_onaxis",
    "noise_variance", "random_scenario", "build_channel", "group_scenario",
    "build_precoders", "power_split", "hrs_rates", "oma_sum_rate", "solve",
    "kmeans_seed_for", "solver_seed_for", "load_weights", "predict",
    "PhysicalConstants", "Scenario", "ChannelMatrix", "GroupingPlan",
    "PrecoderSet", "PowerAllocation", "RateReport", "ConstraintSet",
    "SolveResult", "Prediction", "NetworkWeights", "DisconnectedUserError",
]
