"""Simulation lab for Floquet Bacon-Shor codes: Pauli algebra, lattice
geometry, measurement schedules, circuits with detectors, matching decoding,
distance tools and a Monte Carlo harness."""

from .pauli import PauliGroupBasis, PauliString, commutes, multiply
from .lattice import CodeLayout, Edge, Plaquette, virtual_x, virtual_z
from .schedule import DefectSite, FloquetSchedule, compute_isgs, place_defects
from .circuits import NoiseModel, ScheduledCircuit, build_bacon_shor_circuit, build_fbs_circuit
from .dem import DecodingGraph, extract_decoding_graph
from .matching import decode, precompute_paths
from .distance import DistanceReport, graphlike_distance, unmasked_distance
from .harness import ExperimentConfig, RateEstimate, kdn_ratio, preset, run_shots

__version__ = "0.1.0"

__all__ = [
    "PauliString", "PauliGroupBasis", "commutes", "multiply",
    "CodeLayout", "Edge", "Plaquette", "virtual_x", "virtual_z",
    "DefectSite", "FloquetSchedule", "compute_isgs", "place_defects",
    "NoiseModel", "ScheduledCircuit", "build_bacon_shor_circuit", "build_fbs_circuit",
    "DecodingGraph", "extract_decoding_graph", "decode", "precompute_paths",
    "DistanceReport", "graphlike_distance", "unmasked_distance",
    "ExperimentConfig", "RateEstimate", "kdn_ratio", "preset", "run_shots",
]
