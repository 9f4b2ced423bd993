"""Design and simulation of reflective varactor-based parametric frequency selective limiters."""
__version__ = "0.1.0"

from .analytic import (Axis, Grid, PerformanceMetrics, contour_grid, il_closed_db, performance,
                       pmax_approx, pth_approx, pth_full)
from .core import (BiasedVaractor, DesignPoint, Element, ImpedanceSet, Kind, Netlist, Port,
                   VaractorModel, capacitance_at_bias)
from .hb import HarmonicSpectrum, HBProblem, HBSolution, hb_solve
from .linear import SParameters, ac_solve, sparams, sweep_sparams
from .netlist_io import parse_netlist, serialize_netlist
from .sweep import (extract_pmax, extract_pth, is_report, power_sweep, sweep_frequency_at_power)
from .synthesis import SynthesizedNetwork, prototype, synthesize_network
from .transient import Waveform, steady_state_spectrum, transient_solve

__all__ = [
    "Axis", "Grid", "PerformanceMetrics", "contour_grid", "il_closed_db", "performance",
    "pmax_approx", "pth_approx", "pth_full", "BiasedVaractor", "DesignPoint", "Element",
    "ImpedanceSet", "Kind", "Netlist", "Port", "VaractorModel", "capacitance_at_bias",
    "HarmonicSpectrum", "HBProblem", "HBSolution", "hb_solve", "SParameters", "ac_solve",
    "sparams", "sweep_sparams", "parse_netlist", "serialize_netlist", "extract_pmax",
    "extract_pth", "is_report", "power_sweep", "sweep_frequency_at_power", "SynthesizedNetwork",
    "prototype", "synthesize_network", "Waveform", "steady_state_spectrum", "transient_solve",
]
