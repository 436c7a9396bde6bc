"""Boundary-control construction of de Branges spaces for discrete, wave and Dirac systems."""
from . import bridge, debranges, dirac, discrete, measures, wave
from .debranges import E_from_kernel, EntireEvaluator, HBReport, KernelEvaluator, hb_check, kernel_from_E
from .grid import SampledPotential, UniformGrid, as_potential
from .measures import (
    SpectralMeasure,
    dirac_truncated_measure,
    jacobi_truncated_measure,
    schrodinger_truncated_measure,
)

__version__ = "0.1.0"

__all__ = [
    "bridge", "debranges", "dirac", "discrete", "measures", "wave",
    "E_from_kernel", "EntireEvaluator", "HBReport", "KernelEvaluator", "hb_check", "kernel_from_E",
    "SampledPotential", "UniformGrid", "as_potential",
    "SpectralMeasure", "dirac_truncated_measure", "jacobi_truncated_measure", "schrodinger_truncated_measure",
]
