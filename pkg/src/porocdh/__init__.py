"""Exact transient Green functions for two poroelastic half-spaces.

The solution is built with the Cagniard-de Hoop method for a point
pressure/gradient source in the upper medium of a Biot bilayer.
"""

from .material import (PoroelasticLayer, DerivedLayer, SourceAmplitudes,
                       ModalAmplitudes, derive_layer, project_source)
from .timeseries import Wavelet, Trace

__all__ = [
    "PoroelasticLayer", "DerivedLayer", "SourceAmplitudes", "ModalAmplitudes",
    "derive_layer", "project_source", "Wavelet", "Trace",
]

__version__ = "0.1.0"
