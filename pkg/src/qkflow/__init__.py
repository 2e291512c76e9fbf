"""qkflow: quantum kernel experiments on a dense statevector simulator.

Modules
-------
numerics        symmetric eigensolver, PSD utilities, regularized solves
simulator       statevector simulation of rotation/Pauli/CNOT circuits
featuremaps     parameterized circuit templates and structure genomes
kernels         classical and quantum kernels, Gram assembly
kernelmachines  SVM (SMO), kernel ridge regression, kernel PCA
metrics         alignment, geometric difference, dimension, complexity
optimize        bandwidth search, parameter-shift ADAM, structure search
data            generators, file I/O, preprocessing
cli             the ``qkflow`` command-line pipeline
"""
from .exceptions import ConvergenceError, DataFormatError, NumericalError, OptimizationError, QkflowError
from .featuremaps import FeatureMap, StructureGenome, bind, build_feature_map
from .kernels import GramMatrix, KernelSpec, gram, psd_clip
from .simulator import GateOp, StateVector, run_circuit

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataFormatError",
    "NumericalError",
    "OptimizationError",
    "QkflowError",
    "FeatureMap",
    "StructureGenome",
    "bind",
    "build_feature_map",
    "GramMatrix",
    "KernelSpec",
    "gram",
    "psd_clip",
    "GateOp",
    "StateVector",
    "run_circuit",
]
