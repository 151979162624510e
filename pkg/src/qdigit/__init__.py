"""qdigit: hybrid CNN + variational quantum circuit digit classifier."""

from .model import HybridModel
from .qsim import CircuitParams, ObservableSet, Statevector

__all__ = ["HybridModel", "CircuitParams", "ObservableSet", "Statevector"]
__version__ = "0.1.0"
