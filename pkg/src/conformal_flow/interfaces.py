"""
Abstract base classes shared by the field implementations.

The flow tracer and the critical-point scan only need a scalar field with a
pole, pointwise values and analytic gradients. BaseField captures that
contract so the Green's function solver and the annulus negative-control
fixture can be used interchangeably.
"""

from abc import ABC, abstractmethod

import numpy as np


class BaseField(ABC):
    """
    Abstract scalar potential with a logarithmic / Newtonian pole.

    Example:
        >>> class Radial(BaseField):
        ...     dim = 2
        ...     pole = np.zeros(2)
        ...     diameter = 2.0
        ...     def value(self, x):
        ...         return -np.log(np.linalg.norm(x)) / (2 * np.pi)
        ...     def gradient(self, x):
        ...         return -np.asarray(x) / (2 * np.pi * np.dot(x, x))
        ...     def contains(self, x):
        ...         return bool(np.linalg.norm(x) < 1.0)
        ...     def regular_part_at_pole(self):
        ...         return 0.0
    """

    dim: int
    pole: np.ndarray
    diameter: float

    @abstractmethod
    def value(self, x) -> float:
        """
        Evaluate the field at an interior point.

        Raises:
            DomainError: x is not interior
            SingularityError: x lies inside the pole collar
        """
        pass

    @abstractmethod
    def gradient(self, x) -> np.ndarray:
        """Analytic gradient at an interior point; same errors as value()."""
        pass

    @abstractmethod
    def contains(self, x) -> bool:
        """True iff x is strictly interior to the field's domain."""
        pass

    @abstractmethod
    def regular_part_at_pole(self) -> float:
        """Value at the pole of the field minus the fundamental solution."""
        pass

    def gradient_norm(self, x) -> float:
        return float(np.linalg.norm(self.gradient(x)))
