"""Fluctuation-theory toolkit for spectrally negative Levy processes."""

from .errors import (BracketError, DegeneracyError, DegenerateInputError, DomainError,
                     NumericalError, PrecisionLossError, ResolutionError, SnlpError,
                     UnsupportedSpecError, ValidationError)
from .levy_model import (Hypothesis, HypothesisProbe, ProbeVerdict, ProcessSpec,
                         SubordinatorSpec, esscher, killing_and_drift, phi, probe_hypothesis,
                         subordinator_of)

__version__ = "0.1.0"


def psi(spec, lam):
    """Laplace exponent of ``spec`` at ``lam`` >= 0."""
    import numpy as np
    if np.any(np.asarray(lam) < 0):
        raise DomainError(f"psi requires lambda >= 0, got {lam!r}")
    return spec.psi(lam)
