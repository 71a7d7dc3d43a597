"""Weakly supervised error correctors for pre-trained classifiers."""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    BoundPair,
    ClassBounds,
    bound_curve,
    class_bounds,
    collapse_bounds,
    delta_for_gamma,
    dkw_failure,
    lemma_event_bounds,
    psi,
    rho,
)
from .corrector import (  # noqa: E402
    REJECT,
    ClassCorrector,
    CorrectorModel,
    Decision,
    LabeledSample,
    fit,
    load_model,
    partition,
    save_model,
)
from .ecdf import EmpiricalCdf, build_ecdf  # noqa: E402
from .errors import CorrectorError, ModelFormatError, NumericalError  # noqa: E402
from .projector import FisherProjector, PcaBasis, fit_fisher, fit_pca  # noqa: E402
