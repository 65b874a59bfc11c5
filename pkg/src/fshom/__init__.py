"""Free-space N-photon Hong-Ou-Mandel interference.

Sources on a line, detectors in the far field: the N-photon coincidence
rate is the squared modulus of a permanent of detector phase factors.
"""

from .correlation import (
    CorrelationResult,
    OutputDistribution,
    beam_splitter_output,
    coincidence_amplitude_equals_permanent_check,
    full_state_expansion,
    g2_closed_form,
    gn_permanent,
)
from .dipfinder import (
    ContourSet,
    DipCertificate,
    Grid,
    canonical_dip,
    extract_contour,
    refine_dip,
    scan_grid,
    verify_dip,
)
from .geometry import (
    Geometry,
    InfeasibleGeometryError,
    PhaseConfig,
    TransferMatrix,
    angles_from_phases,
    build_transfer_matrix,
    phases_from_geometry,
)
from .permanent import (
    DimensionError,
    PermanentResult,
    permanent_batch,
    permanent_glynn,
    permanent_naive,
    permanent_ryser,
)

__version__ = "0.1.0"
