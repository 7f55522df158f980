from .config import *
from .exceptions import CliffordError
from .clifford_core import Multivector, Signature, geometric_product, grade_project, center_project, average_over_basis
from .jets import BaseSpace, Jet2Multivector, jet_eval, finite_difference_check
from .frames import Frame, GaugeScalar, OrthoMatrixField, constant_frame, orthogonal_frame, gauge_frame, validate_frame
from .connection import connection_field, connection_averaged, connection_projection, verify_defining_equation
from .gauge_ym import CovDerivContext, YangMillsField, build_sigma_solution, build_covconst_solution, ym_residuals
from .campaigns import CampaignConfig, Report, load_config, run_campaign

__all__ = [
    'CliffordError', 'Multivector', 'Signature', 'geometric_product', 'grade_project', 'center_project',
    'average_over_basis', 'BaseSpace', 'Jet2Multivector', 'jet_eval', 'finite_difference_check',
    'Frame', 'GaugeScalar', 'OrthoMatrixField', 'constant_frame', 'orthogonal_frame', 'gauge_frame',
    'validate_frame', 'connection_field', 'connection_averaged', 'connection_projection',
    'verify_defining_equation', 'CovDerivContext', 'YangMillsField', 'build_sigma_solution',
    'build_covconst_solution', 'ym_residuals', 'CampaignConfig', 'Report', 'load_config', 'run_campaign',
]
