"""Grassmann calculus on the superplane R^{2|2}."""
from .grassmann import (GElem, GridBackend, JetBackend, PointBackend, GrassmannError, D_op, Dbar_op,
                        g_mul, dot, matmul, scale, bracket, g_inv, g_inv_sqrt, odd_coordinates)
from .fields import (SuperField, superharmonic_component_residuals, superharmonic_phi_residual,
                     component_identification, theta_components, superharmonic_example,
                     nonharmonic_example, random_tangent_field, sphere_defect)
from .frames import (SuperConnection, superframe, super_curvature, lambda_connection, lambda_family_residual,
                     graded_curvature_diagnostic, superharmonic_frame_residual, orthogonality_defect)
from .dpw import dpw_integrate, closed_form_example, generic_example, laurent_coefficients, log_derivative
