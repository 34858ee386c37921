"""Numerical toolkit for metric jets: quasi-distances, Lipschitz ratios,
tangency, homogeneity and zoom-limit contacts of black-box germs."""

from .cantor import cantor_endpoints, dist_cantor, dist_kinf
from .contact import (ContactNotFound, ContactResult, HomogeneityReport, LinearityReport,
                      ValuedMonoid, equidistribution_check, extract_contact, hom_norm,
                      homogeneity_test, linearity_test, neofractal_scan,
                      tl_and_contact_consistency)
from .germs import (Germ, GermMeta, add, compose, homog_translate, identity_germ, linear_germ,
                    restrict, scalar_multiple, stretch, translate_to_zero, zero_germ)
from .jets import (JetSummary, LimitEstimate, jet_summary, lipschitz_ratio, quasi_distance,
                   tangency_test)
from .optimality import (SegmentCheck, contact_min_check, mean_value_check,
                         strict_min_certifier)
from .scale import (ScaleBatch, ScalePoint, ShellSchedule, deep_schedule, default_schedule,
                    shell_points, sp_add, sp_mul)

__version__ = "0.1.0"
