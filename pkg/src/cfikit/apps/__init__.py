"""Application pipelines: screening, delegation, contests and persuasion."""

from .common import Mechanism, Menu, extract_allocation, null_menu, posted_price_menu
from .contest import contest_cfi, contest_sweep, mu_contest, solve_contest
from .delegation import (default_delegation_menu, delegation_cfi, delegation_comparative_statics,
                         lottery_item, solve_delegation)
from .distributions import (DistKind, Distribution, Mixture, PointMass, tabulated, truncated_gaussian_mixture,
                            truncated_logistic, uniform)
from .persuasion import Value, logistic_value, persuasion_cfi, quadratic_value, solve_persuasion_sshaped
from .screening import (REVENUE, Welfare, design_default_menu, mu_revenue, mu_welfare, screening_cfi,
                        solve_screening)
