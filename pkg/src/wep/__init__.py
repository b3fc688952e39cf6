"""Weighted Moore-Penrose inverses, group inverses and weighted-EP checks
for dense complex matrices under l1, l2 and linf operator norms."""

from wep.matcore import Tolerance, DEFAULT_TOL, op_norm, mat_exp, svd, rank, principal_sqrt
from wep.hermitian import (NormContext, Weight, NotPositiveError, is_hermitian, is_positive,
                           is_hermitian_weighted, weighted_norm, numerical_range)
from wep.wmp import (WmpResult, IdempotentWitness, mp_inverse, wmp_inverse, wmp_from_idempotents,
                     group_inverse, double_dagger_check)
from wep.factor import (FullRankFactorization, full_rank_factorize, factor_parts_wmp,
                        reverse_order_wmp, ep_block_decomposition, canonical_ep_decomposition,
                        pAp_inverse, ep_synthesize_from_decomposition)
from wep.epcheck import (EpReport, is_weighted_ep, membership_solvable, MembershipQuery, Side,
                         ep_statement_suite_bc, ep_statement_suite_sa, weight_swap_suite,
                         cstar_congruence_check, full_report, generate_instance)

__version__ = "0.1.0"
