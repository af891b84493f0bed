"""Test-curve calculus on finite metric measure spaces."""
from .curve import (Partition, Polyline, Step, TCCurve, arc_length_parametrize, delta_variation,
                    evaluate, evaluate_left, jump, left_adjusted_restrict, make_curve,
                    polyline_curve, reflected_variation, reparametrize, restrict, reverse,
                    step_curve, two_point_curve, variation, variation_function)
from .gradients import (hajlasz_check, mcshane_extend, minimal_hajlasz, norms, pipeline_76,
                        pipeline_bounded_lemma, pipeline_uno, plan_check, upper_s_check,
                        weak_upper_s_check)
from .modulus import (CurveFamily, TestPlan, admissible, enumerate_step_curves,
                      generalized_modulus, is_null_family, marginal_constant, modulus,
                      product_plan, two_point_family)
from .space import FiniteMetricMeasureSpace, as_table, lp_norm, random_space, validate_space
from .stieltjes import (curve_measure, decompose_at, integrate, riemann_approx, sym_integrate,
                        sym_measure, tail_vanishes)

__version__ = "0.1.0"
