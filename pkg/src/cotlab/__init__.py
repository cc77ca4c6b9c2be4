"""Verification lab for chain-of-thought reasoning risk.

Simulates chain-rule-driven reasoning trajectories, decomposes the
reasoning risk into trajectory-mismatch and oracle-trajectory terms,
evaluates the exact error-amplification factor three independent ways,
rebuilds the worst-case and tightness instances as executable scenarios,
and checks the domain-adaptation bound on the oracle-trajectory term.
"""

from . import arithmetic as arithmetic  # registers the expression-space families
from .adaptation import (BoundBreakdown, CoverageReport, HypothesisClass, LabeledSample,
                         beta_term, bound_experiment, dH_divergence, empirical_dH,
                         empirical_rademacher, otr_bound_rhs, population_otr_gap,
                         tiny_adaptation_instance)
from .amplification import (AmplificationParams, WordTrace, amplification_closed_form,
                            amplification_max_form, breakpoints, reasoning_risk_bound,
                            tmr_bound, word_oracle)
from .chain import (AnswerMap, ChainRule, ChainRuleStep, DivergenceRecord, Trajectory,
                    answer_map, final_question, final_question_map, is_recoverable,
                    run_trajectory, step, trajectory_divergence)
from .constructions import (CheckItem, Expectations, Scenario, VerificationReport,
                            nfl_instance, omr_instance, otr_matches_pushforward,
                            random_stable_scenario, tight_instance, verify_scenario)
from .errors import (CotLabError, FormatError, ParameterError, RegimeError, SpaceError,
                     TrajectoryError)
from .risk import (FiniteDistribution, RiskReport, decomposition_check, omr, otr,
                   pushforward, reasoning_risk, statistical_risk, tmr)
from .scenario_io import (load_scenario, save_scenario, scenario_from_dict,
                          scenario_to_dict)
from .spaces import (ATOM_SPACE, EXPR_SPACE, REAL_LINE, SPACES, MetricSpace, Point,
                     QuasimetricLoss, QuasimetricReport, StabilityCertificate,
                     StabilityCheck, check_quasimetric, check_stability, loss_eval,
                     loss_from_metric_capped, scaled_metric_loss, zero_one_loss)

__version__ = "0.1.0"
