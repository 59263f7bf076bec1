"""Robust adaptive maximum flows against budgeted edge attacks."""

from .network import (Edge, FlowScenario, Network, attack_space, fixture_d1, generate_random,
                      reroute_eligibility, super_terminals, validate_flow)
from .flows import adaptive_value, identify_flow, max_flow_min_cost, min_cut
from .lp import LpBuilder, LpProblem, LpSolution, solve_lp, solve_lp_exact
from .adversary import (AttackResult, accelerated_greedy_attack, best_attack, exact_attack,
                        greedy_attack, partition_network, partitioning_attack)
from .administrator import (AttackPool, aamf_flow, mf_flow, osp_flow, rf_flow, robust_flow)
from .game import GameConfig, GameTrace, solve_tnfg, verify_maximin

__version__ = "0.1.0"
