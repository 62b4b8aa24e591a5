"""Qualitative preference compilation and interactive top-k elicitation.

The pipeline: structured conditional-preference and importance statements form
a TCP-net (model); the net compiles into a linear system over factor-table
entries (compiler/linear) whose solutions are generalized-additive value
functions; items are ranked under the solved function (ranking); pick-best
feedback refines it round by round (session).  A brute-force semantics oracle
(oracle) and a simulation harness (simulate) back the test suite.
"""

from .compiler import (
    HasCiArcs,
    Infeasible,
    LinearSystem,
    LpVariable,
    NetNotAcyclic,
    compile_net,
    factor_scopes,
    gen_cp_conditions,
    gen_ci_conditions,
    gen_i_conditions,
    size_report,
    solve,
)
from .model import (
    AcyclicityReport,
    Cit,
    Cpt,
    FamilySets,
    NetValidationError,
    TcpNet,
    Variable,
    check_acyclic,
    cpt_lookup,
    derive_families,
    importance_lookup,
    load_net,
    parse_net,
    serialize_net,
)
from .oracle import (
    DominanceGraph,
    InstanceTooLarge,
    all_entailed_pairs,
    build_dominance_graph,
    consistent,
    direct_dominance,
    entails,
)
from .ranking import (
    Factor,
    GaValueFunction,
    HardConstraint,
    Item,
    ItemError,
    ItemTable,
    evaluate,
    filter_hard,
    load_items,
    load_value_function,
    save_value_function,
    top_k,
)
from .session import (
    BaseSystemInfeasible,
    ChosenNotDisplayed,
    EmptyItemSet,
    NotActive,
    Round,
    Session,
    feedback,
    replay_snapshot,
    session_status,
    start_session,
    to_snapshot,
)
from .simulate import (
    ExperimentConfig,
    ExperimentStats,
    GeneratorParams,
    ParamsInfeasible,
    gen_random_net,
    run_experiment,
    sample_items,
    sample_user_value_fn,
    simulate_session,
)

__all__ = [name for name in dir() if not name.startswith("_")]
