"""covplan: constraint-aware pairwise regression planning for configurable designs.

Reduces the configuration space of a parameterized design to a small,
fully pair-covering regression set via covering-array generation under
constraints, equivalence-class boundary reduction, and connectivity-based
structural pruning, then emits the coverage-model and regression-session
artifacts downstream tools consume.
"""

from .dsl import (
    ParseDiagnostic,
    ParseError,
    SourceSpan,
    parse_classes,
    parse_template,
    serialize_classes,
    serialize_template,
)
from .engine import (
    GenerationConfig,
    TupleUniverse,
    ValidationVerdict,
    ValuePairSet,
    enumerate_tuples,
    find_valid_configuration,
    generate_array,
    lower_bound,
    validate_array,
)
from .emitters import (
    ComponentCoverage,
    CoverageReport,
    StageRow,
    emit_coverage_model,
    emit_report,
    emit_session,
    measure_coverage,
)
from .eqreduce import (
    ReductionRow,
    ReductionTrace,
    StrategyDescriptor,
    apply_classes,
    representatives,
    strategy_catalog,
)
from .errors import (
    ConstraintEntanglementError,
    CovplanError,
    InternalConsistencyError,
    ModelError,
    PartialArrayError,
    ReductionError,
    StaleArtifactError,
    UnsatisfiableModelError,
    UnsupportedStrategyError,
)
from .model import (
    Configuration,
    CoveringArray,
    EquivalenceClassSpec,
    Parameter,
    ParameterModel,
    Value,
    exhaustive_count,
    is_valid,
    model_hash,
)
from .structcheck import (
    DesignGraph,
    EligibilityVerdict,
    ParamUsage,
    check_parameter,
    cone_of_influence,
    load_graph,
    prune_model,
)

__version__ = "0.1.0"
