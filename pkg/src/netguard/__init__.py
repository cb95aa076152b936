"""Density-aware active adaptation and conditional augmentation for
drifting, imbalanced flow classification."""

from .augmentation import (
    AugmentationReport,
    GeneratorConfig,
    GeneratorModel,
    MinorityReport,
    assemble_training_set,
    filter_synthetic,
    fit_generator,
    identify_minorities,
    synthesize,
)
from .benchmarks import novel_cluster_spec, standard_drift_spec
from .classifier import (
    ClassifierModel,
    LogisticConfig,
    LogisticModel,
    MlpConfig,
    finite_difference_check,
    train_logistic,
    train_mlp,
)
from .dataset import (
    Dataset,
    DriftClass,
    DriftSpec,
    Feature,
    FeatureSchema,
    FlowRecord,
    NormStats,
    concat,
    encode_features,
    generate_drift_benchmark,
    load_csv,
    normalize,
    split,
    write_csv,
)
from .errors import (
    ContractError,
    EmptyDatasetError,
    InfeasibleFitError,
    NetguardError,
    SchemaError,
    VocabularyError,
)
from .gmm import GmmConfig, GmmParams, batch_log_likelihood, fit_gmm, log_likelihood
from .metrics import (
    DriftReport,
    MetricsReport,
    class_drift,
    classification_report,
    emd_1d,
    w2_1d,
    w2_fidelity,
)
from .pipeline import (
    ParkedRun,
    RunConfig,
    RunResult,
    SimulatedOracle,
    degradation_check,
    resume_run,
    run,
    simulated_oracle,
)
from .selection import (
    SelectionReport,
    budget_size,
    clue_select,
    coreset_select,
    informativeness_scores,
    select_priors,
    uncertainty_scores,
)

__version__ = "0.1.0"
