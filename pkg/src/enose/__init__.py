"""Electronic-nose food recognition: type and freshness from scan cycles.

The package follows the estimator idiom: transformers and classifiers
expose fit/transform/predict with get_params, so the pieces compose
with the wider ecosystem as well as with each other.
"""

from . import errors
from .classifiers import (
    ALGORITHMS,
    AdaBoost,
    AlgorithmSpec,
    ConstantClassifier,
    DecisionTree,
    LogisticRegression,
    NeuralNetClassifier,
    ProjectedClassifier,
    RandomForest,
    SvmClassifier,
    build_classifier,
    freshness_net,
    gradient_check,
    load_model,
    save_model,
    train_classifier,
)
from .evaluate import (
    AblationReport,
    CvReport,
    FoldPlan,
    MultistepCvReport,
    audit_plan,
    cross_validate,
    plan_loso,
    run_ablation,
    select_stage_models,
)
from .features import (
    Dataset,
    N_FEATURES,
    build_dataset,
    extract_features,
    feature_index,
    flatten_grid,
    reshape_to_grid,
)
from .hierarchy import (
    HierarchicalModel,
    StageAssignment,
    Verdict,
    decode_joint,
    encode_joint,
    flat_verdict,
    load_bundle,
    predict_multistep,
    predict_session,
    save_bundle,
    train_flat,
    train_multistep,
)
from .metrics import (
    ConfusionMatrix,
    MetricsReport,
    accuracy,
    cohen_kappa,
    confusion,
    macro_f1,
    per_class_precision_recall,
)
from .preprocess import (
    LinearDiscriminants,
    PrincipalComponents,
    ProjectionPipeline,
    RangeNormalizer,
    apply_projection,
    normalize_vector,
    projection_scatter_rows,
    render_scatter_csv,
)
from .session import (
    Annotation,
    MeasurementSession,
    RawImportConfig,
    ScanCycle,
    StepReading,
    import_raw_export,
    load_corpus,
    parse_session_log,
    save_corpus,
    serialize_sessions,
)
from .synth import (
    PRESETS,
    SeparabilityReport,
    SignatureTable,
    SynthConfig,
    cells_for_classes,
    generate_corpus,
    preset_config,
    separability_report,
)
from .taxonomy import (
    LABELS_BY_CLASS,
    FreshnessLevel,
    GeneralClass,
    SpecificLabel,
    labels_for,
    parse_freshness,
    parse_general_class,
    parse_specific_label,
)

__version__ = "0.1.0"
