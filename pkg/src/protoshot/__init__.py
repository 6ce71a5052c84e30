"""Few-shot, closed-set classification over precomputed embedding vectors.

The library treats an embedding extractor as an external preprocessing
step: it ingests fixed-dimensional vectors with labeled manifests and
provides per-class prototype averaging, LDA, mutual-information feature
selection, and a reproducible evaluation harness (accuracy, mAP,
k-fold, repeated-run statistics, parameter sweeps).
"""

from .embedstore import (
    ClassVocab,
    Dataset,
    EmbeddingMatrix,
    Manifest,
    ManifestRecord,
    bind,
    read_embeddings,
    read_manifest,
    subset,
    write_embeddings,
    write_manifest,
)
from .errors import (
    BindError,
    ConfigError,
    DataError,
    DegenerateEmbeddingError,
    EmptyClassError,
    FormatError,
    ManifestError,
    MissingFoldError,
    NotEnoughClassesError,
    ProtoshotError,
    TruncationError,
    UndefinedApError,
)
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    KfoldResult,
    MapResult,
    RunConfig,
    SweepPoint,
    SweepResult,
    accuracy,
    average_precision,
    confusion,
    kfold_run,
    map_score,
    repeated_runs,
    run_once,
    sweep,
)
from .featselect import (
    FeatureMask,
    MiScores,
    apply_mask,
    default_bins,
    mi_scores,
    select_top,
    support_mi_scores,
)
from .lda import LdaModel, lda_discriminants, lda_fit, lda_predict, load_lda, save_lda
from .prototypes import (
    Metric,
    PrototypeSet,
    Provenance,
    WeightScheme,
    build_prototypes,
    classify,
    load_prototypes,
    save_prototypes,
    score,
)
from .sampler import (
    SupportSets,
    SupportSpec,
    sample_least_overlap,
    sample_support,
    sample_uniform,
)
from .seeds import derive_seed
from .synth import SynthSpec, bayes_accuracy, gen_gaussian

__version__ = "0.1.0"
