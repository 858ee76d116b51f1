"""contamkit: detect dataset contamination and training-set membership.

Core pieces: a deterministic smoothed n-gram language model whose
training exposure is controllable, a family of membership metrics with
fixed seen/unseen orientations, exact and sketched training-set scans,
rank-based AUC evaluation, and synthetic end-to-end scenarios.
"""

__version__ = "0.1.0"

from .corpus import (
    BOS_TOKEN,
    ContaminationLabel,
    ContextKeyPair,
    Corpus,
    DatasetVerdict,
    EOS_TOKEN,
    HOLE_TOKEN,
    Instance,
    PrefixSuffixPair,
    Split,
    TokenizerConfig,
    UNK_TOKEN,
    VerdictKind,
    dataset_verdict,
    fill_hole,
    make_instance,
    mask_key,
    split_pair,
    tokenize,
)
from .errors import (
    AlignmentError,
    CapabilityError,
    EmptyInputError,
    FormatError,
    NotApplicableError,
    ParseError,
    ProtocolError,
    ToolkitError,
    ValidationError,
)
from .evaluation import (
    AucResult,
    CrossDomainMatrix,
    PplStats,
    SummaryTable,
    auc,
    cross_domain_matrix,
    roc_curve,
    roc_trapezoid_area,
    score_value_stats,
    summary_table,
)
from .ingest import (
    SampleResult,
    SplitPlan,
    load_corpus,
    load_logprob_records,
    read_instances,
    read_logprob_records,
    records_by_id,
    sample_splits,
    write_corpus,
    write_logprob_records,
)
from .metrics import (
    AnswerMemResult,
    MetricId,
    Orientation,
    PerturbationKind,
    PplScore,
    ScoreEntry,
    ScoreVector,
    answer_mem_delta,
    entropy_k,
    keyinfo_score,
    mem_k,
    metadata_probe,
    min_p_token,
    parse_metric_name,
    perturb,
    perturb_delta,
    ppl_k,
    ref_lm_ratio,
    zlib_ratio,
)
from .ngram import (
    LogProbRecord,
    NgramLanguageModel,
    SamplingStrategy,
    TopKDistribution,
    validate_record,
)
from .portrait import BloomPortrait, PortraitHit
from .scenarios import (
    DomainSpec,
    ScenarioConfig,
    ScenarioReport,
    generate_domain,
    load_scenario,
    run_scenario,
)
from .scoring import compute_scores, label_for_split, read_scores, write_scores
from .similarity import (
    ContaminationScanner,
    SimilarityConfig,
    b_indicator,
    scan_contamination,
    similarity,
    similarity_tokens,
    token_shingles,
)

__all__ = [name for name in dir() if not name.startswith("_")]
