"""dialogkit: dialogue-corpus segmentation, linguistic-complexity metrics,
preference-pair alignment data, and a teacher-student simulation harness."""

from .aggregate import (
    AggregateRow,
    CalibrationConfig,
    CalibrationReport,
    DEFAULT_METRIC_SET,
    MetricRecord,
    aggregate_means,
    calibrate_norm_avg,
    emit_table,
    group_records,
    minmax_normalize,
    norm_avg,
    read_records_csv,
)
from .alignment import (
    Candidate,
    CefrPrediction,
    PairFilterConfig,
    PreferencePair,
    Rejection,
    ScoredSequence,
    build_pair,
    cpo_terms,
    extract_continuation_prompt,
    orpo_terms,
    predict_cefr_level,
    rerank,
    reward_accuracy,
    sequence_loglik,
    slice_iterations,
)
from .dialogue import (
    DecodingParams,
    DegeneracyConfig,
    GeneratedDialogue,
    HttpGenerator,
    ScriptedGenerator,
    clean_response,
    generate_turn,
    is_degenerate,
    load_starters,
    render_meta_prompt,
    run_dialogue,
    student_params,
    teacher_params,
)
from .ingest import (
    Dialogue,
    Turn,
    Utterance,
    iter_dialogues,
    parse_transcript,
    read_dialogue_json,
    sample_dialogue,
    segment_turns,
    write_dialogue_json,
)
from .lexicons import (
    CefrLevel,
    ConnectiveLexicon,
    RatedLexicon,
    ResourceBundle,
    load_bundle,
    load_connectives,
    load_default_bundle,
    load_rated_lexicon,
)
from .metrics import (
    CohesionComposite,
    ComplexityProfile,
    adjacent_overlap,
    cohesion_composite,
    concept_density,
    count_connectives,
    dialogue_meta,
    mattr,
    mean_clauses_per_sentence,
    mean_sentence_length,
    narrativity,
    profile,
    rated_mean,
    repeated_lemma_ratios,
    ttr,
    verb_tense_repetition,
)
from .textcore import (
    Pos,
    Sentence,
    Tense,
    Token,
    TokenKind,
    analyze,
    detect_tense,
    detokenize,
    lemmatize,
    pos_tag,
    split_sentences,
    tokenize,
)

__version__ = "0.1.0"
