"""Minutia-based fingerprint matching via iterative global alignment."""

from .errors import (
    DuplicateEntryError,
    EmptyScoresError,
    EmptyTemplateError,
    FormatError,
    MinumatchError,
    PlacementFailureError,
    RangeError,
    ZeroTotalWeightError,
)
from .evaluation import (
    EvalReport,
    ScoreSet,
    compute_eer,
    protocol_pairs,
    run_protocol,
    write_report_json,
    write_scores_csv,
)
from .matcher import (
    IterationRecord,
    match_score,
    pair_displacement,
    refine_once,
    resolve_one_to_one,
    run_matcher,
)
from .model import (
    AlignmentParams,
    MatchConfig,
    MatchResult,
    Minutia,
    MinutiaTemplate,
    MinutiaType,
    PairEntry,
    PairQueue,
    angle_diff,
    compose_alignments,
    transform_point,
)
from .registration import (
    AlignmentDiagnostics,
    detect_ill_posed,
    objective,
    solve_alignment,
    weighted_centroids,
)
from .synth import (
    GroundTruth,
    SynthParams,
    brute_force_align,
    generate_base,
    generate_impression,
    parse_ground_truth,
    write_ground_truth,
)
from .template_io import (
    DatasetManifest,
    ManifestEntry,
    load_template,
    parse_template,
    save_template,
    scan_dataset,
    write_template,
)
from .weights import (
    OctantNeighborhood,
    build_pair_queue,
    compute_octant_neighbors,
    initial_weight,
    s_nn,
)

__version__ = "0.1.0"
