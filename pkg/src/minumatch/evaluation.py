"""All-pairs verification protocol with EER/ROC reporting.

Genuine comparisons are all unordered impression pairs within each subject.
Impostor comparisons default to all unordered cross-subject impression pairs
(`impostor="all"`); `impostor="first"` restricts both sides to each
subject's first impression, for runs where the full cross product is too
expensive. The query of each comparison is the lexicographically first
(subject, impression) of the pair, so results are deterministic despite the
asymmetric score.

Wall-clock timing is only measured when requested; otherwise every duration
is written as zero so repeated runs produce byte-identical outputs.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyScoresError, FormatError, RangeError
from .matcher import run_matcher
from .model import MatchConfig, MinutiaTemplate
from .template_io import DatasetManifest, load_template
from .weights import compute_octant_neighbors

CSV_COLUMNS = ("kind", "subject_a", "imp_a", "subject_b", "imp_b", "score", "millis")

PairKey = tuple[int, int]


@dataclass(frozen=True)
class Comparison:
    kind: str  # "genuine" or "impostor"
    subject_a: int
    imp_a: int
    subject_b: int
    imp_b: int
    score: float
    millis: float


@dataclass
class ScoreSet:
    """Scores and timings from one protocol run."""

    genuine: list[float] = field(default_factory=list)
    impostor: list[float] = field(default_factory=list)
    timings: list[float] = field(default_factory=list)
    comparisons: list[Comparison] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    skipped: int = 0


@dataclass(frozen=True)
class EvalReport:
    """EER operating point and the full ROC sweep.

    roc rows are (threshold, FAR percent, FRR percent) with thresholds
    ascending; FAR is non-increasing and FRR non-decreasing along the sweep.
    """

    eer: float  # percent
    roc: tuple[tuple[float, float, float], ...]
    mean_time_ms: float
    genuine_count: int
    impostor_count: int
    skipped: int


def protocol_pairs(
    manifest: DatasetManifest, impostor: str = "all"
) -> tuple[list[tuple[PairKey, PairKey]], list[tuple[PairKey, PairKey]]]:
    """Enumerate (query, reference) key pairs for the protocol.

    Keys are (subject, impression). Genuine: unordered within-subject pairs.
    Impostor: unordered cross-subject pairs, either the full impression cross
    product ("all") or first impressions only ("first").
    """
    if impostor not in ("all", "first"):
        raise ValueError(f"unknown impostor rule: {impostor!r}")
    by_subject: dict[int, list[int]] = {}
    for e in manifest.entries:
        by_subject.setdefault(e.subject, []).append(e.impression)
    subjects = sorted(by_subject)
    for s in subjects:
        by_subject[s].sort()

    genuine = []
    for s in subjects:
        imps = by_subject[s]
        for i in range(len(imps)):
            for j in range(i + 1, len(imps)):
                genuine.append(((s, imps[i]), (s, imps[j])))

    impostors = []
    for a in range(len(subjects)):
        for b in range(a + 1, len(subjects)):
            sa, sb = subjects[a], subjects[b]
            if impostor == "first":
                impostors.append(((sa, by_subject[sa][0]), (sb, by_subject[sb][0])))
            else:
                for ia in by_subject[sa]:
                    for ib in by_subject[sb]:
                        impostors.append(((sa, ia), (sb, ib)))
    return genuine, impostors


def _load_templates(
    manifest: DatasetManifest, failures: list[str]
) -> dict[PairKey, MinutiaTemplate]:
    templates: dict[PairKey, MinutiaTemplate] = {}
    for e in manifest.entries:
        try:
            templates[(e.subject, e.impression)] = load_template(e.path)
        except (FormatError, RangeError, OSError) as exc:
            failures.append(f"{e.path.name}: {exc}")
    return templates


def _compare_one(args):
    (key_a, key_b), kind, ta, tb, na, nb, cfg, measure = args
    start = time.perf_counter() if measure else 0.0
    result = run_matcher(ta, tb, cfg, na, nb)
    millis = (time.perf_counter() - start) * 1000.0 if measure else 0.0
    return Comparison(kind, key_a[0], key_a[1], key_b[0], key_b[1], result.score, millis)


def run_protocol(
    manifest: DatasetManifest,
    cfg: MatchConfig | None = None,
    impostor: str = "all",
    jobs: int = 1,
    measure_timing: bool = False,
) -> ScoreSet:
    """Run every protocol comparison over a dataset manifest.

    Unreadable templates are reported in `failures`; comparisons touching
    them are skipped and counted. Results are ordered genuine-then-impostor,
    each sorted by pair identity, regardless of `jobs`.
    """
    if cfg is None:
        cfg = MatchConfig()
    out = ScoreSet()
    templates = _load_templates(manifest, out.failures)
    neighborhoods = {
        key: compute_octant_neighbors(t) for key, t in templates.items()
    }

    genuine, impostors = protocol_pairs(manifest, impostor)
    tasks = []
    for kind, pairs in (("genuine", genuine), ("impostor", impostors)):
        for key_a, key_b in pairs:
            if key_a not in templates or key_b not in templates:
                out.skipped += 1
                continue
            tasks.append(
                (
                    (key_a, key_b),
                    kind,
                    templates[key_a],
                    templates[key_b],
                    neighborhoods[key_a],
                    neighborhoods[key_b],
                    cfg,
                    measure_timing,
                )
            )

    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_compare_one, tasks, chunksize=32))
    else:
        results = [_compare_one(t) for t in tasks]

    for comp in results:
        out.comparisons.append(comp)
        out.timings.append(comp.millis)
        if comp.kind == "genuine":
            out.genuine.append(comp.score)
        else:
            out.impostor.append(comp.score)
    return out


def compute_eer(scores: ScoreSet) -> EvalReport:
    """Sweep thresholds over the observed scores and locate the equal-error
    operating point, interpolating linearly between adjacent thresholds.

    Raises:
        EmptyScoresError: either score list is empty.
    """
    if not scores.genuine or not scores.impostor:
        raise EmptyScoresError("need at least one genuine and one impostor score")
    gen = np.sort(np.asarray(scores.genuine, dtype=float))
    imp = np.sort(np.asarray(scores.impostor, dtype=float))
    thresholds = np.unique(np.concatenate([gen, imp]))
    # Sentinel above every score closes the sweep (FAR 0, FRR 1), so a
    # crossing always exists inside the swept range.
    thresholds = np.append(thresholds, thresholds[-1] + 1.0)

    far = (imp.size - np.searchsorted(imp, thresholds, side="left")) / imp.size
    frr = np.searchsorted(gen, thresholds, side="left") / gen.size

    diff = far - frr
    idx = int(np.argmax(diff <= 0.0))
    if diff[idx] == 0.0:
        eer = float(far[idx])
    else:
        prev = idx - 1
        denom = diff[prev] - diff[idx]
        f = float(diff[prev] / denom)
        eer_far = far[prev] + f * (far[idx] - far[prev])
        eer_frr = frr[prev] + f * (frr[idx] - frr[prev])
        eer = float((eer_far + eer_frr) / 2.0)

    roc = tuple(
        (float(t), float(fa * 100.0), float(fr * 100.0))
        for t, fa, fr in zip(thresholds, far, frr)
    )
    mean_ms = float(np.mean(scores.timings)) if scores.timings else 0.0
    return EvalReport(
        eer=eer * 100.0,
        roc=roc,
        mean_time_ms=mean_ms,
        genuine_count=len(scores.genuine),
        impostor_count=len(scores.impostor),
        skipped=scores.skipped,
    )


def write_scores_csv(scores: ScoreSet, path: str | Path) -> None:
    """Write one row per comparison, columns exactly as CSV_COLUMNS."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for c in scores.comparisons:
            writer.writerow(
                (
                    c.kind,
                    c.subject_a,
                    c.imp_a,
                    c.subject_b,
                    c.imp_b,
                    f"{c.score:.6f}",
                    f"{c.millis:.3f}",
                )
            )


def write_report_json(report: EvalReport, path: str | Path) -> None:
    payload = {
        "eer": report.eer,
        "roc": [list(row) for row in report.roc],
        "mean_time_ms": report.mean_time_ms,
        "counts": {
            "genuine": report.genuine_count,
            "impostor": report.impostor_count,
            "skipped": report.skipped,
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
