"""Aggregation of many simulated trials into operating characteristics.

Pooled ratios (FDR, PTP, PTT1ER) sum confusion counts over all trials;
family-wise rates condition on trials that contain at least one truly
futile (FWER) or truly superior (Disj_Power) decided cohort, with "_BA"
variants unconditioned.  Whenever a ratio's denominator is empty the value
is reported as 0.0 and the metric is listed in ``undefined`` so downstream
analysis cannot mistake it for a real zero.

Only cohorts that reached an efficacy decision enter confusion-based
metrics; safety-stopped and recruitment-halted cohorts are tracked
separately.  Rates/percentages are reported as proportions in [0, 1].

Aggregation is accumulator-based: per-trial summaries are keyed by
iteration index, so merging per-worker partials is associative,
commutative and independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .engine import (HALTED_RECRUITMENT, STOPPED_INTERIM_EFFICACY,
                     STOPPED_INTERIM_FUTILITY, STOPPED_SAFETY, TrialResult)

ARM_ROLES = ("comb", "mono_a", "mono_b", "soc")
#: tab-style column suffix per arm role
ROLE_SUFFIX = {"comb": "Comb", "mono_a": "Mono", "mono_b": "Back", "soc": "Plac"}


@dataclass(frozen=True)
class TrialSummary:
    """Everything the aggregator needs from one trial."""

    total_n: int
    pat: dict[str, int]
    suc_bio: dict[str, int]
    suc_hist: dict[str, int]
    cohorts: int
    tp: int
    fp: int
    tn: int
    fn: int
    safety_stops: int
    int_stops: int
    int_gos: int
    rr_sum: dict[str, float]
    rr_sumsq: dict[str, float]
    rr_count: dict[str, int]
    sup_pat: int                      # patients on arms truly better than SoC
    soc_slots: int
    pat_plac_first_suc: int | None
    cohorts_first_suc: int | None
    has_success: bool
    cohorts_max: int

    @property
    def has_futile(self) -> bool:
        return self.fp + self.tn >= 1

    @property
    def has_superior(self) -> bool:
        return self.tp + self.fn >= 1


def summarize_trial(result: TrialResult, cohorts_max: int) -> TrialSummary:
    pat = {r: 0 for r in ARM_ROLES}
    suc_bio = {r: 0 for r in ARM_ROLES}
    suc_hist = {r: 0 for r in ARM_ROLES}
    rr_sum = {r: 0.0 for r in ARM_ROLES}
    rr_sumsq = {r: 0.0 for r in ARM_ROLES}
    rr_count = {r: 0 for r in ARM_ROLES}
    tp = fp = tn = fn = 0
    safety = int_stop = int_go = 0
    sup_pat = 0
    for c in result.cohorts:
        soc_rate = c.truth["soc"]
        for arm, rec in c.per_arm.items():
            pat[arm] += rec.n
            suc_bio[arm] += rec.bio_responders
            suc_hist[arm] += rec.hist_responders
            rr_sum[arm] += rec.true_rate
            rr_sumsq[arm] += rec.true_rate ** 2
            rr_count[arm] += 1
            if arm != "soc" and rec.true_rate > soc_rate:
                sup_pat += rec.n
        if c.confusion == "TP":
            tp += 1
        elif c.confusion == "FP":
            fp += 1
        elif c.confusion == "TN":
            tn += 1
        elif c.confusion == "FN":
            fn += 1
        if c.status == STOPPED_SAFETY:
            safety += 1
        elif c.status == STOPPED_INTERIM_FUTILITY:
            int_stop += 1
        elif c.status == STOPPED_INTERIM_EFFICACY:
            int_go += 1
    first = result.first_success
    return TrialSummary(
        total_n=result.total_n, pat=pat, suc_bio=suc_bio, suc_hist=suc_hist,
        cohorts=len(result.cohorts), tp=tp, fp=fp, tn=tn, fn=fn,
        safety_stops=safety, int_stops=int_stop, int_gos=int_go,
        rr_sum=rr_sum, rr_sumsq=rr_sumsq, rr_count=rr_count,
        sup_pat=sup_pat, soc_slots=result.soc_slot_patients,
        pat_plac_first_suc=None if first is None else first["soc_patients"],
        cohorts_first_suc=None if first is None else first["cohorts_opened"],
        has_success=result.successes >= 1,
        cohorts_max=cohorts_max,
    )


@dataclass(frozen=True)
class OperatingCharacteristics:
    """One aggregate record; scalar fields match the OC table column names
    (underscored), distribution vectors are per-iteration with None where a
    trial-level metric is undefined."""

    iterations: int
    Avg_Pat: float
    Avg_Pat_Comb: float
    Avg_Pat_Mono: float
    Avg_Pat_Back: float
    Avg_Pat_Plac: float
    Avg_RR_Comb: float
    Avg_RR_Mono: float
    Avg_RR_Back: float
    Avg_RR_Plac: float
    SD_RR_Comb: float
    SD_RR_Mono: float
    SD_RR_Back: float
    SD_RR_Plac: float
    Avg_Suc_Hist: float
    Avg_Suc_Hist_Comb: float
    Avg_Suc_Hist_Mono: float
    Avg_Suc_Hist_Back: float
    Avg_Suc_Hist_Plac: float
    Avg_Suc_Bio: float
    Avg_Suc_Bio_Comb: float
    Avg_Suc_Bio_Mono: float
    Avg_Suc_Bio_Back: float
    Avg_Suc_Bio_Plac: float
    Avg_Cohorts: float
    Avg_TP: float
    Avg_FP: float
    Avg_TN: float
    Avg_FN: float
    FDR: float
    PTP: float
    PTT1ER: float
    FWER: float
    FWER_BA: float
    Disj_Power: float
    Disj_Power_BA: float
    Avg_Perc_Pat_Sup_Plac_Th: float
    Avg_Perc_Pat_Sup_Plac_Real: float
    Avg_Pat_Plac_First_Suc: float
    Avg_Pat_Plac_Pool: float
    Avg_Cohorts_First_Suc: float
    Avg_any_P: float
    Coh_Safety_STOP_Perc: float
    Coh_Int_STOP_Perc: float
    Coh_Int_GO_Perc: float
    Avg_Safety_STOP_Trial: float
    Avg_Int_STOP_Trial: float
    Avg_Int_GO_Trial: float
    Avg_PTP_Trial: float
    Avg_PTT1ER_Trial: float
    Avg_FDR_Trial: float
    Dist_FWER: tuple
    Dist_FDR: tuple
    Dist_PTT1ER: tuple
    Dist_PTP: tuple
    Dist_Disj_Power: tuple
    undefined: tuple[str, ...] = ()

    SCALAR_COLUMNS = (
        "Avg_Pat", "Avg_Pat_Comb", "Avg_Pat_Mono", "Avg_Pat_Back", "Avg_Pat_Plac",
        "Avg_RR_Comb", "Avg_RR_Mono", "Avg_RR_Back", "Avg_RR_Plac",
        "SD_RR_Comb", "SD_RR_Mono", "SD_RR_Back", "SD_RR_Plac",
        "Avg_Suc_Hist", "Avg_Suc_Hist_Comb", "Avg_Suc_Hist_Mono", "Avg_Suc_Hist_Back",
        "Avg_Suc_Hist_Plac",
        "Avg_Suc_Bio", "Avg_Suc_Bio_Comb", "Avg_Suc_Bio_Mono", "Avg_Suc_Bio_Back",
        "Avg_Suc_Bio_Plac",
        "Avg_Cohorts", "Avg_TP", "Avg_FP", "Avg_TN", "Avg_FN",
        "FDR", "PTP", "PTT1ER", "FWER", "FWER_BA", "Disj_Power", "Disj_Power_BA",
        "Avg_Perc_Pat_Sup_Plac_Th", "Avg_Perc_Pat_Sup_Plac_Real",
        "Avg_Pat_Plac_First_Suc", "Avg_Pat_Plac_Pool", "Avg_Cohorts_First_Suc",
        "Avg_any_P",
        "Coh_Safety_STOP_Perc", "Coh_Int_STOP_Perc", "Coh_Int_GO_Perc",
        "Avg_Safety_STOP_Trial", "Avg_Int_STOP_Trial", "Avg_Int_GO_Trial",
        "Avg_PTP_Trial", "Avg_PTT1ER_Trial", "Avg_FDR_Trial",
    )
    FLAGGED_METRICS = (
        "FDR", "PTP", "PTT1ER", "FWER", "Disj_Power",
        "Avg_Pat_Plac_First_Suc", "Avg_Cohorts_First_Suc",
        "Avg_PTP_Trial", "Avg_PTT1ER_Trial", "Avg_FDR_Trial",
    )

    def scalar_row(self) -> dict:
        row = {"iterations": self.iterations}
        for name in self.SCALAR_COLUMNS:
            row[name] = getattr(self, name)
        for name in self.FLAGGED_METRICS:
            row[f"{name}_undefined"] = name in self.undefined
        return row

    def to_json_dict(self) -> dict:
        out = self.scalar_row()
        out["undefined"] = list(self.undefined)
        for name in ("Dist_FWER", "Dist_FDR", "Dist_PTT1ER", "Dist_PTP", "Dist_Disj_Power"):
            out[name] = list(getattr(self, name))
        return out


class TrialAccumulator:
    """Per-trial summaries keyed by iteration index; the merge of two
    accumulators built from disjoint index sets equals the accumulator built
    from their union, regardless of order."""

    def __init__(self):
        self.records: dict[int, TrialSummary] = {}

    def add(self, iteration_index: int, result: TrialResult, cohorts_max: int) -> None:
        if iteration_index in self.records:
            raise ValueError(f"iteration {iteration_index} already accumulated")
        self.records[iteration_index] = summarize_trial(result, cohorts_max)

    def merge_in(self, other: "TrialAccumulator") -> None:
        overlap = self.records.keys() & other.records.keys()
        if overlap:
            raise ValueError(f"overlapping iteration indices: {sorted(overlap)[:5]}")
        self.records.update(other.records)

    def finalize(self) -> OperatingCharacteristics:
        if not self.records:
            raise ValueError("no trials accumulated")
        items = [self.records[k] for k in sorted(self.records)]
        n = len(items)
        undefined: list[str] = []

        def mean(vals) -> float:
            return sum(vals) / len(vals)

        def cond_mean(name: str, vals) -> float:
            vals = [v for v in vals if v is not None]
            if not vals:
                undefined.append(name)
                return 0.0
            return mean(vals)

        def ratio(name: str, num: float, den: float) -> float:
            if den <= 0:
                undefined.append(name)
                return 0.0
            return num / den

        pat_means = {r: mean([t.pat[r] for t in items]) for r in ARM_ROLES}
        bio_means = {r: mean([t.suc_bio[r] for t in items]) for r in ARM_ROLES}
        hist_means = {r: mean([t.suc_hist[r] for t in items]) for r in ARM_ROLES}

        rr_mean = {}
        rr_sd = {}
        for r in ARM_ROLES:
            cnt = sum(t.rr_count[r] for t in items)
            s = sum(t.rr_sum[r] for t in items)
            s2 = sum(t.rr_sumsq[r] for t in items)
            if cnt == 0:
                rr_mean[r] = 0.0
                rr_sd[r] = 0.0
                undefined.append(f"Avg_RR_{ROLE_SUFFIX[r]}")
            else:
                m = s / cnt
                rr_mean[r] = m
                # sample SD over all cohort-level true rates
                rr_sd[r] = math.sqrt(max(0.0, (s2 - cnt * m * m) / (cnt - 1))) if cnt > 1 else 0.0

        tp_sum = sum(t.tp for t in items)
        fp_sum = sum(t.fp for t in items)
        tn_sum = sum(t.tn for t in items)
        fn_sum = sum(t.fn for t in items)

        dist_fdr = tuple((t.fp / (t.fp + t.tp)) if t.fp + t.tp > 0 else None for t in items)
        dist_ptp = tuple((t.tp / (t.tp + t.fn)) if t.tp + t.fn > 0 else None for t in items)
        dist_ptt1er = tuple((t.fp / (t.fp + t.tn)) if t.fp + t.tn > 0 else None for t in items)
        dist_fwer = tuple((1.0 if t.fp >= 1 else 0.0) if t.has_futile else None for t in items)
        dist_disj = tuple((1.0 if t.tp >= 1 else 0.0) if t.has_superior else None for t in items)

        total_cohorts = sum(t.cohorts for t in items)

        ocs = OperatingCharacteristics(
            iterations=n,
            Avg_Pat=mean([t.total_n for t in items]),
            Avg_Pat_Comb=pat_means["comb"], Avg_Pat_Mono=pat_means["mono_a"],
            Avg_Pat_Back=pat_means["mono_b"], Avg_Pat_Plac=pat_means["soc"],
            Avg_RR_Comb=rr_mean["comb"], Avg_RR_Mono=rr_mean["mono_a"],
            Avg_RR_Back=rr_mean["mono_b"], Avg_RR_Plac=rr_mean["soc"],
            SD_RR_Comb=rr_sd["comb"], SD_RR_Mono=rr_sd["mono_a"],
            SD_RR_Back=rr_sd["mono_b"], SD_RR_Plac=rr_sd["soc"],
            Avg_Suc_Hist=mean([sum(t.suc_hist.values()) for t in items]),
            Avg_Suc_Hist_Comb=hist_means["comb"], Avg_Suc_Hist_Mono=hist_means["mono_a"],
            Avg_Suc_Hist_Back=hist_means["mono_b"], Avg_Suc_Hist_Plac=hist_means["soc"],
            Avg_Suc_Bio=mean([sum(t.suc_bio.values()) for t in items]),
            Avg_Suc_Bio_Comb=bio_means["comb"], Avg_Suc_Bio_Mono=bio_means["mono_a"],
            Avg_Suc_Bio_Back=bio_means["mono_b"], Avg_Suc_Bio_Plac=bio_means["soc"],
            Avg_Cohorts=mean([t.cohorts for t in items]),
            Avg_TP=tp_sum / n, Avg_FP=fp_sum / n, Avg_TN=tn_sum / n, Avg_FN=fn_sum / n,
            FDR=ratio("FDR", fp_sum, fp_sum + tp_sum),
            PTP=ratio("PTP", tp_sum, tp_sum + fn_sum),
            PTT1ER=ratio("PTT1ER", fp_sum, fp_sum + tn_sum),
            FWER=cond_mean("FWER", dist_fwer),
            FWER_BA=mean([1.0 if t.fp >= 1 else 0.0 for t in items]),
            Disj_Power=cond_mean("Disj_Power", dist_disj),
            Disj_Power_BA=mean([1.0 if t.tp >= 1 else 0.0 for t in items]),
            Avg_Perc_Pat_Sup_Plac_Th=mean(
                [t.sup_pat / t.total_n * (t.cohorts / t.cohorts_max) if t.total_n else 0.0
                 for t in items]),
            Avg_Perc_Pat_Sup_Plac_Real=mean(
                [t.sup_pat / t.total_n if t.total_n else 0.0 for t in items]),
            Avg_Pat_Plac_First_Suc=cond_mean(
                "Avg_Pat_Plac_First_Suc", [t.pat_plac_first_suc for t in items]),
            Avg_Pat_Plac_Pool=mean([t.soc_slots for t in items]),
            Avg_Cohorts_First_Suc=cond_mean(
                "Avg_Cohorts_First_Suc", [t.cohorts_first_suc for t in items]),
            Avg_any_P=mean([1.0 if t.has_superior else 0.0 for t in items]),
            Coh_Safety_STOP_Perc=ratio("Coh_Safety_STOP_Perc",
                                       sum(t.safety_stops for t in items), total_cohorts),
            Coh_Int_STOP_Perc=ratio("Coh_Int_STOP_Perc",
                                    sum(t.int_stops for t in items), total_cohorts),
            Coh_Int_GO_Perc=ratio("Coh_Int_GO_Perc",
                                  sum(t.int_gos for t in items), total_cohorts),
            Avg_Safety_STOP_Trial=mean([t.safety_stops for t in items]),
            Avg_Int_STOP_Trial=mean([t.int_stops for t in items]),
            Avg_Int_GO_Trial=mean([t.int_gos for t in items]),
            Avg_PTP_Trial=cond_mean("Avg_PTP_Trial", dist_ptp),
            Avg_PTT1ER_Trial=cond_mean("Avg_PTT1ER_Trial", dist_ptt1er),
            Avg_FDR_Trial=cond_mean("Avg_FDR_Trial", dist_fdr),
            Dist_FWER=dist_fwer, Dist_FDR=dist_fdr, Dist_PTT1ER=dist_ptt1er,
            Dist_PTP=dist_ptp, Dist_Disj_Power=dist_disj,
            undefined=tuple(sorted(set(undefined))),
        )
        return ocs


def merge(a: TrialAccumulator, b: TrialAccumulator) -> TrialAccumulator:
    """Merge accumulators from disjoint iteration sets (associative and
    commutative; overlapping indices are an error)."""
    out = TrialAccumulator()
    out.merge_in(a)
    out.merge_in(b)
    return out


def aggregate(results: Sequence[TrialResult], cohorts_max: int | None = None) -> OperatingCharacteristics:
    """Aggregate trial results (in iteration order) into one OC record."""
    if not results:
        raise ValueError("results must be non-empty")
    if cohorts_max is None:
        cohorts_max = max(max((len(r.cohorts) for r in results), default=1), 1)
    acc = TrialAccumulator()
    for i, r in enumerate(results):
        acc.add(i, r, cohorts_max)
    return acc.finalize()
