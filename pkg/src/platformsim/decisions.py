"""Evaluate all configured decision rules of one cohort at one analysis
stage and combine them into a single verdict.

Combination semantics: every configured superiority rule on every active
comparison must hold to declare GO, while any single futility rule firing
anywhere declares STOP.  If contradictory rules make both hold at once,
STOP wins (conservative).  With no superiority rules configured at a stage,
GO is impossible at that stage (nothing can be "fulfilled"), which is what
makes interim-futility-only / final-superiority-only rule sets work.

The "promising" flag is recorded in traces and outputs only; it never
changes a verdict.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .config import (BayesFutRule, BayesSAFutRule, BayesSASupRule, BayesSupRule,
                     BetaPrior, CISupFutRule, ComparisonRules, EstSupFutRule,
                     FreqFutRule, FreqSupRule)
from .stats import (PosteriorBeta, TwoByTwo, ci, one_sided_prop_test,
                    point_estimate, prob_exceeds, prob_greater_by_margin)

INTERIM = "interim"
FINAL = "final"

GO = "GO"
STOP_FUTILITY = "STOP_FUTILITY"
CONTINUE = "CONTINUE"
UNSUCCESSFUL_MAX_N = "UNSUCCESSFUL_MAX_N"
STOP_SAFETY = "STOP_SAFETY"

#: comparison index -> (numerator arm, comparator arm)
COMPARISON_ARMS = {1: ("comb", "mono_a"), 2: ("comb", "mono_b"),
                   3: ("mono_a", "soc"), 4: ("mono_b", "soc")}


@dataclass(frozen=True)
class ComparisonData:
    """Analysis-ready data for one comparison: a 2x2 table for two-arm rules
    and the numerator arm's own counts for single-arm rules."""

    table: TwoByTwo | None = None
    arm_responders: float | None = None
    arm_total: float | None = None


@dataclass(frozen=True)
class RuleTrace:
    """One entry per configured rule: what was computed against what
    threshold.  ``satisfied`` is the rule's primary condition (superiority
    for GO-capable rules, futility for STOP-only rules)."""

    comparison: int
    kind: str
    statistic: tuple[float, ...]
    threshold: tuple[float, ...]
    satisfied: bool
    superior: bool = False
    futile: bool = False
    promising: bool = False
    note: str = ""


@dataclass(frozen=True)
class ComparisonOutcome:
    comparison: int
    active: bool
    inconclusive: bool  # configured superiority rules could not be evaluated
    superior: bool      # all sup-capable rules satisfied (and at least one present)
    futile: bool        # any futility-capable rule fired
    promising: bool     # every sup-capable rule superior or promising
    n_sup_rules: int
    traces: tuple[RuleTrace, ...] = ()


@dataclass(frozen=True)
class CohortDecision:
    verdict: str
    stage: str
    promising: bool
    comparisons: tuple[ComparisonOutcome, ...]
    note: str = ""

    @property
    def traces(self) -> tuple[RuleTrace, ...]:
        return tuple(t for c in self.comparisons for t in c.traces)

    def outcome(self, comparison: int) -> ComparisonOutcome | None:
        for c in self.comparisons:
            if c.comparison == comparison:
                return c
        return None


def _posteriors(table: TwoByTwo, prior: BetaPrior) -> tuple[PosteriorBeta, PosteriorBeta]:
    x = PosteriorBeta(prior.alpha + table.t_resp, prior.beta + table.t_nonresp)
    y = PosteriorBeta(prior.alpha + table.c_resp, prior.beta + table.c_nonresp)
    return x, y


def eval_bayes_sup(rule: BayesSupRule, table: TwoByTwo, prior: BetaPrior,
                   comparison: int) -> RuleTrace:
    """Superior iff P(X > Y + margin) > confidence for every row."""
    x, y = _posteriors(table, prior)
    probs = tuple(prob_greater_by_margin(x, y, m) for m, _, _ in rule.rows)
    superior = all(p > conf for p, (_, conf, _) in zip(probs, rule.rows))
    promising = (not superior) and all(p > prom for p, (_, _, prom) in zip(probs, rule.rows))
    return RuleTrace(comparison, "bayes_sup", probs, tuple(c for _, c, _ in rule.rows),
                     satisfied=superior, superior=superior, promising=promising)


def eval_bayes_fut(rule: BayesFutRule, table: TwoByTwo, prior: BetaPrior,
                   comparison: int) -> RuleTrace:
    """Futile iff P(X > Y + margin) < confidence for every row."""
    x, y = _posteriors(table, prior)
    probs = tuple(prob_greater_by_margin(x, y, m) for m, _ in rule.rows)
    futile = all(p < conf for p, (_, conf) in zip(probs, rule.rows))
    return RuleTrace(comparison, "bayes_fut", probs, tuple(c for _, c in rule.rows),
                     satisfied=futile, futile=futile)


def eval_bayes_sa_sup(rule: BayesSASupRule, responders: float, total: float,
                      prior: BetaPrior, comparison: int) -> RuleTrace:
    """Single-arm variant: superior iff P(X > v) > confidence for every row."""
    x = PosteriorBeta(prior.alpha + responders, prior.beta + (total - responders))
    probs = tuple(prob_exceeds(x, v) for v, _, _ in rule.rows)
    superior = all(p > conf for p, (_, conf, _) in zip(probs, rule.rows))
    promising = (not superior) and all(p > prom for p, (_, _, prom) in zip(probs, rule.rows))
    return RuleTrace(comparison, "bayes_sa_sup", probs, tuple(c for _, c, _ in rule.rows),
                     satisfied=superior, superior=superior, promising=promising)


def eval_bayes_sa_fut(rule: BayesSAFutRule, responders: float, total: float,
                      prior: BetaPrior, comparison: int) -> RuleTrace:
    """Single-arm variant: futile iff P(X > v) < confidence for every row."""
    x = PosteriorBeta(prior.alpha + responders, prior.beta + (total - responders))
    probs = tuple(prob_exceeds(x, v) for v, _ in rule.rows)
    futile = all(p < conf for p, (_, conf) in zip(probs, rule.rows))
    return RuleTrace(comparison, "bayes_sa_fut", probs, tuple(c for _, c in rule.rows),
                     satisfied=futile, futile=futile)


def eval_freq_sup(rule: FreqSupRule, table: TwoByTwo, comparison: int) -> RuleTrace:
    """Superior iff p < p_sup (levels halved under bonferroni_half)."""
    p = rule.testfun(table) if rule.testfun is not None else \
        one_sided_prop_test(table, correct=rule.test.correct)
    half = 0.5 if rule.p_adj == "bonferroni_half" else 1.0
    superior = p < rule.p_sup * half
    promising = (not superior) and p < rule.p_prom * half
    return RuleTrace(comparison, "freq_sup", (p,), (rule.p_sup * half,),
                     satisfied=superior, superior=superior, promising=promising)


def eval_freq_fut(rule: FreqFutRule, table: TwoByTwo, comparison: int) -> RuleTrace:
    """Futile iff p >= p_fut (level halved under bonferroni_half)."""
    p = rule.testfun(table) if rule.testfun is not None else \
        one_sided_prop_test(table, correct=rule.test.correct)
    half = 0.5 if rule.p_adj == "bonferroni_half" else 1.0
    futile = p >= rule.p_fut * half
    return RuleTrace(comparison, "freq_fut", (p,), (rule.p_fut * half,),
                     satisfied=futile, futile=futile)


def eval_est_rule(rule: EstSupFutRule, table: TwoByTwo, comparison: int) -> RuleTrace:
    """Superior iff estimate >= p_hat_sup; futile iff estimate <= p_hat_fut."""
    e = point_estimate(table, rule.est_kind)
    superior = e >= rule.p_hat_sup
    futile = e <= rule.p_hat_fut
    promising = (not superior) and e >= rule.p_hat_prom
    return RuleTrace(comparison, "est_sup_fut", (e,), (rule.p_hat_sup, rule.p_hat_fut),
                     satisfied=superior, superior=superior, futile=futile, promising=promising)


def eval_ci_rule(rule: CISupFutRule, table: TwoByTwo, comparison: int) -> RuleTrace:
    """Superior iff the CI's upper bound >= lower_sup; futile iff its lower
    bound <= upper_fut."""
    lo, hi = ci(table, rule.est_kind, rule.ci_level)
    superior = hi >= rule.lower_sup
    futile = lo <= rule.upper_fut
    promising = (not superior) and hi >= rule.lower_prom
    return RuleTrace(comparison, "ci_sup_fut", (lo, hi), (rule.lower_sup, rule.upper_fut),
                     satisfied=superior, superior=superior, futile=futile, promising=promising)


def evaluate_comparison(rules: ComparisonRules, data: ComparisonData | None,
                        prior: BetaPrior, comparison: int) -> ComparisonOutcome:
    """Evaluate every configured rule of one comparison.

    Rules whose data requirement cannot be met (no table / empty arm) are
    not evaluated; unevaluable superiority rules make the comparison
    inconclusive, which blocks GO without contributing futility.
    """
    if rules.empty:
        return ComparisonOutcome(comparison, active=False, inconclusive=False,
                                 superior=False, futile=False, promising=False, n_sup_rules=0)
    traces: list[RuleTrace] = []
    missing_sup = 0
    table = data.table if data is not None else None
    table_ok = table is not None and table.n_t >= 1.0 and table.n_c >= 1.0
    arm_ok = (data is not None and data.arm_total is not None and data.arm_total >= 1.0)

    for rule in rules.bayes_sup:
        if table_ok:
            traces.append(eval_bayes_sup(rule, table, prior, comparison))
        else:
            missing_sup += 1
    for rule in rules.bayes_fut:
        if table_ok:
            traces.append(eval_bayes_fut(rule, table, prior, comparison))
    for rule in rules.bayes_sa_sup:
        if arm_ok:
            traces.append(eval_bayes_sa_sup(rule, data.arm_responders, data.arm_total,
                                            prior, comparison))
        else:
            missing_sup += 1
    for rule in rules.bayes_sa_fut:
        if arm_ok:
            traces.append(eval_bayes_sa_fut(rule, data.arm_responders, data.arm_total,
                                            prior, comparison))
    for rule in rules.freq_sup:
        if table_ok:
            traces.append(eval_freq_sup(rule, table, comparison))
        else:
            missing_sup += 1
    for rule in rules.freq_fut:
        if table_ok:
            traces.append(eval_freq_fut(rule, table, comparison))
    for rule in rules.est_sup_fut:
        if table_ok:
            traces.append(eval_est_rule(rule, table, comparison))
        else:
            missing_sup += 1
    for rule in rules.ci_sup_fut:
        if table_ok:
            traces.append(eval_ci_rule(rule, table, comparison))
        else:
            missing_sup += 1

    sup_traces = [t for t in traces if t.kind in
                  ("bayes_sup", "bayes_sa_sup", "freq_sup", "est_sup_fut", "ci_sup_fut")]
    n_sup = len(sup_traces) + missing_sup
    inconclusive = missing_sup > 0
    superior = bool(sup_traces) and not inconclusive and all(t.superior for t in sup_traces)
    futile = any(t.futile for t in traces)
    promising = (bool(sup_traces) and not inconclusive
                 and all(t.superior or t.promising for t in sup_traces))
    return ComparisonOutcome(comparison, active=True, inconclusive=inconclusive,
                             superior=superior, futile=futile, promising=promising,
                             n_sup_rules=n_sup, traces=tuple(traces))


def combine(outcomes: Sequence[ComparisonOutcome], stage: str) -> CohortDecision:
    """Fold per-comparison outcomes into one verdict.

    GO needs every active comparison's superiority rules satisfied (with at
    least one superiority rule configured overall); STOP_FUTILITY needs any
    single futility rule to fire and wins over a simultaneous GO.  Otherwise
    the cohort continues (interim) or ends unsuccessful at maximum sample
    size (final).
    """
    active = [o for o in outcomes if o.active]
    any_futile = any(o.futile for o in active)
    sup_bearing = [o for o in active if o.n_sup_rules > 0]
    go = bool(sup_bearing) and all(o.superior for o in sup_bearing)
    promising = (not go) and bool(sup_bearing) and \
        all(o.superior or o.promising for o in sup_bearing)
    note = ""
    if any_futile:
        verdict = STOP_FUTILITY
        if go:
            note = "superiority and futility both satisfied; futility wins (conservative)"
    elif go:
        verdict = GO
    elif stage == INTERIM:
        verdict = CONTINUE
    else:
        verdict = UNSUCCESSFUL_MAX_N
        note = "superiority criterion not reached at maximum sample size"
    return CohortDecision(verdict=verdict, stage=stage, promising=promising,
                          comparisons=tuple(outcomes), note=note)


def evaluate_cohort(stage_rules: Sequence[ComparisonRules],
                    data: Mapping[int, ComparisonData],
                    prior: BetaPrior, stage: str,
                    arm_present_comparisons: Sequence[int]) -> CohortDecision:
    """Evaluate one cohort at one stage.

    ``stage_rules`` holds the four ComparisonRules in comparison order;
    comparisons whose arms are absent from the cohort (or that have no
    rules) are skipped entirely.  Raises if an active comparison has no
    data entry at all (engine bug, not a data condition).
    """
    outcomes = []
    for idx in range(1, 5):
        rules = stage_rules[idx - 1]
        if idx not in arm_present_comparisons or rules.empty:
            outcomes.append(ComparisonOutcome(idx, active=False, inconclusive=False,
                                              superior=False, futile=False, promising=False,
                                              n_sup_rules=0))
            continue
        if idx not in data:
            raise ValueError(f"missing data for active comparison {idx}")
        outcomes.append(evaluate_comparison(rules, data[idx], prior, idx))
    return combine(outcomes, stage)
