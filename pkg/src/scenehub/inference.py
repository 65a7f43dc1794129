"""Exact Bayesian inference over threat categories and substances.

The model is an explicit discrete network: a category variable (chemical,
biological, radiological, none), substances conditioned on category, and
named boolean evidence variables that are conditionally independent given the
category. Posteriors are computed by exact enumeration, so every number is
auditable against a brute-force joint-table oracle.

Each incoming evidence message is a distinct observation: observing the same
variable twice multiplies its likelihood in twice. Region ids are carried on
evidence for audit purposes but do not enter the single-scene model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

# Fixed category order; also the tie-break order for argmax.
CATEGORIES = ("chemical", "biological", "radiological", "none")

PRIOR_SUM_TOL = 1e-12


class ModelError(ValueError):
    """Invalid model configuration."""


class UnknownVariableError(KeyError):
    """Evidence names a variable the model does not define."""


@dataclass(frozen=True)
class Evidence:
    variable: str
    value: bool
    region: str = ""
    timestamp: float = 0.0


@dataclass(frozen=True)
class ThreatModel:
    priors: dict[str, float]  # category -> P(category)
    substance_categories: dict[str, str]  # substance id -> its category
    substance_priors: dict[str, float]  # substance id -> P(substance | its category)
    cpts: dict[str, dict[str, float]]  # variable -> {category: P(var = true | category)}

    def categories(self) -> tuple[str, ...]:
        return CATEGORIES

    def substances_of(self, category: str) -> list[str]:
        return sorted(s for s, c in self.substance_categories.items() if c == category)


@dataclass(frozen=True)
class Belief:
    categories: dict[str, float]
    substances: dict[str, float]
    evidence_count: int
    log_likelihood: float


@dataclass(frozen=True)
class BeliefState:
    """A model plus every observation so far; updates produce new values."""

    model: ThreatModel
    evidence: tuple[Evidence, ...] = ()
    belief: Belief = field(init=False, repr=False, compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "belief", posterior(self.model, list(self.evidence)))


def build_model(config: dict) -> ThreatModel:
    """Validate a model document and return an immutable :class:`ThreatModel`.

    Document shape::

        {
          "categories": {"chemical": 0.25, ...},          # sums to 1
          "substances": {"cs137": {"category": "radiological", "prior": 0.5}, ...},
          "evidence": {"handheld_rad_positive": {"chemical": 0.05, ...}, ...}
        }

    Every category needs at least one substance (use a pseudo-substance such
    as ``no_substance`` for the none category) and per-category substance
    priors must each sum to 1.
    """
    unknown = sorted(set(config) - {"categories", "substances", "evidence"})
    if unknown:
        raise ModelError(f"unknown model fields {unknown}")

    priors = config.get("categories")
    if not isinstance(priors, dict) or sorted(priors) != sorted(CATEGORIES):
        raise ModelError(f"categories: must give a prior for exactly {list(CATEGORIES)}")
    for cat, p in priors.items():
        if not 0.0 <= p <= 1.0:
            raise ModelError(f"categories.{cat}: prior {p} outside [0, 1]")
    total = sum(priors.values())
    if abs(total - 1.0) > PRIOR_SUM_TOL:
        raise ModelError(f"categories: priors sum to {total!r}, not 1")

    substances = config.get("substances", {})
    sub_cats: dict[str, str] = {}
    sub_priors: dict[str, float] = {}
    for sub, spec_ in substances.items():
        cat = spec_.get("category")
        if cat not in CATEGORIES:
            raise ModelError(f"substances.{sub}.category: {cat!r} not a known category")
        p = spec_.get("prior")
        if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
            raise ModelError(f"substances.{sub}.prior: {p!r} outside [0, 1]")
        sub_cats[sub] = cat
        sub_priors[sub] = float(p)
    for cat in CATEGORIES:
        subs = [s for s, c in sub_cats.items() if c == cat]
        if not subs:
            raise ModelError(f"substances: category {cat!r} has no substances")
        total = sum(sub_priors[s] for s in subs)
        if abs(total - 1.0) > PRIOR_SUM_TOL:
            raise ModelError(f"substances: priors for category {cat!r} sum to {total!r}, not 1")

    cpts: dict[str, dict[str, float]] = {}
    for var, row in config.get("evidence", {}).items():
        if not isinstance(row, dict) or sorted(row) != sorted(CATEGORIES):
            raise ModelError(f"evidence.{var}: must give P(true | category) for every category")
        for cat, p in row.items():
            if not isinstance(p, (int, float)) or not 0.0 <= p <= 1.0:
                raise ModelError(f"evidence.{var}.{cat}: {p!r} outside [0, 1]")
        cpts[var] = {cat: float(p) for cat, p in row.items()}

    return ThreatModel(
        priors={cat: float(priors[cat]) for cat in CATEGORIES},
        substance_categories=sub_cats,
        substance_priors=sub_priors,
        cpts=cpts,
    )


def load_model(path: str | Path) -> ThreatModel:
    with open(path, encoding="utf-8") as f:
        return build_model(json.load(f))


def posterior(model: ThreatModel, evidence: list[Evidence]) -> Belief:
    """Exact posterior over categories and substances given all observations.

    P(cat | e) is proportional to P(cat) times the product over observations
    of P(e_i | cat); substances factor as P(sub | e) = P(cat(sub) | e) *
    P(sub | cat). Likelihoods accumulate in log space so long evidence
    streams cannot underflow.
    """
    for ev in evidence:
        if ev.variable not in model.cpts:
            raise UnknownVariableError(ev.variable)

    log_weights: dict[str, float] = {}
    for cat in CATEGORIES:
        log_w = math.log(model.priors[cat]) if model.priors[cat] > 0.0 else -math.inf
        for ev in evidence:
            p_true = model.cpts[ev.variable][cat]
            p = p_true if ev.value else 1.0 - p_true
            log_w += math.log(p) if p > 0.0 else -math.inf
        log_weights[cat] = log_w

    log_norm = _logsumexp(list(log_weights.values()))
    if log_norm == -math.inf:
        raise ModelError("evidence has probability zero under every category")

    cats = {cat: math.exp(log_weights[cat] - log_norm) for cat in CATEGORIES}
    subs = {
        sub: cats[cat] * model.substance_priors[sub]
        for sub, cat in model.substance_categories.items()
    }
    return Belief(
        categories=cats,
        substances=subs,
        evidence_count=len(evidence),
        log_likelihood=log_norm,
    )


def update(state: BeliefState, new_evidence: Evidence) -> BeliefState:
    """Fold one more observation in; exactly equivalent to batch recomputation."""
    return BeliefState(model=state.model, evidence=state.evidence + (new_evidence,))


def most_probable(belief: Belief) -> tuple[str, str]:
    """Argmax category and substance; ties break by category order, then substance id."""
    best_cat = max(CATEGORIES, key=lambda c: (belief.categories[c], -CATEGORIES.index(c)))
    best_sub = min(
        sorted(belief.substances),
        key=lambda s: -belief.substances[s],
    )
    return best_cat, best_sub


def _logsumexp(values: list[float]) -> float:
    m = max(values)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(v - m) for v in values))
