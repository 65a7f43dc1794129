import math
import random

import pytest

from oracles import joint_posterior_oracle
from scenehub.inference import (
    CATEGORIES,
    BeliefState,
    Evidence,
    ModelError,
    ThreatModel,
    UnknownVariableError,
    build_model,
    load_model,
    most_probable,
    posterior,
    update,
)

WORKED_CPT = {"chemical": 0.05, "biological": 0.05, "radiological": 0.9, "none": 0.02}


def uniform_model(evidence_vars=None) -> ThreatModel:
    return build_model({
        "categories": {c: 0.25 for c in CATEGORIES},
        "substances": {
            "chlorine": {"category": "chemical", "prior": 1.0},
            "anthrax": {"category": "biological", "prior": 1.0},
            "cs137": {"category": "radiological", "prior": 0.6},
            "co60": {"category": "radiological", "prior": 0.4},
            "no_substance": {"category": "none", "prior": 1.0},
        },
        "evidence": evidence_vars or {"handheld_rad_positive": dict(WORKED_CPT)},
    })


def random_model(rng: random.Random, max_subs=6, max_vars=6) -> ThreatModel:
    raw = [rng.uniform(0.05, 1.0) for _ in CATEGORIES]
    total = sum(raw)
    priors = {c: w / total for c, w in zip(CATEGORIES, raw)}
    priors[CATEGORIES[-1]] = 1.0 - sum(priors[c] for c in CATEGORIES[:-1])

    substances = {}
    for i, cat in enumerate(CATEGORIES):
        n = rng.randint(1, max(1, max_subs // 2))
        weights = [rng.uniform(0.1, 1.0) for _ in range(n)]
        for j, w in enumerate(weights):
            p = w / sum(weights)
            if j == n - 1:
                p = 1.0 - sum(substances[f"s{i}_{k}"]["prior"] for k in range(n - 1))
            substances[f"s{i}_{j}"] = {"category": cat, "prior": p}

    evidence = {
        f"var_{v}": {c: rng.uniform(0.01, 0.99) for c in CATEGORIES}
        for v in range(rng.randint(1, max_vars))
    }
    return build_model({
        "categories": priors,
        "substances": substances,
        "evidence": evidence,
    })


def random_evidence(rng: random.Random, model: ThreatModel, max_obs=6) -> list[Evidence]:
    names = sorted(model.cpts)
    return [
        Evidence(variable=rng.choice(names), value=rng.random() < 0.6, timestamp=float(i))
        for i in range(rng.randint(0, max_obs))
    ]


class TestBuildModel:
    def test_uniform_prior_no_evidence_vars(self):
        model = build_model({
            "categories": {c: 0.25 for c in CATEGORIES},
            "substances": {f"s_{c}": {"category": c, "prior": 1.0} for c in CATEGORIES},
        })
        assert model.cpts == {}

    def test_shipped_default_model(self, repo_root):
        model = load_model(repo_root / "models" / "default_cbrne.model")
        assert len(model.cpts) >= 3
        assert abs(sum(model.priors.values()) - 1.0) <= 1e-12

    def test_non_normalized_prior_rejected(self):
        with pytest.raises(ModelError, match="categories"):
            build_model({
                "categories": {"chemical": 0.2, "biological": 0.2, "radiological": 0.2, "none": 0.3},
                "substances": {f"s_{c}": {"category": c, "prior": 1.0} for c in CATEGORIES},
            })

    def test_substance_priors_must_normalize_per_category(self):
        with pytest.raises(ModelError, match="radiological"):
            build_model({
                "categories": {c: 0.25 for c in CATEGORIES},
                "substances": {
                    "chlorine": {"category": "chemical", "prior": 1.0},
                    "anthrax": {"category": "biological", "prior": 1.0},
                    "cs137": {"category": "radiological", "prior": 0.7},
                    "co60": {"category": "radiological", "prior": 0.7},
                    "no_substance": {"category": "none", "prior": 1.0},
                },
            })


class TestPosterior:
    def test_no_evidence_returns_prior(self):
        belief = posterior(uniform_model(), [])
        for c in CATEGORIES:
            assert math.isclose(belief.categories[c], 0.25, abs_tol=1e-12)
        assert belief.evidence_count == 0

    def test_worked_example(self):
        belief = posterior(
            uniform_model(),
            [Evidence(variable="handheld_rad_positive", value=True)],
        )
        assert abs(belief.categories["radiological"] - 0.9 / 1.02) < 1e-12
        assert abs(belief.categories["chemical"] - 0.05 / 1.02) < 1e-12
        assert abs(belief.categories["none"] - 0.02 / 1.02) < 1e-12

    def test_uninformative_evidence_changes_nothing(self):
        model = uniform_model({"flat_var": {c: 0.4 for c in CATEGORIES}})
        with_e = posterior(model, [Evidence(variable="flat_var", value=True)])
        without = posterior(model, [])
        for c in CATEGORIES:
            assert math.isclose(with_e.categories[c], without.categories[c], abs_tol=1e-12)

    def test_unknown_variable_rejected(self):
        with pytest.raises(UnknownVariableError):
            posterior(uniform_model(), [Evidence(variable="nope", value=True)])

    def test_impossible_evidence_rejected(self):
        model = uniform_model({"never": {c: 0.0 for c in CATEGORIES}})
        with pytest.raises(ModelError, match="probability zero"):
            posterior(model, [Evidence(variable="never", value=True)])

    def test_substances_marginalize_to_categories(self):
        model = uniform_model()
        belief = posterior(model, [Evidence(variable="handheld_rad_positive", value=True)])
        for cat in CATEGORIES:
            subs = model.substances_of(cat)
            assert abs(sum(belief.substances[s] for s in subs) - belief.categories[cat]) < 1e-9
        assert abs(sum(belief.categories.values()) - 1.0) < 1e-9

    def test_matches_joint_table_oracle(self):
        rng = random.Random(2024)
        for trial in range(200):
            model = random_model(rng)
            evidence = random_evidence(rng, model)
            belief = posterior(model, evidence)
            cats, subs = joint_posterior_oracle(
                model.priors,
                model.substance_categories,
                model.substance_priors,
                model.cpts,
                [(e.variable, e.value) for e in evidence],
            )
            for c in CATEGORIES:
                assert abs(belief.categories[c] - cats[c]) < 1e-9, f"trial {trial}"
            for s in subs:
                assert abs(belief.substances[s] - subs[s]) < 1e-9, f"trial {trial}"

    def test_monotone_support(self):
        model = uniform_model()
        e = Evidence(variable="handheld_rad_positive", value=True)
        p0 = posterior(model, []).categories["radiological"]
        p1 = posterior(model, [e]).categories["radiological"]
        p2 = posterior(model, [e, e]).categories["radiological"]
        assert p0 < p1 < p2

    def test_prior_scaling_invariance(self):
        # Scaling all unnormalized prior weights by a constant cancels in the
        # normalization, so every posterior entry is unchanged.
        import dataclasses

        rng = random.Random(5)
        model = random_model(rng)
        evidence = random_evidence(rng, model, max_obs=4)
        for scale in (3.7, 0.01, 250.0):
            scaled = dataclasses.replace(
                model, priors={c: p * scale for c, p in model.priors.items()}
            )
            b1 = posterior(model, evidence)
            b2 = posterior(scaled, evidence)
            for c in CATEGORIES:
                assert math.isclose(b1.categories[c], b2.categories[c], rel_tol=1e-12, abs_tol=1e-15)
            assert most_probable(b1) == most_probable(b2)


class TestUpdate:
    def test_update_equals_batch(self):
        model = uniform_model()
        state = BeliefState(model=model)
        e1 = Evidence(variable="handheld_rad_positive", value=True, timestamp=1.0)
        state = update(state, e1)
        assert state.belief == posterior(model, [e1])

    def test_order_invariance_exact(self):
        model = uniform_model({
            "handheld_rad_positive": dict(WORKED_CPT),
            "vegetation_damage_seen": {"chemical": 0.6, "biological": 0.1,
                                       "radiological": 0.7, "none": 0.05},
        })
        e1 = Evidence(variable="handheld_rad_positive", value=True, timestamp=1.0)
        e2 = Evidence(variable="vegetation_damage_seen", value=True, timestamp=2.0)
        forward = update(update(BeliefState(model=model), e1), e2).belief
        backward = update(update(BeliefState(model=model), e2), e1).belief
        assert forward.categories == backward.categories
        assert forward.substances == backward.substances
        # and both agree with the joint-table oracle
        cats, _ = joint_posterior_oracle(
            model.priors, model.substance_categories, model.substance_priors,
            model.cpts, [("handheld_rad_positive", True), ("vegetation_damage_seen", True)],
        )
        for c in CATEGORIES:
            assert abs(forward.categories[c] - cats[c]) < 1e-12

    def test_repeated_evidence_counts_twice(self):
        model = uniform_model()
        e = Evidence(variable="handheld_rad_positive", value=True, timestamp=1.0)
        e_later = Evidence(variable="handheld_rad_positive", value=True, timestamp=2.0)
        once = update(BeliefState(model=model), e)
        twice = update(once, e_later)
        assert twice.belief.evidence_count == 2
        assert twice.belief.categories["radiological"] > once.belief.categories["radiological"]


class TestMostProbable:
    def test_simple_argmax(self):
        model = uniform_model()
        belief = posterior(model, [Evidence(variable="handheld_rad_positive", value=True)])
        cat, sub = most_probable(belief)
        assert cat == "radiological"
        assert sub == "cs137"

    def test_tie_breaks_by_category_order(self):
        model = uniform_model()
        belief = posterior(model, [])
        cat, _ = most_probable(belief)
        assert cat == "chemical"

    def test_exact_substance_tie_breaks_by_id(self):
        model = build_model({
            "categories": {c: 0.25 for c in CATEGORIES},
            "substances": {
                "chlorine": {"category": "chemical", "prior": 1.0},
                "anthrax": {"category": "biological", "prior": 1.0},
                "cs137": {"category": "radiological", "prior": 0.5},
                "co60": {"category": "radiological", "prior": 0.5},
                "no_substance": {"category": "none", "prior": 1.0},
            },
            "evidence": {"handheld_rad_positive": dict(WORKED_CPT)},
        })
        belief = posterior(model, [Evidence(variable="handheld_rad_positive", value=True)])
        assert belief.substances["cs137"] == belief.substances["co60"]
        _, sub = most_probable(belief)
        assert sub == "co60"  # lexicographically first of the tied pair
