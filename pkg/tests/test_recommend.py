"""Project-recommendation experiments: leave-one-out feature runs, the
two-feature composite, and the weight-grid tuner."""

import pytest

from synth import simple_project as _proj

from workbench.errors import ConfigError, DataError
from workbench.models import default_config, with_overrides
from workbench.recommend import (
    clan_score,
    project_relevance,
    run_clan_experiment,
    run_feature_experiment,
    tune_clan_weights,
)


VSM = default_config("vsm", "recommend")


# ------------------------------------------------------------ relevance rule


def test_relevance_is_category_intersection():
    a = _proj("a", {"net", "ui"})
    b = _proj("b", {"ui", "db"})
    c = _proj("c", {"db"})
    assert project_relevance(a, b)
    assert project_relevance(b, c)
    assert not project_relevance(a, c)


def test_clan_score_is_weighted_sum():
    assert clan_score(0.25, 0.75, 2.0, 4.0) == 0.25 * 2.0 + 0.75 * 4.0


# ------------------------------------------------------ single-feature runs


@pytest.fixture(scope="module")
def text_projects():
    return [
        _proj("pa", {"media-image"}, desc="photo editor app"),
        _proj("pb", {"media-image"}, desc="photo editor app"),
        _proj("pc", {"media-video"}, desc="video player"),
        _proj("pd", {"media-video"}, desc="video stream player"),
        _proj("pe", {"media-image"}, desc=""),  # empty feature document
        _proj("pf", {"solo"}, desc="an island"),  # no category partner
    ]


def test_description_run_structure(text_projects):
    run = run_feature_experiment(text_projects, "description", with_overrides(VSM, min_df=1), k=10)
    assert run.query_ids == ("pa", "pb", "pc", "pd")
    assert dict(run.skipped) == {
        "pe": "empty feature document",
        "pf": "no other project shares a category",
    }
    # skipped projects still appear as ranking candidates
    assert all(len(r.entries) == len(text_projects) - 1 for r in run.rankings)
    assert run.lsi_dim_used is None


def test_description_run_identical_doc_ranks_first(text_projects):
    run = run_feature_experiment(text_projects, "description", with_overrides(VSM, min_df=1), k=10)
    by_query = {r.query_id: r for r in run.rankings}
    top_id, top_score = by_query["pa:description"].entries[0]
    assert top_id == "pb:description"
    assert top_score == pytest.approx(1.0, abs=1e-12)
    assert by_query["pc:description"].entries[0][0] == "pd:description"
    # pa/pb also count the empty-description pe as relevant; it lands at
    # rank 4 inside the zero-score doc-id tie (pc, pd, pe, pf), so
    # AP = (1 + 2/4) / 2 = 0.75 for those two queries and 1.0 for pc/pd.
    assert run.report.map_at_k == pytest.approx(0.875, abs=1e-12)
    assert run.report.mrr == pytest.approx(1.0, abs=1e-12)
    assert run.report.mean_recall == pytest.approx(1.0, abs=1e-12)


def test_lsi_dim_clamped_to_corpus(text_projects):
    cfg = with_overrides(default_config("lsi", "recommend"), min_df=1)
    assert cfg.lsi_dim == 100
    run = run_feature_experiment(text_projects, "description", cfg, k=10)
    # six docs, so the requested 100 dimensions cannot be realized
    assert run.lsi_dim_used is not None and run.lsi_dim_used <= 6


def test_wmd_requires_embeddings(text_projects):
    with pytest.raises(ConfigError):
        run_feature_experiment(text_projects, "description", default_config("wmd", "recommend"))


def test_unknown_feature_rejected(text_projects):
    with pytest.raises(ConfigError):
        run_feature_experiment(text_projects, "descriptions", VSM)


def test_too_few_projects_rejected():
    with pytest.raises(DataError):
        run_feature_experiment([_proj("pa", {"x"}, desc="hi")], "description", VSM)


def test_no_eligible_queries_rejected():
    ps = [_proj("pa", {"x"}, desc="one"), _proj("pb", {"y"}, desc="two")]
    with pytest.raises(DataError):
        run_feature_experiment(ps, "description", with_overrides(VSM, min_df=1))


def test_query_sampling_is_seeded():
    ps = [_proj(f"p{c}", {"shared"}, desc=f"tool number {c}") for c in "abcdef"]
    cfg = with_overrides(VSM, min_df=1)
    r1 = run_feature_experiment(ps, "description", cfg, query_count=3, seed=7)
    r2 = run_feature_experiment(ps, "description", cfg, query_count=3, seed=7)
    assert r1.query_ids == r2.query_ids
    assert len(r1.query_ids) == 3
    assert set(r1.query_ids) <= {p.project_id for p in ps}
    assert list(r1.query_ids) == sorted(r1.query_ids)
    full = run_feature_experiment(ps, "description", cfg, query_count=None)
    assert full.query_ids == tuple(sorted(p.project_id for p in ps))


# ------------------------------------------------- composite two-feature run

# Code corpus where package imports separate the two categories almost
# perfectly (the relevant partner wins by a thin cosine margin) while the
# API classes point firmly at the wrong project.  Project "pu" has no
# category partner and only below-threshold terms, so it trails every
# ranking with score zero.
#
# package profiles: pa/pb = alpha*3+beta*2, pc/pd = alpha*2+beta*3
#   -> cos(partner) = 1, cos(cross) = 12/13
# api profiles: pa=Gamma, pb=Delta, pc=Gamma, pd=Delta
#   -> for each query the api similarity is 1.0 for exactly one wrong doc


@pytest.fixture(scope="module")
def misleading_api_projects():
    a32 = ["alpha"] * 3 + ["beta"] * 2
    a23 = ["alpha"] * 2 + ["beta"] * 3
    return [
        _proj("pa", {"x"}, imports=a32, api_fields=["Gamma"]),
        _proj("pb", {"x"}, imports=a32, api_fields=["Delta"]),
        _proj("pc", {"y"}, imports=a23, api_fields=["Gamma"]),
        _proj("pd", {"y"}, imports=a23, api_fields=["Delta"]),
        _proj("pu", {"z"}, imports=["mu", "mu"], api_fields=["Nu"]),
    ]


def test_clan_pkg_only_matches_single_feature_run(misleading_api_projects):
    cache = {}
    clan = run_clan_experiment(misleading_api_projects, VSM, w_pkg=1.0, w_api=0.0, facts_cache=cache)
    solo = run_feature_experiment(misleading_api_projects, "import_package", VSM, facts_cache=cache)
    assert clan.query_ids == solo.query_ids
    for cr, sr in zip(clan.rankings, solo.rankings):
        solo_entries = [(d.split(":")[0], s) for d, s in sr.entries]
        assert list(cr.entries) == solo_entries  # bit-exact scores, same order


def test_clan_api_only_matches_single_feature_run(misleading_api_projects):
    cache = {}
    clan = run_clan_experiment(misleading_api_projects, VSM, w_pkg=0.0, w_api=1.0, facts_cache=cache)
    solo = run_feature_experiment(misleading_api_projects, "api", VSM, facts_cache=cache)
    for cr, sr in zip(clan.rankings, solo.rankings):
        assert list(cr.entries) == [(d.split(":")[0], s) for d, s in sr.entries]


def test_clan_even_weights_hand_value(misleading_api_projects):
    # At equal weights every query's true partner is pushed to rank 2 by
    # the api-favoured distractor: AP = 1/2 for all four queries.
    run = run_clan_experiment(misleading_api_projects, VSM, w_pkg=0.5, w_api=0.5)
    assert run.report.map_at_k == pytest.approx(0.5, abs=1e-12)
    assert run.report.mrr == pytest.approx(0.5, abs=1e-12)
    assert dict(run.skipped) == {"pu": "no other project shares a category"}


def test_clan_weight_validation(misleading_api_projects):
    with pytest.raises(ConfigError):
        run_clan_experiment(misleading_api_projects, VSM, w_pkg=0.0, w_api=0.0)
    with pytest.raises(ConfigError):
        run_clan_experiment(misleading_api_projects, VSM, w_pkg=-0.5, w_api=1.0)


def test_clan_rejects_wmd(misleading_api_projects):
    with pytest.raises(ConfigError):
        run_clan_experiment(
            misleading_api_projects, default_config("wmd", "recommend"), w_pkg=0.5, w_api=0.5
        )


# ------------------------------------------------------------- weight tuner


def test_tuner_trace_covers_grid(misleading_api_projects):
    res = tune_clan_weights(misleading_api_projects, VSM)
    assert len(res.trace) == 11
    assert [t["w_pkg"] for t in res.trace] == pytest.approx([i / 10 for i in range(11)])
    assert all(t["w_pkg"] + t["w_api"] == pytest.approx(1.0) for t in res.trace)


def test_tuner_grid_step(misleading_api_projects):
    res = tune_clan_weights(misleading_api_projects, VSM, grid_step=0.5)
    assert [t["w_pkg"] for t in res.trace] == [0.0, 0.5, 1.0]
    for bad in (0.0, 1.5, -0.1):
        with pytest.raises(ConfigError):
            tune_clan_weights(misleading_api_projects, VSM, grid_step=bad)


def test_tuner_prefers_pure_pkg_when_api_misleads(misleading_api_projects):
    # Only w_pkg = 1.0 keeps every partner on top (the package margin is
    # 1/13, so any api admixture >= 0.1 flips the pair); map strictly
    # drops at every other grid point.
    res = tune_clan_weights(misleading_api_projects, VSM)
    assert (res.w_pkg, res.w_api) == (1.0, 0.0)
    assert res.report.map_at_k == pytest.approx(1.0, abs=1e-12)
    by_w = {t["w_pkg"]: t["map_at_k"] for t in res.trace}
    assert by_w[1.0] == pytest.approx(1.0, abs=1e-12)
    assert all(by_w[w] <= 0.5 + 1e-12 for w in by_w if w != 1.0)


def test_tuner_takes_smallest_winning_weight_when_api_is_neutral():
    # One-hot api classes: every query's api similarity is 0 to every
    # candidate, so all weights with any package share tie at map 1.0 and
    # the scan keeps the smallest, 0.1.  Pure api (0.0) ranks by doc-id
    # ties and scores strictly worse.
    ps = [
        _proj("pa", {"x"}, imports=["alpha"], api_fields=["Qonly"]),
        _proj("pb", {"x"}, imports=["alpha"], api_fields=["Ronly"]),
        _proj("pc", {"y"}, imports=["beta"], api_fields=["Sonly"]),
        _proj("pd", {"y"}, imports=["beta"], api_fields=["Tonly"]),
    ]
    res = tune_clan_weights(ps, with_overrides(VSM, min_df=1))
    assert (res.w_pkg, res.w_api) == (0.1, 0.9)
    by_w = {t["w_pkg"]: t["map_at_k"] for t in res.trace}
    assert by_w[0.0] == pytest.approx(2 / 3, abs=1e-12)
    assert by_w[0.1] == pytest.approx(1.0, abs=1e-12)


def test_tuner_keeps_zero_weight_on_full_tie():
    # A single shared category makes every candidate relevant, so every
    # grid point scores map = mrr = 1 and the first point survives.
    ps = [
        _proj("p1", {"x"}, imports=["alpha", "alpha"], api_fields=["Widget", "Widget"]),
        _proj("p2", {"x"}, imports=["alpha", "beta"], api_fields=["Widget", "Button"]),
        _proj("p3", {"x"}, imports=["beta", "beta"], api_fields=["Button", "Button"]),
    ]
    res = tune_clan_weights(ps, VSM)
    assert (res.w_pkg, res.w_api) == (0.0, 1.0)
    assert res.report.map_at_k == pytest.approx(1.0, abs=1e-12)
    assert all(t["map_at_k"] == pytest.approx(1.0, abs=1e-12) for t in res.trace)
