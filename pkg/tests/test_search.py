import itertools
import json

import numpy as np
import pytest

from clusterselect.algorithms import HyperparamConfig
from clusterselect.errors import DataIOError, DegenerateInputError, DimensionError, FormatError, ParameterError, SpecError
from clusterselect.labeling import Labeling
from clusterselect.metrics import nmi
from clusterselect.reports import json_safe
from clusterselect.search import (
    Grid,
    build_ensemble,
    load_grid,
    read_ensemble,
    score_against,
    select_anmi,
    select_best_match,
    sweep_k_star,
    write_ensemble,
)

from .helpers import make_ensemble, permute_labels, random_labeling, set_partitions

C = Labeling([0, 0, 0, 0, 1, 1, 1, 1])
X = Labeling([0, 1, 0, 1, 0, 1, 0, 1])
Y = Labeling([0, 0, 1, 1, 0, 0, 1, 1])


# ----------------------------------------------------------------------------
# Grid
# ----------------------------------------------------------------------------


def test_grid_expands_cartesian_product():
    grid = Grid.from_spec(
        [
            {"algorithm": "dbscan", "params": {"eps": [0.5, 1.0], "m_points": [3, 4, 5]}},
            {"algorithm": "kmeans", "params": {"k": 3}},
        ]
    )
    assert len(grid) == 7
    names = [c.display_name for c in grid]
    assert names[0] == "dbscan(eps=0.5, m_points=3)"
    assert names[1] == "dbscan(eps=0.5, m_points=4)"
    assert names[-1] == "kmeans(k=3)"
    assert grid.ranges["dbscan"]["m_points"] == (3, 4, 5)


def test_grid_rejects_duplicates():
    with pytest.raises(SpecError, match=r"duplicate config in grid: kmeans\(k=3\)"):
        Grid.from_spec([{"algorithm": "kmeans", "params": {"k": [3, 3]}}])


def test_grid_defaults_make_duplicates():
    with pytest.raises(SpecError):
        Grid.from_spec(
            [
                {"algorithm": "kmeans", "params": {"k": 2}},
                {"algorithm": "kmeans", "params": {"k": 2, "seed": 0}},
            ]
        )


def test_grid_keeps_close_floats_apart():
    grid = Grid.from_spec([{"algorithm": "dbscan", "params": {"eps": [0.1234561, 0.1234562], "m_points": 3}}])
    assert len({c.display_name for c in grid}) == 2


def test_grid_rejects_shared_names():
    with pytest.raises(SpecError, match="share the name"):
        Grid(
            (
                HyperparamConfig("kmeans", {"k": 2}, display_name="same"),
                HyperparamConfig("kmeans", {"k": 3}, display_name="same"),
            )
        )


@pytest.mark.parametrize(
    "entries",
    [
        {"algorithm": "kmeans"},
        [{"params": {"k": 2}}],
        [{"algorithm": "kmeans", "params": [2]}],
        [{"algorithm": "kmeans", "params": {"k": []}}],
        [{"algorithm": "kmeans", "params": {"k": 0}}],
    ],
)
def test_grid_rejects_malformed_blocks(entries):
    with pytest.raises(SpecError):
        Grid.from_spec(entries)


def test_load_grid_from_json_and_yaml(tmp_path):
    as_json = tmp_path / "g.json"
    as_json.write_text(json.dumps({"grid": [{"algorithm": "kmeans", "params": {"k": [2, 3]}}]}))
    as_yaml = tmp_path / "g.yaml"
    as_yaml.write_text("- algorithm: kmeans\n  params:\n    k: [2, 3]\n")
    assert load_grid(as_json).configs == load_grid(as_yaml).configs


def test_load_grid_errors(tmp_path):
    with pytest.raises(DataIOError):
        load_grid(tmp_path / "missing.json")
    bad = tmp_path / "bad.yaml"
    bad.write_text("grid: [unclosed\n")
    with pytest.raises(SpecError):
        load_grid(bad)
    nogrid = tmp_path / "nogrid.json"
    nogrid.write_text('{"k_star": 3}')
    with pytest.raises(SpecError):
        load_grid(nogrid)


# ----------------------------------------------------------------------------
# Ensemble
# ----------------------------------------------------------------------------


def test_build_ensemble_drops_failed_configs(two_blobs, caplog):
    ds, truth = two_blobs
    grid = Grid.from_spec(
        [
            {"algorithm": "kmeans", "params": {"k": [2, 50]}},
            {"algorithm": "agglomerative", "params": {"k": 2}},
        ]
    )
    ens = build_ensemble(ds, grid, threads=2)
    assert ens.names == ["kmeans(k=2)", "agglomerative(k=2)"]
    assert [c.display_name for c, _ in ens.failures] == ["kmeans(k=50)"]
    assert all(lab == truth for lab in ens.labelings)
    assert ens.dataset_fingerprint == ds.fingerprint
    assert ens.seeds() == {"kmeans(k=2)": 0}
    assert "Dropping kmeans(k=50)" in caplog.text


def test_build_ensemble_all_failed(two_blobs):
    ds, _ = two_blobs
    with pytest.raises(DegenerateInputError):
        build_ensemble(ds, Grid.from_spec([{"algorithm": "kmeans", "params": {"k": 99}}]))


def test_build_ensemble_empty_grid(two_blobs):
    with pytest.raises(SpecError):
        build_ensemble(two_blobs[0], Grid(()))


def test_ensemble_file_keeps_names_and_partitions(tmp_path):
    ens = make_ensemble([C, X, Labeling([5, 5, 2, 2, 9, 9, 9, 2])])
    path = tmp_path / "ens.csv"
    write_ensemble(ens, path)
    assert path.read_text().splitlines()[:2] == ["m0,m1,m2", "0,0,0"]
    names, labelings = read_ensemble(path)
    assert names == ens.names
    assert labelings == ens.labelings


def test_read_ensemble_ragged(tmp_path):
    path = tmp_path / "ens.csv"
    path.write_text("a,b\n0,1\n0\n")
    with pytest.raises(FormatError, match="line 3"):
        read_ensemble(path)


# ----------------------------------------------------------------------------
# Strategy 1
# ----------------------------------------------------------------------------


def test_anmi_selection_toy_ensemble():
    result = select_anmi(make_ensemble([C, C, X, Y]))
    assert result.chosen_config.display_name == "m0"
    assert result.score == pytest.approx(1 / 3)
    assert result.ties == ["m0", "m1"]
    assert result.nmi_evaluations == 6
    assert [s for _, s in result.full_scores] == pytest.approx([1 / 3, 1 / 3, 0.0, 0.0], abs=1e-12)
    assert result.runner_up() == ("m1", pytest.approx(1 / 3))


def test_anmi_selection_identical_members():
    result = select_anmi(make_ensemble([C] * 4))
    assert result.score == pytest.approx(1.0)
    assert result.chosen_config.display_name == "m0"
    assert len(result.ties) == 4


def test_anmi_selection_needs_two_members():
    with pytest.raises(DegenerateInputError):
        select_anmi(make_ensemble([C]))


@pytest.mark.parametrize("seed", range(10))
def test_anmi_winner_has_largest_score(seed):
    rng = np.random.default_rng(seed)
    ens = make_ensemble([random_labeling(rng, 20, 4) for _ in range(6)])
    result = select_anmi(ens, threads=3)
    scores = [s for _, s in result.full_scores]
    assert result.score == max(scores)
    assert result.chosen_config.display_name == ens.names[scores.index(max(scores))]


# ----------------------------------------------------------------------------
# Strategy 2
# ----------------------------------------------------------------------------


def test_best_match_on_copies():
    result = select_best_match(make_ensemble([C, C, C]), k_star=2)
    assert result.chosen_config.display_name == "m0"
    assert result.score == pytest.approx(1.0)
    assert result.consensus == C
    assert result.winner_nmi_vs_consensus == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(10))
def test_best_match_winner_is_the_argmax(seed):
    rng = np.random.default_rng(seed)
    ens = make_ensemble([random_labeling(rng, 24, 4) for _ in range(7)])
    result = select_best_match(ens, k_star=3, threads=2)
    values = [nmi(lab, result.consensus) for lab in ens.labelings]
    assert result.score == pytest.approx(max(values), abs=1e-12)
    assert values.index(max(values)) == ens.names.index(result.chosen_config.display_name)


def test_best_match_ari_criterion():
    result = select_best_match(make_ensemble([X, C, C, Y]), k_star=2, criterion="ari")
    assert result.criterion == "ari"
    assert result.chosen_config.display_name == "m1"
    assert result.score == pytest.approx(1.0)


def test_best_match_checks_a_given_consensus():
    ens = make_ensemble([C, X, Y])
    with pytest.raises(ParameterError, match="k_star=3"):
        select_best_match(ens, k_star=3, consensus=C)
    with pytest.raises(DimensionError):
        select_best_match(ens, k_star=2, consensus=Labeling([0, 0, 1, 1]))
    assert select_best_match(ens, k_star=2, consensus=C).chosen_config.display_name == "m0"


def test_best_match_unknown_criterion():
    with pytest.raises(ParameterError):
        select_best_match(make_ensemble([C]), k_star=2, criterion="vi")
    with pytest.raises(ParameterError):
        score_against([C], C, criterion="vi")


def test_best_match_is_relabel_invariant():
    rng = np.random.default_rng(21)
    members = [random_labeling(rng, 20, 4) for _ in range(5)]
    base = select_best_match(make_ensemble(members), k_star=3)
    renamed = select_best_match(make_ensemble([permute_labels(rng, m) for m in members]), k_star=3)
    assert renamed.chosen_config.display_name == base.chosen_config.display_name
    assert renamed.score == pytest.approx(base.score, abs=1e-12)


def test_sweep_rows_follow_k_star_order():
    ens = make_ensemble([C, C, X, Y])
    rows = sweep_k_star(ens, [4, 2])
    assert [r.k_star for r in rows] == [2, 4]
    assert rows[0].winner == "m0"
    assert rows[0].score == pytest.approx(1.0)
    assert rows[0].runner_up == "m1"
    for row in rows:
        single = select_best_match(ens, row.k_star)
        assert single.chosen_config.display_name == row.winner


def test_selection_result_is_json_serialisable():
    result = select_best_match(make_ensemble([C, X]), k_star=2)
    doc = json.loads(json.dumps(json_safe(result.to_dict()), sort_keys=True))
    assert doc["strategy"] == "best_match"
    assert doc["chosen_config"]["algorithm"] == "kmeans"
    assert doc["chosen_labels"] == [0, 0, 0, 0, 1, 1, 1, 1]
    assert doc["k_star"] == 2
    assert doc["dataset_fingerprint"] == "abc"
    assert doc["seeds"] == {"m0": 0, "m1": 1}


# ----------------------------------------------------------------------------
# Both strategies on duplicated-member ensembles
# ----------------------------------------------------------------------------


def duplicated_member_ensembles(n):
    """c repeated d times after m-d members that share no information with c, d > m-d."""
    parts = [Labeling(p) for p in set_partitions(n)]
    for c in parts:
        if c.k < 2:
            continue
        unrelated = [x for x in parts if nmi(c, x) < 1e-12]
        for m in range(3, 6):
            for d in range(2, m + 1):
                if d <= m - d:
                    continue
                for others in itertools.combinations_with_replacement(unrelated, m - d):
                    yield c, m - d, list(others) + [c] * d


@pytest.mark.parametrize("n", [3, 4, 5])
def test_duplicated_member_wins_both_strategies(n):
    checked = 0
    for c, first_copy, members in duplicated_member_ensembles(n):
        ens = make_ensemble(members)
        m = len(members)
        loo = [sum(nmi(members[i], members[j]) for j in range(m) if j != i) / (m - 1) for i in range(m)]
        vs_c = [nmi(member, c) for member in members]

        first = select_anmi(ens, threads=1)
        assert [s for _, s in first.full_scores] == pytest.approx(loo, abs=1e-12)
        assert first.chosen_config.display_name == f"m{first_copy}"
        assert first.chosen_labeling == c

        for linkage in ("single", "average", "complete"):
            best = select_best_match(ens, c.k, linkage, threads=1)
            assert best.consensus == c
            assert [s for _, s in best.full_scores] == pytest.approx(vs_c, abs=1e-12)
            assert best.chosen_config.display_name == f"m{first_copy}"
        checked += 1
    assert checked > 0
