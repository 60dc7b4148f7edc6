import json

import numpy as np
import pytest
from sklearn.base import clone

from pusgen.exceptions import EmptyScenarioSet, PusError, VersionMismatch
from pusgen.model import ScenarioPUSModel, month_proportions
from pusgen.synthetic import planted_profiles


def test_structure(fitted):
    assert [g.attributes for g in fitted.group_models_] == [(0, 1), (2, 3), (4, 5)]
    assert all(g.rank == 2 for g in fitted.group_models_)
    assert all(g.clusters.n_clusters == 4 for g in fitted.group_models_)
    assert all(len(g.puses) == 4 for g in fitted.group_models_)
    assert all(p.params.s == 2 for g in fitted.group_models_ for p in g.puses)


def test_array_input_and_estimator_api():
    pts, names, _ = planted_profiles(n_days=120, seed=1)
    est = ScenarioPUSModel(attribute_names=names, p_tilde=0.0, restarts=2)
    est.fit(pts)
    W = est.transform(pts)
    assert W.shape == (120, 6)
    keys = est.predict(pts)
    np.testing.assert_array_equal(keys, np.column_stack([g.clusters.assignments for g in est.group_models_]))
    clone(est)
    assert est.get_params()["p_tilde"] == 0.0
    with pytest.raises(PusError):
        ScenarioPUSModel().fit(pts)


def test_explicit_groups_and_overrides():
    pts, names, _ = planted_profiles(n_days=120, seed=2)
    groups = {"first": names[:4], "rest": names[4:]}
    est = ScenarioPUSModel(attribute_names=names, groups=groups, p_tilde=0.0,
                           group_overrides={"rest": {"clusters": 2, "rank": {"fixed": 1}}}).fit(pts)
    first, rest = est.group_models_
    assert first.name == "first" and rest.clusters.n_clusters == 2 and rest.rank == 1
    with pytest.raises(PusError):
        ScenarioPUSModel(attribute_names=names, groups=groups, group_overrides={"nope": {}}).fit(pts)


def test_threshold_too_high():
    pts, names, _ = planted_profiles(n_days=60, seed=3)
    with pytest.raises(EmptyScenarioSet):
        ScenarioPUSModel(attribute_names=names, p_tilde=0.9).fit(pts)


def test_round_trip_model_file(fitted, tmp_path):
    path = tmp_path / "model.json"
    fitted.save(path)
    loaded = ScenarioPUSModel.load(path)
    assert loaded.to_json() == fitted.to_json()
    key = fitted.scenarios_.retained[0].key
    V = fitted.scenario(key).sample(50, 3)
    np.testing.assert_array_equal(loaded.scenario(key).sample(50, 3), V)
    assert all(loaded.scenario(key).membership(v) for v in V)


def test_version_mismatch(fitted, tmp_path):
    doc = fitted.to_dict()
    doc["version"] = 99
    with pytest.raises(VersionMismatch):
        ScenarioPUSModel.from_dict(doc)
    (tmp_path / "x.json").write_text("{")
    with pytest.raises(VersionMismatch):
        ScenarioPUSModel.load(tmp_path / "x.json")


def test_month_proportions(fitted):
    rows = month_proportions(fitted)
    months = {r[2] for r in rows}
    assert len(months) == 12
    for g in fitted.group_models_:
        for month in months:
            total = sum(r[3] for r in rows if r[0] == g.name and r[2] == month)
            assert total == pytest.approx(1.0)


def test_model_file_has_full_precision_basis(fitted):
    doc = json.loads(fitted.to_json())
    P = np.array(doc["groups"][0]["basis"]["p_matrix"])
    np.testing.assert_array_equal(P, fitted.group_models_[0].basis.p_matrix)
