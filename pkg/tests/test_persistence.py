import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cascadenet import persistence
from cascadenet.cascade import CascadeConfig, train
from cascadenet.dataset import GeneratorConfig, generate, partition_by_year
from cascadenet.errors import LoadError, SchemaVersionError
from cascadenet.persistence import canonical_json, dumps, format_float, load, loads, save


@pytest.fixture(scope="module")
def setup():
    d = generate(GeneratorConfig(height=6, width=8))
    p = partition_by_year(d, seed=0)
    casc = train(d, p, 5, CascadeConfig(max_nets=3))
    return d, p, casc


def tampered(casc, edit):
    doc = json.loads(dumps(casc))
    edit(doc)
    return json.dumps(doc)


class TestFormatting:
    @given(st.floats(allow_nan=False, allow_infinity=False))
    def test_float_roundtrip(self, x):
        assert float(format_float(x)) == x

    def test_integral_floats_keep_a_point(self):
        assert format_float(3.0) == "3.0"
        assert format_float(1e300) == "1.0000000000000001e+300"

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            format_float(float("nan"))

    def test_canonical_layout(self):
        text = canonical_json({"a": [1.0, 2], "b": {"c": None, "d": True}, "e": "x"})
        assert text == '{\n "a": [1.0, 2],\n "b": {\n  "c": null,\n  "d": true\n },\n "e": "x"\n}\n'


class TestRoundtrip:
    def test_save_load_save_identical(self, setup, tmp_path):
        _, _, casc = setup
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save(casc, a, {"seed": 0})
        save(load(a), b, {"seed": 0})
        assert a.read_bytes() == b.read_bytes()
        assert not list(tmp_path.glob("*.tmp"))

    def test_predictions_identical(self, setup, tmp_path):
        d, p, casc = setup
        save(casc, tmp_path / "m.json")
        back = load(tmp_path / "m.json")
        for _, idx in p.names():
            before = casc.predict(d.X[idx])
            after = back.predict(d.X[idx])
            assert np.max(np.abs(before - after)) <= 1e-15
            np.testing.assert_array_equal(before, after)

    def test_every_value_exact(self, setup):
        _, _, casc = setup
        back = loads(dumps(casc))
        np.testing.assert_array_equal(back.pca.components, casc.pca.components)
        np.testing.assert_array_equal(back.pca.mean, casc.pca.mean)
        np.testing.assert_array_equal(back.pca.variances, casc.pca.variances)
        np.testing.assert_array_equal(back.score_sd, casc.score_sd)
        for (s1, w1), (s2, w2) in zip(back.nets, casc.nets):
            assert s1 == s2
            np.testing.assert_array_equal(w1, w2)
        assert back.history == casc.history
        assert (back.target_mean, back.target_sd) == (casc.target_mean, casc.target_sd)

    def test_partition_years(self, setup):
        d, p, casc = setup
        back = loads(dumps(casc)).partition.reindexed(d.year)
        for (_, a), (_, b) in zip(back.names(), p.names()):
            np.testing.assert_array_equal(a, b)

    def test_provenance(self, setup, tmp_path):
        _, _, casc = setup
        save(casc, tmp_path / "m.json", {"seed": 4, "command": "train"})
        assert persistence.read_provenance(tmp_path / "m.json") == {"seed": 4, "command": "train"}


class TestLoadErrors:
    def test_broken_orthonormality(self, setup):
        _, _, casc = setup

        def edit(doc):
            doc["pca"]["components"][0][3] += 1e-3

        with pytest.raises(LoadError, match="orthonormal"):
            loads(tampered(casc, edit))

    def test_tiny_perturbation_accepted(self, setup):
        _, _, casc = setup

        def edit(doc):
            doc["pca"]["components"][0][3] += 1e-9

        loads(tampered(casc, edit))

    def test_schema_version(self, setup):
        _, _, casc = setup

        def edit(doc):
            doc["schema_version"] = 2

        with pytest.raises(SchemaVersionError, match="2.*supported: 1") as info:
            loads(tampered(casc, edit))
        assert (info.value.found, info.value.supported) == (2, 1)

    def test_malformed_json(self):
        with pytest.raises(LoadError, match="malformed JSON"):
            loads("{not json")

    def test_missing_key(self, setup):
        _, _, casc = setup
        with pytest.raises(LoadError, match="malformed"):
            loads(tampered(casc, lambda doc: doc.pop("nets")))

    def test_wrong_shape(self, setup):
        _, _, casc = setup
        with pytest.raises(LoadError, match="flat_params"):
            loads(tampered(casc, lambda doc: doc["nets"][0]["flat_params"].pop()))

    def test_non_finite(self, setup):
        _, _, casc = setup
        text = dumps(casc).replace('"target_sd": ', '"target_sd": NaN, "x": ', 1)
        with pytest.raises(LoadError):
            loads(text)

    def test_increasing_variances(self, setup):
        _, _, casc = setup

        def edit(doc):
            doc["pca"]["variances"][-1] = doc["pca"]["variances"][0] * 2

        with pytest.raises(LoadError, match="nonincreasing"):
            loads(tampered(casc, edit))

    def test_validation_not_decreasing(self, setup):
        _, _, casc = setup
        assert sum(h.kept for h in casc.history) >= 2

        def edit(doc):
            kept = [h for h in doc["history"] if h["kept"]]
            kept[1]["val_rmse"] = kept[0]["val_rmse"]

        with pytest.raises(LoadError, match="strictly decrease"):
            loads(tampered(casc, edit))

    def test_first_net_must_be_linear(self, setup):
        _, _, casc = setup

        def edit(doc):
            doc["nets"] = doc["nets"][1:]

        with pytest.raises(LoadError, match="depths"):
            loads(tampered(casc, edit))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load(tmp_path / "absent.json")
