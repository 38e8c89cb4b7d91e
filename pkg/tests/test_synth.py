import numpy as np
import pytest

from ranksentinel import SyntheticSpec, ValidationError, generate_matrix


class TestSyntheticSpec:
    def test_rejects_bad_counts(self):
        with pytest.raises(ValidationError):
            SyntheticSpec(0, 5, 10, 2, 1.0, 0, 1.0, 0)
        with pytest.raises(ValidationError):
            SyntheticSpec(5, 5, 10, 11, 1.0, 0, 1.0, 0)

    def test_rejects_bad_contaminated_index(self):
        with pytest.raises(ValidationError, match="contaminated_index"):
            SyntheticSpec(5, 5, 10, 2, 1.0, 10, 1.0, 0)

    def test_rejects_negative_magnitudes(self):
        with pytest.raises(ValidationError, match="contamination"):
            SyntheticSpec(5, 5, 10, 2, 1.0, 0, -1.0, 0)


class TestGenerateMatrix:
    def test_shapes_labels_and_ids(self):
        spec = SyntheticSpec(6, 4, 30, 5, 1.0, 2, 4.0, seed=0)
        x = generate_matrix(spec)
        assert x.values.shape == (30, 10)
        assert x.labels == ("case",) * 6 + ("control",) * 4
        assert x.sample_ids[0] == "obs1" and x.sample_ids[-1] == "obs10"
        assert x.feature_ids[0] == "sig1" and x.feature_ids[5] == "null1"
        assert np.all(x.values > 0)

    def test_deterministic_for_seed(self):
        spec = SyntheticSpec(5, 5, 20, 3, 1.0, 1, 4.0, seed=42)
        a = generate_matrix(spec)
        b = generate_matrix(spec)
        assert np.array_equal(a.values, b.values)
        c = generate_matrix(SyntheticSpec(5, 5, 20, 3, 1.0, 1, 4.0, seed=43))
        assert not np.array_equal(a.values, c.values)

    def test_zero_contamination_leaves_sample_exchangeable(self):
        base = SyntheticSpec(5, 5, 20, 3, 1.0, 1, 0.0, seed=7)
        shifted = SyntheticSpec(5, 5, 20, 3, 1.0, 4, 0.0, seed=7)
        # with magnitude 0 the contaminated index has no effect at all
        assert np.array_equal(generate_matrix(base).values, generate_matrix(shifted).values)

    def test_contamination_touches_only_signal_rows_of_one_column(self):
        clean = generate_matrix(SyntheticSpec(5, 5, 20, 3, 1.0, 2, 0.0, seed=9))
        dirty = generate_matrix(SyntheticSpec(5, 5, 20, 3, 1.0, 2, 6.0, seed=9))
        delta = dirty.values != clean.values
        assert delta[:3, 2].all()
        delta[:3, 2] = False
        assert not delta.any()
