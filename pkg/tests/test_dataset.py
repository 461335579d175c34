"""
Tests for the patient-state data model, CSV I/O and preparation.
"""

import numpy as np
import pytest

from cadet.data import (
    Dataset,
    Decision,
    Example,
    FeatureSchema,
    PatientState,
    apply_standardizer,
    fit_standardizer,
    invert_standardizer,
    load_csv,
    save_csv,
    split_by_patient,
)
from cadet.errors import (
    ConfigError,
    DegenerateSplit,
    EmptyDataset,
    ParseError,
    SchemaError,
)


# =============================================================================
# Fixtures
# =============================================================================


def make_dataset(rows, names=("a", "b", "c")):
    """rows: (patient_id, state_index, features, decision)"""
    schema = FeatureSchema.of(names)
    return Dataset(
        schema=schema,
        examples=tuple(
            Example(PatientState(pid, idx, tuple(feats)), Decision(dec))
            for pid, idx, feats, dec in rows
        ),
    )


def many_patients(n_patients, states_per_patient=3, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for p in range(n_patients):
        for t in range(states_per_patient):
            rows.append((f"P{p:03d}", t, rng.normal(size=3).tolist(), int(rng.random() < 0.3)))
    return make_dataset(rows)


@pytest.fixture
def csv_file(tmp_path):
    path = tmp_path / "data.csv"
    path.write_text(
        "patient_id,state_index,a,b,c,decision\n"
        "P1,0,1.5,2,-3.25,0\n"
        "P1,1,0.1,0.2,0.3,1\n",
        encoding="utf-8",
    )
    return path


# =============================================================================
# Data model
# =============================================================================


class TestDataModel:
    """Tests for the frozen domain types."""

    def test_decision_flip_and_sign(self):
        """Flipping is an involution and sign is 2y - 1."""
        assert Decision.ORDER.flipped() == Decision.NO_ORDER
        assert Decision.NO_ORDER.flipped().flipped() == Decision.NO_ORDER
        assert Decision.ORDER.sign == 1
        assert Decision.NO_ORDER.sign == -1

    def test_schema_rejects_duplicates(self):
        """Feature names must be unique."""
        with pytest.raises(SchemaError):
            FeatureSchema.of(["a", "b", "a"])

    def test_schema_index(self):
        """Names map to column positions; unknown names raise."""
        schema = FeatureSchema.of(["x", "y"])
        assert schema.count == 2
        assert schema.index("y") == 1
        with pytest.raises(SchemaError):
            schema.index("z")

    def test_state_rejects_non_finite(self):
        """Feature values must be finite."""
        with pytest.raises(SchemaError):
            PatientState("P1", 0, (1.0, float("nan")))

    def test_dataset_rejects_wrong_width(self):
        """Every example must conform to the schema."""
        with pytest.raises(SchemaError):
            make_dataset([("P1", 0, (1.0, 2.0), 0)])

    def test_feature_matrix(self):
        """features and decisions are parallel arrays in row order."""
        ds = make_dataset([("P1", 0, (1, 2, 3), 0), ("P2", 0, (4, 5, 6), 1)])
        assert ds.features.shape == (2, 3)
        assert ds.features[1, 2] == 6.0
        assert ds.decisions.tolist() == [0, 1]
        assert ds.class_counts() == (1, 1)


# =============================================================================
# CSV
# =============================================================================


class TestCsv:
    """Tests for load_csv / save_csv."""

    def test_load_well_formed(self, csv_file):
        """2-row file with 3 features gives 2 examples over 3 features."""
        ds = load_csv(csv_file)
        assert len(ds) == 2
        assert ds.schema.count == 3
        assert ds.schema.names == ("a", "b", "c")
        assert ds.examples[0].state.features == (1.5, 2.0, -3.25)
        assert ds.examples[1].decision == Decision.ORDER

    def test_bad_decision_reports_row(self, tmp_path):
        """A decision of 2 is a ParseError at that data row."""
        path = tmp_path / "bad.csv"
        path.write_text(
            "patient_id,state_index,a,decision\nP1,0,1.0,0\nP1,1,2.0,2\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 2

    def test_non_numeric_feature(self, tmp_path):
        """Non-numeric feature cells are ParseErrors."""
        path = tmp_path / "bad.csv"
        path.write_text("patient_id,state_index,a,decision\nP1,0,abc,0\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 1

    def test_missing_column(self, tmp_path):
        """A missing decision column is a SchemaError."""
        path = tmp_path / "bad.csv"
        path.write_text("patient_id,state_index,a\nP1,0,1.0\n", encoding="utf-8")
        with pytest.raises(SchemaError):
            load_csv(path)

    def test_extra_field_reports_row(self, tmp_path):
        """A row with one field too many is a ParseError at that row."""
        path = tmp_path / "bad.csv"
        path.write_text(
            "patient_id,state_index,a,decision\nP1,0,1.0,0\nP1,1,2.0,1,9\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 2

    def test_short_row_reports_row(self, tmp_path):
        """A row missing its last fields is a ParseError at that row."""
        path = tmp_path / "bad.csv"
        path.write_text(
            "patient_id,state_index,a,decision\nP1,0,1.0,0\nP1,1\n",
            encoding="utf-8",
        )
        with pytest.raises(ParseError) as exc:
            load_csv(path)
        assert exc.value.row == 2

    def test_invalid_utf8(self, tmp_path):
        """Bytes that are not UTF-8 are a ParseError."""
        path = tmp_path / "latin1.csv"
        path.write_bytes(b"patient_id,state_index,a,decision\nP\xff1,0,1.0,0\n")
        with pytest.raises(ParseError):
            load_csv(path)

    def test_duplicate_header(self, tmp_path):
        """A feature column named twice is a SchemaError, not a rename."""
        path = tmp_path / "dup.csv"
        path.write_text(
            "patient_id,state_index,a,a,decision\nP1,0,1.0,2.0,0\n", encoding="utf-8"
        )
        with pytest.raises(SchemaError, match="duplicate"):
            load_csv(path)

    def test_unknown_column_against_schema(self, csv_file):
        """Loading against a schema rejects columns it does not name."""
        with pytest.raises(SchemaError):
            load_csv(csv_file, schema=FeatureSchema.of(["a", "b"]))

    def test_round_trip_exact(self, tmp_path):
        """save then load reproduces every double bit for bit."""
        ds = many_patients(5)
        path = tmp_path / "rt.csv"
        save_csv(ds, path)
        again = load_csv(path)
        assert again == ds
        assert np.array_equal(again.features, ds.features)

    def test_empty_dataset_header_only(self, tmp_path):
        """An empty dataset is written as its header line."""
        path = tmp_path / "empty.csv"
        save_csv(make_dataset([]), path)
        assert path.read_text(encoding="utf-8") == "patient_id,state_index,a,b,c,decision\n"

    def test_single_example_two_lines(self, tmp_path):
        """One example gives a two-line LF file."""
        path = tmp_path / "one.csv"
        save_csv(make_dataset([("P1", 0, (0.1, 1.0, 2.5), 1)]), path)
        raw = path.read_bytes()
        assert b"\r" not in raw
        assert raw.decode("utf-8").splitlines() == [
            "patient_id,state_index,a,b,c,decision",
            "P1,0,0.1,1.0,2.5,1",
        ]


# =============================================================================
# Split
# =============================================================================


class TestSplit:
    """Tests for split_by_patient."""

    def test_counts_and_disjoint(self):
        """10 patients at 0.6/0.2/0.2 give 6/2/2 disjoint patient sets."""
        ds = many_patients(10)
        parts = split_by_patient(ds, (0.6, 0.2, 0.2), seed=1)
        patient_sets = [set(p.patients()) for p in parts]
        assert [len(s) for s in patient_sets] == [6, 2, 2]
        assert not patient_sets[0] & patient_sets[1]
        assert not patient_sets[0] & patient_sets[2]
        assert not patient_sets[1] & patient_sets[2]
        assert set().union(*patient_sets) == set(ds.patients())
        assert sum(len(p) for p in parts) == len(ds)

    def test_deterministic(self):
        """Same inputs and seed give the same partition."""
        ds = many_patients(20)
        first = split_by_patient(ds, (0.5, 0.25, 0.25), seed=7)
        second = split_by_patient(ds, (0.5, 0.25, 0.25), seed=7)
        assert first == second

    def test_states_stay_together(self):
        """All states of a patient land in the same part, in source order."""
        ds = many_patients(12, states_per_patient=4)
        for part in split_by_patient(ds, (0.6, 0.2, 0.2), seed=3):
            for pid in part.patients():
                idx = [ex.state.state_index for ex in part if ex.state.patient_id == pid]
                assert idx == [0, 1, 2, 3]

    def test_two_patients_degenerate(self):
        """Two patients cannot fill three parts."""
        with pytest.raises(DegenerateSplit):
            split_by_patient(many_patients(2), (0.6, 0.2, 0.2), seed=1)

    def test_fractions_must_sum_to_one(self):
        """Fractions are validated."""
        with pytest.raises(ConfigError):
            split_by_patient(many_patients(10), (0.5, 0.2, 0.2), seed=1)


# =============================================================================
# Standardization
# =============================================================================


class TestStandardizer:
    """Tests for fit/apply/invert standardizer."""

    def test_mean_and_population_sd(self):
        """{1, 3} has mean 2 and population sd 1."""
        ds = make_dataset([("P1", 0, (1.0,), 0), ("P1", 1, (3.0,), 1)], names=("x",))
        stats = fit_standardizer(ds)
        assert stats.means == (2.0,)
        assert stats.stds == (1.0,)
        assert stats.constant == (False,)

    def test_constant_feature(self):
        """A constant feature is flagged, scaled by 1 and mapped to 0."""
        ds = make_dataset(
            [("P1", t, (5.0, float(t)), 0) for t in range(3)], names=("k", "t")
        )
        stats = fit_standardizer(ds)
        assert stats.constant == (True, False)
        assert stats.scales[0] == 1.0
        z = apply_standardizer(stats, ds)
        assert np.all(z.features[:, 0] == 0.0)

    def test_apply_value(self):
        """mean 2, scale 1 maps 3 to 1."""
        ds = make_dataset([("P1", 0, (1.0,), 0), ("P1", 1, (3.0,), 1)], names=("x",))
        z = apply_standardizer(fit_standardizer(ds), ds)
        assert z.features[:, 0].tolist() == [-1.0, 1.0]
        assert z.decisions.tolist() == [0, 1]
        assert z.patient_ids == ds.patient_ids

    def test_zero_mean_unit_sd(self):
        """Fit and apply on the same data gives mean 0 and sd 1."""
        ds = many_patients(30)
        z = apply_standardizer(fit_standardizer(ds), ds)
        assert np.allclose(z.features.mean(axis=0), 0.0, atol=1e-10)
        assert np.allclose(z.features.std(axis=0), 1.0, atol=1e-10)

    def test_invert_recovers(self):
        """Applying then inverting recovers the data."""
        ds = many_patients(8)
        stats = fit_standardizer(ds)
        back = invert_standardizer(stats, apply_standardizer(stats, ds))
        assert np.allclose(back.features, ds.features, atol=1e-12)

    def test_empty_dataset(self):
        """Fitting needs at least one example."""
        with pytest.raises(EmptyDataset):
            fit_standardizer(make_dataset([]))

    def test_width_mismatch(self):
        """Stats of another width are rejected."""
        stats = fit_standardizer(many_patients(3))
        other = make_dataset([("P1", 0, (1.0,), 0)], names=("x",))
        with pytest.raises(SchemaError):
            apply_standardizer(stats, other)
