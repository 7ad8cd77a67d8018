import numpy as np
import pytest

from isdkit.core import (
    Instance,
    SurvivalCurve,
    SurvivalDataset,
    load_csv,
    save_csv,
    split_by_censoring,
)


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_three_row_file_partitions(self, tmp_path):
        path = write(tmp_path, "time,event,age\n2,1,50\n3,0,61\n5,1,44\n")
        d = load_csv(path, "time", "event")
        assert len(d) == 3
        assert d.feature_names == ("age",)
        unc, cen = split_by_censoring(d)
        assert (len(unc), len(cen)) == (2, 1)
        assert list(d.times) == [2.0, 3.0, 5.0]

    def test_negative_time_names_the_row(self, tmp_path):
        path = write(tmp_path, "time,event,age\n2,1,50\n-3,0,61\n")
        with pytest.raises(ValueError, match="row 3"):
            load_csv(path, "time", "event")

    def test_bad_event_flag_names_row_and_column(self, tmp_path):
        path = write(tmp_path, "time,event,age\n2,2,50\n")
        with pytest.raises(ValueError, match="row 2.*event"):
            load_csv(path, "time", "event")

    def test_unparseable_time_named(self, tmp_path):
        path = write(tmp_path, "time,event,age\nsoon,1,50\n")
        with pytest.raises(ValueError, match="row 2.*time"):
            load_csv(path, "time", "event")

    def test_ragged_row_rejected(self, tmp_path):
        path = write(tmp_path, "time,event,age\n2,1\n")
        with pytest.raises(ValueError, match="row 2"):
            load_csv(path, "time", "event")

    def test_missing_column_rejected(self, tmp_path):
        path = write(tmp_path, "time,event\n2,1\n")
        with pytest.raises(ValueError, match="age"):
            load_csv(path, "time", "age")

    def test_heavily_missing_feature_still_loads(self, tmp_path):
        # 30% missing cells are kept as missing markers; preprocessing
        # decides their fate later
        rows = "\n".join(f"{i + 1},1," + ("" if i < 3 else "7") for i in range(10))
        path = write(tmp_path, "time,event,lab\n" + rows + "\n")
        d = load_csv(path, "time", "event")
        missing = sum(1 for inst in d.instances if inst.features[0] is None)
        assert missing == 3

    def test_categorical_cells_stay_strings(self, tmp_path):
        path = write(tmp_path, "time,event,site\n1,1,lung\n2,0,colon\n")
        d = load_csv(path, "time", "event")
        assert d.instances[0].features[0] == "lung"

    def test_round_trip_identity(self, tmp_path):
        path = write(
            tmp_path,
            "time,event,age,site\n2.5,1,50.25,lung\n3,0,,colon\n0.125,1,44,lung\n",
        )
        d1 = load_csv(path, "time", "event")
        out = tmp_path / "again.csv"
        save_csv(d1, out, "time", "event")
        d2 = load_csv(out, "time", "event")
        assert list(d1.times) == list(d2.times)
        assert list(d1.events) == list(d2.events)
        for a, b in zip(d1.instances, d2.instances):
            assert a.features == b.features


class TestDataset:
    def test_split_partitions_everything(self):
        d = SurvivalDataset.from_arrays(np.zeros((6, 2)), [1, 2, 3, 4, 5, 6],
                                        [1, 0, 1, 1, 0, 0])
        unc, cen = split_by_censoring(d)
        assert len(unc) + len(cen) == len(d)
        assert unc.events.all() and not cen.events.any()

    def test_split_all_one_sided(self):
        d = SurvivalDataset.from_arrays(np.zeros((3, 1)), [1, 2, 3], [1, 1, 1])
        unc, cen = split_by_censoring(d)
        assert (len(unc), len(cen)) == (3, 0)
        unc, cen = split_by_censoring(
            SurvivalDataset.from_arrays(np.zeros((3, 1)), [1, 2, 3], [0, 0, 0])
        )
        assert (len(unc), len(cen)) == (0, 3)

    def test_arity_mismatch_rejected(self):
        with pytest.raises(ValueError, match="features"):
            SurvivalDataset(
                (Instance((1e0, 2.0), 1.0, True), Instance((1.0,), 2.0, False)),
                ("a", "b"),
            )

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            Instance((1.0,), -0.5, True)

    def test_feature_matrix_rejects_missing(self):
        d = SurvivalDataset((Instance((None,), 1.0, True),), ("a",))
        with pytest.raises(ValueError, match="impute"):
            d.feature_matrix()


class TestSurvivalCurve:
    def test_validation(self):
        with pytest.raises(ValueError):
            SurvivalCurve([2.0, 1.0], [0.9, 0.5])       # decreasing times
        with pytest.raises(ValueError):
            SurvivalCurve([1.0, 2.0], [0.5, 0.9])       # increasing probs
        with pytest.raises(ValueError):
            SurvivalCurve([1.0], [1.5])                 # out of range
        with pytest.raises(ValueError):
            SurvivalCurve([], [])

    def test_immutability(self):
        c = SurvivalCurve([1.0, 2.0], [0.8, 0.4])
        with pytest.raises(ValueError):
            c.times[0] = 5.0
