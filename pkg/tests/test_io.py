"""File formats, line-numbered errors, and the seeded split protocol."""

from __future__ import annotations

import json

import numpy as np
import pytest

from conformal_gate import (
    ClassUniverse,
    DimensionMismatchError,
    ParseError,
    SplitSpec,
    UnknownLabelError,
    evaluate,
    load_probabilities,
    load_universe,
    predict_batch,
    read_report,
    split,
    write_dataset,
    write_report,
    write_universe,
)
from conformal_gate.io import largest_remainder_sizes, report_csv_text
from conformal_gate.synth import SyntheticSpec, generate

from conftest import make_dataset, one_hot


class TestLoadCsv:
    def test_three_one_hot_rows(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text(
            "sample_id,true_label,p_0,p_1,p_2\n"
            "a,0,1.0,0.0,0.0\n"
            "b,1,0.0,1.0,0.0\n"
            "c,2,0.0,0.0,1.0\n"
        )
        d = load_probabilities(path)
        assert len(d) == 3
        assert d[1].true_label == 1
        assert d[2].probs.values == (0.0, 0.0, 1.0)

    def test_short_row_is_dimension_mismatch_with_line(self, tmp_path):
        path = tmp_path / "d.csv"
        rows = ["sample_id,true_label," + ",".join(f"p_{i}" for i in range(9))]
        rows.append("a,0," + ",".join(["0.1"] * 8 + ["0.2"]))
        rows.append("b,0," + ",".join(["0.125"] * 8))  # 8 probabilities under K=9
        path.write_text("\n".join(rows) + "\n")
        with pytest.raises(DimensionMismatchError, match="line 3"):
            load_probabilities(path)

    def test_label_names_resolved_via_universe(self, tmp_path):
        universe = ClassUniverse.from_names(["Steel Sheets", "Shredder"])
        path = tmp_path / "d.csv"
        path.write_text(
            "sample_id,true_label,p_0,p_1\n"
            "a,Shredder,0.2,0.8\n"
        )
        d = load_probabilities(path, universe=universe)
        assert d[0].true_label == 1

    def test_unknown_label_name(self, tmp_path):
        universe = ClassUniverse.from_names(["a", "b"])
        path = tmp_path / "d.csv"
        path.write_text("sample_id,true_label,p_0,p_1\nx,Karlsruhe,0.5,0.5\n")
        with pytest.raises(UnknownLabelError, match="line 2"):
            load_probabilities(path, universe=universe)

    def test_bad_probability_value_cites_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("sample_id,true_label,p_0,p_1\nx,0,0.5,0.5\ny,1,oops,0.5\n")
        with pytest.raises(ParseError, match="line 3"):
            load_probabilities(path)

    def test_out_of_tolerance_mass_cites_line(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("sample_id,true_label,p_0,p_1\nx,0,0.4,0.4\n")
        with pytest.raises(ParseError, match="line 2"):
            load_probabilities(path)

    def test_duplicate_sample_id_rejected(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text(
            "sample_id,true_label,p_0,p_1\na,0,1.0,0.0\na,1,0.0,1.0\n"
        )
        with pytest.raises(ParseError, match="duplicate"):
            load_probabilities(path)


class TestLoadJsonl:
    def test_label_name_resolution(self, tmp_path):
        universe = ClassUniverse.from_names(["Steel Sheets", "Shredder"])
        path = tmp_path / "d.jsonl"
        path.write_text(
            json.dumps({"sample_id": "a", "true_label": "Shredder", "probs": [0.25, 0.75]})
            + "\n"
        )
        d = load_probabilities(path, universe=universe)
        assert d[0].true_label == 1

    def test_bad_json_cites_line(self, tmp_path):
        path = tmp_path / "d.jsonl"
        path.write_text('{"sample_id": "a", "true_label": 0, "probs": [1.0, 0.0]}\n{oops\n')
        with pytest.raises(ParseError, match="line 2"):
            load_probabilities(path)


class TestRoundTrips:
    @pytest.mark.parametrize("fmt", ["csv", "jsonl"])
    def test_dataset_round_trip_is_exact(self, tmp_path, fmt):
        d = generate(SyntheticSpec(k=5, seed=91), 100)
        path = tmp_path / f"d.{fmt}"
        write_dataset(d, path, fmt=fmt)
        loaded = load_probabilities(path, universe=d.universe, fmt=fmt)
        assert loaded == d

    def test_universe_round_trip(self, tmp_path):
        universe = ClassUniverse.from_names(["Steel Sheets", "Swarf Scrap", "Shredder"])
        path = tmp_path / "classes.json"
        write_universe(universe, path)
        assert load_universe(path) == universe

    def test_report_json_round_trip(self, tmp_path):
        data = generate(SyntheticSpec(k=4, seed=17), 200)
        report = evaluate(data, predict_batch(data, 0.5))
        path = tmp_path / "report.json"
        write_report(report, path, fmt="json")
        assert read_report(path) == report


class TestLargestRemainder:
    def test_ten_examples_three_parts(self):
        assert largest_remainder_sizes(10, [0.75, 0.15, 0.10]) == [8, 1, 1]

    def test_half_and_half_on_822(self):
        assert largest_remainder_sizes(822, [0.5, 0.5]) == [411, 411]

    def test_sizes_always_sum_to_total(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            parts = int(rng.integers(1, 6))
            raw = rng.random(parts)
            fractions = (raw / raw.sum()).tolist()
            total = int(rng.integers(0, 500))
            sizes = largest_remainder_sizes(total, fractions)
            assert sum(sizes) == total
            assert all(s >= 0 for s in sizes)


class TestSplit:
    def _dataset(self, n=822, k=4, seed=6):
        return generate(SyntheticSpec(k=k, seed=seed), n)

    def test_half_and_half_on_822_examples(self):
        d = self._dataset()
        parts = split(d, SplitSpec((("calib", 0.5), ("test", 0.5)), seed=1))
        assert len(parts["calib"]) == 411
        assert len(parts["test"]) == 411

    def test_parts_are_disjoint_and_cover_the_input(self):
        d = self._dataset(n=101)
        parts = split(
            d, SplitSpec((("train", 0.75), ("val", 0.15), ("test", 0.10)), seed=9)
        )
        ids = [ex.sample_id for part in parts.values() for ex in part]
        assert sorted(ids) == sorted(d.sample_ids())
        assert len(set(ids)) == len(ids)

    def test_same_seed_twice_is_identical(self):
        d = self._dataset(n=200)
        spec = SplitSpec((("a", 0.3), ("b", 0.7)), seed=77)
        first = split(d, spec)
        second = split(d, spec)
        assert first == second

    def test_different_seeds_differ(self):
        d = self._dataset(n=200)
        a = split(d, SplitSpec((("a", 0.5), ("b", 0.5)), seed=1))
        b = split(d, SplitSpec((("a", 0.5), ("b", 0.5)), seed=2))
        assert a != b

    def test_stratified_split_preserves_class_proportions(self):
        d = self._dataset(n=600, k=3, seed=44)
        spec = SplitSpec((("calib", 0.5), ("test", 0.5)), seed=3, stratified=True)
        parts = split(d, spec)
        for label in range(3):
            total = sum(1 for ex in d if ex.true_label == label)
            for part in parts.values():
                count = sum(1 for ex in part if ex.true_label == label)
                assert abs(count - total / 2) <= 1

    def test_empty_part_warns_but_does_not_fail(self, caplog):
        d = self._dataset(n=3, k=3)
        with caplog.at_level("WARNING", logger="conformal_gate.io"):
            parts = split(d, SplitSpec((("big", 0.9), ("tiny", 0.1)), seed=0))
        assert len(parts["tiny"]) == 0
        assert any("empty" in r.message for r in caplog.records)

    def test_fraction_validation(self):
        with pytest.raises(Exception):
            SplitSpec((("a", 0.5), ("b", 0.6)), seed=0)
        with pytest.raises(Exception):
            SplitSpec((), seed=0)


class TestReportCsv:
    def test_all_correct_singletons_render_as_ones(self):
        d = make_dataset(2, [("a", 0, one_hot(2, 0)), ("b", 1, one_hot(2, 1))])
        report = evaluate(d, predict_batch(d, 0.0))
        text = report_csv_text(report)
        lines = text.splitlines()
        assert lines[0] == "class,recall,avg_set_size,strict_coverage"
        assert lines[1] == "class_0,1.0000,1.0000,1.0000"
        assert lines[-1] == "overall,1.0000,1.0000,1.0000"

    def test_absent_class_renders_na(self):
        d = make_dataset(3, [("a", 0, one_hot(3, 0))])
        report = evaluate(d, predict_batch(d, 0.0))
        lines = report_csv_text(report).splitlines()
        assert lines[2] == "class_1,n/a,n/a,n/a"

    def test_rates_use_four_decimals(self):
        data = generate(SyntheticSpec(k=3, seed=20), 90)
        report = evaluate(data, predict_batch(data, 0.7))
        for line in report_csv_text(report).splitlines()[1:]:
            for cell in line.split(",")[1:]:
                if cell != "n/a":
                    whole, frac = cell.split(".")
                    assert len(frac) == 4
