import pytest

from docarg.data import (
    EventInstance,
    EventPredictions,
    Prediction,
    RoleLabelSet,
    load_dataset,
    load_predictions,
    role_inventories,
    save_dataset,
    save_predictions,
)
from docarg.exceptions import DataError


def make(**over):
    base = dict(
        doc_id="d",
        words=("a", "b", "c"),
        event_type="e",
        trigger=(1, 1),
        roles=("r1",),
        gold_args=(("r1", 0, 0),),
    )
    base.update(over)
    return EventInstance(**base)


class TestValidation:
    def test_valid_instance_passes(self):
        make().validate()

    def test_empty_document(self):
        with pytest.raises(DataError, match="empty document"):
            make(words=(), trigger=(0, 0), gold_args=()).validate()

    def test_trigger_outside_document(self):
        with pytest.raises(DataError, match="trigger"):
            make(trigger=(1, 3)).validate()

    def test_argument_outside_document(self):
        with pytest.raises(DataError, match="argument span"):
            make(gold_args=(("r1", 2, 5),)).validate()

    def test_role_not_in_inventory(self):
        with pytest.raises(DataError, match="not in role inventory"):
            make(gold_args=(("bogus", 0, 0),)).validate()


class TestDatasetIO:
    def test_empty_file_gives_empty_list(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert load_dataset(path) == []

    def test_malformed_line_names_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(make().to_record().__repr__() + "\n")  # python repr, not JSON
        with pytest.raises(DataError, match="bad.jsonl:1"):
            load_dataset(path)

    def test_invalid_record_names_line_number(self, tmp_path):
        import json

        path = tmp_path / "bad2.jsonl"
        good = make().to_record()
        bad = dict(good, trigger=[5, 9])
        path.write_text(json.dumps(good) + "\n" + json.dumps(bad) + "\n")
        with pytest.raises(DataError, match="bad2.jsonl:2"):
            load_dataset(path)

    def test_round_trip_preserves_fields(self, tmp_path):
        instances = [make(doc_id=f"d{i}") for i in range(3)]
        path = tmp_path / "data.jsonl"
        save_dataset(instances, path)
        loaded = load_dataset(path)
        assert loaded == instances

    def test_prediction_round_trip(self, tmp_path):
        events = [
            EventPredictions(
                doc_id="d0",
                event_type="e",
                trigger=(1, 1),
                predictions=[Prediction("r1", 0, 0, 0.75)],
            )
        ]
        path = tmp_path / "preds.jsonl"
        save_predictions(events, path)
        loaded = load_predictions(path)
        assert loaded[0].to_record() == events[0].to_record()


class TestRoleLabelSet:
    def test_sorted_global_labels_with_none_last(self):
        labels = RoleLabelSet.from_instances(
            [make(roles=("zeta", "alpha")), make(roles=("mid",), gold_args=())]
        )
        assert labels.roles == ("alpha", "mid", "zeta")
        assert labels.label_id("mid") == 1
        assert labels.none_id == 3
        assert labels.n_labels == 4

    def test_unknown_role_raises(self):
        labels = RoleLabelSet(roles=("a",))
        with pytest.raises(DataError):
            labels.label_id("b")


def test_role_inventories_conflict():
    a = make(event_type="e", roles=("r1", "r2"), gold_args=())
    b = make(event_type="e", roles=("r2", "r1"), gold_args=())
    with pytest.raises(DataError, match="conflicting"):
        role_inventories([a, b])
