import pytest
import torch

from docarg.data import EventInstance
from docarg.tokenizer import VocabTokenizer


@pytest.fixture(autouse=True)
def _single_thread():
    torch.set_num_threads(1)


@pytest.fixture
def tiny_instance() -> EventInstance:
    return EventInstance(
        doc_id="doc-1",
        words=("the", "commander", "ordered", "the", "strike", "at", "dawn"),
        event_type="attack",
        trigger=(2, 2),
        roles=("attacker", "target"),
        gold_args=(("attacker", 1, 1), ("target", 4, 4)),
    )


@pytest.fixture
def tiny_tokenizer(tiny_instance) -> VocabTokenizer:
    return VocabTokenizer.for_dataset([tiny_instance])
