from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from melrag import (
    DEFAULT_INSTRUCTION,
    Label,
    SerializationMode,
    build_prompt,
    parse_response,
    serialize_metadata,
)
from melrag.errors import NeighborCountMismatch
from melrag.prompting import IMAGE_PLACEHOLDER

from conftest import make_case

FIXTURES = Path(__file__).parent / "fixtures" / "prompts"


def _fixed_records():
    query = make_case("q01", age=60, sex="male", site="back", label="benign",
                      image_ref="images/q01.png")
    n1 = make_case("n01", age=45, sex="female", site="posterior torso",
                   label="benign", image_ref="images/n01.png")
    n2 = make_case("n02", age=71, sex=None, site="head & neck",
                   label="malignant", image_ref="images/n02.png")
    return query, [n1, n2]


@pytest.mark.parametrize("mode", list(SerializationMode))
@pytest.mark.parametrize("k", [0, 2])
def test_prompt_matches_golden_file(mode, k):
    query, neighbors = _fixed_records()
    prompt = build_prompt(query, neighbors[:k], mode, k)
    golden = (FIXTURES / f"{mode.value}_k{k}.txt").read_text(encoding="utf-8")
    assert prompt.text + "\n" == golden


def test_placeholder_count_and_image_refs():
    query, neighbors = _fixed_records()
    for k in (0, 1, 2):
        prompt = build_prompt(query, neighbors[:k], SerializationMode.SENTENCE, k)
        assert prompt.k == k
        assert prompt.placeholder_count == k + 1
        assert prompt.text.count(IMAGE_PLACEHOLDER) == k + 1
        refs = tuple(n.image_ref for n in neighbors[:k]) + (query.image_ref,)
        assert prompt.image_refs == refs


def test_instruction_heads_the_prompt():
    query, neighbors = _fixed_records()
    prompt = build_prompt(query, neighbors, SerializationMode.SENTENCE, 2)
    blocks = prompt.text.split("\n\n")
    assert blocks[0] == DEFAULT_INSTRUCTION
    assert len(blocks) == 4  # instruction, two examples, query
    custom = build_prompt(query, neighbors, SerializationMode.SENTENCE, 2,
                          instruction="Pick one word.")
    assert custom.text.split("\n\n")[0] == "Pick one word."


def test_example_blocks_carry_labels_in_order():
    query, neighbors = _fixed_records()
    prompt = build_prompt(query, neighbors, SerializationMode.ATTRIBUTE_VALUE, 2)
    blocks = prompt.text.split("\n\n")
    assert blocks[1].startswith("Example 1:\n")
    assert blocks[1].endswith("Diagnosis: benign")
    assert blocks[2].startswith("Example 2:\n")
    assert blocks[2].endswith("Diagnosis: malignant")
    assert serialize_metadata(neighbors[0].metadata, SerializationMode.ATTRIBUTE_VALUE) in blocks[1]


def test_query_block_has_no_label():
    """The final block must never leak the query's diagnosis."""
    query, neighbors = _fixed_records()
    for mode in SerializationMode:
        prompt = build_prompt(query, neighbors, mode, 2)
        tail = prompt.text.split("\n\n")[-1]
        assert tail.startswith("Query:\n")
        assert tail.endswith("Diagnosis:")
        after_marker = tail.rsplit("Diagnosis:", 1)[1]
        assert "malignant" not in after_marker and "benign" not in after_marker


def test_neighbor_reorder_permutes_blocks_and_refs():
    query, neighbors = _fixed_records()
    fwd = build_prompt(query, neighbors, SerializationMode.SENTENCE, 2)
    rev = build_prompt(query, list(reversed(neighbors)), SerializationMode.SENTENCE, 2)
    fb, rb = fwd.text.split("\n\n"), rev.text.split("\n\n")
    assert fb[1].removeprefix("Example 1:") == rb[2].removeprefix("Example 2:")
    assert fb[2].removeprefix("Example 2:") == rb[1].removeprefix("Example 1:")
    assert rev.image_refs == (fwd.image_refs[1], fwd.image_refs[0], fwd.image_refs[2])


def test_neighbor_count_mismatch():
    query, neighbors = _fixed_records()
    with pytest.raises(NeighborCountMismatch):
        build_prompt(query, neighbors, SerializationMode.SENTENCE, 3)
    with pytest.raises(NeighborCountMismatch):
        build_prompt(query, neighbors, SerializationMode.SENTENCE, 1)


def test_zero_shot_prompt_has_no_examples():
    query, _ = _fixed_records()
    prompt = build_prompt(query, [], SerializationMode.HTML, 0)
    assert "Example" not in prompt.text
    assert prompt.image_refs == (query.image_ref,)


# --- response parsing ---------------------------------------------------------

@pytest.mark.parametrize(
    "text,expected",
    [
        ("Malignant.", Label.MALIGNANT),
        ("The lesion appears benign given the similar cases.", Label.BENIGN),
        ("Unable to determine from the image.", None),
        ("", None),
        ("BENIGN", Label.BENIGN),
        ("  malignant  ", Label.MALIGNANT),
        ("This is not benign.", Label.MALIGNANT),
        ("There is no malignant tissue visible.", Label.BENIGN),
        ("It is not a benign lesion.", Label.MALIGNANT),  # negator within window
        ("not really a benign lesion", Label.BENIGN),  # negator 3 back, out of window
        ("benign, not malignant", Label.BENIGN),
        ("malignant or benign", Label.MALIGNANT),
        ("benign-appearing nevus", Label.BENIGN),
        ("The term 'malignant' applies here.", None),  # apostrophes glue to the token
        ("malignancy suspected", None),  # word-boundary: no bare class token
        ("Answer: benign\nConfidence: high", Label.BENIGN),
    ],
)
def test_parse_response_cases(text, expected):
    assert parse_response(text) is expected


def test_parse_round_trips_label_values():
    for label in Label:
        assert parse_response(label.value) is label


def test_mock_answer_sentence_parses():
    assert parse_response(
        "Based on the example cases, the lesion appears malignant."
    ) is Label.MALIGNANT


@given(st.text(alphabet=st.characters(codec="ascii"), max_size=200))
def test_parse_is_total(text):
    assert parse_response(text) in (Label.MALIGNANT, Label.BENIGN, None)
