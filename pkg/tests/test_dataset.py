import json
import shutil
from pathlib import Path

import pytest

from medspeech.dataset import (
    ALPACA_TEMPLATE,
    SPLITS,
    DatasetRecord,
    SplitSummary,
    alpaca_by_split,
    convert_dataset,
    dumps_jsonl,
    label_inventory,
    parse_manifest,
    read_jsonl,
    render_alpaca,
    to_alpaca,
    to_asr_manifest,
    write_manifest,
)
from medspeech.errors import DuplicateId, IoFailure, MalformedRow, MissingColumn

FIXTURE = Path(__file__).parent / "fixtures" / "medical"
MANIFEST = FIXTURE / "overview-of-recordings.csv"

# Typed out by hand from the instruction-format listing; note the trailing
# spaces on the first two lines and the "conditon" spelling.
EXPECTED_KNEE_TEXT = (
    "Given a sentence generated via a Speech to Text model, \n"
    "clean the sentence grammatically and make it sound natural. Then classify \n"
    "the speaker's medical conditon in the given sentence.\n"
    "\n"
    "### Instruction:\n"
    "Given a sentence generated via a Speech to Text model, \n"
    "clean the sentence grammatically and make it sound natural. Then classify \n"
    "the speaker's medical conditon in the given sentence.\n"
    "\n"
    "### Input:\n"
    "My knee hurts when I climb the stairs\n"
    "\n"
    "### Response:\n"
    "Knee pain\n"
    "<|endoftext|>"
)


def write_csv(tmp_path, text, splits=None):
    csv_path = tmp_path / "m.csv"
    csv_path.write_text(text, encoding="utf-8")
    for split, names in (splits or {}).items():
        d = tmp_path / "recordings" / split
        d.mkdir(parents=True, exist_ok=True)
        for n in names:
            (d / n).write_bytes(b"")
    return csv_path


def test_fixture_parse():
    records, summary = parse_manifest(MANIFEST)
    assert summary == SplitSummary(2, 2, 1)
    assert summary.total == 5
    assert [r.split for r in records] == ["train", "train", "test", "test", "validate"]
    r = records[1]
    assert r.id == "1249120_1853182_11719914"
    assert r.phrase == 'I have a headache, and my eyes feel "heavy"'
    assert r.prompt == "Head ache"
    assert r.audio_path == "train/1249120_1853182_11719914.wav"
    assert r.resolve_audio(FIXTURE / "recordings").is_file()


def test_extra_columns_dropped(tmp_path):
    p = write_csv(
        tmp_path,
        "noise,file_name,phrase,prompt\nhigh,a.wav,I have a headache,Head ache\nlow,b.wav,My knee hurts,Knee pain\n",
        {"train": ["a.wav"], "test": ["b.wav"]},
    )
    records, _ = parse_manifest(p)
    assert len(records) == 2
    assert set(vars(records[0])) == {"id", "phrase", "prompt", "audio_path", "split"}
    assert "noise" not in json.dumps([vars(r) for r in records])


def test_empty_phrase(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt\na.wav,,Head ache\n", {"train": ["a.wav"]})
    with pytest.raises(MalformedRow) as info:
        parse_manifest(p)
    assert info.value.line == 2


def test_missing_column(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase\na.wav,x\n")
    with pytest.raises(MissingColumn) as info:
        parse_manifest(p)
    assert info.value.column == "prompt"


def test_wrong_field_count(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt\na.wav,x\n", {"train": ["a.wav"]})
    with pytest.raises(MalformedRow):
        parse_manifest(p)


def test_file_not_in_any_split(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt\nz.wav,x,y\n", {"train": ["a.wav"]})
    with pytest.raises(MalformedRow):
        parse_manifest(p)


def test_file_in_two_splits(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt\na.wav,x,y\n", {"train": ["a.wav"], "test": ["a.wav"]})
    with pytest.raises(MalformedRow):
        parse_manifest(p)


def test_duplicate_id(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt,split\na.wav,x,y,train\na.wav,x,y,test\n")
    with pytest.raises(DuplicateId) as info:
        parse_manifest(p, split_column="split")
    assert info.value.line == 3


def test_unknown_split(tmp_path):
    p = write_csv(tmp_path, "file_name,phrase,prompt,split\na.wav,x,y,dev\n")
    with pytest.raises(MalformedRow):
        parse_manifest(p, split_column="split")


def test_missing_manifest(tmp_path):
    with pytest.raises(IoFailure):
        parse_manifest(tmp_path / "nope.csv")


def test_serialize_roundtrip(tmp_path):
    records, _ = parse_manifest(MANIFEST)
    write_manifest(records, tmp_path / "out.csv")
    again, _ = parse_manifest(tmp_path / "out.csv", split_column="split")
    assert again == records


def test_asr_manifest():
    r = DatasetRecord("x", "I have a headache", "Head ache", "test/x.wav", "test")
    out = to_asr_manifest([r])
    assert out["test"] == [{"text": "I have a headache", "audio": "test/x.wav"}]
    assert out["train"] == [] and out["validate"] == []
    assert dumps_jsonl(out["test"]) == '{"text":"I have a headache","audio":"test/x.wav"}\n'


def test_empty_split_gives_empty_file(tmp_path):
    r = DatasetRecord("x", "a", "b", "test/x.wav", "test")
    convert_dataset([r], tmp_path)
    assert (tmp_path / "asr-train.jsonl").read_bytes() == b""
    assert (tmp_path / "alpaca-validate.jsonl").read_bytes() == b""


def test_alpaca_example():
    r = DatasetRecord("k", "My knee hurts", "Knee pain", "train/k.wav", "train")
    (a,) = to_alpaca([r])
    assert "### Input:\nMy knee hurts" in a.text
    assert a.text.endswith("### Response:\nKnee pain\n<|endoftext|>")
    assert list(a.to_dict()) == ["instruction", "input", "output", "text"]


def test_alpaca_braces_are_literal():
    text = render_alpaca("a {} b {0}", "x")
    assert "### Input:\na {} b {0}\n" in text


def test_template_slots():
    assert ALPACA_TEMPLATE.count("{}") == 3


def test_golden_record_hand_typed():
    records, _ = parse_manifest(MANIFEST)
    assert to_alpaca(records)[0].text == EXPECTED_KNEE_TEXT
    golden = read_jsonl(FIXTURE / "golden" / "alpaca-train.jsonl")
    assert golden[0]["text"] == EXPECTED_KNEE_TEXT


def test_golden_files_byte_identical(tmp_path):
    records, _ = parse_manifest(MANIFEST)
    convert_dataset(records, tmp_path)
    for split in SPLITS:
        name = f"alpaca-{split}.jsonl"
        assert (tmp_path / name).read_bytes() == (FIXTURE / "golden" / name).read_bytes()


def test_split_grouping():
    records, _ = parse_manifest(MANIFEST)
    grouped = alpaca_by_split(records)
    assert [len(grouped[s]) for s in SPLITS] == [2, 2, 1]


def test_label_inventory():
    mk = lambda p: DatasetRecord(p + "id", "x", p, "train/a.wav", "train")
    assert label_inventory([mk("A"), DatasetRecord("2", "y", "A", "train/b.wav", "train")]) == {"A": 2}
    assert label_inventory([mk("A"), mk("B"), mk("C")]) == {"A": 1, "B": 1, "C": 1}


def test_audio_root_override(tmp_path):
    shutil.copytree(FIXTURE / "recordings", tmp_path / "audio")
    shutil.copy(MANIFEST, tmp_path / "m.csv")
    records, summary = parse_manifest(tmp_path / "m.csv", audio_root=tmp_path / "audio")
    assert summary.total == 5
