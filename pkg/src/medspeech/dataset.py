"""Medical speech manifest ingestion and conversion to ASR / Alpaca training files.

Input is the Kaggle "Medical Speech, Transcription, and Intent" layout: a CSV
(``overview-of-recordings.csv``) plus ``recordings/{train,test,validate}/*.wav``.
Only ``file_name``, ``phrase`` and ``prompt`` are kept; the crowd-sourced
quality annotations (clipping, noise, quietness) are dropped because the audio
preprocessor measures those itself.
"""
from __future__ import annotations

import csv
import json
import os
from collections import Counter
from dataclasses import dataclass
from pathlib import Path, PurePosixPath

from .errors import DuplicateId, IoFailure, MalformedRow, MissingColumn

SPLITS = ("train", "test", "validate")
REQUIRED_COLUMNS = ("file_name", "phrase", "prompt")

TASK_INSTRUCTION = (
    "Given a sentence generated via a Speech to Text model, \n"
    "clean the sentence grammatically and make it sound natural. Then classify \n"
    "the speaker's medical conditon in the given sentence."
)
ALPACA_TEMPLATE = (
    TASK_INSTRUCTION
    + "\n\n### Instruction:\n{}\n\n### Input:\n{}\n\n### Response:\n{}\n<|endoftext|>"
)
RESPONSE_MARKER = "### Response:"
END_OF_TEXT = "<|endoftext|>"


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    phrase: str
    prompt: str
    audio_path: str
    split: str

    def resolve_audio(self, audio_root) -> Path:
        return Path(audio_root) / self.audio_path


@dataclass(frozen=True)
class AlpacaRecord:
    instruction: str
    input: str
    output: str
    text: str

    def to_dict(self):
        return {"instruction": self.instruction, "input": self.input, "output": self.output, "text": self.text}


@dataclass(frozen=True)
class SplitSummary:
    train_count: int
    test_count: int
    validate_count: int

    @property
    def total(self) -> int:
        return self.train_count + self.test_count + self.validate_count

    def to_dict(self):
        return {
            "train": self.train_count,
            "test": self.test_count,
            "validate": self.validate_count,
            "total": self.total,
        }


def fill_template(template: str, *fields: str) -> str:
    """Substitute ``{}`` slots left to right without interpreting braces in ``fields``."""
    parts = template.split("{}")
    if len(parts) != len(fields) + 1:
        raise ValueError(f"template has {len(parts) - 1} slots, got {len(fields)} fields")
    out = [parts[0]]
    for value, tail in zip(fields, parts[1:]):
        out.append(value)
        out.append(tail)
    return "".join(out)


def _split_listing(audio_root):
    listing = {}
    for split in SPLITS:
        d = Path(audio_root) / split
        listing[split] = set(os.listdir(d)) if d.is_dir() else set()
    return listing


def parse_manifest(csv_path, audio_root=None, split_column=None):
    """Read the manifest into records.

    Split membership comes from which ``audio_root/<split>/`` directory holds
    the file, unless ``split_column`` names a CSV column to use instead.
    ``audio_root`` defaults to ``recordings/`` next to the CSV.

    Returns ``(records, SplitSummary)``.
    """
    csv_path = Path(csv_path)
    audio_root = csv_path.parent / "recordings" if audio_root is None else Path(audio_root)
    try:
        fh = csv_path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot read {csv_path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS + ((split_column,) if split_column else ()):
            if col not in header:
                raise MissingColumn(col)
        listing = None if split_column else _split_listing(audio_root)
        records = []
        seen = set()
        for row in reader:
            line = reader.line_num
            if None in row or any(v is None for v in row.values()):
                raise MalformedRow(line, f"expected {len(header)} fields")
            file_name = row["file_name"].strip()
            phrase = row["phrase"].strip()
            prompt = row["prompt"].strip()
            if not file_name:
                raise MalformedRow(line, "empty file_name")
            if not phrase:
                raise MalformedRow(line, "empty phrase")
            if not prompt:
                raise MalformedRow(line, "empty prompt")
            if split_column:
                split = row[split_column].strip()
                if split not in SPLITS:
                    raise MalformedRow(line, f"unknown split {split!r}")
            else:
                found = [s for s in SPLITS if file_name in listing[s]]
                if len(found) != 1:
                    where = "no" if not found else "several"
                    raise MalformedRow(line, f"{file_name} found in {where} split directories under {audio_root}")
                split = found[0]
            record_id = PurePosixPath(file_name).stem
            if record_id in seen:
                raise DuplicateId(record_id, line)
            seen.add(record_id)
            records.append(DatasetRecord(record_id, phrase, prompt, f"{split}/{file_name}", split))
    return records, summarize(records)


def summarize(records) -> SplitSummary:
    counts = Counter(r.split for r in records)
    return SplitSummary(counts["train"], counts["test"], counts["validate"])


def write_manifest(records, csv_path) -> None:
    """Write records as a CSV that ``parse_manifest(..., split_column="split")`` reads back."""
    with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file_name", "phrase", "prompt", "split"])
        for r in records:
            writer.writerow([PurePosixPath(r.audio_path).name, r.phrase, r.prompt, r.split])


def to_asr_manifest(records, audio_root=None):
    """Per-split ``{"text": phrase, "audio": path}`` rows (every split present, maybe empty)."""
    out = {split: [] for split in SPLITS}
    for r in records:
        audio = r.audio_path if audio_root is None else str(r.resolve_audio(audio_root))
        out[r.split].append({"text": r.phrase, "audio": audio})
    return out


def render_alpaca(phrase: str, label: str = "", instruction: str = TASK_INSTRUCTION) -> str:
    return fill_template(ALPACA_TEMPLATE, instruction, phrase, label)


def to_alpaca(records):
    return [
        AlpacaRecord(TASK_INSTRUCTION, r.phrase, r.prompt, render_alpaca(r.phrase, r.prompt))
        for r in records
    ]


def alpaca_by_split(records):
    out = {split: [] for split in SPLITS}
    for r, a in zip(records, to_alpaca(records)):
        out[r.split].append(a.to_dict())
    return out


def label_inventory(records) -> dict:
    """Exact count of each ``prompt`` label, most common first (ties by label)."""
    counts = Counter(r.prompt for r in records)
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def dumps_jsonl(rows) -> str:
    return "".join(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n" for row in rows)


def write_jsonl(rows, path) -> None:
    Path(path).write_text(dumps_jsonl(rows), encoding="utf-8")


def read_jsonl(path):
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def convert_dataset(records, out_dir, audio_root=None):
    """Write ``asr-{split}.jsonl`` and ``alpaca-{split}.jsonl``; returns the paths written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for prefix, rows in (("asr", to_asr_manifest(records, audio_root)), ("alpaca", alpaca_by_split(records))):
        for split in SPLITS:
            path = out_dir / f"{prefix}-{split}.jsonl"
            write_jsonl(rows[split], path)
            written.append(path)
    return written
