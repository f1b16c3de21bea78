"""Source ingestion, labeling, dedup, and leakage-free stratified splits.

PhishTank rows are labeled 1, Tranco domains become "https://<domain>"
labeled 0.  Every record carries its registrable domain as a group key;
the splitter assigns whole groups to train/val/test so that URLs from one
domain never straddle a split boundary, while a greedy deficit rule keeps
both the split sizes and the class balance close to the requested ratios.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    EmptyFile,
    MalformedRow,
    MalformedUrl,
    MissingColumn,
    TooFewGroups,
)
from .urlnorm import ParsedUrl, normalize_url, registrable_domain

CHAR_SEQ_MAGIC = b"PSQ1"


@dataclass(frozen=True)
class LabeledUrl:
    parsed: ParsedUrl
    label: int  # 0 = valid, 1 = phishing
    source: str  # phishtank | tranco | custom
    group_key: str


@dataclass
class IngestStats:
    rows_read: int = 0
    malformed: int = 0
    duplicates: int = 0
    label_conflicts: int = 0
    kept: int = 0


def _as_text(data) -> str:
    if isinstance(data, (bytes, bytearray)):
        return data.decode("utf-8", errors="replace")
    with open(data, "r", encoding="utf-8", errors="replace") as f:
        return f.read()


def _make_record(raw_url: str, label: int, source: str) -> LabeledUrl:
    parsed = normalize_url(raw_url)
    return LabeledUrl(
        parsed=parsed, label=label, source=source, group_key=registrable_domain(parsed)
    )


def load_phishtank(data) -> tuple[list[LabeledUrl], IngestStats]:
    """Parse a PhishTank-style CSV (any header with a `url` column)."""
    text = _as_text(data)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyFile("no header row") from None
    lowered = [h.strip().lower() for h in header]
    if "url" not in lowered:
        raise MissingColumn("url")
    url_col = lowered.index("url")

    stats = IngestStats()
    seen: set[str] = set()
    out: list[LabeledUrl] = []
    for row in reader:
        if not row or all(not c.strip() for c in row):
            continue
        stats.rows_read += 1
        if len(row) <= url_col or not row[url_col].strip():
            stats.malformed += 1
            continue
        try:
            rec = _make_record(row[url_col], label=1, source="phishtank")
        except MalformedUrl:
            stats.malformed += 1
            continue
        if rec.parsed.normalized in seen:
            stats.duplicates += 1
            continue
        seen.add(rec.parsed.normalized)
        out.append(rec)
    if stats.rows_read == 0:
        raise EmptyFile("no data rows")
    stats.kept = len(out)
    return out, stats


def load_tranco(data, limit: int) -> tuple[list[LabeledUrl], IngestStats]:
    """Parse `rank,domain` rows; the first `limit` ranks become HTTPS URLs."""
    text = _as_text(data)
    stats = IngestStats()
    seen: set[str] = set()
    out: list[LabeledUrl] = []
    for line in io.StringIO(text):
        line = line.strip()
        if not line:
            continue
        if stats.rows_read >= limit:
            break
        stats.rows_read += 1
        parts = line.split(",", 1)
        if len(parts) != 2 or not parts[1].strip():
            stats.malformed += 1
            continue
        try:
            rec = _make_record("https://" + parts[1].strip(), label=0, source="tranco")
        except MalformedUrl:
            stats.malformed += 1
            continue
        if rec.parsed.normalized in seen:
            stats.duplicates += 1
            continue
        seen.add(rec.parsed.normalized)
        out.append(rec)
    if stats.rows_read == 0:
        raise EmptyFile("no data rows")
    if stats.malformed > 0.01 * stats.rows_read:
        raise MalformedRow(
            f"{stats.malformed}/{stats.rows_read} unparseable rows exceeds 1%"
        )
    stats.kept = len(out)
    return out, stats


def merge_sources(*source_lists: list[LabeledUrl]) -> tuple[list[LabeledUrl], IngestStats]:
    """Combine sources; exact URL collisions keep the phishing label."""
    stats = IngestStats()
    by_url: dict[str, LabeledUrl] = {}
    order: list[str] = []
    for records in source_lists:
        for rec in records:
            key = rec.parsed.normalized
            if key not in by_url:
                by_url[key] = rec
                order.append(key)
            else:
                stats.duplicates += 1
                if by_url[key].label != rec.label:
                    stats.label_conflicts += 1
                    if rec.label == 1:
                        by_url[key] = rec
    merged = [by_url[k] for k in order]
    stats.kept = len(merged)
    return merged, stats


@dataclass
class SplitAssignment:
    train: list[int] = field(default_factory=list)
    val: list[int] = field(default_factory=list)
    test: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"train": self.train, "val": self.val, "test": self.test}

    def validate(self, records: list[LabeledUrl], tolerance_pp: float = 2.0) -> None:
        """Assert the split invariants; raises ValueError on violation."""
        n = len(records)
        all_idx = self.train + self.val + self.test
        if sorted(all_idx) != list(range(n)):
            raise ValueError("splits must cover every row exactly once")
        groups = [
            {records[i].group_key for i in part}
            for part in (self.train, self.val, self.test)
        ]
        if groups[0] & groups[1] or groups[0] & groups[2] or groups[1] & groups[2]:
            raise ValueError("a group key appears in more than one split")
        global_rate = sum(records[i].label for i in range(n)) / n
        for name, part in (("train", self.train), ("val", self.val), ("test", self.test)):
            if not part:
                raise ValueError(f"{name} split is empty")
            rate = sum(records[i].label for i in part) / len(part)
            if abs(rate - global_rate) > tolerance_pp / 100.0:
                raise ValueError(
                    f"{name} positive rate {rate:.3f} deviates from {global_rate:.3f}"
                )


def split(
    records: list[LabeledUrl],
    ratios: tuple[float, float, float] = (0.70, 0.10, 0.20),
    seed: int = 0,
) -> SplitAssignment:
    """Greedy grouped stratification over registrable domains.

    Group keys are shuffled with the seed, then each whole group goes to
    the split with the largest combined (row-count, positive-count)
    deficit relative to its targets.
    """
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must sum to 1")
    groups: dict[str, list[int]] = {}
    for i, rec in enumerate(records):
        groups.setdefault(rec.group_key, []).append(i)

    pos_groups = sum(1 for idxs in groups.values() if any(records[i].label == 1 for i in idxs))
    neg_groups = sum(1 for idxs in groups.values() if any(records[i].label == 0 for i in idxs))
    if pos_groups < 10 or neg_groups < 10:
        raise TooFewGroups(
            f"need >= 10 groups per class, have {pos_groups} positive / {neg_groups} negative"
        )

    keys = sorted(groups)
    rng = np.random.default_rng(seed)
    keys = [keys[i] for i in rng.permutation(len(keys))]
    # large groups first so small splits are not swamped late; the seeded
    # shuffle decides the order among equal-sized groups
    keys.sort(key=lambda k: -len(groups[k]))

    n = len(records)
    n_pos = sum(r.label for r in records)
    n_neg = n - n_pos
    target_pos = [max(r * n_pos, 1e-9) for r in ratios]
    target_neg = [max(r * n_neg, 1e-9) for r in ratios]
    pos = [0.0, 0.0, 0.0]
    neg = [0.0, 0.0, 0.0]
    parts: list[list[int]] = [[], [], []]

    for key in keys:
        idxs = groups[key]
        g_pos = sum(records[i].label for i in idxs)
        g_neg = len(idxs) - g_pos
        w_pos = g_pos / len(idxs)
        best_s, best_key = 0, None
        for s in range(3):
            # deficit of whichever class this group actually carries
            deficit = w_pos * (1.0 - pos[s] / target_pos[s]) + (1.0 - w_pos) * (
                1.0 - neg[s] / target_neg[s]
            )
            cand = (deficit, ratios[s], -s)
            if best_key is None or cand > best_key:
                best_s, best_key = s, cand
        parts[best_s].extend(idxs)
        pos[best_s] += g_pos
        neg[best_s] += g_neg

    assignment = SplitAssignment(
        train=sorted(parts[0]), val=sorted(parts[1]), test=sorted(parts[2])
    )
    return assignment


# --- stage artifacts -------------------------------------------------------

def write_dataset_csv(records: list[LabeledUrl], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f)
        w.writerow(["normalized_url", "label", "source", "group_key"])
        for rec in records:
            w.writerow([rec.parsed.normalized, rec.label, rec.source, rec.group_key])


def read_dataset_csv(path) -> list[LabeledUrl]:
    out: list[LabeledUrl] = []
    with open(path, "r", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        for row in reader:
            out.append(
                LabeledUrl(
                    parsed=normalize_url(row["normalized_url"]),
                    label=int(row["label"]),
                    source=row["source"],
                    group_key=row["group_key"],
                )
            )
    return out


def write_char_seqs(matrix: np.ndarray, path) -> None:
    """Binary sequence cache: magic, u32 count, u32 seq_len, u8 payload."""
    matrix = np.ascontiguousarray(matrix, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(CHAR_SEQ_MAGIC)
        f.write(struct.pack("<II", matrix.shape[0], matrix.shape[1]))
        f.write(matrix.tobytes())


def read_char_seqs(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHAR_SEQ_MAGIC:
            raise ValueError(f"bad char-seq magic {magic!r}")
        count, seq_len = struct.unpack("<II", f.read(8))
        data = np.frombuffer(f.read(count * seq_len), dtype=np.uint8)
    return data.reshape(count, seq_len)


def write_splits(assignment: SplitAssignment, seed: int, ratios, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(
            {"seed": seed, "ratios": list(ratios), **assignment.as_dict()},
            f,
            sort_keys=True,
        )


def read_splits(path) -> SplitAssignment:
    with open(path, "r", encoding="utf-8") as f:
        d = json.load(f)
    return SplitAssignment(train=d["train"], val=d["val"], test=d["test"])
