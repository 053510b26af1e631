"""Ranking collection: task assignment, validated submissions, conflicts.

Submissions append to an ndjson journal before updating the in-memory
index, so the store state is rebuildable by replay.  A lock serializes
writes: at most one record ever exists per (annotator, asset list), even
under concurrent duplicate requests.  Researcher records never enter the
consensus tally; they only gate it through conflict flagging.
"""

import itertools
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from ..errors import ValidationError
from ..ndjson import append_ndjson, read_ndjson
from ..rng import make_generator
from ..dataset.borda import borda_aggregate
from ..dataset.types import RankingRecord

DEFAULT_CAP = 400
ROLES = ("annotator", "researcher")


class UnknownAnnotatorError(LookupError):
    pass


class UnknownAssetListError(LookupError):
    pass


class DuplicateSubmissionError(RuntimeError):
    pass


class CapExceededError(RuntimeError):
    pass


@dataclass(frozen=True)
class Annotator:
    id: str
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")


@dataclass
class AnnotationTask:
    asset_list_id: str
    asset_ids: list
    presentation_order: list

    def to_json(self) -> dict:
        return {
            "asset_list_id": self.asset_list_id,
            "asset_ids": self.asset_ids,
            "presentation_order": self.presentation_order,
        }


class AnnotationStore:
    def __init__(self, asset_lists: Sequence[dict], annotators: Sequence[dict],
                 cap: int = DEFAULT_CAP, seed: int = 0,
                 journal_path: str | Path | None = None):
        self._lists: dict = {}
        for entry in asset_lists:
            ids = list(entry["asset_ids"])
            if not 4 <= len(ids) <= 5:
                raise ValidationError(
                    f"asset list {entry['asset_list_id']} holds {len(ids)} assets; "
                    "must be 4-5"
                )
            if len(set(ids)) != len(ids):
                raise ValidationError(
                    f"asset list {entry['asset_list_id']} repeats an asset id"
                )
            self._lists[entry["asset_list_id"]] = {
                "prompt_id": entry.get("prompt_id", entry["asset_list_id"]),
                "asset_ids": ids,
            }
        self._annotators = {a["id"]: Annotator(a["id"], a["role"]) for a in annotators}
        self.cap = cap
        self.seed = seed
        self._records: dict = {}  # (annotator_id, asset_list_id) -> RankingRecord
        self._lock = threading.Lock()
        self._journal = Path(journal_path) if journal_path else None
        if self._journal and self._journal.exists():
            self._replay()

    def _replay(self) -> None:
        for obj in read_ndjson(self._journal):
            record = RankingRecord.from_json(obj)
            self._index(record)

    def _index(self, record: RankingRecord) -> None:
        self._records[(record.annotator_id, record.asset_list_id)] = record

    def _annotator(self, annotator_id: str) -> Annotator:
        try:
            return self._annotators[annotator_id]
        except KeyError:
            raise UnknownAnnotatorError(f"unknown annotator: {annotator_id}") from None

    def completed_lists(self, annotator_id: str) -> int:
        self._annotator(annotator_id)
        return sum(1 for (aid, _) in self._records if aid == annotator_id)

    def next_task(self, annotator_id: str) -> AnnotationTask | None:
        """An unannotated list for this annotator, or None when capped or done.

        Presentation order is a seeded permutation per (annotator, list) to
        spread positional bias.
        """
        annotator = self._annotator(annotator_id)
        if annotator.role == "annotator" and self.completed_lists(annotator_id) >= self.cap:
            return None
        for list_id in sorted(self._lists):
            if (annotator_id, list_id) in self._records:
                continue
            asset_ids = list(self._lists[list_id]["asset_ids"])
            rng = make_generator("presentation", self.seed, annotator_id, list_id)
            order = [asset_ids[i] for i in rng.permutation(len(asset_ids))]
            return AnnotationTask(asset_list_id=list_id, asset_ids=asset_ids,
                                  presentation_order=order)
        return None

    def submit_ranking(self, annotator_id: str, record: RankingRecord) -> int:
        """Persist a ranking exactly once; returns the new completed count."""
        annotator = self._annotator(annotator_id)
        if record.annotator_id != annotator_id:
            raise ValidationError(
                f"record authored by {record.annotator_id!r}, submitted by {annotator_id!r}"
            )
        entry = self._lists.get(record.asset_list_id)
        if entry is None:
            raise UnknownAssetListError(f"unknown asset list: {record.asset_list_id}")
        record.validate(asset_ids=entry["asset_ids"])
        with self._lock:
            key = (annotator_id, record.asset_list_id)
            if key in self._records:
                raise DuplicateSubmissionError(
                    f"{annotator_id} already ranked {record.asset_list_id}"
                )
            if (annotator.role == "annotator"
                    and self.completed_lists(annotator_id) >= self.cap):
                raise CapExceededError(
                    f"{annotator_id} reached the {self.cap}-list cap"
                )
            if self._journal:
                append_ndjson(self._journal, record.to_json())
            self._index(record)
            return self.completed_lists(annotator_id)

    def export_rankings(self, role: str | None = None) -> list:
        """Records ordered by (list id, annotator id).

        The default export is annotator records only; researcher records are
        quality control, not votes.
        """
        wanted = role or "annotator"
        if wanted not in ROLES:
            raise ValidationError(f"unknown role filter {wanted!r}")
        out = [rec for rec in self._records.values()
               if self._annotators[rec.annotator_id].role == wanted]
        out.sort(key=lambda r: (r.asset_list_id, r.annotator_id))
        return out

    def records_for_list(self, asset_list_id: str, role: str):
        return [rec for (aid, lid), rec in self._records.items()
                if lid == asset_list_id and self._annotators[aid].role == role]

    def flag_conflicts(self, asset_list_id: str) -> list:
        """Asset couples where the annotator consensus strictly inverts a
        strict researcher preference.  Ties on either side do not conflict."""
        if asset_list_id not in self._lists:
            raise UnknownAssetListError(f"unknown asset list: {asset_list_id}")
        annotator_recs = self.records_for_list(asset_list_id, "annotator")
        researcher_recs = self.records_for_list(asset_list_id, "researcher")
        if not annotator_recs or not researcher_recs:
            raise ValidationError(
                f"conflict check needs annotator and researcher records for "
                f"{asset_list_id}"
            )
        consensus = borda_aggregate(annotator_recs).borda_points
        researcher = borda_aggregate(researcher_recs).borda_points
        conflicts = []  # (consensus winner, consensus loser) couples
        for a, b in itertools.combinations(sorted(consensus), 2):
            if consensus[a] > consensus[b] and researcher[a] < researcher[b]:
                conflicts.append((a, b))
            elif consensus[b] > consensus[a] and researcher[b] < researcher[a]:
                conflicts.append((b, a))
        return sorted(conflicts)

    def prompt_id_of(self, asset_list_id: str) -> str:
        if asset_list_id not in self._lists:
            raise UnknownAssetListError(f"unknown asset list: {asset_list_id}")
        return self._lists[asset_list_id]["prompt_id"]
