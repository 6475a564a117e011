"""Taxonomy and company-record loading, validation, and indexing.

File formats (all UTF-8):
  industries.csv   header ``id,name,description``
  ps_codes.csv     header ``id,industry_id,name,description``
  mapping.csv      header ``sector,group,code,industry_id``
  companies.jsonl  one object per line:
      {"id": ..., "description": ...,
       "source_codes": {"sector","group","code"}?,
       "gold_industries": [...]?, "gold_ps_codes": [...]?}

All containers are immutable after load and safe for concurrent reads.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import (
    ChildlessIndustry,
    DuplicateId,
    DuplicateMapping,
    EmptyDescription,
    EmptyTaxonomy,
    OrphanCode,
    ParseError,
    UnknownTarget,
)

INDUSTRY_HEADER = ["id", "name", "description"]
PS_HEADER = ["id", "industry_id", "name", "description"]
MAPPING_HEADER = ["sector", "group", "code", "industry_id"]


@dataclass(frozen=True)
class IndustryCode:
    id: str
    name: str
    description: str


@dataclass(frozen=True)
class ProductServiceCode:
    id: str
    industry_id: str
    name: str
    description: str


@dataclass(frozen=True)
class SourceCodeTriple:
    sector: str
    group: str
    code: str


@dataclass(frozen=True)
class CompanyRecord:
    id: str
    description: str
    source_codes: SourceCodeTriple | None = None
    gold_industries: tuple[str, ...] | None = None
    gold_ps_codes: tuple[str, ...] | None = None


class IndustryTaxonomy:
    """Ordered set of industry codes with O(1) lookup by id."""

    def __init__(self, codes: Iterable[IndustryCode]):
        self.codes = list(codes)
        self._by_id: dict[str, IndustryCode] = {}
        for code in self.codes:
            if not code.id:
                raise ParseError("industry code with empty id")
            if code.id in self._by_id:
                raise DuplicateId(f"duplicate industry id {code.id!r}")
            if not code.description.strip():
                raise EmptyDescription(
                    f"industry {code.id!r} has an empty description"
                )
            self._by_id[code.id] = code

    def lookup(self, industry_id: str) -> IndustryCode:
        try:
            return self._by_id[industry_id]
        except KeyError:
            raise KeyError(f"unknown industry id {industry_id!r}") from None

    def __contains__(self, industry_id: str) -> bool:
        return industry_id in self._by_id

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[IndustryCode]:
        return iter(self.codes)

    def ids(self) -> list[str]:
        return [c.id for c in self.codes]


class ProductServiceTaxonomy:
    """Product/service codes grouped under their parent industries.

    Child lists preserve file order. Every industry in the parent taxonomy
    must own at least one code, otherwise the second classification stage
    has nothing to rank for it.
    """

    def __init__(self, codes: Iterable[ProductServiceCode], industries: IndustryTaxonomy):
        self.codes = list(codes)
        if not self.codes:
            raise EmptyTaxonomy("product/service taxonomy is empty")
        self._by_id: dict[str, ProductServiceCode] = {}
        self._children: dict[str, list[ProductServiceCode]] = {i: [] for i in industries.ids()}
        for code in self.codes:
            if not code.id:
                raise ParseError("product/service code with empty id")
            if code.id in self._by_id:
                raise DuplicateId(f"duplicate product/service id {code.id!r}")
            if code.industry_id not in industries:
                raise OrphanCode(
                    f"product/service {code.id!r} references unknown industry {code.industry_id!r}"
                )
            if not code.description.strip():
                raise EmptyDescription(
                    f"product/service {code.id!r} has an empty description"
                )
            self._by_id[code.id] = code
            self._children[code.industry_id].append(code)
        childless = sorted(i for i, kids in self._children.items() if not kids)
        if childless:
            raise ChildlessIndustry(
                f"industries without product/service codes: {', '.join(childless)}"
            )

    def lookup(self, code_id: str) -> ProductServiceCode:
        try:
            return self._by_id[code_id]
        except KeyError:
            raise KeyError(f"unknown product/service id {code_id!r}") from None

    def __contains__(self, code_id: str) -> bool:
        return code_id in self._by_id

    def __len__(self) -> int:
        return len(self.codes)

    def children(self, industry_id: str) -> list[ProductServiceCode]:
        return list(self._children[industry_id])

    def industry_ids(self) -> list[str]:
        return list(self._children)


class SourceMapping:
    """Exact-match lookup from source-taxonomy triples to industry ids."""

    def __init__(
        self,
        entries: Iterable[tuple[SourceCodeTriple, str]],
        industries: IndustryTaxonomy,
    ):
        self.entries = list(entries)
        self._table: dict[SourceCodeTriple, str] = {}
        for triple, industry_id in self.entries:
            if not (triple.sector and triple.group and triple.code):
                raise ParseError(f"source triple with empty field: {triple}")
            if triple in self._table:
                raise DuplicateMapping(f"duplicate source triple {triple}")
            if industry_id not in industries:
                raise UnknownTarget(
                    f"mapping targets unknown industry {industry_id!r}"
                )
            self._table[triple] = industry_id

    def lookup(self, triple: SourceCodeTriple) -> str | None:
        return self._table.get(triple)

    @property
    def coverage(self) -> frozenset[str]:
        """Industry ids reachable through at least one mapping entry."""
        return frozenset(self._table.values())

    def covered(self, taxonomy: IndustryTaxonomy) -> set[str]:
        return set(taxonomy.ids()) & self.coverage

    def uncovered(self, taxonomy: IndustryTaxonomy) -> set[str]:
        return set(taxonomy.ids()) - self.coverage

    def __len__(self) -> int:
        return len(self._table)


def map_source_codes(triple: SourceCodeTriple, mapping: SourceMapping) -> str | None:
    """Exact lookup of the full three-level triple; None when unmapped."""
    return mapping.lookup(triple)


def _read_csv_rows(path: str | Path, header: list[str]) -> list[tuple[int, dict[str, str]]]:
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                actual = next(reader)
            except StopIteration:
                raise ParseError(f"{path}: file is empty, expected header {','.join(header)}")
            if actual != header:
                raise ParseError(
                    f"{path}: expected header {','.join(header)}, got {','.join(actual)}"
                )
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
                rows.append((lineno, dict(zip(header, row))))
            return rows
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc


def load_industry_taxonomy(path: str | Path) -> IndustryTaxonomy:
    rows = _read_csv_rows(path, INDUSTRY_HEADER)
    seen: set[str] = set()
    codes = []
    for lineno, row in rows:
        if not row["id"]:
            raise ParseError(f"{path}:{lineno}: empty industry id")
        if row["id"] in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate industry id {row['id']!r}")
        if not row["description"].strip():
            raise EmptyDescription(f"{path}:{lineno}: empty description for {row['id']!r}")
        seen.add(row["id"])
        codes.append(IndustryCode(row["id"], row["name"], row["description"]))
    return IndustryTaxonomy(codes)


def load_ps_taxonomy(path: str | Path, industries: IndustryTaxonomy) -> ProductServiceTaxonomy:
    rows = _read_csv_rows(path, PS_HEADER)
    seen: set[str] = set()
    codes = []
    for lineno, row in rows:
        if not row["id"]:
            raise ParseError(f"{path}:{lineno}: empty product/service id")
        if row["id"] in seen:
            raise DuplicateId(f"{path}:{lineno}: duplicate product/service id {row['id']!r}")
        if row["industry_id"] not in industries:
            raise OrphanCode(
                f"{path}:{lineno}: {row['id']!r} references unknown industry {row['industry_id']!r}"
            )
        if not row["description"].strip():
            raise EmptyDescription(f"{path}:{lineno}: empty description for {row['id']!r}")
        seen.add(row["id"])
        codes.append(ProductServiceCode(row["id"], row["industry_id"], row["name"], row["description"]))
    return ProductServiceTaxonomy(codes, industries)


def load_source_mapping(path: str | Path, industries: IndustryTaxonomy) -> SourceMapping:
    rows = _read_csv_rows(path, MAPPING_HEADER)
    entries = []
    seen: set[SourceCodeTriple] = set()
    for lineno, row in rows:
        triple = SourceCodeTriple(row["sector"], row["group"], row["code"])
        if not (triple.sector and triple.group and triple.code):
            raise ParseError(f"{path}:{lineno}: source triple with empty field")
        if triple in seen:
            raise DuplicateMapping(f"{path}:{lineno}: duplicate source triple {triple}")
        if row["industry_id"] not in industries:
            raise UnknownTarget(
                f"{path}:{lineno}: mapping targets unknown industry {row['industry_id']!r}"
            )
        seen.add(triple)
        entries.append((triple, row["industry_id"]))
    return SourceMapping(entries, industries)


def load_companies(path: str | Path) -> list[CompanyRecord]:
    path = Path(path)
    records = []
    seen: set[str] = set()
    try:
        fh = path.open(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            if not isinstance(obj, dict) or "id" not in obj or "description" not in obj:
                raise ParseError(f"{path}:{lineno}: company object needs 'id' and 'description'")
            cid = str(obj["id"])
            if cid in seen:
                raise DuplicateId(f"{path}:{lineno}: duplicate company id {cid!r}")
            seen.add(cid)
            triple = None
            if obj.get("source_codes") is not None:
                sc = obj["source_codes"]
                try:
                    triple = SourceCodeTriple(str(sc["sector"]), str(sc["group"]), str(sc["code"]))
                except (TypeError, KeyError) as exc:
                    raise ParseError(
                        f"{path}:{lineno}: source_codes needs sector/group/code"
                    ) from exc
            gold_ind = obj.get("gold_industries")
            gold_ps = obj.get("gold_ps_codes")
            records.append(
                CompanyRecord(
                    id=cid,
                    description=str(obj["description"]),
                    source_codes=triple,
                    gold_industries=tuple(str(g) for g in gold_ind) if gold_ind is not None else None,
                    gold_ps_codes=tuple(str(g) for g in gold_ps) if gold_ps is not None else None,
                )
            )
    return records


def save_industry_taxonomy(taxonomy: IndustryTaxonomy, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INDUSTRY_HEADER)
        for code in taxonomy:
            writer.writerow([code.id, code.name, code.description])


def save_ps_taxonomy(taxonomy: ProductServiceTaxonomy, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PS_HEADER)
        for code in taxonomy.codes:
            writer.writerow([code.id, code.industry_id, code.name, code.description])


def save_source_mapping(mapping: SourceMapping, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MAPPING_HEADER)
        for triple, industry_id in mapping.entries:
            writer.writerow([triple.sector, triple.group, triple.code, industry_id])


def company_to_json_obj(record: CompanyRecord) -> dict:
    obj: dict = {"id": record.id, "description": record.description}
    if record.source_codes is not None:
        obj["source_codes"] = {
            "sector": record.source_codes.sector,
            "group": record.source_codes.group,
            "code": record.source_codes.code,
        }
    if record.gold_industries is not None:
        obj["gold_industries"] = list(record.gold_industries)
    if record.gold_ps_codes is not None:
        obj["gold_ps_codes"] = list(record.gold_ps_codes)
    return obj


def save_companies(records: Iterable[CompanyRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(company_to_json_obj(record), separators=(",", ":")))
            fh.write("\n")
