"""Shared test helpers importable by name from any engine test module."""

import numpy as np

from compcode.taxonomy import CompanyRecord


class StubProvider:
    """Fixed text -> vector table; counts embed calls for cache tests."""

    def __init__(self, table: dict, dim: int, fingerprint: str = "stub:dim=3"):
        self.table = table
        self.dim = dim
        self.fingerprint = fingerprint
        self.calls = 0
        self.texts_embedded = 0

    def embed(self, texts):
        self.calls += 1
        self.texts_embedded += len(texts)
        return [np.asarray(self.table[t], dtype=np.float32) for t in texts]


def make_company(cid, description, triple=None, gold=None, gold_ps=None):
    return CompanyRecord(
        id=cid,
        description=description,
        source_codes=triple,
        gold_industries=gold,
        gold_ps_codes=gold_ps,
    )
