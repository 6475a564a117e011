"""Exception types shared across the pipeline.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit codes (2 usage, 3 input, 4 fingerprint/version, 5 remote).
"""


class CompcodeError(Exception):
    exit_code = 1


class InputError(CompcodeError):
    """Bad or missing input data (files, records, shapes)."""

    exit_code = 3


class TaxonomyError(InputError):
    pass


class ParseError(TaxonomyError):
    pass


class DuplicateId(TaxonomyError):
    pass


class EmptyDescription(TaxonomyError):
    pass


class OrphanCode(TaxonomyError):
    pass


class ChildlessIndustry(TaxonomyError):
    pass


class EmptyTaxonomy(TaxonomyError):
    pass


class UnknownTarget(TaxonomyError):
    pass


class DuplicateMapping(TaxonomyError):
    pass


class DimensionMismatch(InputError):
    pass


class EmptyDataset(InputError):
    pass


class UnknownIndustry(InputError):
    pass


class MissingGold(InputError):
    pass


class CorruptFile(InputError):
    pass


class NonFiniteLoss(CompcodeError):
    """Training diverged; loss left the range of finite floats."""


class ModelCompatError(CompcodeError):
    exit_code = 4


class VersionMismatch(ModelCompatError):
    pass


class FingerprintMismatch(ModelCompatError):
    pass


class RemoteError(CompcodeError):
    exit_code = 5


class RemoteUnavailable(RemoteError):
    pass


class MalformedResponse(RemoteError):
    pass


class RemoteDimensionMismatch(RemoteError, DimensionMismatch):
    """Remote server returned vectors of a different dimension than advertised."""

    exit_code = 5
