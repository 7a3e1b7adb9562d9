"""Exception types shared across the package."""

from __future__ import annotations


class GridspaceError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(GridspaceError):
    """An input value is outside its documented domain."""


class CapExceeded(GridspaceError):
    """A decomposition would materialize more points than the configured cap."""

    def __init__(self, requested: int, cap: int) -> None:
        super().__init__(f"decomposition of {requested} points exceeds cap {cap}")
        self.requested = requested
        self.cap = cap


class UnsupportedFragment(GridspaceError):
    """A formula falls outside the monitoring fragment.

    ``path`` locates the offending node, e.g. ``root.items[2].guard``.
    """

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class ParseError(GridspaceError):
    """Malformed serialized input."""

    def __init__(self, line: int, column: int, reason: str) -> None:
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class UnknownOp(ParseError):
    """A serialized node names an operator this package does not define."""

    def __init__(self, name: str, line: int = 0, column: int = 0) -> None:
        super().__init__(line, column, f"unknown op {name!r}")
        self.name = name


class VersionMismatch(ParseError):
    """A serialized document declares an unsupported format version."""

    def __init__(self, found: str, expected: str, line: int = 0, column: int = 0) -> None:
        super().__init__(line, column, f"version {found!r}, expected {expected!r}")
        self.found = found
        self.expected = expected


class DimensionMismatch(GridspaceError):
    """Frame payload size disagrees with its header."""


class FetchError(GridspaceError):
    """A pull from a remote source failed; retried internally with backoff."""

    def __init__(self, uri: str, reason: str) -> None:
        super().__init__(f"fetch {uri}: {reason}")
        self.uri = uri
        self.reason = reason


class FoldStepError(GridspaceError):
    """A fold callback failed; carries the iteration index it failed at."""

    def __init__(self, index: int, at: object, reason: str) -> None:
        super().__init__(f"fold step {index} at {at}: {reason}")
        self.index = index
        self.at = at
        self.reason = reason


class PathUnreachable(GridspaceError):
    """A space path's stop area cannot be reached from its start by whole steps."""


class RuleParseError(GridspaceError):
    """A rule document is malformed or violates a rule invariant."""

    def __init__(self, rule_id: str | None, reason: str) -> None:
        ident = rule_id if rule_id is not None else "<unknown>"
        super().__init__(f"rule {ident}: {reason}")
        self.rule_id = rule_id
        self.reason = reason


class DuplicateId(GridspaceError):
    """Two rules (or nodes) share an identifier that must be unique."""

    def __init__(self, ident: str) -> None:
        super().__init__(f"duplicate id {ident!r}")
        self.ident = ident


class UnknownId(GridspaceError):
    """An identifier does not name any known object."""

    def __init__(self, ident: str) -> None:
        super().__init__(f"unknown id {ident!r}")
        self.ident = ident


class MissingQuantities(GridspaceError):
    """No quantity-bearing clauses intersect the analysis region."""


class UnknownEdge(GridspaceError):
    """A fault or query references an edge id absent from the topology."""

    def __init__(self, edge_id: str) -> None:
        super().__init__(f"unknown edge {edge_id!r}")
        self.edge_id = edge_id


class UnknownLoad(UnknownId):
    """A reading references a load id absent from the topology."""


class NoIsolatingSwitches(GridspaceError):
    """The faulted segment cannot be separated from every source by switches."""


class InvalidPath(GridspaceError):
    """A node sequence is not a usable restoration path."""


class TopologyNotRadial(GridspaceError):
    """Flow accounting requires a radial (tree-per-source) energized network."""


class RestoreSafetyViolation(GridspaceError):
    """Undoing a plan would energize a fault or overload equipment."""

    def __init__(self, switch_id: str, reason: str) -> None:
        super().__init__(f"re-close of {switch_id!r} unsafe: {reason}")
        self.switch_id = switch_id
        self.reason = reason


class NegativeDuration(GridspaceError):
    """An interruption record ends before it starts."""
