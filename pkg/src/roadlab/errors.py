"""Exception hierarchy shared by all roadlab modules."""


class RoadlabError(Exception):
    """Base class; carries an error code usable in API payloads."""

    code = "error"


# geometry -------------------------------------------------------------

class InvalidGeometry(RoadlabError):
    code = "invalid_geometry"


class OutOfRange(RoadlabError):
    code = "out_of_range"


class OffsetDegenerate(RoadlabError):
    code = "offset_degenerate"


class FilletTooLarge(RoadlabError):
    code = "fillet_too_large"


class EmptyVote(RoadlabError):
    code = "empty_vote"


# store ----------------------------------------------------------------

class Conflict(RoadlabError):
    code = "conflict"


class NotFound(RoadlabError):
    code = "not_found"


class ParseError(RoadlabError):
    code = "parse_error"


class ConcurrentModification(RoadlabError):
    code = "concurrent_modification"


class SchemaViolation(RoadlabError):
    code = "schema_violation"


# triggers / views -----------------------------------------------------

class CyclicTriggerError(RoadlabError):
    code = "cyclic_trigger"


class Misconfigured(RoadlabError):
    code = "misconfigured"


class Unsupported(RoadlabError):
    code = "unsupported"


# editing --------------------------------------------------------------

class AmbiguousEdit(RoadlabError):
    code = "ambiguous_edit"


class DegenerateSection(RoadlabError):
    code = "degenerate_section"


class NotOnRoad(RoadlabError):
    code = "not_on_road"
