"""Domain error hierarchy.

Every error carries a machine-readable ``code`` that the HTTP layer and the
CLI reuse verbatim, so callers see one vocabulary everywhere.
"""


class Heritage3DError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "internal_error"


# --- catalog ---------------------------------------------------------------

class EmptyName(Heritage3DError):
    code = "empty_name"


class DuplicateSite(Heritage3DError):
    code = "duplicate_site"


class UnknownSite(Heritage3DError):
    code = "site_not_found"


class InvalidAzimuth(Heritage3DError):
    code = "invalid_azimuth"


class UndecodableImage(Heritage3DError):
    code = "undecodable_image"


class UnknownAsset(Heritage3DError):
    code = "asset_not_found"


# --- prompt templates -------------------------------------------------------

class TemplateParseError(Heritage3DError):
    code = "template_parse_error"


class UnknownPlaceholder(TemplateParseError):
    code = "unknown_placeholder"


class MissingAttribute(Heritage3DError):
    code = "missing_required_attribute"


class UnknownTemplate(Heritage3DError):
    code = "template_not_found"


# --- generation backends ----------------------------------------------------

class BackendUnreachable(Heritage3DError):
    """All retries exhausted against a backend."""

    code = "backend_unreachable"

    def __init__(self, message, last_error=None):
        super().__init__(message)
        self.last_error = last_error


class BackendRejected(Heritage3DError):
    """Backend answered with a non-retryable rejection."""

    code = "backend_rejected"


class InvalidOutput(Heritage3DError):
    """Backend produced bytes that violate the output contract."""

    code = "invalid_output"


# --- mesh documents ----------------------------------------------------------

class MalformedDocument(Heritage3DError):
    code = "malformed_document"


class UnsupportedVersion(MalformedDocument):
    code = "unsupported_version"


class InvalidDocument(Heritage3DError):
    """Operation requires a document that passes validation with no errors."""

    code = "invalid_document"


class NoVertices(Heritage3DError):
    code = "no_vertices"


# --- jobs --------------------------------------------------------------------

class UnknownJob(Heritage3DError):
    code = "job_not_found"


class JobAlreadyTerminal(Heritage3DError):
    code = "job_terminal"


class SiteHasNoImages(Heritage3DError):
    code = "site_has_no_images"


# --- metrics -----------------------------------------------------------------

class EmptyMetrics(Heritage3DError):
    code = "empty_metrics"


class MetricsMismatch(Heritage3DError):
    code = "metrics_mismatch"


# --- configuration -----------------------------------------------------------

class ConfigError(Heritage3DError):
    code = "config_error"
