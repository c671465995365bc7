"""Exception hierarchy. Every error carries a machine-readable reason code
and the CLI exit status it maps to."""


class BogoexpError(Exception):
    code = "error"
    exit_status = 2

    def __init__(self, message, *, code=None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details

    def as_dict(self):
        return {"code": self.code, "message": str(self), **self.details}


class CheckFailed(BogoexpError):
    """A numerical identity or invariant did not hold."""

    code = "check_failed"
    exit_status = 2


class ConvergenceError(BogoexpError):
    code = "not_converged"
    exit_status = 2


class DegeneracyError(BogoexpError):
    """The model leaves the gapped, non-degenerate regime the theory needs."""

    code = "degenerate"
    exit_status = 2


class AssignmentError(BogoexpError):
    code = "ambiguous_assignment"
    exit_status = 2


class UnsupportedError(BogoexpError):
    code = "unsupported"
    exit_status = 2


class ResourceError(BogoexpError):
    code = "resource_guard"
    exit_status = 3


class ConfigError(BogoexpError):
    code = "config"
    exit_status = 4


# dense matrices above this many entries are refused
MAX_DENSE_ENTRIES = 4096 * 4096


def check_dense_budget(dim, what="matrix"):
    if dim * dim > MAX_DENSE_ENTRIES:
        raise ResourceError(
            f"{what} of dimension {dim} exceeds the dense budget "
            f"(needs ~{dim * dim * 16 / 2**20:.0f} MiB)",
            dim=dim,
            required_bytes=dim * dim * 16,
        )
