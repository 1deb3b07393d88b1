"""Exception types shared across the library.

The CLI maps these to exit code 2 (numerical failure); plain ValueError
covers precondition violations such as grid mismatches and maps to exit 3.
"""


class CurlTooLarge(Exception):
    """A field required to be curl-free has discrete curl above tolerance."""

    def __init__(self, max_curl, tolerance, message=None):
        self.max_curl = float(max_curl)
        self.tolerance = float(tolerance)
        super().__init__(
            message
            or f"max |curl| = {max_curl:.3e} exceeds tolerance {tolerance:.3e}"
        )


class PathMismatch(Exception):
    """The two axis-ordered integration paths disagree beyond tolerance."""

    def __init__(self, mismatch, tolerance):
        self.mismatch = float(mismatch)
        self.tolerance = float(tolerance)
        super().__init__(
            f"path-order mismatch {mismatch:.3e} exceeds tolerance {tolerance:.3e}"
        )


class UnsupportedCurrent(Exception):
    """Current is non-negligible on cells where the density is below floor."""


class NonConvergence(Exception):
    """An eigensolve failed to reach the requested residual."""
