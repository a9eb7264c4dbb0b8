"""Python bindings for the GRIP noisy-label training core."""

try:
    from ._grip import *  # noqa: F401,F403
    from ._grip import __version__  # noqa: F401
except ImportError:  # extension built out-of-package (plain CMake build tree)
    from _grip import *  # noqa: F401,F403
    from _grip import __version__  # noqa: F401
