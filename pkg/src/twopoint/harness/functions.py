"""Test functions for Dixmier-trace estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from twopoint.errors import InvalidArgument, ParseError, RangeError


@dataclass(frozen=True)
class TestFunction:
    name: str
    definition: str
    fn: Callable
    integral: Optional[float] = None

    def __call__(self, x):
        return self.fn(x)


def _const1(x):
    return np.ones_like(np.asarray(x, dtype=float))


def _linear(x):
    return np.asarray(x, dtype=float)


def _square(x):
    return np.asarray(x, dtype=float) ** 2


BUILTIN = {
    "const1": TestFunction("const1", "f(x) = 1", _const1, 1.0),
    "linear": TestFunction("linear", "f(x) = x", _linear, 0.5),
    "square": TestFunction("square", "f(x) = x^2", _square, 1.0 / 3.0),
}


def list_functions() -> list[tuple[str, str]]:
    """``(name, definition)`` for every available test function."""
    out = [(f.name, f.definition) for f in BUILTIN.values()]
    out.append(("user-table", "linear interpolation of an (x, f(x)) CSV covering [0, 1]"))
    return out


def load_user_table(path: str) -> TestFunction:
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ParseError(f"cannot read user table {path}: {exc}") from None
    if data.shape[1] != 2 or len(data) < 2:
        raise ParseError(f"user table {path} needs at least two rows of (x, f(x))")
    order = np.argsort(data[:, 0], kind="stable")
    xs, ys = data[order, 0], data[order, 1]
    if xs[0] > 0 or xs[-1] < 1:
        raise RangeError(f"user table {path} covers [{xs[0]}, {xs[-1]}], not [0, 1]")
    inside = (xs >= 0) & (xs <= 1)
    grid = np.concatenate(([0.0], xs[inside], [1.0]))
    integral = float(np.trapezoid(np.interp(grid, xs, ys), grid)) \
        if hasattr(np, "trapezoid") else float(np.trapz(np.interp(grid, xs, ys), grid))
    return TestFunction(f"user-table:{path}", f"interpolated table {path}",
                        lambda x: np.interp(np.asarray(x, dtype=float), xs, ys), integral)


def get_function(name: str) -> TestFunction:
    """A builtin by name, or ``user-table:PATH``."""
    if name in BUILTIN:
        return BUILTIN[name]
    if name.startswith("user-table:"):
        return load_user_table(name.split(":", 1)[1])
    raise InvalidArgument(f"unknown test function {name!r}; "
                          f"available: {', '.join(n for n, _ in list_functions())}")
