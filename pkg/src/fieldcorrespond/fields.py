"""Dense fields on rectangular integer windows, and their increments.

A field is observed on a rectangular window ``[lo, hi]`` of Z^N and takes
values in R^n.  Storage is a dense row-major array of shape
``(*window.shape, n)``; indexing outside the window is an error, never a
silent zero.

The ``clock`` tag records how sites are meant to be read: ``"integer"``
for a field sampled at t itself, ``"exponential"`` for a field sampled at
(e^{t_1}, ..., e^{t_N}).  Increments are computed identically either way;
the tag only matters for interpretation and for the transforms.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._jsonio import dump_json, format_float, load_json
from .errors import DimensionMismatchError, WindowError

MultiIndex = tuple

CLOCKS = ("integer", "exponential")


@dataclass(frozen=True)
class Window:
    """Rectangular index window [lo, hi] in Z^N (both corners included)."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(int(x) for x in self.lo)
        hi = tuple(int(x) for x in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) == 0:
            raise WindowError(f"window corners disagree: lo={lo}, hi={hi}")
        if any(l > h for l, h in zip(lo, hi)):
            raise WindowError(f"empty window: lo={lo} exceeds hi={hi}")

    @property
    def N(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def volume(self) -> int:
        return int(np.prod(self.shape))

    def contains(self, t) -> bool:
        return len(t) == self.N and all(
            l <= int(x) <= h for x, l, h in zip(t, self.lo, self.hi)
        )

    def index(self, t) -> tuple:
        if not self.contains(t):
            raise WindowError(f"site {tuple(t)} outside window [{self.lo}, {self.hi}]")
        return tuple(int(x) - l for x, l in zip(t, self.lo))

    def sites(self):
        """All sites in lexicographic order (t_1 slowest)."""
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def shifted(self, s) -> "Window":
        s = tuple(int(x) for x in s)
        if len(s) != self.N:
            raise DimensionMismatchError(f"shift {s} has wrong length for N={self.N}")
        return Window(
            tuple(l + d for l, d in zip(self.lo, s)),
            tuple(h + d for h, d in zip(self.hi, s)),
        )

    def intersection(self, other: "Window") -> "Window":
        if other.N != self.N:
            raise DimensionMismatchError("windows have different N")
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        if any(l > h for l, h in zip(lo, hi)):
            raise WindowError(f"windows {self} and {other} do not overlap")
        return Window(lo, hi)

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d: dict) -> "Window":
        return cls(tuple(d["lo"]), tuple(d["hi"]))

    def __str__(self) -> str:
        return f"[{self.lo}..{self.hi}]"


@dataclass(frozen=True)
class FieldWindow:
    """Field values on a window; immutable after construction."""

    window: Window
    values: np.ndarray
    clock: str = "integer"
    meta: dict = field(default=None, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        expected = self.window.shape
        if vals.ndim == len(expected):
            # Scalar field given without the trailing component axis.
            vals = vals[..., np.newaxis]
        if vals.shape[:-1] != expected:
            raise DimensionMismatchError(
                f"values shape {vals.shape} does not match window shape "
                f"{expected} + (n,)"
            )
        if self.clock not in CLOCKS:
            raise DimensionMismatchError(
                f"clock must be one of {CLOCKS}, got {self.clock!r}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def N(self) -> int:
        return self.window.N

    @classmethod
    def zeros(cls, window: Window, n: int, clock: str = "integer", meta=None):
        return cls(window, np.zeros(window.shape + (n,)), clock, meta)

    def at(self, t) -> np.ndarray:
        """Value at site t (read-only view); errors outside the window."""
        return self.values[self.window.index(t)]

    def with_meta(self, meta: dict) -> "FieldWindow":
        return FieldWindow(self.window, self.values, self.clock, meta)

    def shifted(self, s) -> "FieldWindow":
        return FieldWindow(self.window.shifted(s), self.values, self.clock, self.meta)


def _corner_signs(N: int):
    """Corner offsets i in {0,1}^N with parity signs (-1)^(sum i)."""
    for i in itertools.product((0, 1), repeat=N):
        yield i, -1.0 if sum(i) % 2 else 1.0


def unit_increment(x: FieldWindow, t) -> np.ndarray:
    """Increment over the unit cube [t-1, t]: alternating corner sum."""
    t = tuple(int(v) for v in t)
    acc = np.zeros(x.n)
    for i, sign in _corner_signs(x.N):
        site = tuple(a - b for a, b in zip(t, i))
        acc += sign * x.at(site)
    return acc


def rect_increment(x: FieldWindow, s, t) -> np.ndarray:
    """Increment over the rectangle with corners s and t.

    s <= t is not required: the evaluation runs through the canonical
    orientation (componentwise min/max) and applies the sign (-1)^m,
    m = number of axes with s_l > t_l, so the sign-swap identity is exact.
    Degenerate rectangles (some s_l == t_l) return an exact zero vector.
    """
    s = tuple(int(v) for v in s)
    t = tuple(int(v) for v in t)
    if len(s) != x.N or len(t) != x.N:
        raise DimensionMismatchError(f"corner length mismatch: {s}, {t} vs N={x.N}")
    for corner in (s, t):
        if not x.window.contains(corner):
            raise WindowError(
                f"rectangle corner {corner} outside window {x.window}"
            )
    if any(a == b for a, b in zip(s, t)):
        return np.zeros(x.n)
    m = sum(1 for a, b in zip(s, t) if a > b)
    a = tuple(min(p, q) for p, q in zip(s, t))
    b = tuple(max(p, q) for p, q in zip(s, t))
    acc = np.zeros(x.n)
    for i, sign in _corner_signs(x.N):
        site = tuple(bb - ii * (bb - aa) for aa, bb, ii in zip(a, b, i))
        acc += sign * x.at(site)
    if m % 2:
        acc = -acc
    return acc


def rect_from_units(x: FieldWindow, s, t) -> np.ndarray:
    """Sum of unit-cube increments over (s, t]; equals rect_increment(x, s, t).

    Requires s <= t componentwise.  This is the slow reference route kept
    distinct from rect_increment on purpose.
    """
    s = tuple(int(v) for v in s)
    t = tuple(int(v) for v in t)
    if len(s) != x.N or len(t) != x.N:
        raise DimensionMismatchError(f"corner length mismatch: {s}, {t} vs N={x.N}")
    if any(a > b for a, b in zip(s, t)):
        raise WindowError(f"rect_from_units needs s <= t, got s={s}, t={t}")
    acc = np.zeros(x.n)
    for j in itertools.product(*(range(a + 1, b + 1) for a, b in zip(s, t))):
        acc += unit_increment(x, j)
    return acc


def previous_value(x: FieldWindow, t) -> np.ndarray:
    """Value X_t minus its unit-cube increment, i.e. the corner sum
    sum_{i != 0} (-1)^(1 + sum i) X_{t-i}.

    For N = 1 this is exactly X_{t-1}.
    """
    t = tuple(int(v) for v in t)
    acc = np.zeros(x.n)
    for i, sign in _corner_signs(x.N):
        if sum(i) == 0:
            continue
        site = tuple(a - b for a, b in zip(t, i))
        acc += -sign * x.at(site)
    return acc


def unit_increment_field(x: FieldWindow) -> FieldWindow:
    """All unit-cube increments at once, on the shrunk window [lo+1, hi]."""
    if any(s < 2 for s in x.window.shape):
        raise WindowError(
            f"window {x.window} too small for unit increments (needs >= 2 per axis)"
        )
    arr = x.values
    for axis in range(x.N):
        arr = np.diff(arr, axis=axis)
    w = Window(tuple(l + 1 for l in x.window.lo), x.window.hi)
    return FieldWindow(w, arr, x.clock)


# ---------------------------------------------------------------------------
# CSV + sidecar interchange


def sidecar_path(csv_path) -> str:
    p = str(csv_path)
    if p.endswith(".csv"):
        return p[: -len(".csv")] + ".json"
    return p + ".json"


def write_csv(x: FieldWindow, csv_path) -> None:
    """Write one row per site (lexicographic order), no sidecar.

    Columns are t_1..t_N then x_1..x_n; floats carry 17 significant digits
    so reloading reproduces the doubles exactly.
    """
    header = [f"t_{j + 1}" for j in range(x.N)] + [f"x_{k + 1}" for k in range(x.n)]
    flat = x.values.reshape(-1, x.n)
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row, t in enumerate(x.window.sites()):
            cells = [str(v) for v in t]
            cells += [format_float(v) for v in flat[row]]
            fh.write(",".join(cells) + "\n")


def read_csv(csv_path, window: Window, n: int, clock: str = "integer") -> FieldWindow:
    """Read a field CSV whose dimensions are known from elsewhere."""
    nn = window.N
    vals = np.zeros(window.shape + (n,))
    seen = np.zeros(window.shape, dtype=bool)
    with open(csv_path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        expected = [f"t_{j + 1}" for j in range(nn)] + [f"x_{k + 1}" for k in range(n)]
        if header != expected:
            raise DimensionMismatchError(
                f"CSV header {header} does not match expected {expected}"
            )
        for line in fh:
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != nn + n:
                raise DimensionMismatchError(f"bad CSV row: {line!r}")
            t = tuple(int(c) for c in cells[:nn])
            idx = window.index(t)
            vals[idx] = [float(c) for c in cells[nn:]]
            seen[idx] = True
    if not seen.all():
        missing = int(seen.size - seen.sum())
        raise WindowError(f"CSV is missing {missing} of {seen.size} window sites")
    return FieldWindow(window, vals, clock)


def save_field(x: FieldWindow, csv_path) -> None:
    """Write the field CSV plus its JSON sidecar."""
    write_csv(x, csv_path)
    meta = dict(x.meta) if x.meta else {}
    sidecar = {
        "N": x.N,
        "n": x.n,
        "lo": list(x.window.lo),
        "hi": list(x.window.hi),
        "clock": x.clock,
        "seed": meta.pop("seed", None),
    }
    sidecar.update(meta)
    dump_json(sidecar, sidecar_path(csv_path))


def load_field(csv_path) -> FieldWindow:
    side = load_json(sidecar_path(csv_path))
    try:
        window = Window(tuple(side["lo"]), tuple(side["hi"]))
        n = int(side["n"])
        nn = int(side["N"])
        clock = side["clock"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DimensionMismatchError(f"malformed field sidecar: {exc}") from exc
    if window.N != nn:
        raise DimensionMismatchError(
            f"sidecar N={nn} disagrees with window bounds of length {window.N}"
        )
    x = read_csv(csv_path, window, n, clock)
    meta = {k: side[k] for k in side if k not in ("N", "n", "lo", "hi", "clock")}
    if meta.get("seed") is None:
        meta.pop("seed", None)
    return FieldWindow(window, x.values, clock, meta or None)
