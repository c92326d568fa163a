"""Run-length encoded binary masks.

Counts follow the COCO convention: column-major pixel order, alternating
runs starting with background.  Area, intersection and union are computed by
merging run lists and never decode to pixels.

The merge kernels come from the compiled ``_rle_core`` extension when it is
importable, otherwise from the pure-Python ``_rle_py`` module.  Setting
``VISDIAG_PURE_PYTHON=1`` forces the fallback.
"""

import os
from functools import cached_property

import numpy as np

from .exceptions import DimensionMismatchError, RleDecodeError

if os.environ.get("VISDIAG_PURE_PYTHON"):
    from . import _rle_py as _kernels

    BACKEND = "python"
else:
    try:
        from . import _rle_core as _kernels

        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _rle_py as _kernels

        BACKEND = "python"

COUNTS_DTYPE = np.uint32


class RleMask:
    """Immutable single-frame binary mask in canonical run-length form."""

    def __init__(self, height, width, counts):
        arr = np.ascontiguousarray(counts, dtype=COUNTS_DTYPE)
        arr.flags.writeable = False
        object.__setattr__(self, "height", int(height))
        object.__setattr__(self, "width", int(width))
        object.__setattr__(self, "counts", arr)

    def __setattr__(self, name, value):
        raise AttributeError("RleMask is immutable")

    @classmethod
    def from_counts(cls, height, width, counts, track=None):
        """Validate arbitrary runs and build the canonical mask.

        Interior zero-length runs are folded away; a sum mismatch raises
        :class:`RleDecodeError`.
        """
        raw = np.asarray(counts, dtype=np.int64).ravel()
        if height <= 0 or width <= 0:
            raise RleDecodeError(f"invalid mask size {height}x{width}", track)
        if raw.size and raw.min() < 0:
            raise RleDecodeError("negative run length", track)
        total = int(raw.sum())
        if total != height * width:
            raise RleDecodeError(
                f"run lengths sum to {total}, expected {height * width}", track
            )
        return cls(height, width, canonicalize(raw))

    @cached_property
    def area(self):
        return int(_kernels.area(self.counts))

    @property
    def shape(self):
        return (self.height, self.width)

    def __eq__(self, other):
        if not isinstance(other, RleMask):
            return NotImplemented
        return (
            self.height == other.height
            and self.width == other.width
            and np.array_equal(self.counts, other.counts)
        )

    def __hash__(self):
        return hash((self.height, self.width, self.counts.tobytes()))

    def __repr__(self):
        return f"RleMask({self.height}x{self.width}, runs={len(self.counts)}, area={self.area})"

    def __reduce__(self):
        return (RleMask, (self.height, self.width, np.array(self.counts)))


def canonicalize(counts):
    """Drop interior zero runs by merging their neighbours.

    A leading zero (mask starts with foreground) is kept; a trailing zero run
    is removed.
    """
    counts = np.asarray(counts, dtype=np.int64)
    if counts.size > 1 and counts[1:].all():
        return counts.astype(COUNTS_DTYPE)
    runs = counts.tolist()
    if not runs:
        return np.zeros(0, dtype=COUNTS_DTYPE)
    out = [runs[0]]
    pending_zero = False
    for c in runs[1:]:
        if c == 0:
            pending_zero = not pending_zero
            continue
        if pending_zero:
            # an odd number of zero runs flips nothing: merge into the previous run
            out[-1] += c
            pending_zero = False
        else:
            out.append(c)
    if len(out) > 1 and out[-1] == 0:
        out.pop()
    return np.asarray(out, dtype=COUNTS_DTYPE)


def encode(grid):
    """Encode a boolean ``(height, width)`` grid."""
    grid = np.asarray(grid, dtype=bool)
    if grid.ndim != 2 or grid.shape[0] <= 0 or grid.shape[1] <= 0:
        raise ValueError(f"expected a non-empty 2-D grid, got shape {grid.shape}")
    h, w = grid.shape
    flat = np.ascontiguousarray(grid.ravel(order="F")).view(np.uint8)
    return RleMask(h, w, _kernels.runs_from_flat(flat))


def decode(mask):
    """Expand to a boolean ``(height, width)`` grid."""
    values = np.zeros(len(mask.counts), dtype=bool)
    values[1::2] = True
    flat = np.repeat(values, mask.counts.astype(np.int64))
    if flat.size != mask.height * mask.width:
        raise RleDecodeError(
            f"run lengths sum to {flat.size}, expected {mask.height * mask.width}"
        )
    return flat.reshape((mask.height, mask.width), order="F")


def area(mask):
    return mask.area


def _check_dims(a, b):
    if a.height != b.height or a.width != b.width:
        raise DimensionMismatchError(
            f"mask sizes differ: {a.height}x{a.width} vs {b.height}x{b.width}"
        )


def intersect_area(a, b):
    _check_dims(a, b)
    return int(_kernels.intersect_area(a.counts, b.counts))


def union_area(a, b):
    _check_dims(a, b)
    return int(_kernels.union_area(a.counts, b.counts))


def empty(height, width):
    return RleMask(height, width, [height * width])


def counts_to_string(mask):
    """Compressed COCO ``counts`` string for ``mask``."""
    return _kernels.counts_to_string(mask.counts)


def counts_from_string(s):
    if isinstance(s, str):
        s = s.encode("ascii")
    return _kernels.counts_from_string(s)


def from_coco(obj, track=None):
    """Build a mask from a COCO RLE dict (``size`` + string or list ``counts``)."""
    try:
        h, w = (int(v) for v in obj["size"])
        counts = obj["counts"]
    except (KeyError, TypeError, ValueError) as exc:
        raise RleDecodeError(f"malformed RLE object: {exc}", track) from None
    if isinstance(counts, (str, bytes)):
        try:
            counts = counts_from_string(counts)
        except (ValueError, UnicodeEncodeError) as exc:
            raise RleDecodeError(str(exc), track) from None
    elif not isinstance(counts, (list, tuple, np.ndarray)):
        raise RleDecodeError("counts must be a string or a list", track)
    return RleMask.from_counts(h, w, counts, track=track)


def to_coco(mask, compressed=True):
    counts = counts_to_string(mask) if compressed else [int(c) for c in mask.counts]
    return {"size": [mask.height, mask.width], "counts": counts}


def frame_stats(a_frames, b_frames):
    """Per-frame ``(intersection, union)`` areas of two equal-length mask lists.

    ``None`` marks an empty frame.  Returns two ``int64`` arrays.
    """
    if len(a_frames) != len(b_frames):
        raise DimensionMismatchError(
            f"sequence lengths differ: {len(a_frames)} vs {len(b_frames)}"
        )
    a_counts = []
    b_counts = []
    for a, b in zip(a_frames, b_frames):
        if a is not None and b is not None:
            _check_dims(a, b)
        a_counts.append(None if a is None else a.counts)
        b_counts.append(None if b is None else b.counts)
    n = len(a_frames)
    inter = np.zeros(n, dtype=np.int64)
    union = np.zeros(n, dtype=np.int64)
    _kernels.frame_stats(a_counts, b_counts, inter, union)
    return inter, union
