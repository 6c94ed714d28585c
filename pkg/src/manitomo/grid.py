"""Square pixel grids, field and sinogram containers, and their text file formats.

Conventions used throughout the package:

- grids are square, ``H == W``, centered on the origin with half-width
  ``extent``; the pixel size is ``h = 2 * extent / H``
- pixel ``(i, j)`` is row-major from the top-left corner and has physical
  center ``(-extent + (j + 0.5) * h, extent - (i + 0.5) * h)``, i.e. the
  y axis points up
- sinograms are sampled on signed offsets ``r`` uniform in
  ``[-extent * sqrt(2), extent * sqrt(2)]`` and angles ``phi`` uniform in
  ``[0, pi)``
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIELD_MAGIC = "manitomo-field"
SINO_MAGIC = "manitomo-sino"
FORMAT_VERSION = 1

# 17 significant digits round-trip any float64 exactly.
_FMT = ".17g"


class FileFormatError(ValueError):
    """Raised when a field or sinogram file fails to parse."""


def _fmt(x: float) -> str:
    return format(float(x), _FMT)


def ensure_finite(name: str, arr: np.ndarray) -> None:
    """Raise ValueError if arr contains NaN or Inf."""
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


@dataclass(frozen=True)
class Grid:
    """Square pixel grid covering ``[-extent, extent]^2``."""

    H: int
    W: int
    extent: float = 1.0

    def __post_init__(self):
        if self.H != self.W:
            raise ValueError(f"grid must be square, got {self.H}x{self.W}")
        if self.H < 2:
            raise ValueError(f"grid needs at least 2 pixels per side, got {self.H}")
        if not (self.extent > 0 and np.isfinite(self.extent)):
            raise ValueError(f"extent must be positive and finite, got {self.extent}")

    @property
    def h(self) -> float:
        """Pixel side length."""
        return 2.0 * self.extent / self.H

    @property
    def shape(self) -> tuple[int, int]:
        return (self.H, self.W)


def make_grid(n: int, extent: float = 1.0) -> Grid:
    """Build an n-by-n grid on ``[-extent, extent]^2``."""
    return Grid(int(n), int(n), float(extent))


def pixel_centers(grid: Grid) -> np.ndarray:
    """Physical coordinates of all pixel centers.

    Returns
    -------
    (H, W, 2) array with ``[..., 0]`` the x and ``[..., 1]`` the y coordinate.
    """
    x = -grid.extent + (np.arange(grid.W) + 0.5) * grid.h
    y = grid.extent - (np.arange(grid.H) + 0.5) * grid.h
    X, Y = np.meshgrid(x, y)
    return np.stack([X, Y], axis=-1)


def canonical_offsets(extent: float, n_r: int) -> np.ndarray:
    """Signed ray offsets, uniform over the diagonal half-width of the grid."""
    if n_r < 2:
        raise ValueError(f"need at least 2 offsets, got {n_r}")
    radius = extent * np.sqrt(2.0)
    return np.linspace(-radius, radius, n_r)


def canonical_angles(n_phi: int) -> np.ndarray:
    """Projection angles, uniform over [0, pi) without the endpoint."""
    if n_phi < 1:
        raise ValueError(f"need at least 1 angle, got {n_phi}")
    return np.linspace(0.0, np.pi, n_phi, endpoint=False)


@dataclass(frozen=True)
class VectorField:
    """Values in R^m sampled at the pixel centers of a square grid."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[:2] != (self.grid.H, self.grid.W):
            raise ValueError(
                f"field data must have shape ({self.grid.H}, {self.grid.W}, m), "
                f"got {np.shape(self.data)}"
            )
        if data.shape[2] < 1:
            raise ValueError("field needs at least one channel")
        ensure_finite("field data", data)
        object.__setattr__(self, "data", data)

    @property
    def m(self) -> int:
        """Number of value channels."""
        return self.data.shape[2]


@dataclass(frozen=True)
class AngleField:
    """Scalar angle per pixel, either in radians or 1-normalized (angle / 2pi)."""

    grid: Grid
    data: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.grid.H, self.grid.W):
            raise ValueError(
                f"angle data must have shape ({self.grid.H}, {self.grid.W}), "
                f"got {np.shape(self.data)}"
            )
        ensure_finite("angle data", data)
        object.__setattr__(self, "data", data)

    def radians(self) -> np.ndarray:
        return self.data * (2.0 * np.pi) if self.normalized else self.data

    def to_vector_field(self) -> VectorField:
        """Unit vectors (cos, sin) of the angles."""
        u = self.radians()
        return VectorField(self.grid, np.stack([np.cos(u), np.sin(u)], axis=-1))


@dataclass(frozen=True)
class Sinogram:
    """Samples over (offset, angle) with M value channels.

    ``data[i, j, c]`` is channel c at offset ``offsets[i]`` and angle
    ``angles[j]``.  Offsets and angles must follow the canonical uniform
    sampling so that files, which store only the counts and the extent,
    can round-trip.
    """

    offsets: np.ndarray
    angles: np.ndarray
    data: np.ndarray
    extent: float = 1.0

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.float64)
        angles = np.asarray(self.angles, dtype=np.float64)
        data = np.asarray(self.data, dtype=np.float64)
        if offsets.ndim != 1 or angles.ndim != 1:
            raise ValueError("offsets and angles must be 1-d arrays")
        if data.ndim != 3 or data.shape[:2] != (offsets.size, angles.size):
            raise ValueError(
                f"sinogram data must have shape ({offsets.size}, {angles.size}, M), "
                f"got {np.shape(self.data)}"
            )
        if data.shape[2] < 1:
            raise ValueError("sinogram needs at least one channel")
        ref_off = canonical_offsets(self.extent, offsets.size)
        if not np.allclose(offsets, ref_off, rtol=0.0, atol=1e-9 * self.extent):
            raise ValueError("offsets do not match the canonical uniform sampling")
        ref_ang = canonical_angles(angles.size)
        if not np.allclose(angles, ref_ang, rtol=0.0, atol=1e-12):
            raise ValueError("angles do not match the canonical uniform sampling")
        ensure_finite("sinogram data", data)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "data", data)

    @property
    def n_r(self) -> int:
        return self.offsets.size

    @property
    def n_phi(self) -> int:
        return self.angles.size

    @property
    def m(self) -> int:
        return self.data.shape[2]

    @property
    def dr(self) -> float:
        return float(self.offsets[1] - self.offsets[0])

    @property
    def dphi(self) -> float:
        return np.pi / self.n_phi


def make_sinogram(extent: float, n_r: int, n_phi: int, data: np.ndarray) -> Sinogram:
    """Wrap raw (n_r, n_phi, M) samples with the canonical offsets and angles."""
    return Sinogram(canonical_offsets(extent, n_r), canonical_angles(n_phi), data, extent)


# ---- file I/O ----


def write_field(path: str | Path, field: VectorField) -> None:
    """Write a field to the plain-text format.

    Line 1 is ``manitomo-field 1``, line 2 is ``H W m``, then one line per
    pixel in row-major order with m decimals of 17 significant digits.
    """
    grid = field.grid
    lines = [f"{FIELD_MAGIC} {FORMAT_VERSION}", f"{grid.H} {grid.W} {field.m}"]
    flat = field.data.reshape(grid.H * grid.W, field.m)
    lines.extend(" ".join(_fmt(v) for v in row) for row in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def write_sinogram(path: str | Path, sino: Sinogram) -> None:
    """Write a sinogram to the plain-text format.

    Line 1 is ``manitomo-sino 1``, line 2 is ``n_r n_phi M extent``, then one
    line per (offset, angle) sample, offset-major, with M decimals each.
    """
    lines = [
        f"{SINO_MAGIC} {FORMAT_VERSION}",
        f"{sino.n_r} {sino.n_phi} {sino.m} {_fmt(sino.extent)}",
    ]
    flat = sino.data.reshape(sino.n_r * sino.n_phi, sino.m)
    lines.extend(" ".join(_fmt(v) for v in row) for row in flat)
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_floats(path: Path, lineno: int, line: str, count: int) -> list[float]:
    parts = line.split()
    if len(parts) != count:
        raise FileFormatError(
            f"{path}: line {lineno}: expected {count} values, got {len(parts)}"
        )
    out = []
    for tok in parts:
        try:
            v = float(tok)
        except ValueError:
            raise FileFormatError(
                f"{path}: line {lineno}: not a decimal number: {tok!r}"
            ) from None
        if not np.isfinite(v):
            raise FileFormatError(f"{path}: line {lineno}: non-finite value {tok!r}")
        out.append(v)
    return out


def _read_header(path: Path, lines: list[str], magic: str) -> None:
    if not lines:
        raise FileFormatError(f"{path}: line 1: empty file")
    parts = lines[0].split()
    if len(parts) != 2 or parts[0] != magic:
        raise FileFormatError(f"{path}: line 1: expected header '{magic} <version>'")
    if parts[1] != str(FORMAT_VERSION):
        raise FileFormatError(f"{path}: line 1: unsupported version {parts[1]!r}")


def _parse_dims(path: Path, line: str, names: str) -> list[int]:
    parts = line.split()
    expected = names.split()
    if len(parts) != len(expected):
        raise FileFormatError(f"{path}: line 2: expected '{names}'")
    dims = []
    for name, tok in zip(expected, parts):
        try:
            v = int(tok)
        except ValueError:
            raise FileFormatError(
                f"{path}: line 2: {name} must be an integer, got {tok!r}"
            ) from None
        if v < 1:
            raise FileFormatError(f"{path}: line 2: {name} must be positive, got {v}")
        dims.append(v)
    return dims


def read_field(path: str | Path, extent: float = 1.0) -> VectorField:
    """Read a field file written by write_field.

    The format does not store the physical extent, so it is supplied here
    (default 1).
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    _read_header(path, lines, FIELD_MAGIC)
    if len(lines) < 2:
        raise FileFormatError(f"{path}: line 2: missing dimension line")
    H, W, m = _parse_dims(path, lines[1], "H W m")
    if H != W:
        raise FileFormatError(f"{path}: line 2: grid must be square, got {H}x{W}")
    body = lines[2:]
    if len(body) != H * W:
        raise FileFormatError(
            f"{path}: expected {H * W} data lines, got {len(body)}"
        )
    data = np.empty((H * W, m))
    for k, line in enumerate(body):
        data[k] = _parse_floats(path, k + 3, line, m)
    return VectorField(make_grid(H, extent), data.reshape(H, W, m))


def read_sinogram(path: str | Path) -> Sinogram:
    """Read a sinogram file written by write_sinogram."""
    path = Path(path)
    lines = path.read_text().splitlines()
    _read_header(path, lines, SINO_MAGIC)
    if len(lines) < 2:
        raise FileFormatError(f"{path}: line 2: missing dimension line")
    parts = lines[1].split()
    if len(parts) != 4:
        raise FileFormatError(f"{path}: line 2: expected 'n_r n_phi M extent'")
    n_r, n_phi, m = _parse_dims(path, " ".join(parts[:3]), "n_r n_phi M")
    try:
        extent = float(parts[3])
    except ValueError:
        raise FileFormatError(
            f"{path}: line 2: extent must be a decimal, got {parts[3]!r}"
        ) from None
    if not (np.isfinite(extent) and extent > 0):
        raise FileFormatError(f"{path}: line 2: extent must be positive, got {parts[3]}")
    body = lines[2:]
    if len(body) != n_r * n_phi:
        raise FileFormatError(
            f"{path}: expected {n_r * n_phi} data lines, got {len(body)}"
        )
    data = np.empty((n_r * n_phi, m))
    for k, line in enumerate(body):
        data[k] = _parse_floats(path, k + 3, line, m)
    return make_sinogram(extent, n_r, n_phi, data.reshape(n_r, n_phi, m))
