"""Uniform periodic grid and the spectral calculus every solver stage uses.

The domain is the interval [-L/2, L/2) sampled at n equispaced points.  All
derivatives are Fourier multipliers, quadrature is the plain Riemann sum
(spectrally accurate for smooth periodic data), and off-grid evaluation is
trigonometric interpolation.  Fields are immutable value objects.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


class FieldFormatError(ValueError):
    """A serialized field/pair/wave file has a malformed header or body."""


@dataclass(frozen=True)
class Grid:
    """Periodic grid with n samples on [-L/2, L/2)."""

    n: int
    length: float

    def __post_init__(self) -> None:
        if self.n < 16 or self.n % 2 != 0:
            raise ValueError(f"grid needs an even sample count >= 16, got n={self.n}")
        if not self.length > 0:
            raise ValueError(f"grid length must be positive, got L={self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.dx * np.arange(self.n)

    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers 2*pi*j/L in rfft layout (j = 0 .. n/2)."""
        return 2.0 * np.pi * np.fft.rfftfreq(self.n, d=self.dx)


@dataclass(frozen=True)
class Field:
    """Real samples on a grid."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=float, copy=True)
        if arr.shape != (self.grid.n,):
            raise ValueError(
                f"samples shape {arr.shape} does not match grid n={self.grid.n}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("field samples must all be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)


@dataclass(frozen=True)
class FieldPair:
    """Two fields sharing one grid; the state (f, g) of the coupled system."""

    f: Field
    g: Field

    def __post_init__(self) -> None:
        if self.f.grid != self.g.grid:
            raise ValueError("paired fields must share one grid")

    @property
    def grid(self) -> Grid:
        return self.f.grid


def zero_field(grid: Grid) -> Field:
    return Field(grid, np.zeros(grid.n))


def derivative(u: Field, order: int) -> Field:
    """Spectral derivative of the given order (1, 2 or 3)."""
    if order not in (1, 2, 3):
        raise ValueError(f"derivative order must be 1, 2 or 3, got {order}")
    k = u.grid.wavenumbers()
    spec = np.fft.rfft(u.samples) * (1j * k) ** order
    if order % 2 == 1:
        spec[-1] = 0.0  # the sampled Nyquist mode carries no odd derivative
    return Field(u.grid, np.fft.irfft(spec, n=u.grid.n))


def integral(u: Field) -> float:
    return u.grid.dx * float(np.sum(u.samples))


def inner(u: Field, v: Field) -> float:
    """L2 pairing dx * sum(u v); both fields must share a grid."""
    if u.grid != v.grid:
        raise ValueError("inner product needs fields on one grid")
    return u.grid.dx * float(np.dot(u.samples, v.samples))


def l2_norm_sq(u: Field) -> float:
    return u.grid.dx * float(np.dot(u.samples, u.samples))


def lp_norm(u: Field, p) -> float:
    if p == np.inf:
        return float(np.max(np.abs(u.samples)))
    if p not in (2, 3, 4):
        raise ValueError(f"lp_norm supports p in (2, 3, 4, inf), got {p}")
    return float((u.grid.dx * np.sum(np.abs(u.samples) ** p)) ** (1.0 / p))


def shift(u: Field, s: float) -> Field:
    """Translate u by s (u(x) -> u(x - s)) with spectral phase factors."""
    k = u.grid.wavenumbers()
    spec = np.fft.rfft(u.samples) * np.exp(-1j * k * s)
    # the sampled Nyquist mode shifts through its cosine component only
    spec[-1] = np.fft.rfft(u.samples)[-1] * np.cos(k[-1] * s)
    return Field(u.grid, np.fft.irfft(spec, n=u.grid.n))


def evaluate(u: Field, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of u at arbitrary points."""
    n = u.grid.n
    coeff = np.fft.rfft(u.samples) / n
    k = u.grid.wavenumbers()
    # coefficients are phased relative to the first sample at x = -L/2
    z = np.asarray(points, dtype=float) + 0.5 * u.grid.length
    ang = np.outer(z, k[1:-1])
    vals = (
        coeff[0].real
        + 2.0 * (np.cos(ang) @ coeff[1:-1].real - np.sin(ang) @ coeff[1:-1].imag)
        + coeff[-1].real * np.cos(z * k[-1])
    )
    return vals


def resample(u: Field, target: Grid, scale: float, tail_floor: float = 1e-10) -> Field:
    """Interpolate u at the dilated abscissae x/scale of the target grid.

    Points falling outside the source domain are filled with zeros, which is
    only legitimate when the source tails have decayed below tail_floor
    relative to the peak.
    """
    if not scale > 0:
        raise ValueError(f"resample scale must be positive, got {scale}")
    pts = target.x / scale
    half = 0.5 * u.grid.length
    # fast path: pure domain dilation reading off the original samples
    if target.n == u.grid.n and abs(target.length / scale - u.grid.length) <= 1e-12 * u.grid.length:
        return Field(target, u.samples)
    inside = np.abs(pts) <= half
    out = np.zeros(target.n)
    if not np.all(inside):
        peak = float(np.max(np.abs(u.samples)))
        edge = max(abs(float(u.samples[0])), abs(float(u.samples[-1])))
        if peak > 0 and edge > tail_floor * peak:
            raise ValueError(
                "resample would zero-extend a tail that has not decayed "
                f"(edge/peak = {edge / peak:.3e} > {tail_floor:.1e})"
            )
    if np.any(inside):
        out[inside] = evaluate(u, pts[inside])
    return Field(target, out)


_FLOAT = "%.17g"


def _format_row(values) -> str:
    return " ".join(_FLOAT % v for v in values)


def save_field(path, u: Field) -> None:
    """Write the two-column `x value` format with the grid header."""
    with open(path, "w") as fh:
        fh.write(f"# n={u.grid.n} L={_FLOAT % u.grid.length}\n")
        for x, v in zip(u.grid.x, u.samples):
            fh.write(_format_row((x, v)) + "\n")


_HEADER_RE = re.compile(r"^#\s*n=(\d+)\s+L=([-+0-9.eE]+)\s*$")


def parse_grid_header(line: str) -> Grid:
    m = _HEADER_RE.match(line.strip())
    if m is None:
        raise FieldFormatError(f"malformed grid header: {line.strip()!r}")
    return Grid(int(m.group(1)), float(m.group(2)))


def load_columns(path, ncols: int) -> tuple[Grid, np.ndarray, list[str]]:
    """Read a column file: grid header, optional extra `#` headers, data rows."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise FieldFormatError(f"{path}: empty file")
    grid = parse_grid_header(lines[0])
    extra = []
    row0 = 1
    while row0 < len(lines) and lines[row0].startswith("#"):
        extra.append(lines[row0])
        row0 += 1
    rows = [ln for ln in lines[row0:] if ln.strip()]
    if len(rows) != grid.n:
        raise FieldFormatError(f"{path}: expected {grid.n} rows, found {len(rows)}")
    try:
        data = np.array([[float(tok) for tok in ln.split()] for ln in rows])
    except ValueError as exc:
        raise FieldFormatError(f"{path}: non-numeric row: {exc}") from exc
    if data.shape[1] != ncols:
        raise FieldFormatError(f"{path}: expected {ncols} columns, found {data.shape[1]}")
    return grid, data, extra


def load_field(path) -> Field:
    grid, data, _ = load_columns(path, 2)
    return Field(grid, data[:, 1])
