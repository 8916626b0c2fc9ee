"""Image-cube ingestion, bandwidth selection, score maps, and synthetic data.

A cube is stored as CSV (one pixel per row, bands as columns, row-major
top-left pixel order) next to a small text header ``width=W height=H
bands=M``.  Score maps are min-max normalized to [0, 1] per map; a constant
map normalizes to all zeros.  PGM output is 16-bit binary (big-endian), so
identical runs produce identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .kernels import RBF, KernelSpec, gram
from .model import SparseSvddModel
from .svdd import SolverConfig, solve_svdd

PGM_MAXVAL = 65535


@dataclass(frozen=True)
class Rect:
    """Pixel rectangle: origin (x, y), size (w, h); must fit in the image."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1 or self.x < 0 or self.y < 0:
            raise DataError(f"invalid rectangle {self}")


@dataclass(frozen=True)
class ImageCube:
    """W x H image with M bands; ``values`` rows are pixels in row-major order."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if self.width < 1 or self.height < 1:
            raise DataError("cube must have positive width and height")
        if values.ndim != 2 or values.shape[0] != self.width * self.height:
            raise DataError(
                f"cube has {values.shape[0]} pixel rows, expected "
                f"{self.width}x{self.height} = {self.width * self.height}"
            )
        if values.shape[1] < 1:
            raise DataError("cube must have at least one band")
        if not np.all(np.isfinite(values)):
            raise DataError("cube contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def bands(self) -> int:
        return self.values.shape[1]

    def patch(self, rect: Rect) -> np.ndarray:
        """Pixels of a rectangle, row-major within the rectangle."""
        if rect.x + rect.w > self.width or rect.y + rect.h > self.height:
            raise DataError(f"rectangle {rect} does not fit in {self.width}x{self.height} image")
        grid = self.values.reshape(self.height, self.width, self.bands)
        block = grid[rect.y : rect.y + rect.h, rect.x : rect.x + rect.w, :]
        return block.reshape(rect.w * rect.h, self.bands).copy()


@dataclass(frozen=True)
class ScoreMap:
    """Raw distance-ratio grid plus its [0, 1] min-max normalization."""

    width: int
    height: int
    raw: np.ndarray
    normalized: np.ndarray

    def __post_init__(self) -> None:
        self.raw.setflags(write=False)
        self.normalized.setflags(write=False)


def parse_header(text: str) -> tuple[int, int, int]:
    """Parse ``width=W height=H bands=M`` (any whitespace between tokens)."""
    fields: dict[str, int] = {}
    for token in text.split():
        if "=" not in token:
            raise DataError(f"bad header token {token!r}")
        key, _, value = token.partition("=")
        if key not in ("width", "height", "bands"):
            raise DataError(f"unknown header key {key!r}")
        if key in fields:
            raise DataError(f"duplicate header key {key!r}")
        try:
            fields[key] = int(value)
        except ValueError as exc:
            raise DataError(f"bad header value {token!r}") from exc
    for key in ("width", "height", "bands"):
        if key not in fields:
            raise DataError(f"header is missing {key!r}")
        if fields[key] < 1:
            raise DataError(f"header {key} must be >= 1")
    return fields["width"], fields["height"], fields["bands"]


def load_cube(path, header_path) -> ImageCube:
    """Read a cube CSV plus its geometry header, validating all counts."""
    try:
        with open(header_path, "r", encoding="ascii") as fh:
            width, height, bands = parse_header(fh.read())
    except OSError as exc:
        raise DataError(f"cannot read header {header_path}: {exc}") from exc
    rows = []
    try:
        with open(path, "r", encoding="ascii") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != bands:
                    raise DataError(
                        f"{path} line {lineno}: {len(parts)} columns, expected {bands} bands"
                    )
                try:
                    rows.append([float(p) for p in parts])
                except ValueError as exc:
                    raise DataError(f"{path} line {lineno}: non-numeric cell") from exc
    except OSError as exc:
        raise DataError(f"cannot read cube {path}: {exc}") from exc
    if len(rows) != width * height:
        raise DataError(
            f"{path}: {len(rows)} pixel rows, header declares {width}x{height} = {width * height}"
        )
    return ImageCube(width=width, height=height, values=np.asarray(rows, dtype=float))


def write_cube(cube: ImageCube, path, header_path) -> None:
    """Write the CSV + header pair; floats carry 17 significant digits."""
    with open(header_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"width={cube.width} height={cube.height} bands={cube.bands}\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row in cube.values:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")


def _region_pixels(cube: ImageCube, rects: list[Rect]) -> np.ndarray:
    return np.vstack([cube.patch(r) for r in rects])


def bandwidth_max_scores(
    cube: ImageCube,
    patch: Rect,
    n_regions: int,
    region_size: tuple[int, int],
    sigma_grid: list[float],
    seed: int,
    C: float = 1.0,
) -> list[float]:
    """Max background-region score of a plain RBF sphere, per grid bandwidth.

    The ``n_regions`` windows are sampled once from the seeded generator and
    shared by every candidate bandwidth.
    """
    if not sigma_grid:
        raise DataError("sigma grid is empty")
    if any(not np.isfinite(s) or s <= 0 for s in sigma_grid):
        raise DataError("sigma grid values must be positive")
    if n_regions < 1:
        raise DataError("n_regions must be >= 1")
    rw, rh = region_size
    if rw < 1 or rh < 1 or rw > cube.width or rh > cube.height:
        raise DataError(f"region size {rw}x{rh} does not fit in the image")

    train = cube.patch(patch)
    if np.all(train == train[0]):
        raise DataError("degenerate training patch: all pixels identical")

    rng = np.random.default_rng(seed)
    xs = rng.integers(0, cube.width - rw + 1, size=n_regions)
    ys = rng.integers(0, cube.height - rh + 1, size=n_regions)
    pixels = _region_pixels(cube, [Rect(int(x), int(y), rw, rh) for x, y in zip(xs, ys)])

    sq_train = np.einsum("ij,ij->i", train, train)
    sq_pix = np.einsum("ij,ij->i", pixels, pixels)
    d2 = np.maximum(sq_pix[:, None] + sq_train[None, :] - 2.0 * (pixels @ train.T), 0.0)

    maxima = []
    for sigma in sigma_grid:
        spec = KernelSpec(RBF, float(sigma))
        G = gram(spec, train)
        sol = solve_svdd(G, SolverConfig(C=C))
        if sol.radius_sq <= 0.0:
            raise NumericalError(f"zero-radius sphere at bandwidth {sigma}")
        cross = np.exp(-d2 / (2.0 * spec.bandwidth**2))
        center_norm_sq = float(sol.alpha @ (G.values @ sol.alpha))
        dist_sq = np.maximum(1.0 - 2.0 * (cross @ sol.alpha) + center_norm_sq, 0.0)
        maxima.append(float(np.sqrt(dist_sq.max() / sol.radius_sq)))
    return maxima


def select_bandwidth(
    cube: ImageCube,
    patch: Rect,
    n_regions: int,
    region_size: tuple[int, int],
    sigma_grid: list[float],
    seed: int,
    C: float = 1.0,
) -> float:
    """Grid bandwidth minimizing the max background score; ties -> smaller."""
    order = np.argsort(sigma_grid, kind="stable")
    sorted_grid = [float(sigma_grid[i]) for i in order]
    maxima = bandwidth_max_scores(cube, patch, n_regions, region_size, sorted_grid, seed, C)
    best = 0
    for i in range(1, len(sorted_grid)):
        if maxima[i] < maxima[best]:
            best = i
    return sorted_grid[best]


def build_scoremap(model: SparseSvddModel, cube: ImageCube) -> ScoreMap:
    """Score every pixel and min-max normalize the resulting grid."""
    if cube.bands != model.input_dim:
        raise DataError(f"cube has {cube.bands} bands, model expects {model.input_dim}")
    raw = model.predict(cube.values).reshape(cube.height, cube.width)
    if not np.all(np.isfinite(raw)):
        raise NumericalError("score map contains non-finite values")
    lo, hi = float(raw.min()), float(raw.max())
    if hi > lo:
        normalized = (raw - lo) / (hi - lo)
    else:
        normalized = np.zeros_like(raw)
    return ScoreMap(width=cube.width, height=cube.height, raw=raw, normalized=normalized)


def write_pgm(score_map: ScoreMap, path) -> None:
    """16-bit binary PGM of the normalized map, row-major from the top-left.

    Sample value = round-half-up(normalized * 65535), most significant byte
    first, so output bytes are identical across platforms.
    """
    levels = np.floor(score_map.normalized * PGM_MAXVAL + 0.5).astype(">u2")
    header = f"P5\n{score_map.width} {score_map.height}\n{PGM_MAXVAL}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(levels.tobytes())


def write_truth(labels: np.ndarray, path) -> None:
    """One 0/1 label per line, pixel row-major order."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for v in labels:
            fh.write(f"{int(v)}\n")


def read_truth(path) -> np.ndarray:
    try:
        with open(path, "r", encoding="ascii") as fh:
            labels = [int(line.strip()) for line in fh if line.strip()]
    except (OSError, ValueError) as exc:
        raise DataError(f"cannot read truth file {path}: {exc}") from exc
    return np.asarray(labels, dtype=int)


def generate_synthetic(
    seed: int,
    n_background: int,
    width: int,
    height: int,
    bands: int,
    informative: list[int],
    anomaly_count: int,
    offset_scale: float,
    informative_variance: float = 10.0,
) -> tuple[ImageCube, np.ndarray]:
    """Seeded synthetic cube: Gaussian background plus offset anomalies.

    Background bands are unit-variance zero-mean noise except the informative
    bands, which get ``informative_variance``.  Anomalous pixels (uniformly
    placed) are shifted by ``offset_scale`` along the informative bands only.
    ``n_background + anomaly_count`` must equal the pixel count.  Returns the
    cube and the 0/1 anomaly labels.
    """
    if width < 1 or height < 1 or bands < 1:
        raise DataError("invalid geometry: width, height, bands must be >= 1")
    total = width * height
    if anomaly_count < 0 or n_background < 0 or n_background + anomaly_count != total:
        raise DataError(
            f"invalid geometry: background {n_background} + anomalies {anomaly_count} "
            f"must equal {width}x{height} = {total}"
        )
    informative_idx = np.asarray(sorted(set(int(i) for i in informative)), dtype=int)
    if informative_idx.size and (informative_idx[0] < 0 or informative_idx[-1] >= bands):
        raise DataError("informative band index out of range")
    if informative_variance <= 0:
        raise DataError("informative variance must be positive")

    rng = np.random.default_rng(seed)
    values = rng.standard_normal((total, bands))
    values[:, informative_idx] *= np.sqrt(informative_variance)
    labels = np.zeros(total, dtype=int)
    if anomaly_count > 0:
        positions = rng.choice(total, size=anomaly_count, replace=False)
        labels[positions] = 1
        for pos in positions:
            values[pos, informative_idx] += offset_scale
    return ImageCube(width=width, height=height, values=values), labels
