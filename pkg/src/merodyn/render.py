"""Parallel parameter-plane classification, components, images and CSV grids.

Cells are laid out image style: ``iy = 0`` is the top row (largest imaginary
part) and ``ix = 0`` the left column.  Cell centres sit at half-pixel offsets.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse import csgraph

from . import _kernels as K
from .errors import BadSeed
from .families import SINGULAR_TOL, FamilySlice
from .orbit import DEFAULT_BUDGET, IterationBudget, Status

MAX_SIDE = 16384
TILE = 64

PIXEL_DTYPE = np.dtype([
    ("status", np.int8),
    ("period", np.int32),
    ("log_abs_multiplier", np.float64),
    ("iterations", np.int32),
])

CSV_HEADER = "ix,iy,re,im,status,period,log_abs_rho,iters"


@dataclass(frozen=True)
class Window:
    center: complex
    width: float
    height: float

    def axes(self, nx: int, ny: int) -> tuple[np.ndarray, np.ndarray]:
        """Real parts of the columns and imaginary parts of the rows."""
        c = complex(self.center)
        xs = c.real - self.width / 2 + (np.arange(nx) + 0.5) * (self.width / nx)
        ys = c.imag + self.height / 2 - (np.arange(ny) + 0.5) * (self.height / ny)
        return xs, ys

    @classmethod
    def square(cls, half: float, center: complex = 0j) -> "Window":
        return cls(complex(center), 2.0 * half, 2.0 * half)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get("MERODYN_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return int(threads)


@dataclass
class PlaneGrid:
    window: Window
    resolution: tuple[int, int]
    cells: np.ndarray  # PIXEL_DTYPE, shape (ny, nx)
    family_id: str
    budget: IterationBudget
    elapsed: float = 0.0
    cycle_point: np.ndarray | None = field(default=None, repr=False)
    log_multiplier: np.ndarray | None = field(default=None, repr=False)
    pole_order: np.ndarray | None = field(default=None, repr=False)
    family: FamilySlice | None = field(default=None, repr=False, compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        nx, ny = self.resolution
        return ny, nx

    @property
    def status(self) -> np.ndarray:
        return self.cells["status"]

    @property
    def period(self) -> np.ndarray:
        return self.cells["period"]

    @property
    def pixel(self) -> tuple[float, float]:
        nx, ny = self.resolution
        return self.window.width / nx, self.window.height / ny

    def lam(self) -> np.ndarray:
        xs, ys = self.window.axes(*self.resolution)
        return xs[None, :] + 1j * ys[:, None]

    def lam_at(self, ix: int, iy: int) -> complex:
        xs, ys = self.window.axes(*self.resolution)
        return complex(xs[ix], ys[iy])

    def cell_of(self, lam: complex) -> tuple[int, int]:
        """(ix, iy) of the cell containing lam; ValueError outside the window."""
        lam = complex(lam)
        nx, ny = self.resolution
        c = complex(self.window.center)
        fx = (lam.real - (c.real - self.window.width / 2)) / self.window.width
        fy = ((c.imag + self.window.height / 2) - lam.imag) / self.window.height
        ix, iy = int(np.floor(fx * nx)), int(np.floor(fy * ny))
        if not (0 <= ix < nx and 0 <= iy < ny):
            raise ValueError(f"{lam} lies outside the window")
        return ix, iy

    def determined(self) -> np.ndarray:
        return self.status != Status.Undetermined


def _tiles(ny: int, nx: int, tile: int):
    for y0 in range(0, ny, tile):
        for x0 in range(0, nx, tile):
            yield y0, min(y0 + tile, ny), x0, min(x0 + tile, nx)


def render_plane(family: FamilySlice, window: Window, resolution, budget: IterationBudget = DEFAULT_BUDGET,
                 threads: int | None = None, tile: int = TILE) -> PlaneGrid:
    """Classify every cell of the window.

    Work is split into ``tile x tile`` blocks served to a thread pool; each
    block writes only its own cells of preallocated buffers, so the result
    does not depend on scheduling or on the thread count.
    """
    nx, ny = (int(r) for r in resolution)
    if not (1 <= nx <= MAX_SIDE and 1 <= ny <= MAX_SIDE):
        raise ValueError(f"resolution must be within 1..{MAX_SIDE} per side, got {nx}x{ny}")
    threads = resolve_threads(threads)
    t0 = time.perf_counter()

    xs, ys = window.axes(nx, ny)
    lams = (xs[None, :] + 1j * ys[:, None]).ravel()
    n = nx * ny
    status = np.zeros(n, np.int8)
    iters = np.zeros(n, np.int32)
    period = np.zeros(n, np.int32)
    base = np.zeros(n, np.complex128)
    logm = np.zeros(n, np.complex128)
    porder = np.zeros(n, np.int32)

    singular = np.zeros(n, bool)
    for s in family.parameter_singularities:
        singular |= np.abs(lams - s) <= SINGULAR_TOL * max(1.0, abs(s))
    status[singular] = Status.ParameterSingularity

    flat = np.arange(n, dtype=np.int64).reshape(ny, nx)
    blocks = []
    for y0, y1, x0, x1 in _tiles(ny, nx, tile):
        idx = flat[y0:y1, x0:x1].ravel()
        idx = idx[~singular[idx]]
        if idx.size:
            blocks.append(idx)

    args = budget.kernel_args()
    code, prm = family.code, family.prm

    def work(idx):
        K.classify_many(code, prm, lams, idx, *args, status, iters, period, base, logm, porder)

    if blocks:
        # compile (or load from cache) before the pool starts
        work(blocks[0][:1])
        if threads == 1 or len(blocks) == 1:
            for b in blocks:
                work(b)
        else:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                list(ex.map(work, blocks))

    cells = np.zeros(n, PIXEL_DTYPE)
    cells["status"] = status
    cells["period"] = period
    cells["iterations"] = iters
    conv = status == Status.ConvergedFreeCycle
    cells["log_abs_multiplier"] = np.where(conv, logm.real, np.nan)
    grid = PlaneGrid(window, (nx, ny), cells.reshape(ny, nx), family.name, budget,
                     time.perf_counter() - t0,
                     cycle_point=base.reshape(ny, nx),
                     log_multiplier=np.where(conv, logm, np.nan + 0j).reshape(ny, nx),
                     pole_order=porder.reshape(ny, nx), family=family)
    return grid


# -- components ----------------------------------------------------------------

_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class ComponentMask:
    mask: np.ndarray
    bbox: tuple[int, int, int, int]  # ix0, iy0, ix1, iy1 inclusive
    boundary: list
    period: int
    touches_edge: bool

    @property
    def size(self) -> int:
        return int(self.mask.sum())


def _linked_labels(grid: PlaneGrid, same: np.ndarray, tol: float) -> np.ndarray:
    fam = grid.family
    ny, nx = same.shape
    right = np.zeros((ny, nx), bool)
    down = np.zeros((ny, nx), bool)
    K.cycle_links(fam.code, fam.prm, grid.lam(), grid.cycle_point, grid.period, same, tol, right, down)
    flat = np.arange(nx * ny).reshape(ny, nx)
    src = np.concatenate([flat[right], flat[down]])
    dst = np.concatenate([flat[right] + 1, flat[down] + nx])
    adj = sparse.coo_matrix((np.ones(src.size, np.int8), (src, dst)), shape=(nx * ny, nx * ny))
    _, labels = csgraph.connected_components(adj, directed=False)
    return labels.reshape(ny, nx)


def component_extract(grid: PlaneGrid, seed_cell, continuity: bool = True,
                      link_tol: float = 1e-6) -> ComponentMask:
    """4-connected cells sharing the seed's status and period.

    ``seed_cell`` is an ``(ix, iy)`` pair or a parameter value.  With
    ``continuity`` (and a grid that carries its family) two neighbours are only
    joined when Newton continuation carries the attracting cycle of each cell
    onto the cycle of the other.  This separates components that merely touch
    at a boundary point, such as two period-one components meeting at a
    pitchfork, which the plain flood fill would merge.
    """
    if isinstance(seed_cell, (complex, float, int, np.complexfloating, np.floating)):
        ix, iy = grid.cell_of(complex(seed_cell))
    else:
        ix, iy = (int(v) for v in seed_cell)
    s = grid.status[iy, ix]
    if s != Status.ConvergedFreeCycle:
        raise BadSeed(f"seed cell ({ix}, {iy}) has status {Status(s).name}")
    p = grid.period[iy, ix]
    same = (grid.status == s) & (grid.period == p)
    if continuity and grid.family is not None and grid.cycle_point is not None:
        labels = _linked_labels(grid, same, link_tol)
    else:
        labels, _ = ndimage.label(same, structure=_FOUR)
    mask = same & (labels == labels[iy, ix])
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    inner = ndimage.binary_erosion(mask, structure=_FOUR, border_value=0)
    by, bx = np.nonzero(mask & ~inner)
    edge = bool(mask[0].any() or mask[-1].any() or mask[:, 0].any() or mask[:, -1].any())
    return ComponentMask(mask, (int(cols[0]), int(rows[0]), int(cols[-1]), int(rows[-1])),
                         list(zip(bx.tolist(), by.tolist())), int(p), edge)


def symmetry_agreement(grid: PlaneGrid, sym, lyap_rtol: float = 1e-6) -> float:
    """Fraction of determined cells whose classification matches their image under ``sym``.

    Cells whose image falls outside the window are skipped.  Statuses must
    agree; for converged cells the periods must agree, or, when the symmetry
    does not preserve periods, log|rho| / period must agree to ``lyap_rtol``.
    """
    nx, ny = grid.resolution
    lam = grid.lam().ravel()
    img = np.array([sym.param_map(z) for z in lam])
    c, w, h = complex(grid.window.center), grid.window.width, grid.window.height
    jx = np.floor((img.real - (c.real - w / 2)) / w * nx).astype(np.int64)
    jy = np.floor(((c.imag + h / 2) - img.imag) / h * ny).astype(np.int64)
    inside = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
    st = grid.status.ravel()
    det = (st != Status.Undetermined) & inside
    src = np.flatnonzero(det)
    dst = jy[src] * nx + jx[src]
    ok = st[src] == st[dst]
    conv = ok & (st[src] == Status.ConvergedFreeCycle)
    per = grid.period.ravel()
    if sym.preserves_period:
        ok[conv] = per[src][conv] == per[dst][conv]
    else:
        lr = grid.cells["log_abs_multiplier"].ravel()
        a = lr[src][conv] / per[src][conv]
        b = lr[dst][conv] / per[dst][conv]
        ok[conv] = np.abs(a - b) <= lyap_rtol * np.maximum(1.0, np.abs(a))
    return float(ok.mean()) if ok.size else 1.0


# -- output --------------------------------------------------------------------

_PERIOD_COLORS = (
    (255, 255, 0), (0, 255, 255), (255, 0, 0), (128, 128, 0),
    (0, 0, 255), (255, 128, 0), (128, 0, 255), (0, 128, 255),
    (255, 0, 128), (128, 255, 0), (0, 255, 128), (128, 64, 0),
    (64, 0, 128), (0, 128, 128), (255, 128, 128), (128, 128, 255),
)


@dataclass(frozen=True)
class Palette:
    periods: tuple = _PERIOD_COLORS
    capture: tuple = (0, 160, 0)
    undetermined: tuple = (0, 0, 0)
    pole_hit: tuple = (255, 255, 255)
    singular: tuple = (255, 0, 255)

    def __getitem__(self, period: int) -> tuple:
        return tuple(self.periods[(int(period) - 1) % len(self.periods)])

    @classmethod
    def from_dict(cls, d: dict) -> "Palette":
        d = dict(d)
        if "periods" in d:
            d["periods"] = tuple(tuple(int(c) for c in rgb) for rgb in d["periods"])
        for k in ("capture", "undetermined", "pole_hit", "singular"):
            if k in d:
                d[k] = tuple(int(c) for c in d[k])
        return cls(**d)

    def to_dict(self) -> dict:
        return {"periods": [list(c) for c in self.periods], "capture": list(self.capture),
                "undetermined": list(self.undetermined), "pole_hit": list(self.pole_hit),
                "singular": list(self.singular)}

    def colorize(self, grid: PlaneGrid) -> np.ndarray:
        st, per = grid.status, grid.period
        rgb = np.zeros(st.shape + (3,), np.uint8)
        rgb[...] = self.undetermined
        lut = np.asarray(self.periods, np.uint8)
        conv = st == Status.ConvergedFreeCycle
        rgb[conv] = lut[(per[conv] - 1) % len(lut)]
        rgb[st == Status.CapturedPersistent] = self.capture
        rgb[st == Status.PoleHit] = self.pole_hit
        rgb[st == Status.ParameterSingularity] = self.singular
        return rgb


DEFAULT_PALETTE = Palette()


def _reraise(exc: OSError, what: str, path):
    raise OSError(exc.errno, f"cannot write {what}: {exc.strerror}", str(path)) from exc


def emit_image(grid: PlaneGrid, palette: Palette | None, path) -> Path:
    """Write a P6 PPM, or a PNG when the suffix is ``.png``."""
    path = Path(path)
    rgb = (palette or DEFAULT_PALETTE).colorize(grid)
    ny, nx = rgb.shape[:2]
    try:
        if path.suffix.lower() == ".png":
            from PIL import Image
            Image.fromarray(rgb, "RGB").save(path)
        else:
            with open(path, "wb") as fh:
                fh.write(b"P6\n%d %d\n255\n" % (nx, ny))
                fh.write(rgb.tobytes())
    except OSError as exc:
        _reraise(exc, "image", path)
    return path


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    parts = data.split(maxsplit=4)
    if parts[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM")
    nx, ny, maxval = int(parts[1]), int(parts[2]), int(parts[3])
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PPM is supported")
    return np.frombuffer(parts[4], np.uint8, count=nx * ny * 3).reshape(ny, nx, 3)


def grid_csv_text(grid: PlaneGrid) -> str:
    ny, nx = grid.shape
    lam = grid.lam().ravel()
    iy, ix = np.divmod(np.arange(nx * ny), nx)
    c = grid.cells.ravel()
    rows = [CSV_HEADER]
    for a, b, re, im, s, p, lr, it in zip(ix.tolist(), iy.tolist(), lam.real.tolist(), lam.imag.tolist(),
                                          c["status"].tolist(), c["period"].tolist(),
                                          c["log_abs_multiplier"].tolist(), c["iterations"].tolist()):
        rows.append(f"{a},{b},{re:.17g},{im:.17g},{s},{p},{lr:.17g},{it}")
    rows.append("")
    return "\n".join(rows)


def emit_grid(grid: PlaneGrid, path) -> Path:
    """One CSV row per cell: ix, iy, re, im, status code, period, log|rho|, iterations."""
    path = Path(path)
    try:
        path.write_text(grid_csv_text(grid))
    except OSError as exc:
        _reraise(exc, "grid", path)
    return path


def read_grid(path) -> np.ndarray:
    """Load a grid CSV back as a structured array (one record per row)."""
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="ascii")
