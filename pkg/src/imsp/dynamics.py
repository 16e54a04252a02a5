"""Fatou component of the attracting origin for polynomial maps.

Pixels are classified by iterating G from their centers.  A pixel is a member
when its orbit reaches |x| < conv_threshold within ``iter_cap`` steps and then
contracts geometrically for ``CONFIRM_STEPS`` more steps; it escapes when
|x| > escape_threshold; otherwise it stays undecided.  K_p is the 4-connected
component of member pixels containing the origin's pixel, and its boundary
cells are the discrete Julia set.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .conjugation import PoincareMap, RecurrenceSpec, eval_q_continued
from .errors import PreconditionError

DEFAULT_BOX = (-2.0, 3.0, -2.0, 2.0)
DEFAULT_RESOLUTION = (512, 512)
DEFAULT_ITER_CAP = 5000
DEFAULT_CONV = 1e-6
DEFAULT_ESCAPE = 1e6
CONFIRM_STEPS = 10
PROBE_FRACTIONS = (0.5, 0.7, 0.9, 0.97)

MEMBER, ESCAPED, UNDECIDED = 1, 0, 2
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class FatouGrid:
    box: tuple
    resolution: tuple          # (nx, ny)
    membership: np.ndarray     # bool, shape (ny, nx), row 0 at im_max
    status: np.ndarray         # MEMBER / ESCAPED / UNDECIDED
    iterations: np.ndarray     # step at which the pixel was decided
    component: np.ndarray      # K_p: member pixels connected to the origin
    boundary_cells: np.ndarray  # (row, col) pairs of the discrete boundary
    iter_cap: int = DEFAULT_ITER_CAP
    conv_threshold: float = DEFAULT_CONV
    escape_threshold: float = DEFAULT_ESCAPE
    spec: RecurrenceSpec | None = None

    @property
    def shape(self) -> tuple:
        return self.membership.shape

    def cell_size(self) -> tuple[float, float]:
        re0, re1, im0, im1 = self.box
        nx, ny = self.resolution
        return (re1 - re0) / nx, (im1 - im0) / ny

    def centers(self) -> np.ndarray:
        return pixel_centers(self.box, self.resolution)

    def pixel_of(self, z) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) of the pixel containing z; -1 where z is outside the box."""
        re0, re1, im0, im1 = self.box
        dx, dy = self.cell_size()
        z = np.asarray(z, dtype=np.complex128)
        col = np.atleast_1d(np.floor((z.real - re0) / dx).astype(int))
        row = np.atleast_1d(np.floor((im1 - z.imag) / dy).astype(int))
        ny, nx = self.shape
        out = (col < 0) | (col >= nx) | (row < 0) | (row >= ny)
        col[out] = -1
        row[out] = -1
        if z.ndim == 0:
            return int(row[0]), int(col[0])
        return row, col

    @classmethod
    def from_membership(cls, membership, box=DEFAULT_BOX, seed=None, **kw) -> "FatouGrid":
        """Wrap a precomputed membership mask (synthetic fixtures, reloads)."""
        m = np.asarray(membership, dtype=bool)
        ny, nx = m.shape
        status = np.where(m, MEMBER, ESCAPED).astype(np.int8)
        comp = _component(m, seed if seed is not None else _seed(box, (nx, ny), m))
        return cls(tuple(box), (nx, ny), m, status, np.zeros(m.shape, np.int32), comp,
                   _boundary(comp), **kw)


def pixel_centers(box, resolution) -> np.ndarray:
    re0, re1, im0, im1 = box
    nx, ny = resolution
    xs = re0 + (np.arange(nx) + 0.5) * (re1 - re0) / nx
    ys = im1 - (np.arange(ny) + 0.5) * (im1 - im0) / ny
    return xs[None, :] + 1j * ys[:, None]


def _seed(box, resolution, membership) -> tuple[int, int] | None:
    re0, re1, im0, im1 = box
    nx, ny = resolution
    if not (re0 <= 0 < re1 and im0 < 0 <= im1):
        # origin outside the box: fall back to the largest member blob
        return None
    col = int((0 - re0) / (re1 - re0) * nx)
    row = int((im1 - 0) / (im1 - im0) * ny)
    return min(row, ny - 1), min(col, nx - 1)


def _component(membership: np.ndarray, seed) -> np.ndarray:
    labels, count = ndimage.label(membership, structure=_FOUR)
    if count == 0:
        return np.zeros_like(membership)
    if seed is None:
        sizes = np.bincount(labels.ravel())[1:]
        return labels == (1 + int(np.argmax(sizes)))
    lab = labels[seed]
    if lab == 0:
        return np.zeros_like(membership)
    return labels == lab


def _boundary(comp: np.ndarray) -> np.ndarray:
    # a member cell is on the boundary if any in-frame 4-neighbour is not in
    # K_p; cells outside the frame do not count as non-members
    outside = ~comp
    edge = np.zeros_like(comp)
    edge[1:, :] |= outside[:-1, :]
    edge[:-1, :] |= outside[1:, :]
    edge[:, 1:] |= outside[:, :-1]
    edge[:, :-1] |= outside[:, 1:]
    return np.argwhere(comp & edge)


def _validate_box(box, resolution):
    re0, re1, im0, im1 = (float(v) for v in box)
    if not (re1 > re0 and im1 > im0):
        raise PreconditionError(f"box {box} has zero or negative area")
    nx, ny = resolution
    if nx < 1 or ny < 1:
        raise PreconditionError("resolution must be positive")


def classify_points(spec: RecurrenceSpec, z: np.ndarray, iter_cap: int,
                    conv: float, escape: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised membership iteration; returns (status, decision step)."""
    a = spec.a
    rho = (1 + abs(a)) / 2 if abs(a) < 1 else 1.0
    coeffs = spec.poly()[::-1]
    flat = np.asarray(z, dtype=np.complex128).ravel()
    status = np.full(flat.size, UNDECIDED, dtype=np.int8)
    steps = np.full(flat.size, iter_cap, dtype=np.int32)
    idx = np.arange(flat.size)
    x = flat.copy()
    streak = np.zeros(flat.size, dtype=np.int16)
    reached = np.full(flat.size, -1, dtype=np.int32)
    prev = np.abs(x)
    # the origin's own pixel may sit exactly on a fixed point
    for it in range(1, iter_cap + CONFIRM_STEPS + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            acc = np.full(x.shape, coeffs[0], dtype=np.complex128)
            for c in coeffs[1:]:
                acc = acc * x + c
        x = acc
        ax = np.abs(x)
        esc = ~(ax <= escape)
        small = ax < conv
        contracting = ax <= rho * prev
        confirming = reached >= 0
        streak = np.where(confirming & small & contracting, streak + 1, 0)
        fresh = ~confirming & small & (it <= iter_cap)
        reached = np.where(fresh, it, np.where(confirming & (streak == 0), -1, reached))
        done_member = confirming & (streak >= CONFIRM_STEPS)
        if np.any(esc):
            status[idx[esc]] = ESCAPED
            steps[idx[esc]] = it
        if np.any(done_member):
            status[idx[done_member]] = MEMBER
            steps[idx[done_member]] = reached[done_member]
        keep = ~(esc | done_member)
        if it >= iter_cap:
            keep &= reached >= 0
        if not np.all(keep):
            idx, x, streak, reached, ax = idx[keep], x[keep], streak[keep], reached[keep], ax[keep]
        prev = ax
        if idx.size == 0:
            break
    return status.reshape(np.shape(z)), steps.reshape(np.shape(z))


def compute_fatou(spec: RecurrenceSpec, box=DEFAULT_BOX, resolution=DEFAULT_RESOLUTION,
                  iter_cap: int = DEFAULT_ITER_CAP, conv_threshold: float = DEFAULT_CONV,
                  escape_threshold: float = DEFAULT_ESCAPE) -> FatouGrid:
    """Classify every pixel of ``box`` at ``resolution`` = (nx, ny)."""
    _validate_box(box, resolution)
    if abs(spec.a) > 1:
        raise PreconditionError("the origin must be attracting (|a| < 1) or parabolic (|a| = 1)")
    if abs(spec.a) == 1:
        warnings.warn("|a| = 1: parabolic origin, membership is only indicative", RuntimeWarning,
                      stacklevel=2)
    box = tuple(float(v) for v in box)
    resolution = (int(resolution[0]), int(resolution[1]))
    status, steps = classify_points(spec, pixel_centers(box, resolution), iter_cap,
                                    conv_threshold, escape_threshold)
    membership = status == MEMBER
    comp = _component(membership, _seed(box, resolution, membership))
    return FatouGrid(box, resolution, membership, status, steps, comp, _boundary(comp),
                     iter_cap, conv_threshold, escape_threshold, spec)


def extract_boundary(grid: FatouGrid) -> np.ndarray:
    """Centers of the boundary cells of K_p as complex numbers."""
    if not grid.component.any():
        raise PreconditionError("K_p is empty: no member cell connected to the origin")
    rows, cols = grid.boundary_cells[:, 0], grid.boundary_cells[:, 1]
    return grid.centers()[rows, cols]


def boundary_to_csv(points: np.ndarray) -> str:
    lines = ["re,im"] + [f"{p.real + 0.0:.17g},{p.imag + 0.0:.17g}" for p in np.asarray(points)]
    return "\n".join(lines) + "\n"


# -- barrier probe --------------------------------------------------------------

@dataclass(frozen=True)
class BarrierProbeReport:
    q_radius: float
    boundary_distance: float
    ray_profiles: list = field(default_factory=list)
    degenerate: bool = False
    note: str = ""

    @property
    def relative_gap(self) -> float:
        if not (math.isfinite(self.q_radius) and math.isfinite(self.boundary_distance)):
            return math.nan
        return abs(self.q_radius - self.boundary_distance) / self.boundary_distance

    def growth_fraction(self) -> float:
        """Share of rays along which |Q| at 0.97 d exceeds |Q| at 0.5 d."""
        ok = [p["abs_q"][-1] > p["abs_q"][0] for p in self.ray_profiles
              if all(math.isfinite(v) for v in p["abs_q"])]
        return sum(ok) / len(ok) if ok else math.nan

    def to_json(self) -> dict:
        return {
            "q_radius": _finite_or_none(self.q_radius),
            "boundary_distance": _finite_or_none(self.boundary_distance),
            "relative_gap": _finite_or_none(self.relative_gap),
            "growth_fraction": _finite_or_none(self.growth_fraction()),
            "degenerate": self.degenerate,
            "note": self.note,
            "ray_profiles": self.ray_profiles,
        }


def _finite_or_none(x):
    return x if isinstance(x, (int, float)) and math.isfinite(x) else None


def _ray_distance(grid: FatouGrid, theta: float) -> float | None:
    dx, dy = grid.cell_size()
    step = 0.5 * min(dx, dy)
    u = complex(math.cos(theta), math.sin(theta))
    re0, re1, im0, im1 = grid.box
    rmax = math.hypot(max(abs(re0), abs(re1)), max(abs(im0), abs(im1)))
    ts = np.arange(step, rmax + step, step)
    rows, cols = grid.pixel_of(ts * u)
    inside = rows >= 0
    in_comp = np.zeros(ts.size, dtype=bool)
    in_comp[inside] = grid.component[rows[inside], cols[inside]]
    leave = np.flatnonzero(~in_comp)
    if leave.size == 0 or not inside[leave[0]]:
        return None  # the ray left the box while still in K_p
    return float(ts[leave[0]])


def barrier_probe(pm: PoincareMap, grid: FatouGrid, n_rays: int = 32) -> BarrierProbeReport:
    """Compare Q's radius of convergence with the distance from 0 to the boundary of K_p."""
    if grid.spec is not None and grid.spec != pm.spec:
        raise PreconditionError("grid and conjugation map come from different recurrences")
    if abs(pm.a) >= 1:
        raise PreconditionError("barrier probe needs an attracting origin (|a| < 1)")
    pts = extract_boundary(grid) if grid.boundary_cells.size else np.array([])
    boundary_distance = float(np.min(np.abs(pts))) if pts.size else math.inf
    q_radius = pm.q_radius
    if not pts.size or not math.isfinite(q_radius):
        return BarrierProbeReport(q_radius, boundary_distance, [], True,
                                  "no finite boundary or no finite radius (linear map?)")
    profiles = []
    for j in range(n_rays):
        theta = 2 * math.pi * j / n_rays
        d = _ray_distance(grid, theta)
        if d is None:
            continue
        u = complex(math.cos(theta), math.sin(theta))
        samples = np.array(PROBE_FRACTIONS) * d * u
        vals = eval_q_continued(pm, samples)
        profiles.append({
            "theta": theta,
            "distance": d,
            "fractions": list(PROBE_FRACTIONS),
            "abs_q": [float(abs(v)) if np.isfinite(v) else math.nan for v in vals],
        })
    return BarrierProbeReport(q_radius, boundary_distance, profiles, False,
                              f"Q series order {pm.order}")


# -- rendering --------------------------------------------------------------------

def render_pgm(grid: FatouGrid, mode: str = "membership") -> bytes:
    """Binary P5 image, one byte per pixel, top row at im_max."""
    ny, nx = grid.shape
    if mode == "membership":
        img = np.where(grid.membership, 255, 0)
    elif mode == "boundary":
        img = np.zeros(grid.shape, dtype=np.int64)
        if grid.boundary_cells.size:
            img[grid.boundary_cells[:, 0], grid.boundary_cells[:, 1]] = 255
    elif mode == "iteration_shading":
        it = grid.iterations.astype(float)
        shade = 1.0 - np.log1p(it) / math.log1p(max(grid.iter_cap, 1))
        img = np.where(grid.membership, 255, np.round(200 * np.clip(shade, 0, 1)))
    else:
        raise PreconditionError(f"unknown render mode {mode!r}")
    header = f"P5\n{nx} {ny}\n255\n".encode("ascii")
    return header + img.astype(np.uint8).tobytes()


def parse_pgm(data: bytes) -> np.ndarray:
    """Inverse of :func:`render_pgm` (used by tests and tools)."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise PreconditionError("not a binary PGM")
    nx, ny = (int(v) for v in parts[1].split())
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(ny, nx)


