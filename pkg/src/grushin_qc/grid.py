"""Cell-centred density grids with per-cell measure weights."""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .geometry import abs_power_integral, check_alpha


@dataclass
class DensityGrid:
    """Nonnegative density on an nx-by-ny cell grid over ``bbox``.

    ``bbox`` is (x_lo, x_hi, y_lo, y_hi); ``values`` and ``weights`` have
    shape (nx, ny) and are indexed [i, j] with i along x1.  ``weights`` hold
    the measure of each cell (Lebesgue area, or the Grushin measure
    |x1|^-alpha dx1 dx2, infinite on cells meeting the singular line when
    alpha >= 1).
    """

    bbox: tuple
    nx: int
    ny: int
    values: np.ndarray
    weights: np.ndarray
    metric: str = "euclidean"
    alpha: float = 0.0

    def __post_init__(self):
        self.bbox = tuple(float(b) for b in self.bbox)
        x0, x1, y0, y1 = self.bbox
        if not (x1 > x0 and y1 > y0):
            raise ValueError("degenerate bounding box")
        self.values = np.asarray(self.values, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.values.shape != (self.nx, self.ny) or self.weights.shape != (self.nx, self.ny):
            raise ValueError("values and weights must have shape (nx, ny)")
        if np.any(self.values < 0) or np.any(self.weights < 0):
            raise ValueError("densities and weights must be nonnegative")
        if np.any(~np.isfinite(self.weights) & (self.values != 0)):
            raise ValueError("nonzero density on a cell of infinite measure")

    @classmethod
    def euclidean(cls, bbox, nx, ny, values=None) -> "DensityGrid":
        x0, x1, y0, y1 = bbox
        area = (x1 - x0) / nx * (y1 - y0) / ny
        w = np.full((nx, ny), area)
        v = np.zeros((nx, ny)) if values is None else values
        return cls(bbox, nx, ny, v, w, "euclidean", 0.0)

    @classmethod
    def grushin(cls, bbox, nx, ny, alpha, values=None) -> "DensityGrid":
        alpha = check_alpha(alpha)
        x0, x1, y0, y1 = bbox
        xe = np.linspace(x0, x1, nx + 1)
        col = np.array([abs_power_integral(a, b, alpha) for a, b in zip(xe[:-1], xe[1:])])
        w = np.repeat(col[:, None] * (y1 - y0) / ny, ny, axis=1)
        if values is None:
            v = np.zeros((nx, ny))
        else:
            v = np.where(np.isfinite(w), values, 0.0)
        return cls(bbox, nx, ny, v, w, "grushin", alpha)

    def like(self, values) -> "DensityGrid":
        return DensityGrid(self.bbox, self.nx, self.ny, values, self.weights, self.metric, self.alpha)

    @property
    def x_edges(self):
        return np.linspace(self.bbox[0], self.bbox[1], self.nx + 1)

    @property
    def y_edges(self):
        return np.linspace(self.bbox[2], self.bbox[3], self.ny + 1)

    @property
    def x_centers(self):
        e = self.x_edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def y_centers(self):
        e = self.y_edges
        return 0.5 * (e[:-1] + e[1:])

    @property
    def cell_size(self):
        x0, x1, y0, y1 = self.bbox
        return (x1 - x0) / self.nx, (y1 - y0) / self.ny

    @property
    def pinned(self) -> np.ndarray:
        """Cells of infinite measure, where the density is held at zero."""
        return ~np.isfinite(self.weights)

    def contains(self, pts, slack: float = 1e-9) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        x0, x1, y0, y1 = self.bbox
        sx, sy = slack * (x1 - x0), slack * (y1 - y0)
        return (
            (pts[..., 0] >= x0 - sx) & (pts[..., 0] <= x1 + sx)
            & (pts[..., 1] >= y0 - sy) & (pts[..., 1] <= y1 + sy)
        )

    def bilinear_stencil(self, pts):
        """Flat cell indices (m, 4) and bilinear weights (m, 4) at ``pts``.

        Interpolation is between cell centres; outside the outermost centres
        the stencil clamps to the boundary cells.
        """
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        hx, hy = self.cell_size
        fx = (pts[:, 0] - self.bbox[0]) / hx - 0.5
        fy = (pts[:, 1] - self.bbox[2]) / hy - 0.5
        fx = np.clip(fx, 0.0, self.nx - 1)
        fy = np.clip(fy, 0.0, self.ny - 1)
        i0 = np.minimum(np.floor(fx).astype(int), max(self.nx - 2, 0))
        j0 = np.minimum(np.floor(fy).astype(int), max(self.ny - 2, 0))
        tx, ty = fx - i0, fy - j0
        i1 = np.minimum(i0 + 1, self.nx - 1)
        j1 = np.minimum(j0 + 1, self.ny - 1)
        idx = np.stack([i0 * self.ny + j0, i1 * self.ny + j0, i0 * self.ny + j1, i1 * self.ny + j1], axis=1)
        w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty], axis=1)
        return idx, w

    def sample(self, pts) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        idx, w = self.bilinear_stencil(pts)
        out = np.sum(self.values.ravel()[idx] * w, axis=1)
        return out.reshape(pts.shape[:-1])

    def cell_of(self, pts):
        """Indices (i, j) of the cells containing ``pts`` (clamped)."""
        pts = np.asarray(pts, dtype=float)
        hx, hy = self.cell_size
        i = np.clip(((pts[..., 0] - self.bbox[0]) // hx).astype(int), 0, self.nx - 1)
        j = np.clip(((pts[..., 1] - self.bbox[2]) // hy).astype(int), 0, self.ny - 1)
        return i, j

    def energy(self) -> float:
        """Sum of weight * value^2, with pinned cells contributing zero."""
        live = ~self.pinned
        return float(np.sum(self.weights[live] * self.values[live] ** 2))

    def to_csv(self) -> str:
        """Heightmap rows ``i,j,x,y,value`` (one per cell, LF endings)."""
        buf = io.StringIO()
        buf.write("i,j,x,y,value\n")
        xc, yc = self.x_centers, self.y_centers
        for i in range(self.nx):
            for j in range(self.ny):
                buf.write(f"{i},{j},{float(xc[i])!r},{float(yc[j])!r},{float(self.values[i, j])!r}\n")
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "bbox": list(self.bbox), "metric": self.metric}
