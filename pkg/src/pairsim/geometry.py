"""Decision-boundary geometry and gradient-field grids.

For the binary case (one sn, one sp) the circle loss decides at
an * (sn - Dn) - ap * (sp - Dp) = 0, which is a circle in the (sn, sp)
plane with center ((On + Dn) / 2, (Op + Dp) / 2) and squared radius
((On - Dn)^2 + (Op - Dp)^2) / 4. In reduced mode: center (0, 1), radius
sqrt(2) * m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grads import loss_grad
from .losses import CircleParams, circle_weights
from .simcore import SimilarityGroup

__all__ = [
    "BoundaryCircle",
    "decision_boundary",
    "convergence_target",
    "on_boundary",
    "GridSpec",
    "gradient_field",
    "write_gradient_field_csv",
]

GRADIENT_FIELD_HEADER = "sn,sp,d_sn,d_sp,loss"


@dataclass(frozen=True)
class BoundaryCircle:
    center_sn: float
    center_sp: float
    radius: float


def decision_boundary(p: CircleParams) -> BoundaryCircle:
    """The circular decision boundary of a circle-loss parameterization."""
    c = ((p.on - p.dn) ** 2 + (p.op - p.dp) ** 2) / 4.0
    if c <= 0.0:
        raise ValueError("degenerate boundary")
    return BoundaryCircle(
        center_sn=(p.on + p.dn) / 2.0,
        center_sp=(p.op + p.dp) / 2.0,
        radius=math.sqrt(c),
    )


def convergence_target(m: float) -> tuple[float, float]:
    """The boundary point T = (m, 1 - m) minimizing the gap sp - sn.

    On the reduced boundary, center (0, 1) radius sqrt(2) * m, the gap
    sp - sn is minimized at center + radius * (1, -1) / sqrt(2).
    """
    if not 0.0 < m < 1.0:
        raise ValueError("m must lie in (0, 1)")
    return (m, 1.0 - m)


def on_boundary(sn: float, sp: float, p: CircleParams, tol: float) -> bool:
    """Whether |an * (sn - Dn) - ap * (sp - Dp)| <= tol at this point."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    g = SimilarityGroup(sp=np.array([sp]), sn=np.array([sn]))
    alpha_p, alpha_n = circle_weights(g, p)
    logit = alpha_n[0] * (sn - p.dn) - alpha_p[0] * (sp - p.dp)
    return abs(logit) <= tol


@dataclass(frozen=True)
class GridSpec:
    """Rectangular (sn, sp) grid; defaults match the [0, 1]^2 toy plots."""

    sn_range: tuple[float, float] = (0.0, 1.0)
    sp_range: tuple[float, float] = (0.0, 1.0)
    resolution: int = 101

    def __post_init__(self):
        if self.resolution < 2:
            raise ValueError("grid resolution must be >= 2 per axis")
        if self.sn_range[0] >= self.sn_range[1] or self.sp_range[0] >= self.sp_range[1]:
            raise ValueError("grid ranges must be non-empty intervals")


def gradient_field(loss_id: str, gamma: float, m: float, grid: GridSpec | None = None) -> np.ndarray:
    """Single-pair loss and gradients on a dense (sn, sp) grid.

    Rows are emitted row-major over (sn outer, sp inner) with columns
    (sn, sp, d_sn, d_sp, loss).
    """
    grid = grid or GridSpec()
    sn_axis = np.linspace(*grid.sn_range, grid.resolution)
    sp_axis = np.linspace(*grid.sp_range, grid.resolution)
    rows = np.empty((grid.resolution * grid.resolution, 5))
    idx = 0
    for sn in sn_axis:
        for sp in sp_axis:
            g = SimilarityGroup(sp=np.array([sp]), sn=np.array([sn]))
            lg = loss_grad(loss_id, g, gamma, m)
            rows[idx] = (sn, sp, lg.d_sn[0], lg.d_sp[0], lg.value)
            idx += 1
    return rows


def write_gradient_field_csv(path, rows: np.ndarray) -> None:
    """Serialize a gradient field to CSV at 6 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(GRADIENT_FIELD_HEADER + "\n")
        for sn, sp, d_sn, d_sp, loss in rows:
            fh.write(f"{sn:.6g},{sp:.6g},{d_sn:.6g},{d_sp:.6g},{loss:.6g}\n")
