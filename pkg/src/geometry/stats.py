"""
Residual statistics and trace-fit results shared by soliton checks and reports
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.geometry.manifold import Point


class ResidualStats(BaseModel):
    """Pointwise residual summary over a grid"""

    model_config = ConfigDict(frozen=True)

    max_abs: float = Field(..., ge=0.0, description="Largest |component| over all points")
    mean_abs: float = Field(..., ge=0.0, description="Mean |component| over points and components")
    worst_point: dict[str, float] = Field(..., description="Grid point of the largest residual")
    worst_component: list[str] = Field(..., description="Coordinate names indexing the worst entry")
    per_block: list[list[float]] = Field(..., description="max |residual| per block pair")

    @classmethod
    def from_samples(cls, points: Sequence[Point], residuals: np.ndarray,
                     row_coords: Sequence[str], col_coords: Optional[Sequence[str]] = None,
                     row_blocks: Optional[Sequence[slice]] = None,
                     col_blocks: Optional[Sequence[slice]] = None) -> ResidualStats:
        """
        Summarize residuals of shape (points, rows, cols).

        Args:
            points: Grid points in order
            residuals: Residual tensor per point
            row_coords: Coordinate names for the row index
            col_coords: Coordinate names for the column index (defaults to rows)
            row_blocks: Row partition for the per-block table (defaults to one block)
            col_blocks: Column partition (defaults to the row partition)
        """
        col_coords = row_coords if col_coords is None else col_coords
        data = np.abs(np.asarray(residuals, dtype=float).reshape(
            len(points), len(row_coords), len(col_coords)))
        row_blocks = list(row_blocks) if row_blocks else [slice(0, len(row_coords))]
        col_blocks = list(col_blocks) if col_blocks else row_blocks
        if data.size == 0:
            return cls(max_abs=0.0, mean_abs=0.0, worst_point={}, worst_component=[],
                       per_block=[[0.0] * len(col_blocks) for _ in row_blocks])
        flat = int(np.argmax(data))
        p, i, j = np.unravel_index(flat, data.shape)
        per_block = [
            [float(data[:, rows, cols].max()) if data[:, rows, cols].size else 0.0
             for cols in col_blocks]
            for rows in row_blocks
        ]
        return cls(
            max_abs=float(data.max()),
            mean_abs=float(data.mean()),
            worst_point=points[int(p)].as_dict(),
            worst_component=[row_coords[int(i)], col_coords[int(j)]],
            per_block=per_block,
        )


class FitResult(BaseModel):
    """Trace-fitted proportionality factor per grid point plus the leftover residual"""

    model_config = ConfigDict(frozen=True)

    factor_samples: list[float]
    spread: float = Field(..., ge=0.0)
    mean: float
    residual: ResidualStats

    @classmethod
    def from_samples(cls, samples: Sequence[float], residual: ResidualStats) -> FitResult:
        values = np.asarray(samples, dtype=float)
        return cls(
            factor_samples=[float(v) for v in values],
            spread=float(values.max() - values.min()) if values.size else 0.0,
            mean=float(values.mean()) if values.size else 0.0,
            residual=residual,
        )

    def holds(self, tolerance: float, constant: bool = False) -> bool:
        if self.residual.max_abs >= tolerance:
            return False
        return self.spread < tolerance if constant else True
