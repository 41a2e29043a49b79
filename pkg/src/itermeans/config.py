"""Numeric configuration: tolerances, grids, and iteration caps."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """A 1-D sampling grid on the positive half-line."""

    lo: float = 0.1
    hi: float = 10.0
    n: int = 21
    log: bool = True

    def points(self) -> np.ndarray:
        if self.lo <= 0 or self.hi <= self.lo or self.n < 2:
            raise ValueError(f"invalid grid {self.lo}:{self.hi}:{self.n}")
        if self.log:
            return np.geomspace(self.lo, self.hi, self.n)
        return np.linspace(self.lo, self.hi, self.n)

    def mesh(self):
        xs = self.points()
        return np.meshgrid(xs, xs, indexing="ij")

    def to_dict(self):
        return {"lo": self.lo, "hi": self.hi, "n": self.n, "log": self.log}

    @staticmethod
    def parse(text: str) -> "GridSpec":
        """Parse ``lo:hi:n`` with an optional ``:lin`` suffix (log default)."""
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError(f"grid spec must be lo:hi:n[:lin|:log], got {text!r}")
        log = True
        if len(parts) == 4:
            if parts[3] not in ("log", "lin"):
                raise ValueError(f"grid scale must be 'log' or 'lin', got {parts[3]!r}")
            log = parts[3] == "log"
        return GridSpec(float(parts[0]), float(parts[1]), int(parts[2]), log)


@dataclass(frozen=True)
class NumericsConfig:
    """Tolerances, truncation policy, and iteration caps.

    All relative tolerances are applied against ``1 + |reference value|`` so
    they behave sensibly near zero. ``series_tol`` tightens by a factor of 10
    per nesting level when series are stacked inside each other.
    """

    series_tol: float = 1e-12
    inverse_tol: float = 1e-12
    reflexive_tol: float = 1e-8
    internal_tol: float = 1e-10
    strict_tol: float = 1e-12
    symmetry_tol: float = 1e-9
    hypothesis_tol: float = 1e-8
    gauss_tol: float = 1e-12
    divergence_cap: float = 1e12
    max_terms: int = 4000
    max_root_iters: int = 200
    max_bracket_expansions: int = 200
    gauss_max_iters: int = 500
    grid: GridSpec = field(default_factory=GridSpec)
    # wide grid used for monotonicity/surjectivity sampling and displacement
    validation_grid: GridSpec = field(default_factory=lambda: GridSpec(1e-6, 1e6, 256))

    def kernel_tuple(self):
        """Pack the fields the compute kernels need into a flat tuple."""
        return (
            self.series_tol,
            self.inverse_tol,
            self.divergence_cap,
            float(self.max_terms),
            float(self.max_root_iters),
            float(self.max_bracket_expansions),
        )

    def with_(self, **kw) -> "NumericsConfig":
        return replace(self, **kw)

    def to_dict(self):
        return {
            "series_tol": self.series_tol,
            "inverse_tol": self.inverse_tol,
            "reflexive_tol": self.reflexive_tol,
            "internal_tol": self.internal_tol,
            "strict_tol": self.strict_tol,
            "symmetry_tol": self.symmetry_tol,
            "hypothesis_tol": self.hypothesis_tol,
            "gauss_tol": self.gauss_tol,
            "divergence_cap": self.divergence_cap,
            "max_terms": self.max_terms,
            "max_root_iters": self.max_root_iters,
            "max_bracket_expansions": self.max_bracket_expansions,
            "gauss_max_iters": self.gauss_max_iters,
            "grid": self.grid.to_dict(),
            "validation_grid": self.validation_grid.to_dict(),
        }


DEFAULT_CONFIG = NumericsConfig()
