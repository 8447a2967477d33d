"""Periodic square-lattice geometry.

Sites are flat ids 0..N-1 with (x, y) = (s % L, s // L); all bonds carry the
unit displacement of the step in the unwrapped plane, so a bond that crosses
the periodic boundary still reads (+1, 0) rather than (-(L-1), 0).
"""

from dataclasses import dataclass

# bond order is fixed (right, left, up, down); the engine and its compiled
# twin must process bonds in the same order to stay bit-identical
DISPLACEMENTS = ((1, 0), (-1, 0), (0, 1), (0, -1))


@dataclass(frozen=True)
class LatticeGeometry:
    """L x L torus; N = L**2 sites, each with exactly four periodic bonds."""

    L: int

    def __post_init__(self):
        if self.L < 2:
            raise ValueError(f"lattice side must be >= 2, got {self.L}")

    @property
    def N(self) -> int:
        return self.L * self.L

    def site_xy(self, s: int) -> tuple[int, int]:
        return s % self.L, s // self.L

    def site_id(self, x: int, y: int) -> int:
        return (x % self.L) + (y % self.L) * self.L


def neighbors(geometry: LatticeGeometry, s: int) -> list[tuple[int, tuple[int, int]]]:
    """The four periodic neighbors of s as (site id, unit displacement) pairs.

    On L = 2 the two horizontal (and vertical) bonds reach the same partner
    site; they are still reported as two distinct bonds.
    """
    if not 0 <= s < geometry.N:
        raise ValueError(f"site id {s} out of range for N={geometry.N}")
    x, y = geometry.site_xy(s)
    return [
        (geometry.site_id(x + dx, y + dy), (dx, dy)) for dx, dy in DISPLACEMENTS
    ]
