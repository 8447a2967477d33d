"""Union-find over open lattice sites with wrap (winding) detection.

Every site stores the integer displacement to its parent measured in the
unwrapped plane.  `find` composes these along the path to the root while
compressing it, so joining two sites that are already connected exposes a
cycle: when the displacement recorded in the tree disagrees with the one
claimed by the new bond, the cluster winds around the torus, and the
disagreement is a multiple of L in each wrapped coordinate.

Offsets are kept as raw integers (never reduced mod L); they stay bounded by
the cluster extent in the unwrapped plane, which cannot exceed the number of
open sites.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import LatticeGeometry

CLOSED_UNTRIED = 0
OPEN = 1
CLOSED_TRIED = 2

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class WrapEvent:
    """First winding of a cluster around the torus in one direction."""

    direction: str  # HORIZONTAL or VERTICAL
    attempt_index: int  # 1-based position in the attempt schedule


class ClusterForest:
    """Weighted union-find with path compression and displacement vectors.

    One instance belongs to one run; it is never shared between concurrent
    runs.  Union attaches the smaller-volume root under the larger, breaking
    ties toward the lower root id, so identical operation sequences rebuild
    identical forests.
    """

    def __init__(self, geometry: LatticeGeometry):
        self.geometry = geometry
        n = geometry.N
        self.parent = np.arange(n, dtype=np.int64)
        self.volume = np.zeros(n, dtype=np.int64)
        self.offset = np.zeros((n, 2), dtype=np.int64)
        self.state = np.full(n, CLOSED_UNTRIED, dtype=np.uint8)
        self.opens = 0

    def open_site(self, s: int) -> None:
        """Turn a closed-untried site into a singleton cluster."""
        if self.state[s] != CLOSED_UNTRIED:
            raise ValueError(f"site {s} was already attempted")
        self.state[s] = OPEN
        self.parent[s] = s
        self.volume[s] = 1
        self.offset[s] = 0
        self.opens += 1

    def mark_tried(self, s: int) -> None:
        """Permanently close a site whose opening attempt was rejected."""
        if self.state[s] != CLOSED_UNTRIED:
            raise ValueError(f"site {s} was already attempted")
        self.state[s] = CLOSED_TRIED

    def find(self, s: int) -> tuple[int, tuple[int, int]]:
        """Root of s and the displacement s -> root; compresses the path."""
        if self.state[s] != OPEN:
            raise ValueError(f"find() on closed site {s}")
        parent = self.parent
        offset = self.offset
        root = s
        ox = oy = 0
        while parent[root] != root:
            ox += offset[root, 0]
            oy += offset[root, 1]
            root = parent[root]
        root = int(root)
        # second pass: every site on the path now points straight at the root
        cur, cx, cy = s, int(ox), int(oy)
        while parent[cur] != cur:
            nxt = int(parent[cur])
            tx = cx - int(offset[cur, 0])
            ty = cy - int(offset[cur, 1])
            parent[cur] = root
            offset[cur, 0] = cx
            offset[cur, 1] = cy
            cur, cx, cy = nxt, tx, ty
        return root, (int(ox), int(oy))

    def union(self, a: int, b: int, displacement: tuple[int, int]):
        """Join the clusters of open sites a, b through one bond a -> b.

        `displacement` is the unit bond vector in the unwrapped plane.
        Returns ("merged", None) when two clusters were fused, or
        ("same", wraps) when a and b were already connected, where wraps
        lists the directions (possibly none) in which this bond closes a
        cycle around the torus.
        """
        ra, (ax, ay) = self.find(a)
        rb, (bx, by) = self.find(b)
        dx, dy = displacement
        if ra == rb:
            wraps = []
            if ax - bx != dx:
                wraps.append(HORIZONTAL)
            if ay - by != dy:
                wraps.append(VERTICAL)
            return "same", tuple(wraps)
        va = int(self.volume[ra])
        vb = int(self.volume[rb])
        if vb > va or (vb == va and rb < ra):
            ra, rb = rb, ra
            ax, ay, bx, by = bx, by, ax, ay
            dx, dy = -dx, -dy
        # rb -> ra equals (rb -> b) + (b -> a) + (a -> ra) in the plane
        self.parent[rb] = ra
        self.offset[rb, 0] = ax - bx - dx
        self.offset[rb, 1] = ay - by - dy
        self.volume[ra] += self.volume[rb]
        return "merged", None

    def root_volumes(self) -> dict[int, int]:
        """Volumes of every current cluster keyed by root id."""
        ids = np.arange(self.geometry.N)
        roots = np.flatnonzero((self.state == OPEN) & (self.parent == ids))
        return {int(r): int(self.volume[r]) for r in roots}
