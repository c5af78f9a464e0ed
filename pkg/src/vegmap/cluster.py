"""Agglomerative grouping of tile vectors and nearest-neighbor suggestion.

Both tools run on cosine distance so that overall brightness differences
between tiles of the same cover type do not dominate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .features import FeatureMatrix, cosine_distance
from .tiling import TileSpec


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: nodes a and b join at the given height."""

    a: int
    b: int
    height: float
    size: int


@dataclass
class Dendrogram:
    """Full merge history over n leaves; node ids n..2n-2 are internal."""

    n_leaves: int
    merges: list[Merge]
    tiles: list[TileSpec]

    def __post_init__(self):
        if self.n_leaves < 1:
            raise ValueError("dendrogram needs at least one leaf")
        if len(self.merges) != self.n_leaves - 1:
            raise ValueError(f"{self.n_leaves} leaves require {self.n_leaves - 1} merges, got {len(self.merges)}")

    def _children(self) -> dict[int, tuple[int, int]]:
        return {self.n_leaves + i: (m.a, m.b) for i, m in enumerate(self.merges)}

    def cut_at_depth(self, depth: int) -> list[list[int]]:
        """Leaf-index groups after severing the tree `depth` levels below the root.

        Depth 0 is the single all-rows cluster; each level at most doubles the
        cluster count. Groups are ordered by their smallest leaf index.
        """
        if depth < 0:
            raise ValueError(f"depth must be >= 0, got {depth}")
        children = self._children()
        roots = [self.n_leaves + len(self.merges) - 1] if self.merges else [0]
        for _ in range(depth):
            nxt = []
            for node in roots:
                nxt.extend(children.get(node, (node,)))
            if nxt == roots:
                break
            roots = nxt
        groups = [sorted(self._leaves_under(node, children)) for node in roots]
        return sorted(groups, key=lambda g: g[0])

    def _leaves_under(self, node: int, children: dict[int, tuple[int, int]]) -> list[int]:
        stack, leaves = [node], []
        while stack:
            cur = stack.pop()
            if cur < self.n_leaves:
                leaves.append(cur)
            else:
                stack.extend(children[cur])
        return leaves

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_leaves": self.n_leaves,
                "tiles": [list(t.key()) for t in self.tiles],
                "merges": [[m.a, m.b, m.height, m.size] for m in self.merges],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Dendrogram":
        raw = json.loads(text)
        tiles = [TileSpec(t[0], int(t[1]), int(t[2]), int(t[3])) for t in raw["tiles"]]
        merges = [Merge(int(a), int(b), float(h), int(s)) for a, b, h, s in raw["merges"]]
        return cls(int(raw["n_leaves"]), merges, tiles)


def _pairwise_cosine(values: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(values, axis=1)
    if (norms == 0.0).any():
        bad = int(np.argmax(norms == 0.0))
        raise ValueError(f"row {bad} is a zero vector; cosine distance undefined")
    unit = values / norms[:, None]
    d = 1.0 - unit @ unit.T
    np.clip(d, 0.0, 2.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d

def hclust(matrix: FeatureMatrix) -> Dendrogram:
    """Average-linkage agglomeration over pairwise cosine distances.

    Equal-distance candidates break toward the pair whose smallest member
    indices come first, so the merge order is reproducible.
    """
    n = len(matrix)
    if n < 1:
        raise ValueError("cannot cluster an empty matrix")
    dist = _pairwise_cosine(matrix.values)
    np.fill_diagonal(dist, np.inf)

    node_id = np.arange(n)
    min_leaf = np.arange(n)
    sizes = np.ones(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    merges = []

    for step in range(n - 1):
        masked = np.where(active[:, None] & active[None, :], dist, np.inf)
        dmin = masked.min()
        cand = np.argwhere(masked == dmin)
        keys = [
            (min(min_leaf[i], min_leaf[j]), max(min_leaf[i], min_leaf[j]), i, j)
            for i, j in cand
            if i < j
        ]
        _, _, i, j = min(keys)

        merges.append(Merge(int(node_id[i]), int(node_id[j]), float(dmin), int(sizes[i] + sizes[j])))
        # Lance-Williams update for average linkage: weighted mean of the
        # two old rows, written into slot i; slot j retires.
        others = active.copy()
        others[i] = others[j] = False
        new_row = (sizes[i] * dist[i] + sizes[j] * dist[j]) / (sizes[i] + sizes[j])
        dist[i, others] = new_row[others]
        dist[others, i] = new_row[others]
        sizes[i] += sizes[j]
        min_leaf[i] = min(min_leaf[i], min_leaf[j])
        node_id[i] = n + step
        active[j] = False

    return Dendrogram(n, merges, list(matrix.tiles))


def nearest_neighbors(
    seeds: FeatureMatrix, pool: FeatureMatrix, k: int
) -> list[tuple[TileSpec, float]]:
    """The k pool tiles closest (min cosine distance) to any seed tile.

    Ties in distance break on the tile key, so suggestions are stable.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if seeds.dim != pool.dim:
        raise ValueError(f"layout mismatch: seeds have {seeds.dim} features, pool has {pool.dim}")
    if len(seeds) == 0 or len(pool) == 0:
        raise ValueError("seeds and pool must be non-empty")
    seed_keys = {t.key() for t in seeds.tiles}
    best = []
    for idx, tile in enumerate(pool.tiles):
        if tile.key() in seed_keys:
            continue
        d = min(cosine_distance(pool.values[idx], seeds.values[s]) for s in range(len(seeds)))
        best.append((d, tile.key(), tile))
    best.sort(key=lambda item: (item[0], item[1]))
    return [(tile, d) for d, _, tile in best[:k]]
