from __future__ import annotations

from dataclasses import dataclass

from ..exceptions import SpecError


@dataclass(frozen=True)
class PairStructure:
    """Partition of the input columns into dependent pairs and lone singletons.

    Blocks are tuples of zero-based column indices.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(int(i) for i in b) for b in self.blocks)
        if not blocks:
            raise SpecError("pair structure needs at least one block")
        if any(len(b) not in (1, 2) for b in blocks):
            raise SpecError("every block must hold one or two columns")
        flat = [i for b in blocks for i in b]
        if sorted(flat) != list(range(len(flat))):
            raise SpecError(f"blocks {blocks} do not partition columns 0..{len(flat) - 1}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def pairs(self) -> tuple:
        return tuple(b for b in self.blocks if len(b) == 2)

    @property
    def singletons(self) -> tuple:
        return tuple(b[0] for b in self.blocks if len(b) == 1)

    @classmethod
    def consecutive(cls, p: int) -> "PairStructure":
        """Pairs (0,1), (2,3), ...; an odd last column becomes a singleton."""
        blocks = [(i, i + 1) for i in range(0, p - 1, 2)]
        if p % 2:
            blocks.append((p - 1,))
        return cls(tuple(blocks))
