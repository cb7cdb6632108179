from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .influence import InfluenceMatrix
from .model import CostTable, ProductSpec, SlotUniverse, ValidationError, validate_instance


@dataclass(frozen=True)
class Instance:
    """Everything a solver needs: influence matrix, slot costs and product specs."""

    matrix: InfluenceMatrix
    costs: CostTable
    products: Sequence[ProductSpec]
    universe: SlotUniverse | None = None

    def __post_init__(self):
        if len(self.costs) != self.matrix.n_slots:
            raise ValidationError(f"{len(self.costs)} costs for {self.matrix.n_slots} slots")
        for p in self.products:
            self.matrix.product_index(p.product_id)
        object.__setattr__(self, "products", tuple(self.products))

    @property
    def n_slots(self) -> int:
        return self.matrix.n_slots

    def product(self, product_id: str) -> ProductSpec:
        for p in self.products:
            if p.product_id == product_id:
                return p
        raise KeyError(product_id)

    def findings(self) -> list[str]:
        if self.universe is None:
            return []
        return validate_instance(self.universe, self.costs, self.products, self.matrix.per_product_users)
