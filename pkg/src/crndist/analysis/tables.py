from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..dist import FiniteDistribution, spec_from_dict
from ..errors import ValidationError


@dataclass
class StationaryTable:
    """A stationary law over full species states plus provenance.

    ``domain`` is ``"class"`` (closed-form over a reachability class),
    ``"box"`` (truncated-generator solve) or ``"product"`` (closed-form
    product law). ``boundary_outflow`` is only meaningful for ``"box"``.
    """

    dist: FiniteDistribution
    normalization: float | None = None
    domain: str = "class"
    boundary_outflow: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = self.dist.to_dict()
        doc["M"] = self.normalization
        doc["domain"] = self.domain
        doc["boundary_outflow"] = self.boundary_outflow
        if self.diagnostics:
            doc["diagnostics"] = self.diagnostics
        return doc

    @classmethod
    def from_dict(cls, doc) -> "StationaryTable":
        try:
            base = {k: doc[k] for k in ("dim", "kind", "mass")}
        except KeyError as exc:
            raise ValidationError(f"malformed stationary table: missing {exc}") from exc
        dist = spec_from_dict(base)
        return cls(dist, doc.get("M"), doc.get("domain", "class"),
                   doc.get("boundary_outflow"), dict(doc.get("diagnostics", {})))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
