"""Ground-truth mapping from output functions back to original functions."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

ROLES = ("remFunc", "sepFunc", "fusFunc", "trampoline", "unchanged")


@dataclass
class ProvenanceMap:
    origins: dict = field(default_factory=dict)  # name -> set of oriFunc names
    role: dict = field(default_factory=dict)

    @classmethod
    def identity(cls, names) -> "ProvenanceMap":
        p = cls()
        for n in names:
            p.set(n, {n}, "unchanged")
        return p

    def set(self, name: str, origins, role: str) -> None:
        if role not in ROLES:
            raise ValueError(role)
        self.origins[name] = set(origins)
        self.role[name] = role

    def drop(self, name: str) -> None:
        self.origins.pop(name, None)
        self.role.pop(name, None)

    def origins_of(self, name: str) -> set:
        return self.origins.get(name, set())

    def compose(self, later: "ProvenanceMap") -> "ProvenanceMap":
        """Map ``later``'s names through this map's origins.

        Roles from ``later`` win unless it left a function unchanged.
        """
        out = ProvenanceMap()
        for name, mids in later.origins.items():
            origins = set()
            for mid in mids:
                origins |= self.origins.get(mid, {mid})
            role = later.role[name]
            if role == "unchanged":
                role = self.role.get(name, "unchanged")
            out.set(name, origins, role)
        return out

    def to_json(self, seed: int, mode: str) -> str:
        funcs = {
            n: {"origins": sorted(self.origins[n]), "role": self.role[n]}
            for n in sorted(self.origins)
        }
        return json.dumps({"functions": funcs, "seed": seed, "mode": mode}, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ProvenanceMap":
        data = json.loads(text)
        p = cls()
        for n, e in data["functions"].items():
            p.set(n, e["origins"], e["role"])
        return p
