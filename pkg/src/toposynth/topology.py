"""Genus, Euler characteristic and scene Betti numbers of closed orientable surfaces."""

from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass, field

from .mesh import TriangleMesh, component_count, edges, validate_closed, validate_oriented


class TopologyError(ValueError):
    """A mesh does not meet the closed / oriented / connected precondition."""


class InconsistencyError(RuntimeError):
    pass


@dataclass
class ComponentTopology:
    genus: int
    chi: int
    vertices: int | None = None
    edges: int | None = None
    faces: int | None = None


@dataclass
class TopologySummary:
    components: list[ComponentTopology] = field(default_factory=list)
    scene_betti: tuple[int, int, int] = (0, 0, 0)
    scene_chi: int = 0

    @property
    def genera(self) -> list[int]:
        return [c.genus for c in self.components]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["scene_betti"] = list(self.scene_betti)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> TopologySummary:
        comps = [ComponentTopology(**c) for c in d["components"]]
        return cls(comps, tuple(d["scene_betti"]), int(d["scene_chi"]))


def _counts(mesh: TriangleMesh) -> tuple[int, int, int]:
    used = len(set(mesh.triangles.reshape(-1).tolist()))
    return used, len(edges(mesh)), mesh.n_faces


def component_topology(mesh: TriangleMesh) -> ComponentTopology:
    if mesh.n_faces == 0:
        raise TopologyError("empty mesh")
    if not validate_closed(mesh):
        raise TopologyError("mesh is not closed")
    if not validate_oriented(mesh):
        raise TopologyError("mesh windings are not consistent")
    if component_count(mesh) != 1:
        raise TopologyError("mesh has more than one component")
    v, e, f = _counts(mesh)
    chi = v - e + f
    if (2 - chi) % 2:
        raise InconsistencyError(f"closed oriented surface with odd 2 - chi (chi = {chi})")
    return ComponentTopology((2 - chi) // 2, chi, v, e, f)


def genus_of_component(mesh: TriangleMesh) -> int:
    """g = (2 - chi) / 2 for one closed, consistently wound, connected surface."""
    return component_topology(mesh).genus


def summary_from_genera(genera) -> TopologySummary:
    """Scene summary for a list of component genera, without meshes."""
    comps = [ComponentTopology(int(g), 2 - 2 * int(g)) for g in genera]
    if any(c.genus < 0 for c in comps):
        raise TopologyError("genus must be non-negative")
    c = len(comps)
    betti = (c, sum(2 * x.genus for x in comps), c)
    return TopologySummary(comps, betti, betti[0] - betti[1] + betti[2])


def scene_summary(meshes: list[TriangleMesh]) -> TopologySummary:
    """Per-object genera and the scene Betti triple (C, sum 2 g_i, C)."""
    comps = []
    for i, m in enumerate(meshes):
        try:
            comps.append(component_topology(m))
        except (TopologyError, InconsistencyError) as exc:
            raise type(exc)(f"object {i}: {exc}") from exc
    s = summary_from_genera([c.genus for c in comps])
    s.components = comps
    if s.scene_chi != sum(c.chi for c in comps):
        raise InconsistencyError("Betti-derived chi disagrees with the component sum")
    return s


def ambiguity_witness(a: TopologySummary, b: TopologySummary) -> bool:
    """True when two scenes share Betti numbers but hold different genus multisets."""
    return tuple(a.scene_betti) == tuple(b.scene_betti) and Counter(a.genera) != Counter(b.genera)
