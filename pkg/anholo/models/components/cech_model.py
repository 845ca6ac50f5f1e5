from itertools import combinations
from typing import Any, Dict, List, Optional

import networkx as nx
import numpy as np
from pydantic import BaseModel, validate_arguments

from anholo.schemas.cech import (
    Cochain,
    CocycleCheck,
    CohomologyReport,
    Cover,
    CoverBundle,
    GluedSection,
    GluingReport,
    GroupSpec,
    LocalSections,
    PreHilbertProduct,
    Simplex,
    SpinObstructionReport,
    format_key,
)
from anholo.models.nodes.cochains.groups import (
    Group,
    build_group,
    canonical_sign,
    conjugate,
    hamilton,
    rotation_lift,
)
from anholo.models.nodes.linalg.gf2 import gf2_rank, gf2_nullspace, gf2_solve
from anholo.utils.errors import (
    CochainError,
    NonAbelianGroupError,
    PartitionOfUnityError,
)
from anholo.utils.globals import (
    COCYCLE_TOLERANCE,
    GLUING_TOLERANCE,
    ORTHOGONALITY_TOLERANCE,
    PARTITION_TOLERANCE,
)
from anholo.utils.logging import LOGGER
from anholo.utils.progress_bar import progress_bar as pb


SPIN_EXISTS = "spin structure exists on this cover datum"
NO_SPIN = "no spin structure for this datum"


def _parity(key: Simplex) -> int:
    inversions = sum(1 for i, j in combinations(range(len(key)), 2) if key[i] > key[j])
    return inversions % 2


def oriented_values(ch: Cochain, group: Group) -> Dict[Simplex, Any]:
    """
    Decoded values keyed by sorted simplices; a key stored as an odd
    permutation contributes the inverse
    """
    table = {}
    for key, raw in ch.values.items():
        value = group.decode(raw)
        if _parity(key):
            value = group.inverse(value)
        ordered = tuple(sorted(key))
        if ordered in table and group.distance(table[ordered], value) > (
            ORTHOGONALITY_TOLERANCE
        ):
            raise CochainError(f"Conflicting values on {format_key(ordered)}")
        table[ordered] = value
    return table


def _lookup(table: Dict[Simplex, Any], simplex: Simplex) -> Any:
    try:
        return table[simplex]
    except KeyError:
        raise CochainError(f"Missing cochain value on {format_key(simplex)}")


def _edge(table: Dict[Simplex, Any], group: Group, a: int, b: int) -> Any:
    if a < b:
        return _lookup(table, (a, b))
    return group.inverse(_lookup(table, (b, a)))


def cochain_to_json(ch: Cochain) -> dict:
    group = build_group(ch.group)
    return {
        "degree": ch.degree,
        "group": ch.group.dict(exclude_none=True),
        "values": {
            format_key(k): group.encode(v) for k, v in sorted(ch.values.items())
        },
    }


def cochain_from_document(doc: dict, degree: int = 1) -> Cochain:
    spec = GroupSpec.parse(doc["group"])
    group = build_group(spec)
    raw = Cochain(degree=doc.get("degree", degree), group=spec, values=doc["values"])
    values = {k: group.decode(v) for k, v in raw.values.items()}
    return Cochain(degree=raw.degree, group=spec, values=values)


def cover_from_document(doc: dict) -> Cover:
    """
    "nerve" must be downward closed; "maximal" lists only maximal simplices
    """
    samples = doc.get("samples")
    if "maximal" in doc:
        return Cover.from_maximal(doc["elements"], doc["maximal"], samples=samples)
    return Cover(elements=doc["elements"], nerve=doc["nerve"], samples=samples)


def bundle_from_document(doc: dict) -> CoverBundle:
    """
    Cover file layout: the cover keys plus optional "chain" (a group and edge
    values) and "sections" ("h_size" and values[element][sample])
    """
    chain = doc.get("chain")
    sections = doc.get("sections")
    return CoverBundle(
        cover=cover_from_document(doc),
        chain=cochain_from_document(chain) if chain is not None else None,
        sections=LocalSections(**sections) if sections is not None else None,
    )


def cocycle_of_chain(q: Cochain, cover: Cover) -> Cochain:
    """
    c_αβγ = q_αβ q_βγ q_γα on every triangle of the nerve, q_γα = q_αγ⁻¹
    """
    if q.degree != 1:
        raise CochainError(f"Transition chain must have degree 1, got {q.degree}")
    group = build_group(q.group)
    table = oriented_values(q, group)
    values = {}
    for a, b, c in cover.simplices(2):
        values[(a, b, c)] = group.product(
            _edge(table, group, a, b),
            _edge(table, group, b, c),
            _edge(table, group, c, a),
        )
    return Cochain(degree=2, group=q.group, values=values)


def coboundary(ch: Cochain, cover: Cover) -> Cochain:
    """
    Alternating coboundary (δz)(s) = Σ_i (−1)^i z(s without s_i), written
    multiplicatively for Z/2
    """
    group = build_group(ch.group)
    if not group.abelian:
        raise NonAbelianGroupError(
            f"Coboundary needs an abelian group, got {ch.group.kind}"
        )
    if ch.degree >= 3:
        raise CochainError("Coboundary of a degree 3 cochain is not tracked")
    table = oriented_values(ch, group)
    values = {}
    for simplex in cover.simplices(ch.degree + 1):
        value = group.identity()
        for i in range(len(simplex)):
            term = _lookup(table, simplex[:i] + simplex[i + 1 :])
            value = group.multiply(value, group.inverse(term) if i % 2 else term)
        values[simplex] = value
    return Cochain(degree=ch.degree + 1, group=ch.group, values=values)


def cocycle_defect(
    c: Cochain, cover: Cover, q: Optional[Cochain] = None
) -> CocycleCheck:
    """
    Largest violation of the 2-cocycle condition over the nerve tetrahedra.
    With the chain q the twisted identity
    c_αβγ c_αγδ = q_αβ c_βγδ q_αβ⁻¹ c_αβδ is checked, which covers
    non-abelian coefficients; without it the alternating product.
    """
    group = build_group(c.group)
    if q is None and not group.abelian:
        raise NonAbelianGroupError("Non-abelian cocycle check needs the chain q")
    table = oriented_values(c, group)
    chain = oriented_values(q, group) if q is not None else None
    worst, defect = None, 0.0
    tetrahedra = cover.simplices(3)
    for a, b, g, d in tetrahedra:
        c_abg, c_agd = _lookup(table, (a, b, g)), _lookup(table, (a, g, d))
        c_bgd, c_abd = _lookup(table, (b, g, d)), _lookup(table, (a, b, d))
        if chain is None:
            lhs = group.product(
                c_bgd, group.inverse(c_agd), c_abd, group.inverse(c_abg)
            )
            rhs = group.identity()
        else:
            q_ab = _edge(chain, group, a, b)
            lhs = group.multiply(c_abg, c_agd)
            rhs = group.product(q_ab, c_bgd, group.inverse(q_ab), c_abd)
        deviation = group.distance(lhs, rhs)
        if deviation > defect or worst is None:
            worst, defect = (a, b, g, d), max(defect, deviation)
    return CocycleCheck(max_defect=defect, worst=worst, checked=len(tetrahedra))


def coboundary_matrix(cover: Cover, degree: int) -> np.ndarray:
    """
    Matrix of δ^degree over GF(2): rows are (degree+1)-simplices, columns the
    degree-simplices, both in Cover.simplices order
    """
    rows, cols = cover.simplices(degree + 1), cover.simplices(degree)
    index = {s: i for i, s in enumerate(cols)}
    matrix = np.zeros((len(rows), len(cols)), dtype=int)
    for r, simplex in enumerate(rows):
        for i in range(len(simplex)):
            matrix[r, index[simplex[:i] + simplex[i + 1 :]]] = 1
    return matrix


def nerve_components(cover: Cover) -> int:
    graph = nx.Graph()
    graph.add_nodes_from(cover.elements)
    graph.add_edges_from(cover.simplices(1))
    return nx.number_connected_components(graph)


def z2_cohomology(cover: Cover) -> CohomologyReport:
    if not cover.elements:
        raise CochainError("Cover has no elements")
    cochain_dims = [len(cover.simplices(k)) for k in range(4)]
    ranks = [gf2_rank(coboundary_matrix(cover, k)) for k in range(3)]
    dims = [
        cochain_dims[k] - ranks[k] - (ranks[k - 1] if k else 0) for k in range(3)
    ]
    components = nerve_components(cover)
    if components != dims[0]:
        raise CochainError(
            f"H0 dimension {dims[0]} disagrees with {components} nerve components"
        )
    return CohomologyReport(
        dims=dims, ranks=ranks, cochain_dims=cochain_dims, components=components
    )


def cocycle_basis(cover: Cover, degree: int) -> List[np.ndarray]:
    """
    GF(2) cocycles over cover.simplices(degree) representing a basis of H^degree
    """
    kernel = gf2_nullspace(coboundary_matrix(cover, degree))
    span = []
    if degree > 0:
        image = coboundary_matrix(cover, degree - 1)
        span = [image[:, j] for j in range(image.shape[1])]
    rank = gf2_rank(np.column_stack(span)) if span else 0
    basis = []
    for v in kernel:
        extended = gf2_rank(np.column_stack(span + [v]))
        if extended > rank:
            span.append(v)
            basis.append(v)
            rank = extended
    return basis


def _z2_cochain(bits: np.ndarray, simplices: List[Simplex], degree: int) -> Cochain:
    values = {s: -1 if bit % 2 else 1 for s, bit in zip(simplices, bits)}
    return Cochain(degree=degree, group=GroupSpec(kind="z2"), values=values)


def _lifts(q: Cochain, cover: Cover, flips: Optional[Dict[Simplex, int]]):
    spec = q.group
    if spec.kind == "orthogonal" and spec.dim == 3:
        lift = rotation_lift
    elif spec.kind == "quaternion":
        lift = canonical_sign
    else:
        raise CochainError("Spin obstruction needs SO(3) or unit quaternion values")
    table = oriented_values(q, build_group(spec))
    lifts = {}
    for edge in cover.simplices(1):
        value = lift(_lookup(table, edge))
        lifts[edge] = value * (flips or {}).get(edge, 1)
    return lifts


def spin_obstruction(
    q: Cochain, cover: Cover, flips: Optional[Dict[Simplex, int]] = None
) -> SpinObstructionReport:
    """
    Second Stiefel-Whitney cocycle of an SO(3) chain: w_αβγ is the sign of
    the lift product q̃_αβ q̃_βγ q̃_αγ⁻¹ in the double cover. The class is
    trivial iff δx = w has a solution over GF(2).
    :param flips: optional per-edge lift signs ±1
    """
    lifts = _lifts(q, cover, flips)
    triangles = cover.simplices(2)
    w = np.zeros(len(triangles), dtype=int)
    for t, (a, b, c) in enumerate(triangles):
        p = hamilton(hamilton(lifts[(a, b)], lifts[(b, c)]), conjugate(lifts[(a, c)]))
        if np.max(np.abs(p[1:])) > COCYCLE_TOLERANCE or (
            abs(abs(p[0]) - 1.0) > COCYCLE_TOLERANCE
        ):
            raise CochainError(
                f"Rotation chain is not a cocycle on {format_key((a, b, c))}"
            )
        w[t] = int(p[0] < 0)
    defect = int(np.sum(coboundary_matrix(cover, 2) @ w % 2))
    x = gf2_solve(coboundary_matrix(cover, 1), w)
    nontrivial = [s for s, bit in zip(triangles, w) if bit]
    LOGGER.debug(f"w2 is nonzero on {len(nontrivial)} of {len(triangles)} triangles")
    return SpinObstructionReport(
        w2=_z2_cochain(w, triangles, 2),
        nontrivial=nontrivial,
        spin_exists=x is not None,
        verdict=SPIN_EXISTS if x is not None else NO_SPIN,
        preimage=_z2_cochain(x, cover.simplices(1), 1) if x is not None else None,
        cocycle_defect=defect,
    )


def glue_sections(
    q: Cochain,
    sections: LocalSections,
    cover: Cover,
    f: Optional[np.ndarray] = None,
    f_h_size: Optional[int] = None,
    tolerance: float = GLUING_TOLERANCE,
) -> GluingReport:
    """
    Checks z_α = q_αβ(z_β) at every sample shared by α and β. A compatible
    family is emitted as the section f∘z_α per element.
    :param f: optional linear map applied after gluing
    :param f_h_size: horizontal size of the image of f, defaults to all of it
    """
    group = build_group(q.group)
    table = oriented_values(q, group)
    edges = set(cover.simplices(1))
    checked, deviation = 0, -1.0
    worst_overlap, worst_sample = None, None
    for s in sections.sample_ids():
        for a, b in combinations(sections.elements_at(s), 2):
            if (a, b) not in edges:
                raise CochainError(f"Sample {s} is shared by {a},{b} off the nerve")
            z_a, z_b = sections.values[a][s], sections.values[b][s]
            moved = group.act(_edge(table, group, a, b), z_b)
            gap = float(np.max(np.abs(z_a - moved)))
            checked += 1
            if gap > deviation:
                deviation, worst_overlap, worst_sample = gap, (a, b), s
    deviation = max(deviation, 0.0)
    if deviation > tolerance:
        LOGGER.warning(
            f"Sections disagree on overlap {worst_overlap} at sample {worst_sample}"
        )
        return GluingReport(
            compatible=False,
            max_deviation=deviation,
            worst_overlap=worst_overlap,
            worst_sample=worst_sample,
            checked=checked,
        )
    if f is None:
        values, h_size = sections.values, sections.h_size
    else:
        f = np.asarray(f, dtype=float)
        values = {
            a: {s: f @ z for s, z in zs.items()} for a, zs in sections.values.items()
        }
        h_size = f.shape[0] if f_h_size is None else f_h_size
    section = GluedSection(
        values=values,
        h_size=h_size,
        representative={s: sections.elements_at(s)[0] for s in sections.sample_ids()},
    )
    return GluingReport(
        compatible=True,
        max_deviation=deviation,
        worst_overlap=worst_overlap,
        worst_sample=worst_sample,
        checked=checked,
        section=section,
    )


def _partition(
    sections: LocalSections, weights: Optional[Dict[int, Dict[int, float]]]
) -> Dict[int, Dict[int, float]]:
    samples = sections.sample_ids()
    if weights is None:
        return {
            s: {a: 1.0 / len(sections.elements_at(s)) for a in sections.elements_at(s)}
            for s in samples
        }
    partition = {}
    for s in samples:
        holders = sections.elements_at(s)
        at_s = {a: float(w.get(s, 0.0)) for a, w in weights.items()}
        if any(w < 0 for w in at_s.values()):
            raise PartitionOfUnityError(f"Negative weight at sample {s}")
        if any(w > 0 for a, w in at_s.items() if a not in holders):
            raise PartitionOfUnityError(f"Weight outside the support at sample {s}")
        total = sum(at_s.get(a, 0.0) for a in holders)
        if abs(total - 1.0) > PARTITION_TOLERANCE:
            raise PartitionOfUnityError(f"Weights sum to {total!r} at sample {s}")
        partition[s] = {a: at_s.get(a, 0.0) for a in holders}
    return partition


def pre_hilbert_product(
    z1: GluedSection,
    z2: GluedSection,
    weights: Optional[Dict[int, Dict[int, float]]] = None,
    quadrature: Optional[Dict[int, float]] = None,
) -> PreHilbertProduct:
    """
    Σ_s μ_s Σ_α w_α(s) ⟨z1_α(s), z2_α(s)⟩ with weights w a partition of unity
    over the elements holding each sample and μ the sample quadrature
    (uniform, summing to 1, by default). The h- and v-sums are reported apart.
    """
    samples = z1.sample_ids()
    if samples != z2.sample_ids() or z1.h_size != z2.h_size:
        raise ValueError("Sections live on different samples or splits")
    partition = _partition(z1, weights)
    if quadrature is None:
        quadrature = {s: 1.0 / len(samples) for s in samples}
    k = z1.h_size
    horizontal = vertical = 0.0
    for s in samples:
        for a, w in partition[s].items():
            u, v = z1.values[a][s], z2.values[a][s]
            horizontal += quadrature[s] * w * float(u[:k] @ v[:k])
            vertical += quadrature[s] * w * float(u[k:] @ v[k:])
    return PreHilbertProduct(
        value=horizontal + vertical,
        horizontal=horizontal,
        vertical=vertical,
        samples=len(samples),
    )


def spin_report_to_json(report: SpinObstructionReport) -> dict:
    return {
        "w2": cochain_to_json(report.w2),
        "nontrivial": [format_key(s) for s in report.nontrivial],
        "spin_exists": report.spin_exists,
        "verdict": report.verdict,
        "preimage": cochain_to_json(report.preimage) if report.preimage else None,
        "cocycle_defect": report.cocycle_defect,
    }


def gluing_report_to_json(report: GluingReport) -> dict:
    block = report.dict(exclude={"section"})
    if report.worst_overlap is not None:
        block["worst_overlap"] = format_key(report.worst_overlap)
    if report.section is not None:
        block["section"] = {
            str(a): {str(s): z for s, z in sorted(zs.items())}
            for a, zs in sorted(report.section.values.items())
        }
    return block


class CechModelConf(BaseModel):
    """
    Tolerances of a cover run
    """

    gluing_tolerance: float = GLUING_TOLERANCE
    cocycle_tolerance: float = COCYCLE_TOLERANCE


class CechModel:
    """
    Cohomology of the nerve plus, when a transition chain is given, its
    2-cocycle, the cocycle check, the spin obstruction for rotation chains and
    the gluing of supplied local sections
    """

    def __init__(self, config: CechModelConf):
        self.config = config

    @validate_arguments(config=dict(arbitrary_types_allowed=True))
    def run(
        self,
        cover: Cover,
        chain: Optional[Cochain] = None,
        sections: Optional[LocalSections] = None,
        progress_bar: bool = False,
    ) -> Dict[str, Any]:
        LOGGER.info("Starting Cech Model")
        report: Dict[str, Any] = {"cohomology": z2_cohomology(cover).dict()}
        if chain is None:
            return report
        steps = ["cocycle", "spin_obstruction", "glue"]
        for step in pb(steps, "cover tasks") if progress_bar else steps:
            if step == "cocycle":
                c = cocycle_of_chain(chain, cover)
                check = cocycle_defect(c, cover, chain)
                report["cocycle"] = cochain_to_json(c)
                report["cocycle_check"] = dict(
                    check.dict(exclude={"worst"}),
                    worst=format_key(check.worst) if check.worst else None,
                    passed=check.max_defect <= self.config.cocycle_tolerance,
                )
            elif step == "spin_obstruction" and is_rotation_chain(chain):
                report["spin_obstruction"] = spin_report_to_json(
                    spin_obstruction(chain, cover)
                )
            elif step == "glue" and sections is not None:
                report["gluing"] = gluing_report_to_json(
                    glue_sections(
                        chain,
                        sections,
                        cover,
                        tolerance=self.config.gluing_tolerance,
                    )
                )
        return report


def is_rotation_chain(chain: Cochain) -> bool:
    spec = chain.group
    return spec.kind == "quaternion" or (spec.kind == "orthogonal" and spec.dim == 3)
