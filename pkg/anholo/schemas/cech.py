from itertools import combinations
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, root_validator, validator

from anholo.schemas.geometry import EvaluatedModel


Simplex = Tuple[int, ...]


def parse_key(key) -> Simplex:
    """
    "1,2" or [1, 2] or (1, 2) -> (1, 2), order preserved
    """
    if isinstance(key, str):
        return tuple(int(k) for k in key.split(",") if k.strip())
    return tuple(int(k) for k in key)


def format_key(simplex: Simplex) -> str:
    return ",".join(str(k) for k in simplex)


class GroupSpec(BaseModel):
    kind: Literal["z2", "zk", "orthogonal", "quaternion"]
    order: Optional[int] = None
    dim: Optional[int] = None

    class Config:
        allow_mutation = False

    @root_validator
    def parameters_present(cls, values):
        kind = values.get("kind")
        if kind == "zk" and (values.get("order") or 0) < 2:
            raise ValueError("Z/k needs an integer order k >= 2")
        if kind == "orthogonal" and (values.get("dim") or 0) < 1:
            raise ValueError("Orthogonal group needs a matrix dimension d >= 1")
        return values

    @staticmethod
    def parse(raw: Any) -> "GroupSpec":
        if isinstance(raw, GroupSpec):
            return raw
        if isinstance(raw, str):
            return GroupSpec(kind=raw)
        return GroupSpec(**raw)


class Cover(BaseModel):
    """
    Finite cover by elements 1..N with its nerve, listed as sorted simplices.
    samples optionally maps each element to the ids of the sample points it
    contains; sample ids shared by two elements lie on their overlap.
    """

    elements: List[int]
    nerve: List[Simplex]
    samples: Optional[Dict[int, List[int]]] = None

    class Config:
        allow_mutation = False

    @validator("nerve", pre=True)
    def sort_simplices(cls, v):
        simplices = {tuple(sorted(parse_key(s))) for s in v}
        return sorted(simplices, key=lambda s: (len(s), s))

    @root_validator(skip_on_failure=True)
    def downward_closed(cls, values):
        elements = set(values["elements"])
        listed = set(values["nerve"])
        for simplex in listed:
            if len(set(simplex)) != len(simplex):
                raise ValueError(f"Simplex {simplex} repeats an element")
            if not set(simplex) <= elements:
                raise ValueError(f"Simplex {simplex} uses an unknown element")
            for size in range(1, len(simplex)):
                for face in combinations(simplex, size):
                    if face not in listed:
                        raise ValueError(
                            f"Nerve is not downward closed: {face} of {simplex}"
                        )
        return values

    @staticmethod
    def from_maximal(elements: List[int], maximal: List[Simplex], samples=None):
        """
        Cover whose nerve is the downward closure of the given simplices
        """
        closure = {(e,) for e in elements}
        for simplex in maximal:
            simplex = tuple(sorted(parse_key(simplex)))
            for size in range(1, len(simplex) + 1):
                closure.update(combinations(simplex, size))
        return Cover(elements=elements, nerve=list(closure), samples=samples)

    def simplices(self, degree: int) -> List[Simplex]:
        if degree == 0:
            return [(e,) for e in sorted(self.elements)]
        return [s for s in self.nerve if len(s) == degree + 1]

    @property
    def max_degree(self) -> int:
        return max((len(s) - 1 for s in self.nerve), default=0)

    def shared_samples(self, a: int, b: int) -> List[int]:
        if not self.samples:
            return []
        return sorted(set(self.samples.get(a, [])) & set(self.samples.get(b, [])))


class Cochain(EvaluatedModel):
    """
    Group-valued cochain. Keys are oriented simplices; a value stored under an
    odd permutation of a simplex stands for the inverse on the sorted simplex.
    """

    degree: int
    group: GroupSpec
    values: Dict[Simplex, Any]

    @validator("degree")
    def degree_in_range(cls, v):
        if v not in (0, 1, 2, 3):
            raise ValueError(f"Cochain degree must be 0..3, got {v}")
        return v

    @validator("group", pre=True)
    def parse_group(cls, v):
        return GroupSpec.parse(v)

    @validator("values", pre=True)
    def parse_keys(cls, v):
        return {parse_key(k): value for k, value in dict(v).items()}

    @root_validator(skip_on_failure=True)
    def keys_match_degree(cls, values):
        for key in values["values"]:
            if len(key) != values["degree"] + 1:
                raise ValueError(
                    f"Key {format_key(key)} does not fit a degree "
                    f"{values['degree']} cochain"
                )
        return values


class CohomologyReport(EvaluatedModel):
    """
    dims[k] = dim H^k(nerve; Z/2) = dim C^k − rank δ^k − rank δ^(k−1)
    """

    dims: List[int]
    ranks: List[int]
    cochain_dims: List[int]
    components: int
    representative: Optional[Dict[str, int]] = None


class CocycleCheck(EvaluatedModel):
    max_defect: float
    worst: Optional[Simplex] = None
    checked: int


class SpinObstructionReport(EvaluatedModel):
    w2: Cochain
    nontrivial: List[Simplex]
    spin_exists: bool
    verdict: str
    preimage: Optional[Cochain] = None
    cocycle_defect: int


class LocalSections(EvaluatedModel):
    """
    values[α][s] is the vector z_α at sample s in the trivialization of
    element α; the first h_size components are horizontal
    """

    values: Dict[int, Dict[int, np.ndarray]]
    h_size: int

    @validator("values", pre=True)
    def as_arrays(cls, v):
        return {
            int(a): {int(s): np.asarray(z, dtype=float) for s, z in dict(zs).items()}
            for a, zs in dict(v).items()
        }

    @root_validator(skip_on_failure=True)
    def split_fits(cls, values):
        sizes = {z.shape for zs in values["values"].values() for z in zs.values()}
        if len(sizes) > 1:
            raise ValueError(f"Section vectors have mixed shapes {sorted(sizes)}")
        if sizes:
            (shape,) = sizes
            if len(shape) != 1 or not 0 <= values["h_size"] <= shape[0]:
                raise ValueError(f"h_size {values['h_size']} does not fit {shape}")
        return values

    def sample_ids(self) -> List[int]:
        return sorted({s for zs in self.values.values() for s in zs})

    def elements_at(self, sample: int) -> List[int]:
        return sorted(a for a, zs in self.values.items() if sample in zs)


class GluedSection(LocalSections):
    """
    Compatible family z_α after the map f, one representative element per sample
    """

    representative: Dict[int, int]


class GluingReport(EvaluatedModel):
    compatible: bool
    max_deviation: float
    worst_overlap: Optional[Tuple[int, int]] = None
    worst_sample: Optional[int] = None
    checked: int
    section: Optional[GluedSection] = None


class PreHilbertProduct(EvaluatedModel):
    value: float
    horizontal: float
    vertical: float
    samples: int


class CoverBundle(EvaluatedModel):
    """
    Contents of a cover file: the cover, an optional transition 1-cochain and
    optional local sections to glue
    """

    cover: Cover
    chain: Optional[Cochain] = None
    sections: Optional[LocalSections] = None
