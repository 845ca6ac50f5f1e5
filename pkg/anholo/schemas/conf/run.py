from typing import Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, root_validator, validator

from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.schemas.clifford import GridSpec
from anholo.models.nodes.expression.parser import parse_constant
from anholo.utils.globals import (
    COCYCLE_TOLERANCE,
    DEFAULT_GEODESIC_STEPS,
    DEFAULT_GEODESIC_TAU,
    DEFAULT_SEED,
    DEFAULT_TOLERANCES,
    GLUING_TOLERANCE,
    PARTITION_TOLERANCE,
)


LAGRANGE_TASKS = (
    "expression",
    "hessian",
    "semispray",
    "nconnection",
    "geodesic",
    "sasaki",
    "almost_complex",
    "finsler",
)
METRIC_TASKS = (
    "nconnection_curvature",
    "anholonomy",
    "assemble_metric",
    "split_metric",
    "dconnection",
    "levi_civita",
    "torsion",
    "curvature",
    "ricci",
)
SPIN_TASKS = (
    "gamma",
    "frame_gamma",
    "spin_connection",
    "dirac_symbol",
    "dirac_spectrum",
    "lichnerowicz",
)
COVER_TASKS = ("cohomology", "cocycle", "spin_obstruction", "glue")
CHERN_TASKS = ("chern", "index_pairing")
TASK_TAGS = LAGRANGE_TASKS + METRIC_TASKS + SPIN_TASKS + COVER_TASKS + CHERN_TASKS


class DimensionsConf(BaseModel):

    n: int
    m: int

    def to_dims(self) -> Dimensions:
        return Dimensions(n=self.n, m=self.m)


class LagrangianSourceConf(BaseModel):
    """
    Regular Lagrangian L(x, y) in the expression grammar, m = n
    """

    kind: Literal["lagrangian"]
    L: str


class MetricSourceConf(BaseModel):
    """
    d-metric blocks as expression grids; N defaults to zero. assembled is an
    optional numeric coordinate metric for the split_metric task.
    """

    kind: Literal["metric"]
    g: List[List[str]]
    h: List[List[str]]
    N: Optional[List[List[str]]] = None
    assembled: Optional[List[List[float]]] = None


class CoverSourceConf(BaseModel):
    """
    Cover document given inline or as a path to a JSON file
    """

    kind: Literal["cover"]
    file: Optional[str] = None
    cover: Optional[Dict[str, Any]] = None

    @root_validator(skip_on_failure=True)
    def one_of_file_or_inline(cls, values):
        if (values.get("file") is None) == (values.get("cover") is None):
            raise ValueError("Cover source needs exactly one of 'file' or 'cover'")
        return values


class SyntheticSourceConf(BaseModel):
    """
    Curvature matrices R[μ][ν] (r×r reals, or {"real": ..., "imag": ...}) held
    constant over the grid, or a monopole of integer charge on a 2-torus
    """

    kind: Literal["synthetic"]
    file: Optional[str] = None
    curvature: Optional[Any] = None
    monopole_charge: Optional[int] = None

    @root_validator(skip_on_failure=True)
    def one_curvature(cls, values):
        given = [values.get(k) is not None for k in ("file", "curvature")]
        given.append(values.get("monopole_charge") is not None)
        if sum(given) != 1:
            raise ValueError(
                "Synthetic source needs one of 'file', 'curvature', 'monopole_charge'"
            )
        return values


SourceConf = Union[
    LagrangianSourceConf, MetricSourceConf, CoverSourceConf, SyntheticSourceConf
]


class GridConf(BaseModel):
    """
    Periodic box, lengths may be constant expressions such as "2*pi"
    """

    sizes: List[int]
    lengths: List[Union[float, str]]

    @validator("lengths", each_item=True)
    def fold_lengths(cls, v):
        return parse_constant(v)

    def to_spec(self) -> GridSpec:
        return GridSpec(sizes=self.sizes, lengths=self.lengths)


class PointConf(BaseModel):
    """
    Chart point with coordinates as numbers or constant expressions
    """

    x: List[Union[float, str]]
    y: List[Union[float, str]] = []

    @validator("x", "y", each_item=True)
    def fold_coordinates(cls, v):
        return parse_constant(v)

    def to_point(self) -> ChartPoint:
        return ChartPoint(x=self.x, y=self.y)


class ToleranceConf(BaseModel):
    """
    Tolerances of the invariant checks recorded in reports
    """

    symmetry: float = DEFAULT_TOLERANCES["symmetry"]
    torsion: float = DEFAULT_TOLERANCES["torsion"]
    compatibility: float = DEFAULT_TOLERANCES["compatibility"]
    distortion: float = DEFAULT_TOLERANCES["distortion"]
    frame: float = DEFAULT_TOLERANCES["frame"]
    clifford: float = DEFAULT_TOLERANCES["clifford"]
    symbol: float = DEFAULT_TOLERANCES["symbol"]
    almost_complex: float = DEFAULT_TOLERANCES["almost_complex"]
    anti_hermitian: float = DEFAULT_TOLERANCES["anti_hermitian"]
    lichnerowicz: float = DEFAULT_TOLERANCES["lichnerowicz"]
    chern_real: float = DEFAULT_TOLERANCES["chern_real"]
    integrality: float = DEFAULT_TOLERANCES["integrality"]
    gluing: float = GLUING_TOLERANCE
    cocycle: float = COCYCLE_TOLERANCE
    partition: float = PARTITION_TOLERANCE

    @validator("*")
    def must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Tolerances must be positive")
        return v

    def scaled(self, factor: float) -> "ToleranceConf":
        return ToleranceConf(**{k: v * factor for k, v in self.dict().items()})


class TaskOptionsConf(BaseModel):
    """
    Per-task knobs with documented defaults
    """

    geodesic_tau: float = DEFAULT_GEODESIC_TAU
    geodesic_steps: int = DEFAULT_GEODESIC_STEPS
    symbol_covector: Optional[List[float]] = None
    spectrum_count: int = 8
    lichnerowicz_max_mode: int = 1
    chern_max_k: Optional[int] = None
    pairing_class: Literal["unit", "volume"] = "volume"
    fuzz_probes: int = 0


class RunConfig(BaseModel):
    """
    One run: dims, a source, evaluation points, an optional grid, the ordered task
    list and the tolerances of its invariant checks
    """

    dims: Optional[DimensionsConf] = None
    source: SourceConf = Field(..., discriminator="kind")
    probes: List[PointConf] = []
    grid: Optional[GridConf] = None
    tasks: List[str]
    tolerances: ToleranceConf = ToleranceConf()
    options: TaskOptionsConf = TaskOptionsConf()
    seed: int = DEFAULT_SEED

    @validator("tasks", each_item=True)
    def must_be_known_task(cls, v):
        if v not in TASK_TAGS:
            raise ValueError(f"Unknown task tag {v!r}")
        return v

    @root_validator(skip_on_failure=True)
    def points_within_dims(cls, values):
        dims = values.get("dims")
        if dims is None:
            if values["source"].kind in ("lagrangian", "metric"):
                raise ValueError(f"A {values['source'].kind} source needs dims")
            return values
        if values["source"].kind == "lagrangian" and dims.m != dims.n:
            raise ValueError("A Lagrangian source needs m = n")
        for point in values["probes"]:
            if len(point.x) != dims.n or len(point.y) != dims.m:
                raise ValueError(
                    f"Point ({len(point.x)}, {len(point.y)}) does not match "
                    f"dims ({dims.n}, {dims.m})"
                )
        return values

    def points(self) -> List[ChartPoint]:
        return [p.to_point() for p in self.probes]


class SelftestConf(BaseModel):
    """
    Built-in corpus of named checks, run with a fixed seed
    """

    seed: int = DEFAULT_SEED
    tol_scale: float = 1.0

    @validator("tol_scale")
    def must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Tolerance scale must be positive")
        return v
