from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from anholo.schemas.cech import CoverBundle, format_key
from anholo.schemas.chern import CurvatureFormField
from anholo.schemas.clifford import GridSpec
from anholo.schemas.conf.run import (
    CHERN_TASKS,
    COVER_TASKS,
    LAGRANGE_TASKS,
    METRIC_TASKS,
    SPIN_TASKS,
    RunConfig,
    ToleranceConf,
)
from anholo.schemas.fields import DMetric, NConnectionField, parse_grid
from anholo.schemas.geometry import ChartPoint, Dimensions
from anholo.schemas.lagrange import Lagrangian
from anholo.schemas.output import InvariantCheck
from anholo.models.nodes.expression.evaluator import Evaluator
from anholo.models.nodes.expression.printer import to_text
from anholo.models.components.lagrange_model import (
    LagrangeModel,
    LagrangeModelConf,
    sasaki_lift,
)
from anholo.models.components.geometry_model import GeometryModel, GeometryModelConf
from anholo.models.components.clifford_model import CliffordModel, CliffordModelConf
from anholo.models.components.cech_model import (
    bundle_from_document,
    cochain_to_json,
    cocycle_defect,
    cocycle_of_chain,
    glue_sections,
    gluing_report_to_json,
    is_rotation_chain,
    pre_hilbert_product,
    spin_obstruction,
    spin_report_to_json,
    z2_cohomology,
)
from anholo.models.components.chern_model import (
    ChernModel,
    ChernModelConf,
    chern_character,
    curvature_form_from_synthetic,
    decode_curvature,
    index_pairing,
    index_pairings,
    monopole_curvature,
    unit_class,
    volume_class,
)
from anholo.data.pipes.config_files import LocalJSONPipeline
from anholo.utils.errors import ConfigurationError


Block = Tuple[Any, List[InvariantCheck]]


class TaskContext:
    """
    Lazily built inputs of one run: the Lagrangian or d-metric, the cover
    bundle, the grid and the synthetic curvature, shared by all its tasks
    """

    def __init__(self, config: RunConfig, tolerances: ToleranceConf, seed: int):
        self.config = config
        self.tolerances = tolerances
        self.seed = seed
        self._cache: Dict[str, Any] = {}

    @property
    def source(self):
        return self.config.source

    @property
    def dims(self) -> Dimensions:
        if self.config.dims is None:
            raise ConfigurationError(f"A {self.source.kind} source carries no dims")
        return self.config.dims.to_dims()

    def _cached(self, key: str, build: Callable[[], Any]) -> Any:
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    def _require(self, *kinds: str):
        if self.source.kind not in kinds:
            raise ConfigurationError(
                f"Task needs a {' or '.join(kinds)} source, got {self.source.kind}"
            )

    def probes(self) -> List[ChartPoint]:
        """
        Configured probes followed by options.fuzz_probes seeded points
        around the first of them
        """

        def build():
            points = self.config.points()
            count = self.config.options.fuzz_probes
            if count and points:
                rng = np.random.default_rng(self.seed)
                base = points[0].u
                for _ in range(count):
                    u = base + rng.uniform(-0.1, 0.1, size=base.shape)
                    points.append(ChartPoint.from_u(u, self.dims))
            return points

        return self._cached("probes", build)

    def grid(self) -> GridSpec:
        if self.config.grid is None:
            raise ConfigurationError("Task needs a grid")
        return self._cached("grid", self.config.grid.to_spec)

    def lagrangian(self) -> Lagrangian:
        self._require("lagrangian")
        return self._cached(
            "lagrangian", lambda: Lagrangian.from_text(self.source.L, self.dims.n)
        )

    def metric(self) -> DMetric:
        """
        The configured d-metric, or the Sasaki lift of a Lagrangian source
        """
        self._require("lagrangian", "metric")
        if self.source.kind == "lagrangian":
            return sasaki_lift(self.lagrangian())

        def build():
            dims = self.dims
            N = (
                NConnectionField.from_text(self.source.N, dims)
                if self.source.N is not None
                else NConnectionField.zero(dims)
            )
            return DMetric(
                dims=dims,
                g=parse_grid(self.source.g, dims),
                h=parse_grid(self.source.h, dims),
                N=N,
            )

        return self._cached("metric", build)

    def bundle(self) -> CoverBundle:
        self._require("cover")

        def build():
            if self.source.file is not None:
                return LocalJSONPipeline(
                    file_path=self.source.file, data_type="cover"
                ).load()
            return bundle_from_document(self.source.cover)

        return self._cached("bundle", build)

    def synthetic(self) -> Optional[CurvatureFormField]:
        if self.source.kind != "synthetic":
            return None

        def build():
            grid = self.grid()
            if self.source.monopole_charge is not None:
                return monopole_curvature(self.source.monopole_charge, grid)
            if self.source.file is not None:
                values = LocalJSONPipeline(
                    file_path=self.source.file, data_type="curvature"
                ).load()
            else:
                values = decode_curvature(self.source.curvature)
            return curvature_form_from_synthetic(values, grid)

        return self._cached("synthetic", build)

    def tolerance_table(self) -> Dict[str, float]:
        return self.tolerances.dict()


def _metric_expression(ctx: TaskContext) -> Block:
    M = ctx.metric()
    text = {
        "g": [[to_text(e) for e in row] for row in M.g],
        "h": [[to_text(e) for e in row] for row in M.h],
        "N": [[to_text(e) for e in row] for row in M.N.N],
    }
    probes = []
    for p in ctx.probes():
        ev = Evaluator.at(M.point(p))
        probes.append(
            {
                "at": p.to_json(),
                "g": ev.array(M.g),
                "h": ev.array(M.h),
                "N": ev.array(M.N.N),
            }
        )
    return {"text": text, "probes": probes}, []


def lagrange_task(tag: str, ctx: TaskContext) -> Block:
    if tag == "expression" and ctx.source.kind == "metric":
        return _metric_expression(ctx)
    options = ctx.config.options
    model = LagrangeModel(
        LagrangeModelConf(
            probes=ctx.probes(),
            geodesic_tau=options.geodesic_tau,
            geodesic_steps=options.geodesic_steps,
            tolerances=ctx.tolerance_table(),
        )
    )
    return model.task(tag, ctx.lagrangian())


def metric_task(tag: str, ctx: TaskContext) -> Block:
    assembled = getattr(ctx.source, "assembled", None)
    model = GeometryModel(
        GeometryModelConf(
            probes=ctx.probes(), tolerances=ctx.tolerance_table(), assembled=assembled
        )
    )
    return model.task(tag, ctx.metric())


def spin_task(tag: str, ctx: TaskContext) -> Block:
    options = ctx.config.options
    model = CliffordModel(
        CliffordModelConf(
            probes=ctx.probes(),
            grid=ctx.config.grid.to_spec() if ctx.config.grid else None,
            tolerances=ctx.tolerance_table(),
            symbol_covector=options.symbol_covector,
            spectrum_count=options.spectrum_count,
            lichnerowicz_max_mode=options.lichnerowicz_max_mode,
            seed=ctx.seed,
        )
    )
    return model.task(tag, ctx.metric())


def _chain(ctx: TaskContext):
    bundle = ctx.bundle()
    if bundle.chain is None:
        raise ConfigurationError("Cover file carries no transition chain")
    return bundle.chain


def cover_task(tag: str, ctx: TaskContext) -> Block:
    bundle = ctx.bundle()
    cover = bundle.cover
    tolerances = ctx.tolerances
    if tag == "cohomology":
        report = z2_cohomology(cover)
        return report.dict(), [
            InvariantCheck.of(
                "h0_counts_components",
                abs(report.dims[0] - report.components),
                0.5,
                "nerve",
            )
        ]
    q = _chain(ctx)
    if tag == "cocycle":
        c = cocycle_of_chain(q, cover)
        check = cocycle_defect(c, cover, q)
        worst = format_key(check.worst) if check.worst else None
        return {
            "cocycle": cochain_to_json(c),
            "max_defect": check.max_defect,
            "worst": worst,
            "checked": check.checked,
        }, [InvariantCheck.of("cocycle", check.max_defect, tolerances.cocycle, worst)]
    if tag == "spin_obstruction":
        if not is_rotation_chain(q):
            raise ConfigurationError(
                "Spin obstruction needs an SO(3) or unit quaternion chain"
            )
        return spin_report_to_json(spin_obstruction(q, cover)), []
    if bundle.sections is None:
        raise ConfigurationError("Cover file carries no local sections")
    report = glue_sections(q, bundle.sections, cover, tolerance=tolerances.gluing)
    block = gluing_report_to_json(report)
    if report.compatible and report.section is not None:
        norm = pre_hilbert_product(report.section, report.section)
        block["norm_squared"] = norm.dict()
    return block, []


def _pairing_class(ctx: TaskContext, grid: GridSpec):
    if ctx.config.options.pairing_class == "unit":
        return unit_class(grid)
    return volume_class(grid)


def chern_task(tag: str, ctx: TaskContext) -> Block:
    grid = ctx.grid()
    synthetic = ctx.synthetic()
    metric = None if synthetic is not None else ctx.metric()
    tolerances = ctx.tolerances
    if tag == "chern":
        model = ChernModel(
            ChernModelConf(
                max_k=ctx.config.options.chern_max_k,
                integrality_tolerance=tolerances.integrality,
            )
        )
        report = model.run(grid, metric=metric, synthetic=synthetic)
        checks = []
        for name, block in report.items():
            residual = max(
                part["imaginary_residual"]
                for key, part in block.items()
                if key.startswith("degree_")
            )
            checks.append(
                InvariantCheck.of(
                    f"{name}_chern_real", residual, tolerances.chern_real, grid.grid_id
                )
            )
        return report, checks
    t = _pairing_class(ctx, grid)
    if synthetic is not None:
        ch = chern_character(synthetic)
        value = index_pairing(ch, t, grid)
        return {
            "synthetic": value,
            "t_degree": t.degree,
            "t_label": t.label,
            "grid": grid.grid_id,
        }, []
    report = index_pairings(metric, t, grid)
    return report.dict(), [
        InvariantCheck.of(
            "pairing_real", max(report.imaginary), tolerances.chern_real, grid.grid_id
        )
    ]


TASKS: Dict[str, Callable[[str, TaskContext], Block]] = {}
for _tags, _runner in (
    (LAGRANGE_TASKS, lagrange_task),
    (METRIC_TASKS, metric_task),
    (SPIN_TASKS, spin_task),
    (COVER_TASKS, cover_task),
    (CHERN_TASKS, chern_task),
):
    TASKS.update({tag: _runner for tag in _tags})
