from pathlib import Path

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.spatial.transform import Rotation

from anholo.schemas.cech import Cochain, Cover, GroupSpec
from anholo.models.components.cech_model import (
    CechModel,
    CechModelConf,
    coboundary,
    coboundary_matrix,
    cocycle_basis,
    cocycle_defect,
    cocycle_of_chain,
    glue_sections,
    pre_hilbert_product,
    spin_obstruction,
    z2_cohomology,
)
from anholo.models.scenarios.selftest_scenario import (
    disk_sections,
    disk_spin_chain,
    rotation_chain,
    torus_no_spin_chain,
)
from anholo.data.pipes.config_files import LocalJSONPipeline
from anholo.utils.errors import (
    CochainError,
    NonAbelianGroupError,
    PartitionOfUnityError,
)

EXAMPLES = Path(__file__).parents[1] / "conf" / "examples"


@pytest.fixture
def tetrahedron():
    return Cover.from_maximal([1, 2, 3, 4], [(1, 2, 3, 4)])


def test_circle_cohomology(circle):
    report = z2_cohomology(circle)
    assert report.dims == [1, 1, 0]
    assert report.components == 1


def test_torus_cohomology(torus):
    report = z2_cohomology(torus)
    assert report.dims == [1, 2, 1]
    assert report.cochain_dims[:3] == [7, 21, 14]


def test_contractible_nerve(tetrahedron):
    assert z2_cohomology(tetrahedron).dims == [1, 0, 0]


def test_disconnected_nerve():
    cover = Cover.from_maximal([1, 2, 3, 4], [(1, 2), (3, 4)])
    assert z2_cohomology(cover).dims == [2, 0, 0]


def test_empty_cover_rejected():
    with pytest.raises(CochainError):
        z2_cohomology(Cover(elements=[], nerve=[]))


def test_nerve_must_be_downward_closed():
    with pytest.raises(ValidationError):
        Cover(elements=[1, 2, 3], nerve=[[1], [2], [3], [1, 2, 3]])


@pytest.mark.parametrize("degree", [0, 1])
def test_coboundary_squares_to_zero(tetrahedron, degree):
    product = coboundary_matrix(tetrahedron, degree + 1) @ coboundary_matrix(
        tetrahedron, degree
    )
    assert not np.any(product % 2)


def test_z2_coboundary_is_a_cocycle(tetrahedron, rng):
    bits = rng.integers(0, 2, size=len(tetrahedron.simplices(1)))
    values = {e: -1 if b else 1 for e, b in zip(tetrahedron.simplices(1), bits)}
    z = Cochain(degree=1, group="z2", values=values)
    assert cocycle_defect(coboundary(z, tetrahedron), tetrahedron).max_defect == 0


def test_non_abelian_coboundary_rejected(tetrahedron):
    q = rotation_chain({e: np.eye(3) for e in tetrahedron.simplices(1)})
    with pytest.raises(NonAbelianGroupError):
        coboundary(q, tetrahedron)
    with pytest.raises(NonAbelianGroupError):
        cocycle_defect(cocycle_of_chain(q, tetrahedron), tetrahedron)


def test_random_rotation_chain_gives_a_cocycle(tetrahedron):
    matrices = Rotation.random(6, random_state=7).as_matrix()
    q = rotation_chain(dict(zip(tetrahedron.simplices(1), matrices)))
    check = cocycle_defect(cocycle_of_chain(q, tetrahedron), tetrahedron, q)
    assert check.max_defect <= 1e-12
    assert check.checked == 1


def test_odd_orientation_stores_the_inverse():
    R = Rotation.from_euler("z", 0.4).as_matrix()
    S = Rotation.from_euler("x", 1.1).as_matrix()
    forward = rotation_chain({(1, 2): R, (2, 3): S, (1, 3): np.eye(3)})
    backward = rotation_chain({(2, 1): R.T, (2, 3): S, (1, 3): np.eye(3)})
    cover = Cover.from_maximal([1, 2, 3], [(1, 2, 3)])
    c1 = cocycle_of_chain(forward, cover).values[(1, 2, 3)]
    c2 = cocycle_of_chain(backward, cover).values[(1, 2, 3)]
    np.testing.assert_allclose(c1, c2, atol=1e-14)
    np.testing.assert_allclose(c1, R @ S, atol=1e-14)


def test_missing_edge_value(disk):
    q = rotation_chain({(1, 2): np.eye(3)})
    with pytest.raises(CochainError):
        cocycle_of_chain(q, disk)


def test_disk_spin_structure(disk):
    report = spin_obstruction(disk_spin_chain(), disk)
    assert report.spin_exists
    assert report.cocycle_defect == 0
    # δx = w on the returned preimage
    x = np.array([report.preimage.values[e] == -1 for e in disk.simplices(1)])
    w = np.array([report.w2.values[t] == -1 for t in disk.simplices(2)])
    np.testing.assert_array_equal(coboundary_matrix(disk, 1) @ x % 2, w)


def test_torus_without_spin_structure(torus):
    report = spin_obstruction(torus_no_spin_chain(), torus)
    assert not report.spin_exists
    assert report.preimage is None
    assert report.nontrivial


def test_lift_signs_do_not_change_the_class(disk, torus):
    flips = {(1, 2): -1, (1, 3): -1}
    assert spin_obstruction(disk_spin_chain(), disk, flips).spin_exists
    flips = {e: -1 for e in torus.simplices(1)[::3]}
    assert not spin_obstruction(torus_no_spin_chain(), torus, flips).spin_exists


def test_spin_obstruction_needs_rotations(circle):
    q = Cochain(degree=1, group="z2", values={e: 1 for e in circle.simplices(1)})
    with pytest.raises(CochainError):
        spin_obstruction(q, circle)


def test_cocycle_basis_spans_cohomology(torus):
    basis = cocycle_basis(torus, 1)
    assert len(basis) == 2
    for v in basis:
        assert not np.any(coboundary_matrix(torus, 1) @ v % 2)


def test_rotated_sections_glue(disk, rng):
    report = glue_sections(disk_spin_chain(), disk_sections(rng), disk)
    assert report.compatible
    assert report.max_deviation <= 1e-12
    assert report.checked == 5
    assert report.section.representative[4] == 1


def test_gluing_reports_worst_overlap(disk, rng):
    report = glue_sections(disk_spin_chain(), disk_sections(rng, fault=1e-3), disk)
    assert not report.compatible
    assert report.worst_overlap == (1, 2)
    assert report.max_deviation == pytest.approx(1e-3, rel=1e-6)
    assert report.section is None


def test_glued_section_through_a_map(disk, rng):
    f = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    report = glue_sections(disk_spin_chain(), disk_sections(rng), disk, f=f)
    assert report.section.h_size == 2
    for zs in report.section.values.values():
        assert all(z.shape == (2,) for z in zs.values())


def test_product_is_partition_independent(disk, rng):
    section = glue_sections(disk_spin_chain(), disk_sections(rng), disk).section
    weights = {a: {} for a in section.values}
    for s in section.sample_ids():
        holders = section.elements_at(s)
        shares = rng.uniform(0.1, 1.0, size=len(holders))
        for a, share in zip(holders, shares / shares.sum()):
            weights[a][s] = float(share)
    uniform = pre_hilbert_product(section, section)
    skewed = pre_hilbert_product(section, section, weights)
    assert skewed.value == pytest.approx(uniform.value, abs=1e-12)
    assert uniform.horizontal + uniform.vertical == pytest.approx(uniform.value)
    assert uniform.samples == 9


def test_partition_of_unity_is_validated(disk, rng):
    section = glue_sections(disk_spin_chain(), disk_sections(rng), disk).section
    weights = {a: {s: 0.3 for s in zs} for a, zs in section.values.items()}
    with pytest.raises(PartitionOfUnityError):
        pre_hilbert_product(section, section, weights)
    negative = {a: {s: -1.0 for s in zs} for a, zs in section.values.items()}
    with pytest.raises(PartitionOfUnityError):
        pre_hilbert_product(section, section, negative)


def test_cover_file_bundle():
    path = str(EXAMPLES / "disk_spin_cover.json")
    bundle = LocalJSONPipeline(file_path=path, data_type="cover").load()
    assert bundle.chain.group == GroupSpec(kind="quaternion")
    assert spin_obstruction(bundle.chain, bundle.cover).spin_exists
    report = glue_sections(bundle.chain, bundle.sections, bundle.cover)
    assert report.compatible


def test_cech_model_run(disk, rng):
    model = CechModel(CechModelConf())
    report = model.run(disk, disk_spin_chain(), disk_sections(rng))
    assert report["cohomology"]["dims"] == [1, 0, 0]
    assert report["cocycle_check"]["passed"]
    assert report["spin_obstruction"]["spin_exists"]
    assert report["gluing"]["compatible"]


def test_cech_model_cover_only(circle):
    report = CechModel(CechModelConf()).run(circle)
    assert list(report) == ["cohomology"]
