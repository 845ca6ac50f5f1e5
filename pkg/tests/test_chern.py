import numpy as np
import pytest

from anholo.schemas.clifford import GridSpec
from anholo.schemas.fields import DMetric, NConnectionField
from anholo.schemas.geometry import Dimensions
from anholo.models.components.chern_model import (
    ChernModel,
    ChernModelConf,
    chern_character,
    chern_class_form,
    curvature_form_from_dconnection,
    curvature_form_from_nconnection,
    curvature_form_from_synthetic,
    decode_curvature,
    index_pairing,
    integrate_form,
    monopole_curvature,
    unit_class,
    volume_class,
)
from anholo.utils.errors import EnvelopeError, FormDegreeError


@pytest.fixture
def box():
    return GridSpec(sizes=[4, 4], lengths=[2.0, 3.0])


@pytest.fixture
def box4():
    return GridSpec(sizes=[4, 4, 4, 4], lengths=[1.0, 2.0, 1.5, 1.0])


@pytest.mark.parametrize("q", [-2, 1, 3])
def test_monopole_first_chern_number(box, q):
    F = monopole_curvature(q, box)
    assert integrate_form(chern_class_form(F, 1), box) == pytest.approx(q, abs=1e-9)


def test_character_degree_two_is_c1(box):
    F = monopole_curvature(1, box)
    difference = chern_character(F).part(2).form - chern_class_form(F, 1).form
    assert difference.max_abs() <= 1e-12
    assert chern_character(F).part(0).label == "rank"


def test_unit_pairing(box):
    ch = chern_character(monopole_curvature(2, box))
    assert index_pairing(ch, unit_class(box), box) == pytest.approx(2.0, abs=1e-9)


def test_volume_pairing_reads_the_rank(box):
    ch = chern_character(monopole_curvature(2, box))
    assert index_pairing(ch, volume_class(box), box) == pytest.approx(1.0, abs=1e-12)


def test_pairing_degree_mismatch(box):
    F = monopole_curvature(1, box)
    with pytest.raises(FormDegreeError):
        index_pairing(chern_class_form(F, 1), volume_class(box), box)


def test_only_top_forms_integrate(box):
    ch = chern_character(monopole_curvature(1, box))
    with pytest.raises(FormDegreeError):
        integrate_form(ch.part(0), box)


def test_trace_free_curvature_has_no_c1(box):
    R = np.zeros((2, 2, 2, 2), dtype=complex)
    R[0, 1] = 0.7j * np.diag([1.0, -1.0])
    R[1, 0] = -R[0, 1]
    F = curvature_form_from_synthetic(R, box)
    assert chern_class_form(F, 1).form.max_abs() <= 1e-15


def test_chern_degree_envelope(box):
    with pytest.raises(EnvelopeError):
        chern_class_form(monopole_curvature(1, box), 2)


def test_c2_of_split_bundle(box4):
    # diag(F1, F2) with F1 along e^0∧e^1 and F2 along e^2∧e^3: c2 = x1 x2 e^0123
    a, b = 0.4, -1.3
    R = np.zeros((4, 4, 2, 2), dtype=complex)
    R[0, 1, 0, 0] = -2j * np.pi * a
    R[2, 3, 1, 1] = -2j * np.pi * b
    R = R - np.swapaxes(R, 0, 1)
    F = curvature_form_from_synthetic(R, box4)
    c2 = chern_class_form(F, 2)
    np.testing.assert_allclose(c2.form.top(), a * b, atol=1e-12)
    volume = np.prod(box4.lengths)
    assert integrate_form(c2, box4) == pytest.approx(a * b * volume, abs=1e-10)


def test_c2_vanishes_for_line_bundles(box4):
    R = np.zeros((4, 4, 1, 1), dtype=complex)
    R[0, 1, 0, 0] = 0.5j
    R[2, 3, 0, 0] = -1.1j
    R = R - np.swapaxes(R, 0, 1)
    F = curvature_form_from_synthetic(R, box4)
    assert chern_class_form(F, 2).form.max_abs() <= 1e-14
    assert chern_character(F).part(4).form.max_abs() > 0


def test_synthetic_shape_must_fit_the_grid(box):
    with pytest.raises(ValueError):
        curvature_form_from_synthetic(np.zeros((5, 2, 2, 1, 1)), box)
    with pytest.raises(ValueError):
        curvature_form_from_synthetic(np.zeros((3, 3, 1, 1)), box)


def test_synthetic_curvature_must_be_antisymmetric(box):
    R = np.zeros((2, 2, 1, 1), dtype=complex)
    R[0, 1] = 1.0
    with pytest.raises(ValueError):
        curvature_form_from_synthetic(R, box)


def test_monopole_needs_a_two_torus(box4):
    with pytest.raises(ValueError):
        monopole_curvature(1, box4)


def test_decode_curvature():
    values = decode_curvature({"real": [[0.0, 1.0]], "imag": [[2.0, 0.0]]})
    np.testing.assert_array_equal(values, np.array([[2j, 1.0]]))
    with pytest.raises(ValueError):
        decode_curvature({"real": [0.0, 1.0], "imag": [1.0]})


def test_flat_nconnection_curvature_vanishes(box):
    M = DMetric.flat(Dimensions(n=1, m=1))
    assert np.max(np.abs(curvature_form_from_nconnection(M, box).R)) <= 1e-15


def test_dconnection_character_is_real():
    grid = GridSpec(sizes=[6, 6], lengths=[2 * np.pi, 2 * np.pi])
    M = DMetric.from_text(
        [["2 + sin(x1)"]],
        [["1 + 0.5*cos(y1)^2"]],
        [["0.3*sin(y1)"]],
        Dimensions(n=1, m=1),
    )
    F = curvature_form_from_dconnection(M, grid)
    ch = chern_character(F)
    assert max(p.imaginary_residual for p in ch.parts.values()) <= 1e-8


def test_chern_model_reports_integrality(box):
    model = ChernModel(ChernModelConf())
    report = model.run(box, synthetic=monopole_curvature(3, box))
    block = report["synthetic"]
    assert block["c1"]["integral"] == pytest.approx(3.0, abs=1e-9)
    assert block["c1"]["integral_near_integer"]
    assert block["degree_2"]["integral"] == pytest.approx(3.0, abs=1e-9)
    assert "c2" not in block


def test_chern_model_metric_sources(box):
    M = DMetric.from_text([["1"]], [["1"]], [["0.3"]], Dimensions(n=1, m=1))
    report = ChernModel(ChernModelConf(max_k=1)).run(box, metric=M)
    assert set(report) == {"dconnection", "nconnection"}
    for block in report.values():
        assert block["degree_2"]["real"]


def test_line_fiber_nconnection_has_no_curvature(twisted_dims):
    N = NConnectionField.from_text([["x2*y1"], ["0"]], twisted_dims)
    M = DMetric.flat(twisted_dims, N)
    grid = GridSpec(sizes=[4, 4, 4], lengths=[1.0, 1.0, 1.0])
    assert np.max(np.abs(curvature_form_from_nconnection(M, grid).R)) <= 1e-14


def test_twisted_plane_fiber_nconnection_has_curvature():
    # L^1_21 = -L^2_11 = y1/2 for g = h = I; R is its y1-derivative
    dims = Dimensions(n=1, m=2)
    N = NConnectionField.from_text([["y1*y2", "0"]], dims)
    M = DMetric.flat(dims, N)
    grid = GridSpec(sizes=[4, 4, 4], lengths=[1.0, 1.0, 1.0])
    R = curvature_form_from_nconnection(M, grid).R
    assert np.max(np.abs(R)) == pytest.approx(0.5, abs=1e-9)
    np.testing.assert_allclose(R, -np.swapaxes(R, 1, 2), atol=1e-12)
