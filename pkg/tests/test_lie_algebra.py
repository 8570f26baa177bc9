import numpy as np
import pytest

from torsion_flow.errors import (
    AntisymmetryViolation,
    InvalidParameter,
    JacobiViolation,
    NotContact,
)
from torsion_flow.lie_algebra import (
    Geometry,
    NormalizedContactData,
    StructureConstants,
    change_basis,
    classify_geometry,
    contact_volume,
    is_unimodular,
    jacobi_residual,
    normalize_frame,
    reeb_vector,
    validate,
)


def test_from_entries_is_antisymmetric():
    sc = StructureConstants.from_entries({(1, 2, 3): 1.0, (3, 1, 2): 2.0})
    assert sc.c(1, 2, 3) == 1.0
    assert sc.c(1, 3, 2) == -1.0
    assert sc.c(3, 2, 1) == -2.0
    assert sc.tensor.flags.writeable is False


def test_from_entries_rejects_unordered_index():
    with pytest.raises(InvalidParameter):
        StructureConstants.from_entries({(1, 3, 2): 1.0})


def test_dict_keys_use_upper_triangle_names(su2):
    data = su2.constants.to_dict()
    assert data["c1_23"] == 1.0
    assert data["c2_13"] == -1.0
    assert StructureConstants.from_dict(data) == su2.constants


def test_validate_accepts_su2(su2):
    assert validate(su2.constants.tensor) == su2.constants
    assert jacobi_residual(su2.constants) < 1e-15


def test_validate_rejects_bad_shape():
    with pytest.raises(InvalidParameter):
        validate(np.zeros((3, 3)))


def test_validate_rejects_asymmetric_entries():
    raw = np.zeros((3, 3, 3))
    raw[0, 1, 2] = 1.0
    raw[0, 2, 1] = 1.0
    with pytest.raises(AntisymmetryViolation):
        validate(raw)


def test_validate_rejects_jacobi_violation():
    sc = StructureConstants.from_entries({(1, 2, 3): 1.0, (2, 2, 3): 1.0, (3, 1, 2): 1.0})
    with pytest.raises(JacobiViolation) as info:
        validate(sc.tensor)
    assert info.value.residual > 0.5
    assert isinstance(info.value, ValueError)


def test_from_free_checks_jacobi():
    NormalizedContactData.from_free(c2_23=1.0)
    with pytest.raises(JacobiViolation):
        NormalizedContactData.from_free(c2_23=1.0, c3_12=1.0)
    with pytest.raises(JacobiViolation):
        NormalizedContactData.from_free(c2_13=1.0, c3_23=1.0)


def test_reeb_vector_and_contact_volume(su2):
    assert contact_volume(su2.constants, (1.0, 0.0, 0.0)) == pytest.approx(1.0)
    assert np.allclose(reeb_vector(su2.constants, (1.0, 0.0, 0.0)), [1.0, 0.0, 0.0])


def test_reeb_vector_rejects_non_contact_form(heisenberg):
    with pytest.raises(NotContact):
        reeb_vector(heisenberg.constants, (0.0, 1.0, 0.0))


def test_unimodularity(su2):
    assert is_unimodular(su2.constants)
    assert not is_unimodular(NormalizedContactData.from_free(c2_23=1.0).constants)


def test_change_basis_identity(su2):
    assert change_basis(su2.constants, np.eye(3)) == su2.constants


def test_normalize_frame_of_normalized_data_is_identity(su2):
    nd, frame = normalize_frame(su2.constants, (1.0, 0.0, 0.0))
    assert np.allclose(nd.free_parameters, su2.free_parameters, atol=1e-12)
    assert np.allclose(frame, np.eye(3), atol=1e-12)


def test_normalize_frame_recovers_geometry_after_frame_change(su2):
    rng = np.random.default_rng(3)
    frame = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
    if np.linalg.det(frame) < 0:
        frame[:, 2] = -frame[:, 2]
    moved = change_basis(su2.constants, frame)
    nd, _ = normalize_frame(validate(moved.tensor), frame[0])
    assert nd.constants.c(1, 2, 3) == 1.0
    assert classify_geometry(nd).geometry is Geometry.SU2


@pytest.mark.parametrize(
    "free, geometry, torsion_free",
    [
        ({"c2_13": -1.0, "c3_12": 1.0}, Geometry.SU2, True),
        ({"c2_13": 1.0, "c3_12": -1.0}, Geometry.SL2R_HYPERBOLIC, True),
        ({"c2_13": 1.0, "c3_12": 1.0}, Geometry.SL2R_MIXED, False),
        ({"c3_12": 1.0}, Geometry.E2, False),
        ({"c3_12": -1.0}, Geometry.E11, False),
        ({"c2_13": -1.0}, Geometry.E2, False),
        ({}, Geometry.HEISENBERG, True),
        ({"c2_23": 1.0}, Geometry.NOT_UNIMODULAR, True),
        ({"c2_23": 1.0, "c2_13": 1.0}, Geometry.NOT_UNIMODULAR, False),
    ],
)
def test_classify_geometry(free, geometry, torsion_free):
    result = classify_geometry(NormalizedContactData.from_free(**free))
    assert result.geometry is geometry
    assert result.admits_torsion_free is torsion_free
    assert result.unimodular is (geometry is not Geometry.NOT_UNIMODULAR)


def test_geometry_labels():
    assert Geometry.E11.label == "E(1,1)"
    assert Geometry.SL2R_MIXED.label == "SL~(2,R)"
    assert str(classify_geometry(NormalizedContactData.from_free())) == "Heisenberg (torsion-free J: yes)"
