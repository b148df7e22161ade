import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from foldquad.vehicle import (
    Configuration,
    VehicleParams,
    arm_com_position,
    arm_inertia_body,
    arm_rotation,
    center_of_mass,
    combined_inertia,
    config_hinge_angles,
    footprint_width,
    load_config,
    min_horizontal_dimension,
    prop_position,
    speed_from_thrust,
    thrust_from_speed,
)

STEADY = (Configuration.UNFOLDED, Configuration.TWO_FOLDED_24,
          Configuration.TWO_FOLDED_13, Configuration.FOUR_FOLDED)

# narrowest horizontal width per configuration, frozen from the geometry
MIN_DIMS = {
    Configuration.UNFOLDED: 0.4432,
    Configuration.TWO_FOLDED_24: 0.2206354459099737,
    Configuration.FOUR_FOLDED: 0.1902661188686619,
}


def test_masses(params):
    assert params.mass_body == 0.356
    assert params.mass_arm == 0.067
    assert np.isclose(params.mass_total, 0.624)


def test_arm_azimuths_alternate_skew(params):
    psi = np.radians([-45.0, -135.0, 135.0, 45.0])
    sigma = np.array([1.0, -1.0, 1.0, -1.0])
    assert np.allclose(params.arm_azimuths, psi + sigma * params.arm_skew)


def test_spin_signs_alternate(params):
    assert [params.spin_sign(i) for i in range(4)] == [-1.0, 1.0, -1.0, 1.0]


def test_unfolded_props_form_the_stated_square(params):
    half = params.prop_spacing / 2.0
    corners = np.array([
        [half, -half], [-half, -half], [-half, half], [half, half]])
    for i in range(4):
        p = prop_position(params, i, 0.0)
        assert np.allclose(p[:2], corners[i], atol=1e-15)
        assert np.isclose(p[2], params.prop_plane_height)


def test_hinge_positions_match_published_magnitudes(params):
    h1 = params.hinge_positions[0]
    assert np.allclose(np.abs(h1), [0.045, 0.071, 0.002], atol=5e-4)
    assert h1[0] > 0 and h1[1] < 0 and h1[2] > 0


def test_hinge_axes_are_horizontal_units(params):
    axes = params.hinge_axes
    assert np.allclose(np.linalg.norm(axes, axis=1), 1.0)
    assert np.allclose(axes[:, 2], 0.0)
    # folding rotates the arm tip downward about this axis
    for i in range(4):
        tip_down = prop_position(params, i, 0.3)[2] < prop_position(params, i, 0.0)[2]
        assert tip_down


def test_arm_rotation_keeps_hinge_axis_and_mount_heading(params):
    for i in range(4):
        R = arm_rotation(params, i, 0.9)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.allclose(R @ np.array([0.0, 1.0, 0.0]), params.hinge_axes[i])
        # at zero fold the arm frame is the azimuth mount frame
        R0 = arm_rotation(params, i, 0.0)
        assert np.allclose(R0 @ np.array([1.0, 0.0, 0.0]),
                           params.arm_directions[i], atol=1e-15)


def test_com_datum_and_fold_shifts(params):
    com_u = center_of_mass(Configuration.UNFOLDED, params)
    assert np.allclose(com_u[:2], 0.0, atol=1e-15)
    assert np.isclose(com_u[2], 0.006871794871794873)
    shift2 = center_of_mass(Configuration.TWO_FOLDED_24, params)[2] - com_u[2]
    shift4 = center_of_mass(Configuration.FOUR_FOLDED, params)[2] - com_u[2]
    assert np.isclose(shift2, -0.01932692307692308)
    assert np.isclose(shift4, -0.03865384615384616)
    # two-folded keeps left-right symmetry, so x, y stay centered
    assert np.allclose(center_of_mass(Configuration.TWO_FOLDED_24, params)[:2],
                       0.0, atol=1e-15)


@given(st.floats(0.01, 1.0), st.floats(-0.2, 0.0))
def test_payload_com_is_the_two_mass_average(params, m_p, d_z):
    base = center_of_mass(Configuration.UNFOLDED, params)
    com = center_of_mass(Configuration.UNFOLDED, params,
                         payload_mass=m_p, payload_position=np.array([0, 0, d_z]))
    expect = (params.mass_total * base[2] + m_p * d_z) / (params.mass_total + m_p)
    assert np.isclose(com[2], expect, atol=1e-12)


def test_config_hinge_angles(params):
    assert np.array_equal(config_hinge_angles(Configuration.UNFOLDED), np.zeros(4))
    q = config_hinge_angles(Configuration.TWO_FOLDED_24)
    assert np.allclose(q, [0.0, np.pi / 2, 0.0, np.pi / 2])
    with pytest.raises(ValueError):
        config_hinge_angles(Configuration.FOLDING_ALL)


def test_transitional_configs_are_not_steady():
    assert Configuration.UNFOLDED.is_steady
    assert Configuration.TWO_FOLDED_13.is_steady
    assert not Configuration.FOLDING_24.is_steady
    assert not Configuration.UNFOLDING_ALL.is_steady


@pytest.mark.parametrize("config,expected", sorted(MIN_DIMS.items(),
                                                   key=lambda kv: kv[0].value))
def test_min_horizontal_dimension_frozen(params, config, expected):
    assert np.isclose(min_horizontal_dimension(config, params), expected,
                      atol=1e-12)


def test_min_dimensions_match_reported_sizes(params):
    # 0.43 m unfolded and 0.24 m two-folded, within field-measurement slack
    assert abs(min_horizontal_dimension(Configuration.UNFOLDED, params) - 0.43) < 0.02
    assert abs(min_horizontal_dimension(Configuration.TWO_FOLDED_24, params) - 0.24) < 0.02


def test_footprint_width_agrees_with_config_wrapper(params):
    for config in STEADY:
        angles = config_hinge_angles(config)
        assert footprint_width(angles, params) == pytest.approx(
            min_horizontal_dimension(config, params), abs=0.0)


def test_footprint_width_shrinks_as_arms_fold(params):
    widths = [footprint_width(np.full(4, a), params, n_directions=360)
              for a in np.linspace(0.0, np.pi / 2, 7)]
    assert all(w1 >= w2 - 1e-12 for w1, w2 in zip(widths, widths[1:]))


def test_combined_inertia_is_spd_and_stacks_arm_terms(params):
    for config in STEADY:
        J = combined_inertia(config, params)
        assert np.allclose(J, J.T, atol=1e-15)
        assert np.all(np.linalg.eigvalsh(J) > 0)
    J_u = combined_inertia(Configuration.UNFOLDED, params)
    # flat X layout: yaw inertia exceeds roll/pitch
    assert J_u[2, 2] > J_u[0, 0] and J_u[2, 2] > J_u[1, 1]


def test_arm_inertia_transforms_with_the_fold_angle(params):
    J0 = arm_inertia_body(params, 0, 0.0)
    J1 = arm_inertia_body(params, 0, 1.2)
    R = arm_rotation(params, 0, 1.2) @ arm_rotation(params, 0, 0.0).T
    assert np.allclose(R @ J0 @ R.T, J1, atol=1e-12)


def test_arm_com_position_consistent_with_prop(params):
    for i in range(4):
        for angle in (0.0, 0.7, np.pi / 2):
            rel = prop_position(params, i, angle) - arm_com_position(params, i, angle)
            # prop sits a fixed arm-frame offset from the arm COM
            expect = arm_rotation(params, i, angle) @ (
                params.hinge_to_prop - params.hinge_to_arm_com)
            assert np.allclose(rel, expect, atol=1e-15)


@given(st.floats(-3.4, 7.8))
def test_speed_thrust_round_trip(params, thrust):
    w = speed_from_thrust(params, thrust)
    assert abs(w) <= params.max_prop_speed + 1e-9
    assert np.isclose(thrust_from_speed(params, w), thrust, atol=1e-9)
    assert (w >= 0) == (thrust >= 0)


def test_load_config_flat_and_sectioned(tmp_path, params):
    flat = tmp_path / "flat.yaml"
    flat.write_text("mass_body: 0.5\n")
    p_flat, ctl_flat = load_config(flat)
    assert p_flat.mass_body == 0.5 and ctl_flat == {}

    sectioned = tmp_path / "sectioned.yaml"
    sectioned.write_text(
        "vehicle:\n  mass_body: 0.5\ncontroller:\n  kp_pos: 3.0\n")
    p_sec, ctl_sec = load_config(sectioned)
    assert p_sec.mass_body == 0.5
    assert ctl_sec == {"kp_pos": 3.0}


def test_load_config_rejects_unknown_keys(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("mass_body: 0.5\nnot_a_field: 1\n")
    with pytest.raises(ValueError, match="not_a_field"):
        load_config(bad)


def test_params_validation_rejects_nonsense(params):
    with pytest.raises(ValueError):
        dataclasses.replace(params, mass_body=-1.0)
    with pytest.raises(ValueError):
        dataclasses.replace(params, thrust_min=1.0)


def test_hinge_to_arm_com_negates_stored_field(params):
    assert np.allclose(params.hinge_to_arm_com, -np.asarray(params.arm_com_to_hinge))
