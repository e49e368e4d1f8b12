import numpy as np
import pytest

from oracles import brute_components26
from tubekit import DegenerateShapeError, PhantomSpec, generate, perturb


def test_cylinder_volume_within_3_percent():
    spec = PhantomSpec("cylinder", dims=(24, 24, 112), radius_mm=4.0, length_mm=100.0)
    ph = generate(spec)
    count = ph.mask().foreground_count
    analytic = np.pi * 4.0**2 * 100.0
    assert abs(count - analytic) / analytic < 0.03


def test_ball_volume_within_3_percent():
    spec = PhantomSpec("ball", dims=(24, 24, 24), radius_mm=8.0)
    ph = generate(spec)
    count = ph.mask().foreground_count
    analytic = 4.0 / 3.0 * np.pi * 8.0**3
    assert abs(count - analytic) / analytic < 0.03


def test_torus_volume_converges_to_analytic():
    # at the tube's top and bottom the cross-section width drops with
    # infinite slope, so coarse grids under-sample there; the voxelized
    # volume must approach 2 pi^2 R r^2 as spacing shrinks
    analytic = 2.0 * np.pi**2 * 12.0 * 3.0**2
    errs = []
    for s, dims in [(1.0, (40, 40, 16)), (0.5, (76, 76, 20))]:
        spec = PhantomSpec(
            "torus", dims=dims, spacing=(s, s, s), radius_mm=3.0, major_radius_mm=12.0
        )
        vol = generate(spec).mask().foreground_count * s**3
        errs.append(abs(vol - analytic) / analytic)
    assert errs[1] < errs[0]
    assert errs[1] < 0.03


def test_anisotropic_cylinder_volume():
    spec = PhantomSpec(
        "cylinder", dims=(48, 48, 64), spacing=(0.5, 0.5, 1.0), radius_mm=4.0, length_mm=50.0
    )
    ph = generate(spec)
    vol_mm3 = ph.mask().foreground_count * 0.25
    analytic = np.pi * 16.0 * 50.0
    assert abs(vol_mm3 - analytic) / analytic < 0.03


def test_y_branch_bookkeeping(y_branch_phantom):
    ph = y_branch_phantom
    assert len(ph.bifurcations[1]) == 1
    assert len(ph.terminals[1]) == 2
    assert ph.volume.data.max() == 1


def test_centerline_lies_inside_foreground(cylinder_phantom, y_branch_phantom):
    for ph in (cylinder_phantom, y_branch_phantom):
        occ = ph.mask().data
        sx, sy, sz = ph.volume.spacing
        for pt in ph.centerline_points(1):
            x = int(round(pt[0] / sx))
            y = int(round(pt[1] / sy))
            z = int(round(pt[2] / sz))
            assert occ[z, y, x]


def test_centerline_sampling_step_bound():
    spec = PhantomSpec(
        "helix",
        dims=(64, 64, 64),
        spacing=(0.7, 1.0, 1.0),
        radius_mm=2.5,
        major_radius_mm=14.0,
        turns=1.5,
        pitch_mm=14.0,
    )
    ph = generate(spec)
    step_cap = 0.5 * 0.7 + 1e-9
    for line in ph.centerlines[1]:
        gaps = np.linalg.norm(np.diff(line, axis=0), axis=1)
        assert np.all(gaps <= step_cap)


def test_generation_is_deterministic():
    spec = PhantomSpec("y_branch", dims=(72, 72, 72), radius_mm=3.0, length_mm=40.0)
    a = generate(spec)
    b = generate(spec)
    assert np.array_equal(a.volume.data, b.volume.data)
    assert all(np.array_equal(p, q) for p, q in zip(a.centerlines[1], b.centerlines[1]))


def test_margin_violation_names_the_constraint():
    with pytest.raises(DegenerateShapeError) as err:
        generate(PhantomSpec("cylinder", dims=(24, 24, 30), radius_mm=4.0, length_mm=40.0))
    msg = str(err.value)
    assert "axis z" in msg and "2 voxels" in msg


def test_torus_needs_room_for_the_tube():
    with pytest.raises(ValueError):
        generate(PhantomSpec("torus", dims=(40, 40, 16), radius_mm=13.0, major_radius_mm=12.0))


def test_multiclass_tree_structure():
    spec = PhantomSpec(
        "multiclass_tree", dims=(96, 96, 96), radius_mm=3.0, length_mm=30.0, generations=3
    )
    ph = generate(spec)
    labels = ph.volume.labels()
    assert len(labels) == 1 + 2 + 4  # trunk + two generations of splits
    data = ph.volume.data
    # pairwise disjoint by construction of a label volume; union connected
    assert brute_components26(data > 0) == 1
    for cid in labels:
        assert (data == cid).any()
        assert len(ph.centerlines[cid]) >= 1


def test_multiclass_tree_19_classes():
    spec = PhantomSpec(
        "multiclass_tree",
        dims=(160, 160, 160),
        radius_mm=2.5,
        length_mm=36.0,
        generations=4,
        angle_deg=34.0,
    )
    ph = generate(spec)
    labels = ph.volume.labels()
    assert len(labels) == 15  # 1 + 2 + 4 + 8
    assert brute_components26(ph.volume.data > 0) == 1


def test_perturb_probability_bounds():
    ph = generate(PhantomSpec("ball", dims=(20, 20, 20), radius_mm=6.0))
    with pytest.raises(ValueError):
        perturb(ph, 0.31, seed=0)
    with pytest.raises(ValueError):
        perturb(ph, -0.1, seed=0)


def test_perturb_zero_is_identity():
    ph = generate(PhantomSpec("ball", dims=(20, 20, 20), radius_mm=6.0))
    out = perturb(ph, 0.0, seed=3)
    assert np.array_equal(out.volume.data, ph.volume.data)


def test_perturb_seed_determinism_and_centerlines():
    ph = generate(PhantomSpec("cylinder", dims=(28, 28, 40), radius_mm=4.0, length_mm=28.0))
    a = perturb(ph, 0.2, seed=11)
    b = perturb(ph, 0.2, seed=11)
    c = perturb(ph, 0.2, seed=12)
    assert np.array_equal(a.volume.data, b.volume.data)
    assert not np.array_equal(a.volume.data, c.volume.data)
    assert all(np.array_equal(p, q) for p, q in zip(a.centerlines[1], ph.centerlines[1]))


def test_perturb_toggle_count_within_5_sigma():
    ph = generate(PhantomSpec("cylinder", dims=(36, 36, 80), radius_mm=5.0, length_mm=64.0))
    occ = ph.mask().data
    padded = np.pad(occ, 1)
    surface = np.zeros_like(occ)
    for ax in range(3):
        for shift in (1, -1):
            rolled = np.roll(padded, shift, axis=ax)[1:-1, 1:-1, 1:-1]
            surface |= occ & ~rolled
    n = int(surface.sum())
    p = 0.1
    toggled = int((perturb(ph, p, seed=5).volume.data != ph.volume.data).sum())
    mean = n * p
    sigma = np.sqrt(n * p * (1 - p))
    assert abs(toggled - mean) <= 5 * sigma


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        PhantomSpec("moebius", dims=(32, 32, 32))
