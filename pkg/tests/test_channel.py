"""Logical channel evaluation: both routes, metrics, and closed forms."""

import cmath
import math

import numpy as np
import pytest

import mbqclab as m
from mbqclab.channel import _product_expectation
from mbqclab.errors import CapacityError


def subset_sum_oracle(state, schedule):
    """Independent 2^m expansion of < prod_k exp(i gamma K_{>= r_k}) >."""
    n = state.n_sites
    c, s = math.cos(schedule.gamma), math.sin(schedule.gamma)
    total = 0.0 + 0.0j
    sites = schedule.rotation_sites
    for mask in range(1 << schedule.m):
        chosen = [sites[k] for k in range(schedule.m) if mask >> k & 1]
        op = m.PauliString.identity(n)
        for site in chosen:
            op = m.multiply(op, m.string_order_geq(site, n))
        total += c ** (schedule.m - len(chosen)) * (1j * s) ** len(chosen) * m.expectation(state, op)
    return total


class TestTargets:
    def test_zero_angle_is_identity(self):
        assert np.allclose(m.target_rotation("z", 0.0), np.eye(3))

    def test_quarter_turn(self):
        expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]])
        assert np.allclose(m.target_rotation("z", math.pi / 2), expected, atol=1e-15)

    def test_x_rotation_inverse(self):
        r = m.target_rotation("x", 0.37) @ m.target_rotation("x", -0.37)
        assert np.allclose(r, np.eye(3), atol=1e-12)

    def test_bad_axis(self):
        with pytest.raises(ValueError):
            m.target_rotation("y", 0.1)


class TestSchedule:
    def test_rotation_sites(self):
        sched = m.RotationSchedule("z", 3, 4, 3, 0.1, 0.3)
        assert sched.rotation_sites == (3, 7, 11)

    def test_parity_validation(self):
        with pytest.raises(ValueError):
            m.RotationSchedule("z", 1, 2, 2, 0.1, 0.1)  # even buffer for z
        with pytest.raises(ValueError):
            m.RotationSchedule("x", 1, 2, 3, 0.1, 0.1)  # odd buffer for x
        with pytest.raises(ValueError):
            m.RotationSchedule("z", 1, 3, 3, 0.1, 0.1)  # odd spacing

    def test_fit_check(self):
        sched = m.RotationSchedule("z", 3, 4, 3, 0.1, 0.3)
        sched.check_fits(13)  # last site 11 <= 11
        with pytest.raises(ValueError):
            sched.check_fits(11)

    def test_auto_scaling(self):
        sched = m.RotationSchedule.auto_scaled("z", 4, 2, 3, 0.2, 0.8)
        assert abs(sched.gamma - 0.2 / (4 * 0.8)) < 1e-15
        assert sched.beta_log == 0.2
        with pytest.raises(ValueError):
            m.RotationSchedule.auto_scaled("z", 4, 2, 3, 0.2, 0.0)

    def test_site_angle_form(self):
        sched = m.RotationSchedule.from_site_angle("z", 4, 2, 3, 0.05, 0.8)
        assert abs(sched.beta_log - 4 * 0.05 * 0.8) < 1e-15


class TestEvaluationPaths:
    @pytest.mark.parametrize("axis,m_count,delta", [
        ("z", 1, 2), ("z", 2, 2), ("z", 3, 2), ("z", 2, 4), ("z", 6, 2),
        ("x", 1, 2), ("x", 2, 4), ("x", 3, 2),
    ])
    def test_subset_equals_network_dense(self, solved, axis, m_count, delta):
        state = solved(13, 0.3)
        buffer_d = 1 if axis == "z" else 2
        sched = m.RotationSchedule(axis, m_count, delta, buffer_d, 0.17, 0.3)
        e_sub = _product_expectation(state, sched, "subset")
        e_net = _product_expectation(state, sched, "network")
        assert abs(e_sub - e_net) < 1e-10

    def test_subset_equals_network_mps(self, solved):
        state = solved(51, 0.3, method="dmrg")
        sched = m.RotationSchedule("z", 4, 4, 5, 0.12, 0.4)
        e_sub = _product_expectation(state, sched, "subset")
        e_net = _product_expectation(state, sched, "network")
        assert abs(e_sub - e_net) < 1e-10

    def test_subset_capacity_error(self, solved):
        state = solved(51, 0.3, method="dmrg")
        sched = m.RotationSchedule("z", 22, 2, 3, 0.01, 0.2)
        with pytest.raises(CapacityError):
            _product_expectation(state, sched, "subset")

    def test_against_independent_subset_sum(self, solved):
        state = solved(13, 0.4)
        sched = m.RotationSchedule("z", 3, 2, 5, 0.2, 0.5)
        oracle = subset_sum_oracle(state, sched)
        assert abs(_product_expectation(state, sched, "network") - oracle) < 1e-12


class TestChannelMatrix:
    def test_cluster_point_exact_rotation(self, solved):
        state = solved(9, 0.0)
        sched = m.RotationSchedule.auto_scaled("z", 2, 2, 1, 0.7, 1.0)
        channel = m.channel_matrix(state, sched)
        assert np.abs(channel.matrix - m.target_rotation("z", 0.7)).max() < 1e-10
        assert channel.d_m < 1e-10

    def test_zero_angle_identity_channel(self, solved):
        state = solved(9, 0.3)
        sched = m.RotationSchedule("z", 2, 2, 3, 0.0, 0.4)
        channel = m.channel_matrix(state, sched)
        assert np.allclose(channel.matrix, np.eye(3), atol=1e-12)
        expected = m.decoherence(np.eye(3), m.target_rotation("z", 0.4))
        assert abs(channel.d_m - expected) < 1e-12

    def test_empty_schedule_is_identity(self, solved):
        state = solved(9, 0.3)
        sched = m.RotationSchedule("z", 0, 2, 3, 0.1, 0.3)
        channel = m.channel_matrix(state, sched)
        assert np.allclose(channel.matrix, np.eye(3))

    def test_dm_equals_twice_gm_everywhere(self, solved):
        state = solved(13, 0.4)
        prof = m.profile(state, "odd", deltas=[2])
        for mm in (1, 2, 4):
            sched = m.RotationSchedule.auto_scaled("z", mm, 2, 3, 0.3, prof.bulk_value)
            channel = m.channel_matrix(state, sched)
            assert abs(channel.d_m - 2 * abs(channel.gm)) < 1e-12
        manual = m.RotationSchedule.from_site_angle("z", 2, 2, 3, 0.25, prof.bulk_value)
        channel = m.channel_matrix(state, manual)
        assert abs(channel.d_m - 2 * abs(channel.gm)) < 1e-12

    def test_axis_z_fixes_z_component(self, solved):
        state = solved(13, 0.4)
        sched = m.RotationSchedule("z", 2, 2, 3, 0.2, 0.4)
        mat = m.channel_matrix(state, sched).matrix
        assert np.allclose(mat[2], [0, 0, 1]) and np.allclose(mat[:, 2], [0, 0, 1])

    def test_axis_x_fixes_x_component(self, solved):
        state = solved(13, 0.4)
        sched = m.RotationSchedule("x", 2, 2, 2, 0.2, 0.4)
        mat = m.channel_matrix(state, sched).matrix
        assert np.allclose(mat[0], [1, 0, 0]) and np.allclose(mat[:, 0], [1, 0, 0])

    def test_contractive(self, solved):
        state = solved(13, 0.4)
        sched = m.RotationSchedule.auto_scaled("z", 3, 2, 3, 0.5, 0.98)
        svals = np.linalg.svd(m.channel_matrix(state, sched).matrix, compute_uv=False)
        assert svals.max() <= 1 + 1e-9

    def test_beta_effective_approaches_target(self, solved):
        state = solved(13, 0.3)
        prof = m.profile(state, "odd", deltas=[2])
        errs = []
        for mm in (1, 2, 4):
            sched = m.RotationSchedule.auto_scaled("z", mm, 2, 1, 0.2, prof.bulk_value)
            errs.append(abs(m.channel_matrix(state, sched).beta_effective - 0.2))
        assert errs[-1] < errs[0] or errs[-1] < 1e-6


class TestGm:
    def test_cluster_point_zero(self, solved):
        state = solved(9, 0.0)
        sched = m.RotationSchedule.auto_scaled("z", 2, 2, 1, 0.4, 1.0)
        assert abs(m.gm_exact(state, sched)) < 1e-12

    def test_against_subset_sum_oracle(self, solved):
        state = solved(13, 0.3)
        sched = m.RotationSchedule.from_site_angle("z", 3, 2, 3, 0.2, 1.0)
        expected = cmath.exp(-1j * sched.beta_log) * subset_sum_oracle(state, sched) - 1.0
        assert abs(m.gm_exact(state, sched) - expected) < 1e-12

    def test_single_site_purity_relation(self, solved):
        # 2|G_1| reproduces the single-site purity loss at leading order
        state = solved(13, 0.3)
        prof = m.profile(state, "odd", deltas=[2])
        beta = 0.05
        sched = m.RotationSchedule.from_site_angle("z", 1, 2, 5, beta, prof.bulk_value)
        k5 = m.expectation(state, m.string_order_geq(5, 13))
        loss = beta**2 * (1 - k5**2)
        assert abs(2 * abs(m.gm_exact(state, sched)) - loss) < 10 * beta**3


class TestMetrics:
    def test_decoherence_zero_on_equal(self):
        r = m.target_rotation("z", 0.3)
        assert m.decoherence(r, r) == 0.0

    def test_decoherence_small_angle_asymptotics(self):
        # two z-rotations an angle eps apart sit at distance 4 |sin(eps/2)|
        eps = 1e-3
        d = m.decoherence(m.target_rotation("z", 0.3 + eps), m.target_rotation("z", 0.3))
        assert abs(d - 2 * math.sqrt(2) * abs(math.sin(eps / 2)) * math.sqrt(2)) < 1e-12

    def test_decoherence_4x4_matches_3x3(self, solved):
        state = solved(13, 0.3)
        sched = m.RotationSchedule("z", 2, 2, 3, 0.2, 0.4)
        mat3 = m.channel_matrix(state, sched).matrix
        tgt3 = m.target_rotation("z", 0.4)
        mat4 = np.eye(4)
        mat4[1:, 1:] = mat3
        tgt4 = np.eye(4)
        tgt4[1:, 1:] = tgt3
        assert abs(m.decoherence(mat4, tgt4) - m.decoherence(mat3, tgt3)) < 1e-14

    def test_decoherence_shape_mismatch(self):
        with pytest.raises(ValueError):
            m.decoherence(np.eye(3), np.eye(4))

    def test_purity_loss(self):
        assert m.purity_loss((1.0, 0.0, 0.0)) == 0.0
        assert abs(m.purity_loss((0.6, 0.0, 0.0)) - 0.64) < 1e-15
        with pytest.raises(ValueError):
            m.purity_loss((1.5, 0.0, 0.0))


class TestClosedForms:
    def test_idle_input(self):
        assert m.two_site_closed_form(0.9, 0.9, 0.85, 0.0, 0.0) == (1.0, 0.0, 0.0)

    def test_single_rotation_case(self):
        beta, k = 0.4, 0.93
        x, y, z = m.two_site_closed_form(k, 0.91, 0.86, beta, 0.0)
        assert abs(x - math.cos(beta)) < 1e-15
        assert abs(y - math.sin(beta) * k) < 1e-15
        assert z == 0.0

    def test_matches_channel_first_column(self, solved):
        state = solved(13, 0.3)
        n = 13
        k, l = 5, 7
        gamma = 0.21
        vk = m.expectation(state, m.string_order_geq(k, n))
        vl = m.expectation(state, m.string_order_geq(l, n))
        vp = m.expectation(state, m.string_order_pair(k, l, n))
        closed = m.two_site_closed_form(vk, vl, vp, gamma, gamma)
        sched = m.RotationSchedule.from_site_angle("z", 2, 2, 5, gamma, (vk + vl) / 2)
        col = m.channel_matrix(state, sched).matrix @ np.array([1.0, 0.0, 0.0])
        assert abs(closed[0] - col[0]) < 1e-8
        assert abs(closed[1] - col[1]) < 1e-8
        assert abs(closed[2] - col[2]) < 1e-8

    def test_range_validation(self):
        with pytest.raises(ValueError):
            m.two_site_closed_form(1.2, 0.9, 0.9, 0.1, 0.1)


class TestPlusStateFormula:
    def test_cluster_point_pure_rotation(self, solved):
        state = solved(9, 0.0)
        for mm in (1, 3):
            sched = m.RotationSchedule.from_site_angle("z", mm, 2, 1, 0.21, 1.0)
            x, y = m.plus_state_product_formula(state, sched)
            assert abs(x - math.cos(mm * 0.21)) < 1e-10
            assert abs(y - math.sin(mm * 0.21)) < 1e-10

    def test_equals_channel_column(self, solved):
        state = solved(13, 0.3)
        sched = m.RotationSchedule("z", 2, 4, 3, 0.3, 0.55)
        x, y = m.plus_state_product_formula(state, sched)
        col = m.channel_matrix(state, sched).matrix @ np.array([1.0, 0.0, 0.0])
        assert abs(x - col[0]) < 1e-14 and abs(y - col[1]) < 1e-14

    def test_single_site_reduction(self, solved):
        state = solved(13, 0.3)
        gamma = 0.3
        sched = m.RotationSchedule.from_site_angle("z", 1, 2, 5, gamma, 1.0)
        x, y = m.plus_state_product_formula(state, sched)
        k5 = m.expectation(state, m.string_order_geq(5, 13))
        assert abs(x - math.cos(gamma)) < 1e-12
        assert abs(y - math.sin(gamma) * k5) < 1e-12

    def test_x_axis_rejected(self, solved):
        state = solved(9, 0.0)
        sched = m.RotationSchedule("x", 1, 2, 2, 0.1, 0.1)
        with pytest.raises(ValueError):
            m.plus_state_product_formula(state, sched)


class TestSplittingMonotonicity:
    def test_two_site_ratio_decreases_toward_half(self, solved):
        # translation-invariant evaluation: bulk string order with centered pairs
        state = solved(13, 0.6)
        beta = 0.05
        prof = m.profile(state, "odd", deltas=[2, 4])
        b = prof.bulk_value
        d1 = m.purity_loss(m.two_site_closed_form(b, 0.0, 0.0, beta, 0.0))
        ratios = []
        for delta in (2, 4):
            d2 = m.purity_loss(
                m.two_site_closed_form(b, b, prof.k_pair[float(delta)], beta / 2, beta / 2)
            )
            ratios.append(d2 / d1)
        assert all(0.5 < r <= 1.0 + 1e-9 for r in ratios)
        assert ratios[1] < ratios[0]
        # the reduction tracks (1 + f)/2 at leading order in beta
        for delta, ratio in zip((2, 4), ratios):
            assert abs(ratio - (1 + prof.f_values[float(delta)]) / 2) < 10 * beta


def test_channel_json_export(solved, tmp_path):
    import json

    state = solved(9, 0.3)
    sched = m.RotationSchedule("z", 1, 2, 3, 0.2, 0.2)
    channel = m.channel_matrix(state, sched)
    from mbqclab.channel import export_channel_json

    path = export_channel_json(channel, sched, tmp_path / "chan.json")
    data = json.loads(path.read_text())
    assert len(data["matrix"]) == 9
    assert data["schedule"]["m"] == 1
    assert abs(data["d_m"] - channel.d_m) < 1e-15
