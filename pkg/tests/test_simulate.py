import io
import math

import numpy as np
import pytest

import reflectsde as rs
from reflectsde import rng as rng_mod
from reflectsde.errors import DataError, ModelError
from reflectsde.simulate import _python_loop

from conftest import power_model


class TestBridgeMinimum:
    def test_u_one_positive_endpoint(self):
        assert rs.sample_min_given_endpoint(0.5, 1.0, 1.0, 1.0) == 0.0

    def test_u_one_negative_endpoint(self):
        assert rs.sample_min_given_endpoint(-0.3, 1.0, 1.0, 1.0) == -0.3

    def test_hand_value(self):
        # s=0, sigma=1, h=1, u=e^-2: (0 - sqrt(0 + 4)) / 2 = -1
        m = rs.sample_min_given_endpoint(0.0, 1.0, 1.0, math.exp(-2.0))
        assert m == pytest.approx(-1.0, rel=1e-14)

    def test_u_zero_rejected(self):
        with pytest.raises(ModelError):
            rs.sample_min_given_endpoint(0.1, 1.0, 1.0, 0.0)
        with pytest.raises(ModelError):
            rs.sample_min_given_endpoint(0.1, 1.0, 1.0, 1.5)

    def test_never_above_min_zero_endpoint(self):
        rng = np.random.default_rng(0)
        for _ in range(500):
            s = rng.normal()
            u = 1.0 - rng.random()
            m = rs.sample_min_given_endpoint(s, 0.5, 0.01, u)
            assert m <= min(0.0, s) + 1e-15


class TestSteps:
    def test_interior_step(self):
        x, dl = rs.step_one_sided_lower(
            x=10.0, mu=-0.5, sigma=0.1, h=0.01, dw=0.03, u=0.9, a=0.0
        )
        assert dl == 0.0
        assert x == pytest.approx(10.0 - 0.005 + 0.003)

    def test_push_from_barrier(self):
        # x=a, drift takes s=-0.1, u=1 puts the minimum at the endpoint
        x, dl = rs.step_one_sided_lower(
            x=0.5, mu=-10.0, sigma=0.0, h=0.01, dw=0.0, u=1.0, a=0.5
        )
        assert dl == pytest.approx(0.1)
        assert x == pytest.approx(0.5)

    def test_graze_above_barrier(self):
        x, dl = rs.step_one_sided_lower(
            x=0.05, mu=20.0, sigma=0.0, h=0.01, dw=0.0, u=1.0, a=0.0
        )
        assert dl == 0.0
        assert x == pytest.approx(0.25)

    def test_two_sided_interior(self):
        x, dl, dr = rs.step_two_sided(1.0, 0.5, 0.1, 0.01, 0.0, 1.0, 0.0, 3.0)
        assert (dl, dr) == (0.0, 0.0)
        assert x == pytest.approx(1.005)

    def test_two_sided_upper_clip(self):
        x, dl, dr = rs.step_two_sided(3.0, 10.0, 0.0, 0.01, 0.0, 1.0, 0.0, 3.0)
        assert dl == 0.0
        assert dr == pytest.approx(0.1)
        assert x == pytest.approx(3.0)

    def test_two_sided_lower_push(self):
        x, dl, dr = rs.step_two_sided(0.0, -10.0, 0.0, 0.01, 0.0, 1.0, 0.0, 3.0)
        assert dl == pytest.approx(0.1)
        assert dr == 0.0
        assert x == pytest.approx(0.0)

    def test_positive_push_lifts_minimum_exactly_to_barrier(self):
        # whenever dl > 0, the reflected within-step minimum x + m + dl
        # sits on the barrier
        rng = np.random.default_rng(3)
        h, sigma, a = 0.01, 0.2, 0.0
        pushes = 0
        for _ in range(2000):
            x = rng.uniform(0.0, 0.1)
            mu = rng.uniform(-4.0, 1.0)
            dw = rng.normal() * math.sqrt(h)
            u = 1.0 - rng.random()
            _, dl = rs.step_one_sided_lower(x, mu, sigma, h, dw, u, a)
            if dl > 0.0:
                pushes += 1
                m = rs.sample_min_given_endpoint(mu * h + sigma * dw, sigma, h, u)
                assert x + m + dl == pytest.approx(a, abs=1e-15)
        assert pushes > 100


class TestSimulatePath:
    def test_noiseless_euler_accumulation(self):
        config = rs.ModelConfig(
            drift=rs.DriftSpec.power(1.0), sigma=0.0,
            barriers=rs.BarrierConfig.two_sided(0.0, 3.0),
            theta_domain=(0.1, 6.0), x0=1.5,
        )
        plan = rs.SamplingPlan(n=20, h=0.05)
        m = 4
        path = rs.simulate_path(config, 0.5, plan, rs.SimOptions(substeps=m, seed=3))
        expected = np.empty(21)
        x = 1.5
        expected[0] = x
        hf = 0.05 / m
        for k in range(20):
            for _ in range(m):
                x = x + (-0.5 * x) * hf
            expected[k + 1] = x
        np.testing.assert_allclose(path.x, expected, rtol=0, atol=1e-15)
        assert np.all(path.l == 0.0) and np.all(path.r == 0.0)

    def test_same_seed_bit_identical(self):
        config = power_model(0.5)
        plan = rs.SamplingPlan(n=100, h=0.01)
        p1 = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=42))
        p2 = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=42))
        assert np.array_equal(p1.x, p2.x)
        assert np.array_equal(p1.l, p2.l)
        assert np.array_equal(p1.r, p2.r)
        p3 = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=43))
        assert not np.array_equal(p1.x, p3.x)

    def test_barrier_and_regulator_invariants(self):
        config = power_model(0.5)
        plan = rs.SamplingPlan(n=2000, h=0.01)
        path = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=7))
        a, b = 0.0, 3.0
        assert path.x.min() >= a - 1e-12
        assert path.x.max() <= b + 1e-12
        assert path.l[0] == 0.0 and path.r[0] == 0.0
        assert np.all(np.diff(path.l) >= 0.0)
        assert np.all(np.diff(path.r) >= 0.0)
        path.validate()
        # the benchmark path actually works its barrier
        assert path.l[-1] > 0.0

    def test_complementary_slackness_flags(self):
        config = power_model(0.5)
        plan = rs.SamplingPlan(n=1000, h=0.01)
        path = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=11))
        grew = np.diff(path.l) > 0
        assert np.all(path.hit_lower[grew])
        grew_r = np.diff(path.r) > 0
        assert np.all(path.hit_upper[grew_r])

    def test_theta_outside_domain_rejected(self):
        config = power_model(0.5, theta_domain=(0.5, 1.5))
        with pytest.raises(ModelError):
            rs.simulate_path(config, 2.0, rs.SamplingPlan(n=10, h=0.01),
                             rs.SimOptions(seed=0))

    def test_unusual_seeds_are_deterministic(self):
        config = power_model(0.5)
        plan = rs.SamplingPlan(n=20, h=0.01)
        for seed in (0, -5, 2**63 + 11):
            p1 = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=seed))
            p2 = rs.simulate_path(config, 2.0, plan, rs.SimOptions(seed=seed))
            assert np.array_equal(p1.x, p2.x)

    def test_custom_drift_matches_builtin_kernel(self):
        # identical dynamics expressed as a custom drift take the Python
        # stepper; the paths must agree with the compiled kernel
        custom = rs.DriftSpec.custom(
            f=lambda x, th: -th * x,
            df_dtheta=lambda x, th: -x,
            d2f_dtheta2=lambda x, th: 0.0,
            lipschitz_bound=5.0,
        )
        barriers = rs.BarrierConfig.two_sided(0.0, 3.0)
        cfg_custom = rs.ModelConfig(drift=custom, sigma=0.2, barriers=barriers,
                                    theta_domain=(0.1, 6.0), x0=1.0)
        cfg_builtin = rs.ModelConfig(drift=rs.DriftSpec.power(1.0), sigma=0.2,
                                     barriers=barriers, theta_domain=(0.1, 6.0), x0=1.0)
        plan = rs.SamplingPlan(n=200, h=0.01)
        opts = rs.SimOptions(seed=99)
        p_custom = rs.simulate_path(cfg_custom, 2.0, plan, opts)
        p_builtin = rs.simulate_path(cfg_builtin, 2.0, plan, opts)
        np.testing.assert_allclose(p_custom.x, p_builtin.x, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(p_custom.l, p_builtin.l, rtol=1e-12, atol=1e-14)

    def test_projection_endpoint_sits_on_barrier(self):
        # with the projection scheme at one fine step per interval, any
        # interval whose lower regulator grew ends exactly on the barrier
        cfg = power_model(1.0, two_sided=False)
        plan = rs.SamplingPlan(n=2000, h=0.01)
        path = rs.simulate_path(cfg, 2.0, plan,
                                rs.SimOptions(scheme=rs.PROJECTION, substeps=1, seed=17))
        dl = np.diff(path.l)
        pushed = dl > 0.0
        assert pushed.sum() > 20
        assert np.all(path.x[1:][pushed] == 0.0)

    def test_projection_scheme_agrees_in_distribution(self):
        # at many substeps the exact-minimum and projection schemes must
        # give the same endpoint mean within Monte Carlo resolution
        config = rs.ModelConfig(
            drift=rs.DriftSpec.power(1.0), sigma=0.5,
            barriers=rs.BarrierConfig.one_sided_lower(0.0),
            theta_domain=(0.1, 6.0), x0=0.3,
        )
        plan = rs.SamplingPlan(n=20, h=0.05)
        reps = 400
        ends = {}
        for scheme in (rs.LEPINGLE, rs.PROJECTION):
            vals = np.empty(reps)
            for i in range(reps):
                opts = rs.SimOptions(scheme=scheme, substeps=64,
                                     seed=rng_mod.derive_seed(555, i))
                vals[i] = rs.simulate_path(config, 2.0, plan, opts).x[-1]
            ends[scheme] = vals
        diff = abs(ends[rs.LEPINGLE].mean() - ends[rs.PROJECTION].mean())
        se = math.sqrt(ends[rs.LEPINGLE].var(ddof=1) / reps
                       + ends[rs.PROJECTION].var(ddof=1) / reps)
        assert diff <= 3.0 * se

    def test_python_loop_mirror_consumes_same_draws(self):
        # the reference stepper must reproduce the kernel bit for bit when
        # fed the same draw arrays
        n, m, h = 50, 3, 0.02
        normals, uniforms = rng_mod.path_draws(1234, n * m)
        x = np.empty(n + 1); l = np.empty(n + 1); r = np.empty(n + 1)
        hlo = np.empty(n, dtype=bool); hup = np.empty(n, dtype=bool)
        _python_loop(lambda xv: -2.0 * xv, 1.0, 0.2, 0.0, 3.0, n, m, h / m,
                     True, normals, uniforms, x, l, r, hlo, hup)
        cfg = rs.ModelConfig(drift=rs.DriftSpec.power(1.0), sigma=0.2,
                             barriers=rs.BarrierConfig.two_sided(0.0, 3.0),
                             theta_domain=(0.1, 6.0), x0=1.0)
        path = rs.simulate_path(cfg, 2.0, rs.SamplingPlan(n=n, h=h),
                                rs.SimOptions(substeps=m, seed=1234))
        np.testing.assert_allclose(path.x, x, rtol=1e-13, atol=1e-15)


class TestTwoFactor:
    def test_barrier_invariants_and_determinism(self):
        plan = rs.SamplingPlan(n=500, h=0.01)
        tf = rs.simulate_two_factor(1.0, 0.5, 1.0, 1.0, 0.1, 0.0, 3.0, plan,
                                    rs.SimOptions(seed=21))
        tf.validate()
        assert tf.y.x.min() >= -1e-12 and tf.y.x.max() <= 3.0 + 1e-12
        assert tf.rshort.x.min() >= -1e-12
        assert np.all(tf.rshort.r == 0.0)
        tf2 = rs.simulate_two_factor(1.0, 0.5, 1.0, 1.0, 0.1, 0.0, 3.0, plan,
                                     rs.SimOptions(seed=21))
        assert np.array_equal(tf.y.x, tf2.y.x)
        assert np.array_equal(tf.rshort.x, tf2.rshort.x)
        # the two Brownian drivers are distinct streams
        assert not np.array_equal(np.diff(tf.y.x), np.diff(tf.rshort.x))

    def test_noiseless_pins_at_upper_barrier(self):
        # sigma=0, r0=1 freezes the short rate; the log price grows at rate
        # 1 + theta1 until it hits b, after which the upper regulator
        # absorbs the drift
        plan = rs.SamplingPlan(n=300, h=0.01)
        tf = rs.simulate_two_factor(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 3.0, plan,
                                    rs.SimOptions(seed=5))
        np.testing.assert_allclose(tf.rshort.x, 1.0, rtol=0, atol=1e-14)
        expected_y = np.minimum(1.0 + 2.0 * tf.y.times, 3.0)
        np.testing.assert_allclose(tf.y.x, expected_y, rtol=0, atol=1e-12)
        assert np.all(tf.y.l == 0.0)
        assert np.all(tf.rshort.l == 0.0)
        # once pinned, the regulator grows by the full drift each interval
        du = np.diff(tf.y.r)
        pinned = tf.y.times[1:] > 1.0 + plan.h
        np.testing.assert_allclose(du[pinned], 2.0 * plan.h, rtol=0, atol=1e-12)

    def test_invalid_inputs(self):
        plan = rs.SamplingPlan(n=10, h=0.01)
        with pytest.raises(ModelError):
            rs.simulate_two_factor(5.0, 0.5, 1.0, 1.0, 0.1, 0.0, 3.0, plan,
                                   rs.SimOptions())
        with pytest.raises(ModelError):
            rs.simulate_two_factor(1.0, -0.5, 1.0, 1.0, 0.1, 0.0, 3.0, plan,
                                   rs.SimOptions())


class TestCsvRoundTrip:
    def test_two_sided_round_trip_exact(self):
        config = power_model(0.5)
        path = rs.simulate_path(config, 2.0, rs.SamplingPlan(n=50, h=0.01),
                                rs.SimOptions(seed=8))
        buf = io.StringIO()
        rs.write_path_csv(path, buf)
        buf.seek(0)
        assert buf.readline().strip() == "t,x,l,r"
        buf.seek(0)
        loaded = rs.read_path_csv(buf, config.barriers)
        assert np.array_equal(loaded.x, path.x)
        assert np.array_equal(loaded.l, path.l)
        assert np.array_equal(loaded.r, path.r)
        assert loaded.h == path.h

    def test_one_sided_round_trip(self):
        config = power_model(0.5, two_sided=False)
        path = rs.simulate_path(config, 2.0, rs.SamplingPlan(n=50, h=0.01),
                                rs.SimOptions(seed=8))
        buf = io.StringIO()
        rs.write_path_csv(path, buf)
        buf.seek(0)
        assert buf.readline().strip() == "t,x,l"
        buf.seek(0)
        loaded = rs.read_path_csv(buf, config.barriers)
        assert np.array_equal(loaded.x, path.x)
        assert np.all(loaded.r == 0.0)

    def test_bad_header_rejected(self):
        with pytest.raises(DataError):
            rs.read_path_csv(io.StringIO("a,b,c\n1,2,3\n"),
                             rs.BarrierConfig.one_sided_lower(0.0))

    def test_irregular_times_rejected(self):
        text = "t,x,l\n0,1,0\n0.01,1,0\n0.05,1,0\n"
        with pytest.raises(DataError):
            rs.read_path_csv(io.StringIO(text), rs.BarrierConfig.one_sided_lower(0.0))

    def test_data_outside_barriers_rejected(self):
        text = "t,x,l\n0,1,0\n0.01,-0.5,0\n"
        with pytest.raises(DataError):
            rs.read_path_csv(io.StringIO(text), rs.BarrierConfig.one_sided_lower(0.0))

    def test_decreasing_regulator_rejected(self):
        text = "t,x,l\n0,1,0.0\n0.01,1,0.5\n0.02,1,0.2\n"
        with pytest.raises(DataError):
            rs.read_path_csv(io.StringIO(text), rs.BarrierConfig.one_sided_lower(0.0))

    def test_two_factor_round_trip(self):
        plan = rs.SamplingPlan(n=40, h=0.01)
        tf = rs.simulate_two_factor(1.0, 0.5, 1.0, 1.0, 0.1, 0.0, 3.0, plan,
                                    rs.SimOptions(seed=13))
        buf = io.StringIO()
        rs.write_two_factor_csv(tf, buf)
        buf.seek(0)
        assert buf.readline().strip() == "t,y,l1,u1,r,l2"
        buf.seek(0)
        loaded = rs.read_two_factor_csv(buf, 0.0, 3.0)
        assert np.array_equal(loaded.y.x, tf.y.x)
        assert np.array_equal(loaded.y.r, tf.y.r)
        assert np.array_equal(loaded.rshort.x, tf.rshort.x)


class TestOptionsValidation:
    def test_bad_substeps(self):
        with pytest.raises(ModelError):
            rs.SimOptions(substeps=0)

    def test_bad_scheme(self):
        with pytest.raises(ModelError):
            rs.SimOptions(scheme="euler")
