"""Integration kernels: determinism, backend agreement, convergence order,
force profiles, trace round-trips."""

import numpy as np
import pytest

from treeswarm.backend import available_backends
from treeswarm.controller import GainDesign, design_gains
from treeswarm.errors import LinkBroken, ScenarioError
from treeswarm.potential import PotentialParams
from treeswarm.scenario import ForceProfile, parse_scenario, random_scenario
from treeswarm.simulator import SimTrace, _force_half_grid, force_at, run, step

BOTH_BACKENDS = available_backends()


def zeroed_design(n, f_bar=1.0):
    """Gains that make u identically negligible (free flight)."""
    return GainDesign(
        rho=0.0,
        sigma=0.0,
        eta=(1.0,) * n,
        gamma=(1.0,) * n,
        zeta=(1.0,) * n,
        Gamma=1e-300,
        B=(1e-12,) * n,
        D=(0.0,) * n,
        Delta=0.0,
        f_bar=f_bar,
    )


def free_flight_doc(dt, duration, m=1.3, f_bar=0.8, profile=None):
    return {
        "schema": 1,
        "name": "free-flight",
        "n_vertices": 2,
        "edges": [[1, 2]],
        "robots": [
            {"kind": "point-mass", "mass": m},
            {"kind": "point-mass", "mass": 1.0},
        ],
        "initial": {
            "positions": [[0.0, 0.0], [0.1, 0.0]],
            "velocities": [[0.3, -0.2], [0.0, 0.0]],
        },
        "r": 1e6,
        "epsilon": 1.0,
        "f_bar": f_bar,
        "force": profile or {"profile": "step", "direction": [0.6, 0.8]},
        "dt": dt,
        "duration": duration,
    }


FREE_PARAMS = PotentialParams(P=1.0, Q=1.0, r=1e6, epsilon=1.0)


class TestForceProfiles:
    def test_zero(self):
        np.testing.assert_array_equal(
            force_at(ForceProfile(kind="zero"), 3.2, 1.0), [0.0, 0.0]
        )

    def test_step_norm_is_f_bar(self):
        f = force_at(ForceProfile(kind="step", direction=(0.6, 0.8)), 0.5, 2.0)
        assert np.linalg.norm(f) == pytest.approx(2.0)

    def test_sinusoid_bounded(self):
        prof = ForceProfile(kind="sinusoid", direction=(1.0, 0.0), frequency_hz=0.7)
        norms = [np.linalg.norm(force_at(prof, t, 1.5)) for t in np.linspace(0, 10, 500)]
        assert max(norms) <= 1.5 + 1e-12

    def test_bounded_random_norms_and_determinism(self):
        prof = ForceProfile(kind="bounded-random", seed=42)
        ts = np.linspace(0.0, 25.0, 100_000)
        norms = np.array([np.linalg.norm(force_at(prof, t, 1.2)) for t in ts[:10_000]])
        assert np.all(norms <= 1.2 + 1e-12)
        again = np.array([np.linalg.norm(force_at(prof, t, 1.2)) for t in ts[:10_000]])
        np.testing.assert_array_equal(norms, again)

    def test_bounded_random_holds(self):
        prof = ForceProfile(kind="bounded-random", seed=7, hold=0.25)
        f0 = force_at(prof, 0.01, 1.0)
        f1 = force_at(prof, 0.24, 1.0)
        f2 = force_at(prof, 0.26, 1.0)
        np.testing.assert_array_equal(f0, f1)
        assert np.any(f1 != f2)

    def test_live_clamped(self):
        prof = ForceProfile(kind="external-live")
        f = force_at(prof, 0.0, 1.0, live_force=[3.0, 4.0])
        assert np.linalg.norm(f) == pytest.approx(1.0)

    def test_half_grid_matches_pointwise(self):
        for doc_force in (
            {"profile": "zero"},
            {"profile": "step", "direction": [0.0, 1.0]},
            {"profile": "sinusoid", "frequency_hz": 0.9, "phase": 0.3},
            {"profile": "bounded-random", "seed": 9},
        ):
            sc = parse_scenario(free_flight_doc(1e-3, 1.0, profile=doc_force))
            grid = _force_half_grid(sc.force, sc.f_bar, sc.dt, 1000)
            ts = 0.5 * sc.dt * np.arange(2 * 1000 + 1)
            for k in range(0, 2001, 157):
                np.testing.assert_allclose(
                    grid[k], force_at(sc.force, ts[k], sc.f_bar), atol=1e-15
                )


class TestFreeFlight:
    def test_constant_force_matches_ballistic_closed_form(self):
        m, a, t_end = 1.3, 0.8, 2.0
        sc = parse_scenario(free_flight_doc(1e-3, t_end, m=m, f_bar=a))
        tr = run(sc, zeroed_design(2, a), FREE_PARAMS)
        expected = np.array(
            [
                0.3 * t_end + 0.5 * a * 0.6 / m * t_end**2,
                -0.2 * t_end + 0.5 * a * 0.8 / m * t_end**2,
            ]
        )
        np.testing.assert_allclose(tr.pos[-1, 0], expected, atol=1e-12)
        np.testing.assert_allclose(tr.pos[-1, 1], [0.1, 0.0], atol=1e-15)

    def test_rk4_order_four_on_sinusoid_flight(self):
        # analytic oracle: m*xdd = A sin(w t) along x
        m, amp, w = 1.3, 0.8, 6.0

        def endpoint_error(dt):
            doc = free_flight_doc(
                dt,
                1.0,
                m=m,
                f_bar=amp,
                profile={
                    "profile": "sinusoid",
                    "frequency_hz": w / (2 * np.pi),
                    "direction": [1.0, 0.0],
                },
            )
            tr = run(parse_scenario(doc), zeroed_design(2, amp), FREE_PARAMS)
            x = 0.3 * 1.0 + (amp / (m * w)) * (1.0 - np.sin(w * 1.0) / w)
            y = -0.2 * 1.0
            return np.linalg.norm(tr.pos[-1, 0] - [x, y])

        e_coarse = endpoint_error(4e-3)
        e_fine = endpoint_error(2e-3)
        assert 14.0 <= e_coarse / e_fine <= 18.0


class TestClosedLoop:
    def test_equilibrium_fixed_point(self):
        doc = free_flight_doc(1e-3, 0.1)
        doc["initial"] = {"positions": [[0.0, 0.0], [0.0, 0.0]], "velocities": [[0.0, 0.0]] * 2}
        doc["force"] = {"profile": "zero"}
        doc["r"], doc["epsilon"], doc["f_bar"] = 1.0, 0.2, 0.0
        sc = parse_scenario(doc)
        design, params = design_gains(sc)
        tr = run(sc, design, params)
        np.testing.assert_array_equal(tr.pos[-1], tr.pos[0])
        np.testing.assert_array_equal(tr.vel[-1], tr.vel[0])

    def test_determinism_bit_identical(self):
        sc = random_scenario(seed=19, n_vertices=4, topology="random", kinds="mixed", duration=2.0)
        a = run(sc)
        b = run(sc)
        np.testing.assert_array_equal(a.pos, b.pos)
        np.testing.assert_array_equal(a.vel, b.vel)
        np.testing.assert_array_equal(a.gains, b.gains)

    @pytest.mark.skipif(len(BOTH_BACKENDS) < 2, reason="compiled kernel not built")
    def test_backends_agree(self):
        sc = random_scenario(seed=29, n_vertices=5, topology="random", kinds="mixed", duration=1.0)
        design, params = design_gains(sc)
        a = run(sc, design, params, backend="compiled")
        b = run(sc, design, params, backend="python")
        np.testing.assert_allclose(a.pos, b.pos, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.vel, b.vel, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.gains, b.gains, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.v, b.v, rtol=1e-10, atol=1e-12)

    def test_zero_force_velocity_and_spread_decay(self):
        sc = random_scenario(
            seed=37, n_vertices=4, topology="path", force_profile="zero", duration=10.0, speed=0.2
        )
        tr = run(sc)
        speeds = np.linalg.norm(tr.vel, axis=2).max(axis=1)
        assert speeds[-1] < 1e-2 * speeds[0]
        # envelope decays: windowed maxima are nonincreasing
        w = len(speeds) // 10
        peaks = [speeds[i : i + w].max() for i in range(0, len(speeds) - w, w)]
        assert all(b <= a * 1.05 for a, b in zip(peaks, peaks[1:]))

    def test_bounded_random_run_keeps_links(self):
        sc = random_scenario(seed=41, n_vertices=5, topology="random", kinds="mixed", duration=5.0)
        tr = run(sc)
        assert not tr.broken
        assert tr.edge_dist.max() < sc.r

    def test_initial_margin_refused_with_prebuilt_design(self):
        sc = random_scenario(seed=43, n_vertices=3)
        design, params = design_gains(sc)
        bad = dict(sc.doc)
        bad["initial"] = {
            "positions": [[0.0, 0.0], [0.85, 0.0], [0.9, 0.3]],
            "velocities": [[0.0, 0.0]] * 3,
        }
        with pytest.raises(ScenarioError, match="initial-margin"):
            run(parse_scenario(bad), design, params)

    def test_live_profile_refused_in_batch(self):
        doc = free_flight_doc(1e-3, 1.0)
        doc["force"] = {"profile": "external-live"}
        sc = parse_scenario(doc)
        with pytest.raises(ScenarioError, match="teleop"):
            run(sc, zeroed_design(2), FREE_PARAMS)


class TestStep:
    def test_single_step_matches_run(self):
        sc = random_scenario(seed=47, n_vertices=3, duration=0.01)
        design, params = design_gains(sc)
        tr = run(sc, design, params)
        pos, vel = step((sc.x0, sc.v0), 0.0, sc.dt, sc, design, params)
        np.testing.assert_allclose(pos, tr.pos[1], atol=1e-15)
        np.testing.assert_allclose(vel, tr.vel[1], atol=1e-15)

    def test_link_broken_raises(self):
        doc = free_flight_doc(1e-3, 1.0)
        doc["r"], doc["epsilon"] = 0.2, 0.05
        doc["initial"]["positions"] = [[0.0, 0.0], [0.1, 0.0]]
        doc["initial"]["velocities"] = [[-50.0, 0.0], [50.0, 0.0]]
        sc = parse_scenario(doc)
        params = PotentialParams(P=1.0, Q=1.0, r=0.2, epsilon=0.05)
        with pytest.raises(LinkBroken):
            for k in range(50):
                state = (sc.x0, sc.v0) if k == 0 else state
                state = step(state, k * sc.dt, sc.dt, sc, zeroed_design(2), params)


class TestTraceRoundTrip:
    def test_save_load(self, tmp_path):
        sc = random_scenario(seed=53, n_vertices=3, duration=0.5)
        tr = run(sc)
        tr.save(tmp_path)
        back = SimTrace.load(tmp_path)
        np.testing.assert_allclose(back.pos, tr.pos, atol=1e-15)
        np.testing.assert_allclose(back.v, tr.v, atol=1e-15)
        np.testing.assert_allclose(back.edge_dist, tr.edge_dist, atol=1e-15)
        assert back.design.to_dict() == tr.design.to_dict()
        assert back.scenario.doc == tr.scenario.doc
        assert not back.broken

    def test_identical_inputs_identical_files(self, tmp_path):
        sc = random_scenario(seed=59, n_vertices=3, duration=0.3)
        design, params = design_gains(sc)
        run(sc, design, params).save(tmp_path / "a")
        run(sc, design, params).save(tmp_path / "b")
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (
            tmp_path / "b" / "trace.csv"
        ).read_bytes()

    def test_corrupted_column_rejected(self, tmp_path):
        sc = random_scenario(seed=61, n_vertices=3, duration=0.2)
        run(sc).save(tmp_path)
        csv = (tmp_path / "trace.csv").read_text().splitlines()
        (tmp_path / "trace.csv").write_text(
            "\n".join([csv[0]] + [",".join(line.split(",")[:-1]) for line in csv[1:]])
        )
        with pytest.raises(ScenarioError):
            SimTrace.load(tmp_path)


class TestKernelParityPaths:
    """Exercise kernel code paths shared semantics across both backends."""

    @pytest.mark.skipif(len(BOTH_BACKENDS) < 2, reason="compiled kernel not built")
    def test_backends_agree_with_frozen_gains_and_overdrive(self):
        doc = {
            "schema": 1, "name": "frozen-parity", "n_vertices": 2,
            "edges": [[1, 2]],
            "robots": [{"kind": "point-mass", "mass": 1.0},
                       {"kind": "two-link", "m1": 1.0, "m2": 0.8, "l1": 0.5, "l2": 0.4}],
            "initial": {"positions": [[0.0, 0.0], [0.15, 0.0]]},
            "r": 1.0, "epsilon": 0.2, "f_bar": 0.8,
            "force": {"profile": "step", "direction": [1.0, 0.0],
                      "magnitude": 2.4, "unchecked": True},
            "dt": 1e-3, "duration": 2.0,
            "freeze_gain_schedule": True,
        }
        sc = parse_scenario(doc)
        design, params = design_gains(sc)
        a = run(sc, design, params, backend="compiled")
        b = run(sc, design, params, backend="python")
        # frozen gains must be constant rows and identical across backends
        np.testing.assert_allclose(a.gains, np.tile(a.gains[0], (a.n_samples, 1)))
        np.testing.assert_allclose(a.gains, b.gains, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(a.pos, b.pos, rtol=1e-10, atol=1e-12)
        np.testing.assert_allclose(a.v, b.v, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("backend", BOTH_BACKENDS)
    def test_zero_step_call_records_initial_diagnostics(self, backend):
        # the live service samples frames through steps=0 kernel calls
        from treeswarm.backend import get_backend
        from treeswarm.simulator import pack_kernel_args

        sc = random_scenario(seed=67, n_vertices=3, duration=0.01)
        design, params = design_gains(sc)
        full = run(sc, design, params, backend=backend)
        args = pack_kernel_args(sc, design, params)
        outs = {
            "pos_out": np.empty((1, 3, 2)), "vel_out": np.empty((1, 3, 2)),
            "u_out": np.empty((1, 3, 2)), "k_out": np.empty((1, 3)),
            "edge_out": np.empty((1, 2)), "vp_out": np.empty(1), "v_out": np.empty(1),
        }
        completed = get_backend(backend).integrate_swarm(
            pos0=np.ascontiguousarray(sc.x0), vel0=np.ascontiguousarray(sc.v0),
            f_half=full.f[:1], dt=sc.dt, steps=0, freeze_k=False, **args, **outs,
        )
        assert completed == 0
        np.testing.assert_allclose(outs["k_out"][0], full.gains[0], atol=1e-15)
        np.testing.assert_allclose(outs["u_out"][0], full.u[0], atol=1e-15)
        np.testing.assert_allclose(outs["vp_out"][0], full.vp[0], atol=1e-15)
        np.testing.assert_allclose(outs["v_out"][0], full.v[0], atol=1e-15)
