import json
import math
import random

import pytest

from cyclepatrol.fleet import (
    FleetConfig,
    RobotParams,
    StaticallyCoverableError,
    compute_goal_partition,
    compute_t_star,
    fleet_from_dict,
    traversing_time,
)

from conftest import make_fleet


class TestTStar:
    def test_four_robot_benchmark_exact(self, fig3_fleet):
        assert compute_t_star(fig3_fleet) == 250.0

    def test_eight_robot_benchmark(self, eight_robot_fleet):
        t = compute_t_star(eight_robot_fleet)
        assert t == pytest.approx(127.77777777777777, rel=1e-12)
        assert abs(t - 127.8) < 0.05

    def test_two_unit_robots(self):
        cfg = make_fleet([1.0, 1.0], [0.0, 0.0], 2.0)
        assert compute_t_star(cfg) == 1.0

    def test_statically_coverable_rejected(self):
        with pytest.raises(StaticallyCoverableError):
            make_fleet([1.0, 1.0], [30.0, 30.0], 100.0)

    def test_adding_a_robot_decreases_t_star(self, rng):
        for _ in range(50):
            n = rng.randint(2, 10)
            vs = [rng.uniform(0.1, 5.0) for _ in range(n)]
            rs = [rng.uniform(0.0, 10.0) for _ in range(n)]
            cfg = make_fleet(vs, rs, 1000.0)
            bigger = make_fleet(vs + [rng.uniform(0.1, 5.0)], rs + [0.0], 1000.0)
            assert compute_t_star(bigger) < compute_t_star(cfg)

    def test_improving_a_robot_decreases_t_star(self, rng):
        for _ in range(50):
            n = rng.randint(2, 8)
            vs = [rng.uniform(0.1, 5.0) for _ in range(n)]
            rs = [rng.uniform(0.0, 10.0) for _ in range(n)]
            cfg = make_fleet(vs, rs, 1000.0)
            k = rng.randrange(n)
            faster = make_fleet(vs[:k] + [vs[k] * 1.5] + vs[k + 1:], rs, 1000.0)
            wider = make_fleet(vs, rs[:k] + [rs[k] + 5.0] + rs[k + 1:], 1000.0)
            assert compute_t_star(faster) < compute_t_star(cfg)
            assert compute_t_star(wider) < compute_t_star(cfg)


class TestGoalPartition:
    def test_four_robot_benchmark_values(self, fig3_fleet):
        g = compute_goal_partition(fig3_fleet)
        assert g.d_star == pytest.approx((175.0, 275.0, 175.0, 375.0), rel=1e-12)
        assert g.y_star == pytest.approx((175.0, 450.0, 625.0, 1000.0), rel=1e-12)

    def test_symmetric_pair(self):
        g = compute_goal_partition(make_fleet([1.0, 1.0], [0.0, 0.0], 2.0))
        assert g.d_star == pytest.approx((1.0, 1.0))
        assert g.y_star == pytest.approx((1.0, 2.0))

    def test_lengths_tile_the_cycle(self, rng):
        for _ in range(100):
            n = rng.randint(2, 12)
            cfg = make_fleet(
                [rng.uniform(0.1, 5.0) for _ in range(n)],
                [rng.uniform(0.0, 10.0) for _ in range(n)],
                rng.uniform(500.0, 2000.0),
            )
            g = compute_goal_partition(cfg)
            assert sum(g.d_star) == pytest.approx(cfg.L, rel=1e-9)
            assert g.y_star[-1] == cfg.L
            assert all((g.d_star[i] - 2 * cfg.robots[i].r) / cfg.robots[i].v
                       == pytest.approx(g.t_star, rel=1e-9) for i in range(n))

    def test_speed_scaling_recomputed_exactly(self):
        # uniform scaling: t_star shrinks by 1/c while v*t_star, and hence
        # the partition, recompute to the same values (any radii)
        base = make_fleet([0.5, 1.5, 1.0], [5.0, 1.0, 3.0], 300.0)
        scaled = make_fleet([1.0, 3.0, 2.0], [5.0, 1.0, 3.0], 300.0)
        gb, gs = compute_goal_partition(base), compute_goal_partition(scaled)
        assert gs.t_star == pytest.approx(gb.t_star / 2.0, rel=1e-12)
        assert gs.y_star == pytest.approx(gb.y_star, rel=1e-12)
        # non-uniform change: the partition genuinely moves
        lopsided = make_fleet([1.0, 1.5, 1.0], [5.0, 1.0, 3.0], 300.0)
        yl = compute_goal_partition(lopsided).y_star
        assert any(abs(a - b) > 1e-6 for a, b in zip(yl[:-1], gb.y_star[:-1]))


class TestTraversingTime:
    def test_benchmark_region(self):
        assert traversing_time(275.0, RobotParams(id=2, v=0.7, r=50.0)) == pytest.approx(
            250.0, rel=1e-12
        )

    def test_zone_exactly_fills_region(self):
        assert traversing_time(10.0, RobotParams(id=1, v=2.0, r=5.0)) == 0.0

    def test_degenerate_region_is_negative_not_an_error(self):
        assert traversing_time(0.0, RobotParams(id=1, v=1.0, r=1.0)) == -2.0


class TestValidation:
    def test_speed_must_be_positive(self):
        with pytest.raises(ValueError):
            RobotParams(id=1, v=0.0, r=1.0)

    def test_radius_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            RobotParams(id=1, v=1.0, r=-1.0)

    def test_need_two_robots(self):
        with pytest.raises(ValueError):
            FleetConfig(robots=(RobotParams(id=1, v=1.0, r=0.0),), L=10.0)


class TestJson:
    def test_round_trip(self, tmp_path):
        doc = {
            "L": 1000.0,
            "robots": [
                {"id": 1, "v": 0.3, "r": 50.0, "p0": 80.0, "o0": 1},
                {"id": 2, "v": 0.7, "r": 50.0, "p0": 400.0, "o0": -1},
            ],
            "events": [{"t": 5000.0, "robot": 2, "v": 0.35}],
        }
        path = tmp_path / "fleet.json"
        path.write_text(json.dumps(doc))
        spec = fleet_from_dict(json.loads(path.read_text()))
        assert spec.config.n == 2
        assert spec.positions == [80.0, 400.0]
        assert spec.orientations == [1, -1]
        assert spec.changes[0]["robot"] == 2

    def test_without_initial_state(self):
        spec = fleet_from_dict(
            {"L": 100.0, "robots": [{"id": 1, "v": 1, "r": 0}, {"id": 2, "v": 1, "r": 0}]}
        )
        assert spec.positions is None
