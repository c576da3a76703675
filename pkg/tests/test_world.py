"""Grid world: gravity, gripper mechanics, scene JSON."""

import random

import pytest

from oracle_ground import random_world
from losr.world import (
    Cell,
    HeldShape,
    Shape,
    WorldError,
    WorldModel,
    can_place,
    dumps_scene,
    loads_scene,
    pick_up,
    place_at,
    scene_from_json,
    scene_to_json,
    scenes_equal,
    validate,
)


def world_of(*shapes, gripper=None):
    return WorldModel(8, frozenset(shapes), gripper)


STACKED = world_of(
    Shape("cube", "red", 2, 3, 0),
    Shape("cube", "green", 2, 3, 1),
    Shape("prism", "blue", 2, 3, 2),
    Shape("cube", "white", 5, 5, 0),
)


class TestQueries:
    def test_column_is_bottom_to_top(self):
        assert [s.color for s in STACKED.column(Cell(2, 3))] == ["red", "green", "blue"]

    def test_top_shape(self):
        assert STACKED.top_shape(Cell(2, 3)).color == "blue"
        assert STACKED.top_shape(Cell(0, 0)) is None

    def test_cells_cover_the_board(self):
        cells = STACKED.cells()
        assert len(cells) == 64 and len(set(cells)) == 64

    def test_in_bounds(self):
        assert STACKED.in_bounds(Cell(0, 7))
        assert not STACKED.in_bounds(Cell(8, 0))
        assert not STACKED.in_bounds(Cell(-1, 3))


class TestValidate:
    def test_clean_world(self):
        assert validate(STACKED) == []

    def test_floating_shape(self):
        problems = validate(world_of(Shape("cube", "red", 1, 1, 1)))
        assert any("floating" in p for p in problems)

    def test_only_cubes_support(self):
        problems = validate(world_of(
            Shape("prism", "red", 1, 1, 0), Shape("cube", "green", 1, 1, 1)))
        assert any("rests on a prism" in p for p in problems)

    def test_double_occupancy(self):
        problems = validate(world_of(
            Shape("cube", "red", 1, 1, 0), Shape("cube", "green", 1, 1, 0)))
        assert any("occupy" in p for p in problems)

    def test_out_of_bounds(self):
        problems = validate(world_of(Shape("cube", "red", 9, 1, 0)))
        assert any("out of bounds" in p for p in problems)

    def test_random_worlds_are_clean(self):
        rng = random.Random(7)
        for _ in range(50):
            assert validate(random_world(rng)) == []


class TestGripper:
    def test_pick_up_takes_the_top(self):
        lifted = pick_up(STACKED, Cell(2, 3))
        assert lifted.gripper == HeldShape("prism", "blue")
        assert lifted.top_shape(Cell(2, 3)).color == "green"

    def test_pick_up_requires_free_gripper(self):
        lifted = pick_up(STACKED, Cell(2, 3))
        with pytest.raises(WorldError) as err:
            pick_up(lifted, Cell(5, 5))
        assert err.value.code == "gripper-occupied"

    def test_pick_up_empty_column(self):
        with pytest.raises(WorldError) as err:
            pick_up(STACKED, Cell(0, 0))
        assert err.value.code == "empty-column"

    def test_pick_up_off_board(self):
        with pytest.raises(WorldError) as err:
            pick_up(STACKED, Cell(8, 8))
        assert err.value.code == "off-board"

    def test_place_on_floor_and_on_cube(self):
        lifted = pick_up(STACKED, Cell(2, 3))
        floored = place_at(lifted, Cell(0, 0))
        assert floored.gripper is None
        assert floored.top_shape(Cell(0, 0)) == Shape("prism", "blue", 0, 0, 0)
        stacked = place_at(lifted, Cell(5, 5))
        assert stacked.top_shape(Cell(5, 5)) == Shape("prism", "blue", 5, 5, 1)

    def test_place_rejects_prism_support(self):
        lifted = pick_up(world_of(Shape("prism", "red", 1, 1, 0),
                                  Shape("cube", "white", 4, 4, 0)), Cell(4, 4))
        with pytest.raises(WorldError) as err:
            place_at(lifted, Cell(1, 1))
        assert err.value.code == "unsupported-placement"

    def test_place_requires_a_held_shape(self):
        with pytest.raises(WorldError) as err:
            place_at(STACKED, Cell(0, 0))
        assert err.value.code == "gripper-empty"

    def test_can_place_matches_place_at(self):
        lifted = pick_up(STACKED, Cell(2, 3))
        for cell in [Cell(0, 0), Cell(2, 3), Cell(5, 5), Cell(7, 7)]:
            assert can_place(lifted, cell)
        assert not can_place(lifted, Cell(8, 0))

    def test_worlds_are_immutable_values(self):
        lifted = pick_up(STACKED, Cell(2, 3))
        assert STACKED.top_shape(Cell(2, 3)).color == "blue"
        assert not scenes_equal(STACKED, lifted)
        assert scenes_equal(place_at(lifted, Cell(2, 3)), STACKED)


class TestSceneJson:
    def test_round_trip(self):
        assert scenes_equal(loads_scene(dumps_scene(STACKED)), STACKED)

    def test_gripper_round_trip(self):
        held = world_of(Shape("cube", "red", 1, 1, 0), gripper=HeldShape("prism", "cyan"))
        data = scene_to_json(held)
        assert data["gripper"] == {"type": "prism", "color": "cyan"}
        assert scenes_equal(scene_from_json(data), held)

    def test_shapes_serialized_in_board_order(self):
        data = scene_to_json(STACKED)
        coords = [(s["x"], s["y"], s["z"]) for s in data["shapes"]]
        assert coords == sorted(coords)

    def test_rejects_invalid_scene(self):
        data = scene_to_json(STACKED)
        data["shapes"][0]["z"] = 5
        with pytest.raises(ValueError, match="floating"):
            scene_from_json(data)

    def test_rejects_missing_fields(self):
        with pytest.raises(ValueError, match="bad scene JSON"):
            scene_from_json({"shapes": [{"type": "cube"}], "board_size": 8})
