import pytest

from src.errors import ScheduleError
from src.simulation.scheduler import ScheduleStrategy, TaskRotation, task_sequence


@pytest.mark.parametrize(
    "text, expected",
    [
        ("composite", "composite"),
        ("alt:1", "alt:1"),
        ("ALT:100", "alt:100"),
        (" alt:episode ", "alt:episode"),
    ],
)
def test_parse_round_trips(text, expected):
    assert str(ScheduleStrategy.parse(text)) == expected


@pytest.mark.parametrize("text", ["alt:0", "alt:-3", "round-robin", "alt:", ""])
def test_parse_rejects_bad_schedules(text):
    with pytest.raises(ScheduleError):
        ScheduleStrategy.parse(text)


def test_rotation_needs_tasks():
    with pytest.raises(ScheduleError):
        TaskRotation("composite", [])


def test_composite_uses_every_task_each_step():
    rotation = TaskRotation("composite", ["a", "b", "c"])
    for step in range(5):
        assert rotation.tasks_for_step(step) == ["a", "b", "c"]
    assert rotation.switches == []


def test_step_alternation_blocks_of_k():
    sequence = task_sequence("alt:100", ["a", "b"], 400)
    assert sequence == ["a"] * 100 + ["b"] * 100 + ["a"] * 100 + ["b"] * 100


def test_alt_one_round_robins_three_tasks():
    assert task_sequence("alt:1", ["a", "b", "c"], 7) == ["a", "b", "c", "a", "b", "c", "a"]


def test_episode_alternation_switches_at_episode_ends():
    rotation = TaskRotation("alt:episode", ["a", "b"])
    boundaries = {7, 11}
    sequence = []
    for step in range(15):
        if step in boundaries:
            rotation.on_episode_end(rotation.active_task)
        sequence.append(rotation.tasks_for_step(step)[0])
    assert sequence == ["a"] * 7 + ["b"] * 4 + ["a"] * 4
    assert rotation.switches == [7, 11]
    assert task_sequence("alt:episode", ["a", "b"], 15, episode_lengths=[7, 4]) == sequence


def test_episode_end_of_inactive_task_is_ignored():
    rotation = TaskRotation("alt:episode", ["a", "b"])
    rotation.on_episode_end("b")
    assert rotation.tasks_for_step(0) == ["a"]
    assert rotation.switches == []
