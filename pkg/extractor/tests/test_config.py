import pytest

from attnprobe import ExtractionConfig


def test_defaults():
    cfg = ExtractionConfig()
    assert cfg.inversion_steps == 10
    assert cfg.total_steps == 50
    assert cfg.image_size == (512, 512)
    assert cfg.resolutions == (8, 16, 32, 64)
    assert cfg.prompt == ""
    assert cfg.seed == 0


def test_zero_inversion_steps_is_valid():
    assert ExtractionConfig(inversion_steps=0).inversion_steps == 0


def test_inversion_steps_may_use_whole_schedule():
    assert ExtractionConfig(inversion_steps=50).inversion_steps == 50


def test_resolutions_are_sorted():
    cfg = ExtractionConfig(resolutions=(64, 8, 32))
    assert cfg.resolutions == (8, 32, 64)


@pytest.mark.parametrize("kwargs", [
    {"inversion_steps": -1},
    {"inversion_steps": 51},
    {"total_steps": 0},
    {"image_size": (4, 512)},
    {"image_size": (512,)},
    {"resolutions": ()},
    {"resolutions": (1, 8)},
])
def test_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        ExtractionConfig(**kwargs)


def test_config_is_frozen():
    cfg = ExtractionConfig()
    with pytest.raises(Exception):
        cfg.inversion_steps = 3
