import pytest

from canids.config import ConfigError, PipelineConfig
from canids.frames import Label
from canids.synth import ByteSpec


def write_cfg(tmp_path, text):
    path = tmp_path / "pipeline.cfg"
    path.write_text(text)
    return path


def test_defaults():
    cfg = PipelineConfig()
    cfg.validate()
    assert cfg.window_size == 50
    assert cfg.sequence_length == 50
    assert cfg.threshold == 0.5
    assert cfg.entropy_sizes == list(range(10, 401, 10))
    assert cfg.sweep_window_sizes == [50, 75, 100, 125, 150]


def test_from_file_with_comments(tmp_path):
    path = write_cfg(tmp_path, """
# pipeline settings
window_size = 75
sequence_length=30   # inline comment
threshold = 0.4
entropy_sizes = 10,20,30
""")
    cfg = PipelineConfig.from_file(path)
    assert cfg.window_size == 75
    assert cfg.sequence_length == 30
    assert cfg.threshold == 0.4
    assert cfg.entropy_sizes == [10, 20, 30]


def test_unknown_key_is_error(tmp_path):
    path = write_cfg(tmp_path, "window_sise = 50\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        PipelineConfig.from_file(path)


def test_bad_value_reports_line(tmp_path):
    path = write_cfg(tmp_path, "window_size = many\n")
    with pytest.raises(ConfigError, match=":1"):
        PipelineConfig.from_file(path)


@pytest.mark.parametrize("text", [
    "window_size = 1\n",
    "threshold = 1.5\n",
    "train_ratio = 0.5\n",  # ratios no longer sum to 1
    "byte_mode = ternary\n",
])
def test_validation_failures(tmp_path, text):
    with pytest.raises(ConfigError):
        PipelineConfig.from_file(write_cfg(tmp_path, text))


def test_ecu_and_attack_parsing(tmp_path):
    path = write_cfg(tmp_path, """
ecu1 = 0x100 10 8 counter
ecu2 = 0x200 20 4 const
attack1 = flooding 1.0 0.5 rate=2000 target=0x000
attack2 = replay 3.0 0.5 span=0.0:0.5
attack3 = spoofing 5.0 1.0 rate=100 target=0x200 mutate=1:0x80:0xFF
""")
    cfg = PipelineConfig.from_file(path)
    profile = cfg.traffic_profile()
    assert len(profile.ecu_specs) == 2
    assert profile.ecu_specs[0].bytes[0] == ByteSpec("counter", 0, 1)
    attacks = cfg.attack_specs()
    assert [a.kind for a in attacks] == [Label.FLOODING, Label.REPLAY, Label.SPOOFING]
    assert attacks[0].rate == 2000
    assert attacks[1].replay_span == (0.0, 0.5)
    assert attacks[2].mutation == ((1, 0x80, 0xFF),)


@pytest.mark.parametrize("line", [
    "ecu1 = 0x100 10 8",
    "ecu1 = 0x100 10 8 sine",
    "attack1 = flooding 1.0",
    "attack1 = normal 1.0 0.5",
    "attack1 = flooding 1.0 0.5 power=9",
])
def test_spec_parse_errors(tmp_path, line):
    with pytest.raises(ConfigError):
        PipelineConfig.from_file(write_cfg(tmp_path, line + "\n"))


def test_set_overrides():
    cfg = PipelineConfig()
    cfg.set("window_size", "100")
    assert cfg.window_size == 100
    with pytest.raises(ConfigError):
        cfg.set("nonsense", "1")
