import json

import pytest

from dan_lab import config
from dan_lab.errors import ValidationError


def test_default_profile_pins_architecture():
    cfg = config.load_config("gauss8-dan-s")
    assert cfg.networks.generator == [256, 128, 128, 128, 2]
    assert cfg.networks.discriminator == [2, 32, 32, 32, 1]
    assert cfg.networks.phi == [2, 32, 32]
    assert cfg.networks.head == [32, 32, 1]
    assert cfg.networks.generator_out_act == "none"
    assert (cfg.train.batch_size, cfg.train.iterations) == (512, 25000)
    assert (cfg.train.lr, cfg.train.beta1) == (1e-4, 0.5)
    assert (cfg.train.lambda1, cfg.train.lambda2) == (0.0, 1.0)
    assert cfg.train.xi == "S"
    assert cfg.data.n_components == 8
    assert cfg.noise.dim == 256


@pytest.mark.parametrize("name", sorted(config.PROFILES))
def test_every_profile_validates(name):
    cfg = config.load_config(name)
    assert cfg.name == name


def test_profile_modes():
    assert config.load_config("gauss8-gan").train.xi == "gan"
    two_sample = config.load_config("gauss8-dan-2s").train
    assert two_sample.xi == "2S" and two_sample.batch_size % 2 == 0
    mixed = config.load_config("gauss8-dan-s-mixed").train
    assert (mixed.lambda1, mixed.lambda2) == (1.0, 0.2)


def test_round_trip(tiny_config_dict):
    cfg = config.parse_config(tiny_config_dict)
    again = config.parse_config(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_unknown_keys_are_errors(tiny_config_dict):
    tiny_config_dict["train"]["learning_rate"] = 0.1
    tiny_config_dict["colour"] = "blue"
    with pytest.raises(ValidationError) as e:
        config.parse_config(tiny_config_dict)
    problems = " ".join(e.value.problems)
    assert "train.learning_rate" in problems
    assert "colour" in problems


def test_missing_required_field_is_named(tiny_config_dict):
    del tiny_config_dict["train"]
    with pytest.raises(ValidationError, match="missing required field train"):
        config.parse_config(tiny_config_dict)


def test_every_violation_is_listed(tiny_config_dict):
    tiny_config_dict["train"].update(iterations=0, lr=-1.0)
    tiny_config_dict["eval"]["n_samples"] = 0
    with pytest.raises(ValidationError) as e:
        config.parse_config(tiny_config_dict)
    assert len(e.value.problems) >= 3


def test_wrong_types_rejected(tiny_config_dict):
    tiny_config_dict["train"]["iterations"] = "many"
    tiny_config_dict["train"]["batch_size"] = True
    tiny_config_dict["networks"]["phi"] = [2, "eight"]
    with pytest.raises(ValidationError) as e:
        config.parse_config(tiny_config_dict)
    assert len(e.value.problems) >= 3


def test_fractional_widths_rejected(tiny_config_dict):
    tiny_config_dict["networks"]["generator"] = [4, 8.9, 2]
    with pytest.raises(ValidationError, match="networks.generator must be a list of integers"):
        config.parse_config(tiny_config_dict)


def test_integral_float_widths_accepted(tiny_config_dict):
    tiny_config_dict["networks"]["generator"] = [4.0, 8, 2.0]
    assert config.parse_config(tiny_config_dict).networks.generator == [4, 8, 2]


def test_wrong_schema_version(tiny_config_dict):
    tiny_config_dict["schema_version"] = 2
    with pytest.raises(ValidationError, match="schema_version"):
        config.parse_config(tiny_config_dict)


def test_network_widths_checked_against_data(tiny_config_dict):
    tiny_config_dict["networks"]["discriminator"] = [3, 8, 1]
    with pytest.raises(ValidationError, match="discriminator"):
        config.parse_config(tiny_config_dict)


def test_file_overrides_named_profile(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({
        "schema_version": 1,
        "name": "gauss8-dan-2s",
        "train": {"iterations": 10, "seed": 4},
    }))
    cfg = config.load_config(str(path))
    assert cfg.train.iterations == 10
    assert cfg.train.seed == 4
    assert cfg.train.xi == "2S"
    assert cfg.networks.generator == [256, 128, 128, 128, 2]


def test_unreadable_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        config.load_config(str(path))


def test_unknown_profile():
    with pytest.raises(ValidationError, match="unknown profile"):
        config.profile_dict("gauss9")


def test_save_and_load(tmp_path, tiny_config_dict):
    cfg = config.parse_config(tiny_config_dict)
    path = config.save_config(cfg, tmp_path / "config.json")
    assert config.load_config(str(path)).to_dict() == cfg.to_dict()


def test_with_seed(tiny_config_dict):
    cfg = config.with_seed(config.parse_config(tiny_config_dict), 99)
    assert cfg.train.seed == 99


# Sweeps
def test_sweep_spec(tiny_config_dict):
    spec = config.parse_sweep({
        "schema_version": 1,
        "base": tiny_config_dict,
        "seeds": [1, 2, 3],
        "overrides": {"2": {"train": {"k": 2}}},
        "parallelism": 2,
    })
    assert spec.parallelism == 2
    assert spec.run_config(1).train.k == 1
    assert spec.run_config(2).train.k == 2
    assert spec.run_config(3).train.seed == 3


def test_sweep_base_may_be_a_profile():
    spec = config.parse_sweep({"schema_version": 1, "base": "gauss8-gan", "seeds": [0]})
    assert spec.base.train.xi == "gan"


@pytest.mark.parametrize("seeds, parallelism", [([1, 1], 1), ([], 1), ([1, 2], 0)])
def test_invalid_sweeps(tiny_config_dict, seeds, parallelism):
    with pytest.raises(ValidationError):
        config.parse_sweep({
            "schema_version": 1, "base": tiny_config_dict, "seeds": seeds, "parallelism": parallelism,
        })


def test_sweep_missing_fields():
    with pytest.raises(ValidationError) as e:
        config.parse_sweep({"schema_version": 1})
    assert len(e.value.problems) == 2
