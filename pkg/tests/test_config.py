import numpy as np
import pytest

from sdda.config import dump_config, parse_config
from sdda.errors import ConfigError

MINIMAL = """
[data]
shape = gaussian_blobs
[trainer]
epochs = 5
"""

FULL = """# every key set
[data]
shape = gaussian_blobs
classes = 2
dim = 3
samples_per_class = 17
class_means = 1, 0, 0; 0, 1, -2.5
class_stddev = 0.25
target_rotation_deg = 12.5
target_translation = 0.5, -0.5, 1
target_scale = 1.5
target_noise_std = 0.01
seed = 99

[trainer]
lambda_ssc = 250
lambda_intra = 0.002
lambda_inter = 3e-5
metric = coral
similarity = cosine
gamma = 0.5
target_norm = 7
margin = 0.1
center_alpha = 0.25
batch_size = 8
epochs = 11
learning_rate = 0.003
schedule_mu = 4
schedule_enabled = false
seed = 21
layer_dims = 3, 10, 4, 2
hidden_activation = tanh
mmd_bandwidths = 0.5, 1, 2
cmd_order = 3

[output]
directory = out/here
emit_svg = no
emit_features = yes
seeds = 4, 5, 6
"""

# hand-parsed expectations for FULL
EXPECTED_DATA = dict(shape="gaussian_blobs", classes=2, dim=3, samples_per_class=17, class_stddev=0.25,
                     target_rotation_deg=12.5, target_scale=1.5, target_noise_std=0.01, seed=99)
EXPECTED_TRAINER = dict(lambda_ssc=250.0, lambda_intra=0.002, lambda_inter=3e-5, metric="coral",
                        similarity="cosine", gamma=0.5, target_norm=7.0, margin=0.1, center_alpha=0.25,
                        batch_size=8, epochs=11, learning_rate=0.003, schedule_mu=4.0,
                        schedule_enabled=False, seed=21, layer_dims=(3, 10, 4, 2),
                        hidden_activation="tanh", mmd_bandwidths=(0.5, 1.0, 2.0), cmd_order=3)


def test_minimal_defaults():
    c = parse_config(MINIMAL)
    t = c.trainer
    assert t.epochs == 5
    assert (t.gamma, t.target_norm, t.lambda_ssc, t.margin, t.center_alpha, t.schedule_mu, t.learning_rate) == \
        (0.001, 10.0, 1000.0, 0.0, 0.5, 10.0, 1e-4)
    assert c.output.directory == "runs" and c.seeds == (0,)
    assert c.data.classes == 3


def test_full_config_matches_hand_table():
    c = parse_config(FULL)
    for k, v in EXPECTED_DATA.items():
        assert getattr(c.data, k) == v, k
    np.testing.assert_array_equal(c.data.class_means, [[1, 0, 0], [0, 1, -2.5]])
    np.testing.assert_array_equal(c.data.target_translation, [0.5, -0.5, 1])
    for k, v in EXPECTED_TRAINER.items():
        assert getattr(c.trainer, k) == v, k
    assert c.output.directory == "out/here"
    assert c.output.emit_svg is False and c.output.emit_features is True
    assert c.seeds == (4, 5, 6)


@pytest.mark.parametrize("text", [MINIMAL, FULL, "[data]\nsource_csv = a.csv\ntarget_csv = b.csv\n"
                                  "target_has_labels = false\n[trainer]\n"])
def test_dump_round_trip(text):
    c = parse_config(text)
    again = parse_config(dump_config(c))
    assert dump_config(again) == dump_config(c)
    assert again.trainer == c.trainer


def test_csv_mode():
    c = parse_config("[data]\nsource_csv = a.csv\ntarget_csv = b.csv\n[trainer]\n")
    assert c.data is None and c.source_csv == "a.csv" and c.target_has_labels is True


@pytest.mark.parametrize("text,line", [
    ("[data]\n[trainer]\nlambda_ssc = banana\n", 3),
    ("[data]\n[trainer]\nepochs = 2\nepochs = 3\n", 4),
    ("[data]\nwat = 1\n[trainer]\n", 2),
    ("[data]\n[trainer]\n[bogus]\n", 3),
    ("[data]\n[trainer\n", 2),
    ("epochs = 1\n[data]\n[trainer]\n", 1),
    ("[data]\n[trainer]\njust words\n", 3),
    ("[data]\nshape = gaussian_blobs\nsource_csv = x.csv\n[trainer]\n", 3),
    ("[data]\n[trainer]\nmetric = kl\n", 3),
    ("[data]\nclass_means = 1, 2; 3\n[trainer]\n", 2),
    ("[data]\n[trainer]\nseed = 1.5\n", 3),
    ("[data]\n[trainer]\ngamma = nan\n", 3),
])
def test_errors_carry_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


def test_missing_section():
    with pytest.raises(ConfigError):
        parse_config("[data]\n")
    with pytest.raises(ConfigError):
        parse_config("[trainer]\n")


def test_semantic_errors_reported():
    with pytest.raises(ConfigError):
        parse_config("[data]\n[trainer]\nlearning_rate = -1\n")
    with pytest.raises(ConfigError):
        parse_config("[data]\nshape = two_moons\n[trainer]\n")
    with pytest.raises(ConfigError):
        parse_config("[data]\nsource_csv = a.csv\n[trainer]\n")
