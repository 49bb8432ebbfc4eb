import json

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from adaptrust.core import UsageProfile
from adaptrust.errors import ConfigInvalid, InvalidDataset, ParseError, VersionMismatch
from adaptrust.indicators import detect_indicator_count
from adaptrust.models import TrainedModelPair, build_metadata_vocabulary, encode_descriptor
from adaptrust.nnet import forward, network_new
from adaptrust.synth.generator import GeneratorConfig, GroundTruth, generate_dataset, to_rating, true_trust
from adaptrust.synth.storage import (
    DatasetPaths,
    load_dataset,
    load_ground_truth,
    load_model_pair,
    save_dataset,
    save_model_pair,
)

tmp_settings = settings(suppress_health_check=[HealthCheck.function_scoped_fixture])


def test_generator_k2_detects_two():
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=2, seed=42))
    assert detect_indicator_count(ds)[0] == 2
    assert truth.indicator_count == 2 and ds.validate().ok


def test_generator_noise_free_ratings_exact():
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=3, num_services=40, seed=5))
    for rec in ds.ratings:
        fs = np.array(truth.service_vectors[rec.service_id])
        fu = np.array(truth.usage_expectations[rec.usage_id])
        t = np.minimum(fs, fu).sum() / fu.sum()
        assert rec.rating == max(1, min(10, int(np.floor(10 * t + 0.5 + 1e-9))))


def test_generator_deterministic():
    cfg = GeneratorConfig(indicator_count=2, num_services=20, noise_std=0.1, num_sessions=10, seed=9)
    assert generate_dataset(cfg) == generate_dataset(cfg)


def test_generator_truth_structure():
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=3, num_services=10, num_usages=7, seed=1))
    assert set(truth.usage_blocks.values()) == {0, 1, 2}
    for uid, vec in truth.usage_expectations.items():
        k = truth.usage_blocks[uid]
        assert vec[k] >= 0.7
        assert sum(v for j, v in enumerate(vec) if j != k) <= 0.3 + 1e-12
    for vec in truth.service_vectors.values():
        assert len(vec) == 3 and np.allclose(np.array(vec) * 100, np.round(np.array(vec) * 100))


def test_generator_block_is_function_of_descriptor():
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=4, num_usages=20, num_services=10, seed=3))
    vocab = build_metadata_vocabulary(ds.usages)
    seen = {}
    for u in ds.usages:
        key = tuple(encode_descriptor(u, vocab))
        assert seen.setdefault(key, truth.usage_blocks[u.id]) == truth.usage_blocks[u.id]
    words = {truth.block_words[truth.usage_blocks[u.id]] for u in ds.usages}
    assert words == set(truth.block_words)


@pytest.mark.parametrize("kw", [
    {"indicator_count": 0},
    {"indicator_count": 3, "num_usages": 2},
    {"noise_std": -0.1},
    {"indicator_count": 6},
    {"num_services": 0},
    {"num_sessions": 3, "session_size": 50},
])
def test_generator_config_invalid(kw):
    with pytest.raises(ConfigInvalid):
        generate_dataset(GeneratorConfig(**kw))


@given(st.integers(0, 10**6), st.floats(0.0, 2.0))
def test_generator_ratings_in_scale(seed, noise):
    ds, _ = generate_dataset(GeneratorConfig(indicator_count=2, num_services=5, num_usages=3, noise_std=noise, seed=seed))
    assert all(1 <= r.rating <= 10 for r in ds.ratings)


def test_to_rating_rounding():
    assert to_rating([0.0, 0.04, 0.05, 0.85, 1.2]).tolist() == [1, 1, 1, 9, 10]
    assert true_trust(np.array([0.9, 0.1]), np.array([0.6, 0.9])) == pytest.approx(0.7 / 1.5)


def test_sessions_carry_valid_patterns():
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=2, num_services=20, num_sessions=30, seed=4))
    assert len(ds.sessions) == 30 and ds.validate().ok
    assert all(len(set(s.usages)) == 3 for s in ds.sessions)
    assert len(set(truth.usage_durations.values())) > 1


# storage


@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0.0, 0.3), st.integers(0, 5))
@tmp_settings
def test_dataset_round_trip(tmp_path, seed, k, noise, sessions):
    cfg = GeneratorConfig(indicator_count=k, num_services=8, num_usages=k + 2, noise_std=noise, seed=seed, num_sessions=sessions)
    ds, truth = generate_dataset(cfg)
    paths = DatasetPaths.in_dir(tmp_path / str(seed))
    (tmp_path / str(seed)).mkdir(exist_ok=True)
    save_dataset(ds, paths, truth)
    assert load_dataset(paths) == ds
    assert load_ground_truth(paths.ground_truth) == truth


def write_small(tmp_path):
    ds, truth = generate_dataset(GeneratorConfig(indicator_count=2, num_services=4, seed=1))
    paths = DatasetPaths.in_dir(tmp_path)
    save_dataset(ds, paths, truth)
    return ds, paths


def test_malformed_rating_row_names_row(tmp_path):
    ds, paths = write_small(tmp_path)
    with open(paths.ratings, "a") as fh:
        fh.write("a,b,eleven\n")
    with pytest.raises(ParseError) as exc:
        load_dataset(paths)
    # header is row 1, so the appended row is len(ratings) + 2
    assert f"row {len(ds.ratings) + 2} " in str(exc.value) and "rating" in str(exc.value)


def test_bad_header_and_field_count(tmp_path):
    _, paths = write_small(tmp_path)
    text = paths.ratings.read_text().splitlines()
    paths.ratings.write_text("\n".join(["sid,uid,r"] + text[1:]) + "\n")
    with pytest.raises(ParseError):
        load_dataset(paths)
    paths.ratings.write_text("\n".join(text[:2] + ["S1,U01"]) + "\n")
    with pytest.raises(ParseError, match="row 3"):
        load_dataset(paths)


def test_out_of_range_rating_fails_validation(tmp_path):
    _, paths = write_small(tmp_path)
    with open(paths.ratings, "a") as fh:
        fh.write("S1,U01,11\n")
    with pytest.raises(InvalidDataset) as exc:
        load_dataset(paths)
    assert exc.value.report.kinds()["OutOfRange"] == 1


def test_missing_services_file(tmp_path):
    _, paths = write_small(tmp_path)
    paths.services.unlink()
    with pytest.raises(FileNotFoundError):
        load_dataset(paths)


def test_malformed_json(tmp_path):
    _, paths = write_small(tmp_path)
    paths.usages.write_text('[{"id": "U01", "metadata": ["a"]}]')
    with pytest.raises(ParseError, match="avg_duration_minutes"):
        load_dataset(paths)
    paths.usages.write_text("[{")
    with pytest.raises(ParseError):
        load_dataset(paths)


def random_pair(seed):
    rng = np.random.default_rng(seed)
    ds, _ = generate_dataset(GeneratorConfig(indicator_count=2, num_services=3, seed=seed % 1000))
    vocab = build_metadata_vocabulary(ds.usages)
    hidden = int(rng.integers(1, 6))
    return TrainedModelPair(
        network_new([ds.schema.width, hidden, 2], seed=seed),
        network_new([len(vocab), hidden, 2], seed=seed + 1, hidden_activation=rng.choice(["tanh", "sigmoid"])),
        ds.schema,
        vocab,
        2,
        seed,
    )


@given(st.integers(0, 2**31))
@tmp_settings
def test_model_round_trip_bit_exact(tmp_path, seed):
    pair = random_pair(seed)
    d = tmp_path / f"m{seed}"
    save_model_pair(pair, d)
    loaded = load_model_pair(d)
    assert loaded.seed == seed and loaded.vocabulary == pair.vocabulary and loaded.schema == pair.schema
    probes = np.random.default_rng(seed).normal(size=(100, pair.service_model.n_inputs))
    assert np.array_equal(forward(loaded.service_model, probes), forward(pair.service_model, probes))
    probes = np.random.default_rng(seed).integers(0, 2, size=(100, pair.usage_model.n_inputs))
    assert np.array_equal(forward(loaded.usage_model, probes), forward(pair.usage_model, probes))


def test_model_tampered_weights(tmp_path):
    save_model_pair(random_pair(3), tmp_path)
    path = tmp_path / "service_model.json"
    obj = json.loads(path.read_text())
    obj["weights"][0].pop()
    path.write_text(json.dumps(obj))
    with pytest.raises(ParseError, match="weights"):
        load_model_pair(tmp_path)


def test_model_future_version(tmp_path):
    save_model_pair(random_pair(3), tmp_path)
    path = tmp_path / "meta.json"
    obj = json.loads(path.read_text())
    obj["format_version"] = 99
    path.write_text(json.dumps(obj))
    with pytest.raises(VersionMismatch):
        load_model_pair(tmp_path)


def test_model_files_carry_provenance(tmp_path):
    save_model_pair(random_pair(11), tmp_path)
    meta = json.loads((tmp_path / "meta.json").read_text())
    assert meta["format_version"] == 1 and meta["seed"] == 11 and meta["indicator_count"] == 2
    net = json.loads((tmp_path / "usage_model.json").read_text())
    assert {"layer_sizes", "weights", "biases", "hidden_activation", "output_activation"} <= net.keys()


def test_ground_truth_json_round_trip():
    _, truth = generate_dataset(GeneratorConfig(indicator_count=2, num_services=3, seed=2))
    assert GroundTruth.from_json(json.loads(json.dumps(truth.to_json()))) == truth


def test_usage_profile_duration_kept_exactly(tmp_path):
    ds, paths = write_small(tmp_path)
    odd = ds.usages[0].__class__(ds.usages[0].id, ds.usages[0].metadata, 0.1 + 0.2)
    ds2 = ds.__class__(ds.schema, ds.services, (odd,) + ds.usages[1:], ds.ratings)
    save_dataset(ds2, paths)
    assert load_dataset(paths).usages[0].avg_duration_minutes == 0.1 + 0.2
    assert isinstance(odd, UsageProfile)
