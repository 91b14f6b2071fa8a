"""损失、ADAM、学习率调度、检查点与训练循环测试"""
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.dataset import load_manifest, synthesize_image
from src.errors import (CheckpointCorruptError, CheckpointShapeError,
                        CheckpointVersionError, ConfigError, ContractError,
                        DimensionError, NumericError)
from src.metrics import psnr
from src.model import ModelConfig, ModelParams, build, forward
from src.tensor import Tensor, finite_difference_check
from src.training import (Checkpoint, OptimState, TrainConfig, Trainer,
                          adam_step, corpus_from_images, corpus_from_manifest,
                          deserialize, load_checkpoint, lr_at, mse_loss,
                          save_checkpoint, serialize, train)
from src.training.trainer import LATEST_NAME, LOG_NAME


def _scalar_params(value=1.0):
    return ModelParams({'w': Tensor(np.full((1, 1, 1, 1), value), dtype=np.float64)})


def _tiny_corpus():
    images = [("smooth", synthesize_image("smooth", 32, seed=1)),
              ("gradient", synthesize_image("gradient", 32, seed=2))]
    return corpus_from_images(images)


def test_train_config_defaults():
    config = TrainConfig()
    assert (config.lr0, config.beta1, config.beta2, config.eps) == (1e-4, 0.9, 0.999, 1e-8)
    assert (config.batch, config.halve_every) == (16, 10000)


@pytest.mark.parametrize('values', [{'lr0': 0.0}, {'beta1': 1.0}, {'batch': 0}, {'dtype': 'float16'}])
def test_train_config_validation(values):
    with pytest.raises(ConfigError):
        TrainConfig(**values)


def test_train_config_from_mapping_casts_strings():
    config = TrainConfig.from_mapping({'lr0': '0.001', 'batch': '4', 'dtype': 'float64'})
    assert (config.lr0, config.batch, config.np_dtype) == (0.001, 4, np.float64)
    with pytest.raises(ConfigError):
        TrainConfig.from_mapping({'momentum': '0.9'})
    with pytest.raises(ConfigError):
        TrainConfig.from_mapping({'batch': 'many'})


def test_lr_schedule_fixtures():
    config = TrainConfig()
    assert lr_at(0, config) == 1e-4
    assert lr_at(9999, config) == 1e-4
    assert lr_at(10000, config) == 5e-5
    assert lr_at(25000, config) == 2.5e-5


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 200000), st.integers(1, 1000), st.integers(1, 5000))
def test_lr_schedule_is_non_increasing_step_function(step, delta, halve_every):
    config = TrainConfig(halve_every=halve_every)
    assert lr_at(step + delta, config) <= lr_at(step, config)
    if (step + 1) % halve_every:
        assert lr_at(step + 1, config) == lr_at(step, config)
    else:
        assert lr_at(step + 1, config) == lr_at(step, config) / 2


def test_mse_loss_value_and_gradient(rng):
    pred = Tensor(rng.standard_normal((2, 3, 4, 4)), dtype=np.float64)
    target = Tensor(rng.standard_normal((2, 3, 4, 4)), dtype=np.float64)
    expected = np.mean((pred.data - target.data) ** 2)
    assert mse_loss(pred, target).item() == pytest.approx(expected, rel=1e-12)
    assert finite_difference_check(lambda p: mse_loss(p, target), pred) <= 1e-4
    with pytest.raises(DimensionError):
        mse_loss(pred, Tensor(np.zeros((1, 3, 4, 4))))


def test_adam_single_step_by_hand():
    params = _scalar_params(1.0)
    state = OptimState.zeros_like(params)
    new_params, new_state = adam_step(params, {'w': np.ones((1, 1, 1, 1))}, state, lr=1e-4)
    expected = 1.0 - 1e-4 * 1.0 / (1.0 + 1e-8)
    assert abs(new_params['w'].item() - expected) <= 1e-12
    assert new_state.t == 1
    assert state.t == 0 and params['w'].item() == 1.0


def test_adam_update_is_odd(rng):
    params = ModelParams({'w': Tensor(np.zeros((1, 2, 3, 3)), dtype=np.float64)})
    state = OptimState.zeros_like(params)
    g = rng.standard_normal((1, 2, 3, 3))
    plus, _ = adam_step(params, {'w': g}, state, lr=1e-3)
    minus, _ = adam_step(params, {'w': -g}, state, lr=1e-3)
    np.testing.assert_array_equal(plus['w'].data, -minus['w'].data)


def test_adam_converges_on_quadratic():
    params = _scalar_params(1.0)
    state = OptimState.zeros_like(params)
    config = TrainConfig(lr0=1e-2, halve_every=10 ** 9)
    closest = 1.0
    for step in range(20000):
        x = params['w'].data
        params, state = adam_step(params, {'w': 2.0 * x}, state, lr_at(step, config), config)
        closest = min(closest, abs(params['w'].item()))
    assert closest < 1e-3
    assert abs(params['w'].item()) < 0.05


def test_adam_rejects_mismatched_gradients():
    params = _scalar_params()
    state = OptimState.zeros_like(params)
    with pytest.raises(ContractError):
        adam_step(params, {}, state, lr=1e-3)
    with pytest.raises(ContractError):
        adam_step(params, {'w': np.ones((1, 1, 1, 1)), 'v': np.ones((1, 1, 1, 1))}, state, lr=1e-3)
    with pytest.raises(ContractError):
        adam_step(params, {'w': np.ones((1, 1, 2, 1))}, state, lr=1e-3)


def _checkpoint(config, seed=0):
    params = build(config, seed)
    state = OptimState.zeros_like(params)
    rng = np.random.default_rng(seed)
    state.m = {k: rng.standard_normal(v.shape).astype(np.float32) for k, v in state.m.items()}
    state.t = 7
    return Checkpoint(config, TrainConfig(lr0=3e-4, batch=4), 42, params, state)


def test_checkpoint_round_trip_is_bit_exact(tmp_path, tiny_config):
    ckpt = _checkpoint(tiny_config)
    path = save_checkpoint(tmp_path / "ckpt.djsr", ckpt)
    loaded = load_checkpoint(path)
    assert loaded.model_config == tiny_config
    assert loaded.train_config == ckpt.train_config
    assert (loaded.step, loaded.state.t) == (42, 7)
    assert list(loaded.params) == list(ckpt.params)
    for name in ckpt.params:
        np.testing.assert_array_equal(loaded.params[name].data, ckpt.params[name].data)
        np.testing.assert_array_equal(loaded.state.m[name], ckpt.state.m[name])
        np.testing.assert_array_equal(loaded.state.v[name], ckpt.state.v[name])


def test_checkpoint_truncation_detected(tiny_config):
    data = serialize(_checkpoint(tiny_config))
    (header_len,) = struct.unpack('<Q', data[8:16])
    for cut in (6, 20, 16 + header_len + 5, len(data) - 1):
        with pytest.raises(CheckpointCorruptError):
            deserialize(data[:cut])


def test_checkpoint_cut_at_record_boundary_is_corrupt(tiny_config):
    data = serialize(_checkpoint(tiny_config))
    # 名称前是 u16 长度字段
    boundary = data.index(b'adam.m/') - 2
    with pytest.raises(CheckpointCorruptError):
        deserialize(data[:boundary])
    with pytest.raises(CheckpointCorruptError):
        deserialize(data + b"\0\0\0\0")


def test_checkpoint_oversized_dimensions_are_corrupt(tiny_config):
    data = bytearray(serialize(_checkpoint(tiny_config)))
    (header_len,) = struct.unpack('<Q', data[8:16])
    first = 16 + header_len
    (name_len,) = struct.unpack('<H', data[first:first + 2])
    dims = first + 2 + name_len + 1
    data[dims:dims + 16] = struct.pack('<2Q', 2 ** 32, 2 ** 32)
    with pytest.raises(CheckpointCorruptError):
        deserialize(bytes(data))


def test_checkpoint_foreign_magic_and_version(tiny_config):
    data = serialize(_checkpoint(tiny_config))
    with pytest.raises(CheckpointVersionError):
        deserialize(b"PK\x03\x04" + data[4:])
    with pytest.raises(CheckpointVersionError):
        deserialize(data[:4] + struct.pack('<I', 99) + data[8:])


def test_checkpoint_shape_mismatch_detected(tiny_config):
    ckpt = _checkpoint(tiny_config)
    wrong = Checkpoint(ModelConfig(c_filters=16, n_blocks=1), ckpt.train_config, ckpt.step,
                       ckpt.params, ckpt.state)
    with pytest.raises(CheckpointShapeError):
        deserialize(serialize(wrong))


def test_float64_parameters_stored_as_float32(tiny_config):
    ckpt = _checkpoint(tiny_config)
    wide = Checkpoint(tiny_config, ckpt.train_config.replace(dtype='float64'), 0,
                      ckpt.params.astype(np.float64), ckpt.state)
    loaded = deserialize(serialize(wide))
    assert loaded.params['stage1.conv.weight'].dtype == np.float64
    np.testing.assert_array_equal(loaded.params['stage1.conv.weight'].data,
                                  ckpt.params['stage1.conv.weight'].data.astype(np.float64))


def test_batches_are_deterministic(tiny_config, tiny_train_config):
    a = Trainer(tiny_config, tiny_train_config, _tiny_corpus())
    b = Trainer(tiny_config, tiny_train_config, _tiny_corpus())
    bayer_a, target_a = a.batch_at(3)
    bayer_b, target_b = b.batch_at(3)
    assert bayer_a.shape == (2, 1, 8, 8) and target_a.shape == (2, 3, 16, 16)
    np.testing.assert_array_equal(bayer_a.data, bayer_b.data)
    np.testing.assert_array_equal(target_a.data, target_b.data)


def test_training_reduces_loss(tiny_config, tiny_train_config):
    trainer = Trainer(tiny_config, tiny_train_config.replace(batch=1), _tiny_corpus()[:1])
    bayer, target = trainer.batch_at(0)
    before = mse_loss(forward(trainer.params, tiny_config, bayer), target).item()
    for _ in range(30):
        # 固定批次：每步都取 step 0 的补丁
        trainer.step = 0
        trainer.train_step()
    after = mse_loss(forward(trainer.params, tiny_config, bayer), target).item()
    assert after < before


def test_resume_preserves_trajectory(tmp_path, tiny_config, tiny_train_config):
    straight = Trainer(tiny_config, tiny_train_config, _tiny_corpus()).run(4)

    first = Trainer(tiny_config, tiny_train_config, _tiny_corpus(), out_dir=tmp_path / "a").run(2)
    assert first.step == 2
    resumed_ckpt = load_checkpoint(tmp_path / "a" / LATEST_NAME)
    resumed = Trainer(tiny_config, tiny_train_config, _tiny_corpus(), resume=resumed_ckpt).run(4)

    assert resumed.step == straight.step == 4
    assert resumed.state.t == straight.state.t == 4
    for name in straight.params:
        np.testing.assert_array_equal(resumed.params[name].data, straight.params[name].data)
        np.testing.assert_array_equal(resumed.state.m[name], straight.state.m[name])


def test_resume_rejects_other_model(tiny_config, tiny_train_config):
    ckpt = Trainer(tiny_config, tiny_train_config, _tiny_corpus()).checkpoint()
    with pytest.raises(ConfigError):
        Trainer(ModelConfig(c_filters=8, n_blocks=2), tiny_train_config, _tiny_corpus(), resume=ckpt)


def test_zero_steps_writes_initial_checkpoint(tmp_path, tiny_config, tiny_train_config):
    ckpt = Trainer(tiny_config, tiny_train_config, _tiny_corpus(), out_dir=tmp_path).run(0)
    assert ckpt.step == 0
    loaded = load_checkpoint(tmp_path / LATEST_NAME)
    initial = build(tiny_config, tiny_train_config.seed)
    for name in initial:
        np.testing.assert_array_equal(loaded.params[name].data, initial[name].data)
    assert not (tmp_path / LOG_NAME).exists()


def test_same_seed_gives_identical_logs(tmp_path, tiny_config, tiny_train_config):
    config = tiny_train_config.replace(val_every=2, val_patches=2, checkpoint_every=2)
    for name in ("a", "b"):
        Trainer(tiny_config, config, _tiny_corpus(), out_dir=tmp_path / name).run(4)
    log_a = (tmp_path / "a" / LOG_NAME).read_text(encoding='utf-8')
    log_b = (tmp_path / "b" / LOG_NAME).read_text(encoding='utf-8')
    assert log_a == log_b
    lines = log_a.splitlines()
    assert lines[0] == "step,lr,loss,val_psnr,val_ssim"
    assert len(lines) == 5
    assert lines[2].split(",")[3] != ""
    assert (tmp_path / "a" / "step_0000002.djsr").is_file()
    assert (tmp_path / "a" / "step_0000004.djsr").is_file()


def test_numeric_error_reports_step(monkeypatch, tiny_config, tiny_train_config):
    trainer = Trainer(tiny_config, tiny_train_config, _tiny_corpus())
    trainer.run(2)

    def explode(*args, **kwargs):
        raise NumericError("运算 conv2d 产生了非有限值 (NaN/Inf)")

    monkeypatch.setattr("src.training.trainer.forward", explode)
    with pytest.raises(NumericError) as excinfo:
        trainer.run(4)
    assert excinfo.value.step == 2


def test_trainer_rejects_mismatched_cfa(tiny_config, tiny_train_config):
    from src.imaging import XTRANS
    with pytest.raises(ConfigError):
        Trainer(tiny_config, tiny_train_config, _tiny_corpus(), cfa=XTRANS)
    with pytest.raises(ConfigError):
        Trainer(tiny_config, tiny_train_config, [])


def test_train_from_manifest(tmp_path, tiny_dataset, tiny_config, tiny_train_config):
    ckpt = train(tiny_config, tiny_train_config.replace(max_steps=2), tiny_dataset, out_dir=tmp_path / "run")
    assert ckpt.step == 2
    assert (tmp_path / "run" / LATEST_NAME).is_file()
    corpus = corpus_from_manifest(load_manifest(tiny_dataset))
    assert [name for name, _, _ in corpus] == ["smooth", "zoneplate"]


@pytest.mark.slow
def test_desk_model_overfits_single_patch():
    config = ModelConfig.preset('desk')
    gt = synthesize_image("smooth", 128, seed=0)
    train_config = TrainConfig(batch=1, patch_size=64, max_steps=2000, lr0=1e-3, val_every=0,
                               val_patches=0, checkpoint_every=0, log_every=100)
    trainer = Trainer(config, train_config, corpus_from_images([("smooth", gt)]))

    losses = [trainer.train_step() for _ in range(train_config.max_steps)]
    smoothed = [np.mean(losses[i:i + 100]) for i in range(0, len(losses), 100)]
    assert all(b <= a for a, b in zip(smoothed, smoothed[1:]))

    bayer, target = trainer.batch_at(0)
    output = forward(trainer.params, config, bayer)
    assert psnr(output.data[0], target.data[0]) > 40.0
