import dataclasses
import math

import numpy as np
import pytest

from constmap import (
    AdamState,
    AffineDecoder,
    ChannelConfig,
    DegenerateInputError,
    NOISELESS,
    QamParams,
    SchemaError,
    SourceSpec,
    StageSchedule,
    TrainConfig,
    adam_step,
    default_mixture,
    end_to_end_loss,
    gen_source,
    load_decoder,
    make_qam_grid,
    make_uniform_levels,
    mic_from_qam,
    mrc_init,
    run_pipeline,
    save_decoder,
    train,
    write_history_csv,
)
from constmap.core import Constellation
from constmap.mic import MicParams
from constmap.params import params_vector, replace_params_vector

from oracles import adam_reference, uniform_source_quantizer_mse

LV4 = make_uniform_levels(4)
NOISELESS_CH = ChannelConfig(NOISELESS)


class TestAdamStep:
    def test_zero_gradient_keeps_params(self):
        state = AdamState.init(3, lr=0.01)
        new, state2 = adam_step(np.array([1.0, -2.0, 0.5]), np.zeros(3), state)
        assert np.array_equal(new, np.array([1.0, -2.0, 0.5]))
        assert state2.t == 1

    def test_first_step_magnitude_is_lr(self):
        # bias correction makes the first step lr * g/(|g| + eps-ish)
        new, _ = adam_step(np.array([0.0]), np.array([1.0]), AdamState.init(1, lr=1e-3))
        assert new[0] == pytest.approx(-1e-3, rel=1e-6)

    def test_params_update_independently(self):
        state = AdamState.init(2, lr=0.01)
        new, _ = adam_step(np.array([1.0, 1.0]), np.array([3.0, 0.0]), state)
        solo, _ = adam_step(np.array([1.0]), np.array([3.0]), AdamState.init(1, lr=0.01))
        assert new[0] == solo[0]
        assert new[1] == 1.0

    def test_matches_reference_over_many_steps(self, rng):
        params = rng.normal(0, 1, 5)
        state = AdamState.init(5, lr=0.007)
        m = np.zeros(5)
        v = np.zeros(5)
        want = params.copy()
        t = 0
        for _ in range(40):
            g = rng.normal(0, 1, 5)
            params, state = adam_step(params, g, state)
            want, m, v, t = adam_reference(want, g, m, v, t, 0.007, 0.9, 0.999, 1e-8)
            assert np.array_equal(params, np.array(want))
        assert state.t == t == 40

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            adam_step(np.zeros(2), np.zeros(3), AdamState.init(2))
        with pytest.raises(ValueError):
            adam_step(np.zeros(3), np.zeros(3), AdamState.init(2))


class TestStageSchedule:
    def test_step_decay(self):
        sched = StageSchedule(2000, lr=1e-3, milestones=(500, 1500))
        assert sched.lr_at(0) == 1e-3
        assert sched.lr_at(499) == 1e-3
        assert sched.lr_at(500) == pytest.approx(1e-4)
        assert sched.lr_at(1499) == pytest.approx(1e-4)
        assert sched.lr_at(1500) == pytest.approx(1e-5)

    def test_no_milestones(self):
        assert StageSchedule(10, lr=0.5).lr_at(9) == 0.5

    def test_validation(self):
        with pytest.raises(ValueError):
            StageSchedule(-1)
        with pytest.raises(ValueError):
            StageSchedule(1, lr=0.0)
        with pytest.raises(ValueError):
            StageSchedule(1, factor=0.0)
        with pytest.raises(ValueError):
            StageSchedule(1, milestones=(5, 2))


class TestTrainConfig:
    def test_defaults_mirror_schedule_preset(self):
        cfg = TrainConfig()
        assert cfg.stage1 == StageSchedule(2000, 1e-3, (500, 1500))
        assert cfg.stage2 == StageSchedule(1000, 1e-3, (700,))
        assert cfg.batch_size == 32
        assert cfg.snr_train_db == 10.0

    def test_batch_must_be_even(self):
        with pytest.raises(ValueError):
            TrainConfig(batch_size=31)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)


class TestAffineDecoder:
    def test_defaults(self):
        dec = AffineDecoder()
        assert (dec.gain, dec.bias) == (1.0, 0.0)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            AffineDecoder(math.nan, 0.0)
        with pytest.raises(ValueError):
            AffineDecoder(1.0, math.inf)


class TestRunPipeline:
    def test_identity_noiseless_round_trip(self, rng):
        x = rng.uniform(-1.5, 1.5, 64)
        out = run_pipeline(x, None, NOISELESS_CH, AffineDecoder(), frozen_scale=1.0)
        assert np.array_equal(out, x)

    def test_decoder_is_affine(self, rng):
        x = rng.uniform(-1.5, 1.5, 64)
        base = run_pipeline(x, None, NOISELESS_CH, AffineDecoder(), frozen_scale=1.0)
        out = run_pipeline(x, None, NOISELESS_CH, AffineDecoder(2.0, -0.25), frozen_scale=1.0)
        np.testing.assert_allclose(out, 2.0 * base - 0.25, rtol=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            run_pipeline(np.zeros(0), None, NOISELESS_CH, AffineDecoder())
        with pytest.raises(ValueError):
            run_pipeline(np.zeros((2, 2)), None, NOISELESS_CH, AffineDecoder())
        with pytest.raises(ValueError):
            run_pipeline(np.zeros(3), QamParams(LV4), NOISELESS_CH, AffineDecoder())


class TestEndToEndLoss:
    def test_identity_noiseless_loss_zero(self, rng):
        x = rng.uniform(-1.5, 1.5, 64)
        res = end_to_end_loss(x, None, NOISELESS_CH, AffineDecoder(), frozen_scale=1.0)
        assert res.loss == 0.0
        assert np.array_equal(res.decoder_grad, np.zeros(2))

    def test_identity_noiseless_per_batch_scale(self, rng):
        # the scale round trip may cost a last-bit rounding, nothing more
        x = rng.uniform(-1.5, 1.5, 64)
        res = end_to_end_loss(x, None, NOISELESS_CH, AffineDecoder())
        assert res.loss <= 1e-30

    def test_qam_noiseless_equals_quantizer_mse(self):
        # uniform source and the nearest-level grid reduce the pipeline to a
        # scalar quantizer; the loss must match its analytic distortion
        src = SourceSpec(kind="uniform")
        x = gen_source(src, 200_000, seed=5)
        res = end_to_end_loss(x, QamParams(LV4), NOISELESS_CH, AffineDecoder())
        want = uniform_source_quantizer_mse(LV4.levels, -2.0, 2.0)
        assert res.loss == pytest.approx(want, rel=0.01)

    def test_loss_non_negative(self, rng):
        for params in (None, QamParams(LV4), mrc_init(), mic_from_qam(LV4, LV4)):
            x = rng.uniform(-2.5, 2.5, 32)
            res = end_to_end_loss(x, params, ChannelConfig(3.0, seed=1), AffineDecoder())
            assert res.loss >= 0.0

    def test_matches_run_pipeline_value(self, rng):
        x = rng.uniform(-2.0, 2.0, 32)
        mapping = mic_from_qam(LV4, LV4)
        channel = ChannelConfig(8.0, seed=2)
        dec = AffineDecoder(0.95, 0.01)
        out = run_pipeline(x, mapping, channel, dec, noise_stream=4)
        res = end_to_end_loss(x, mapping, channel, dec, noise_stream=4)
        assert res.loss == pytest.approx(float(np.mean((out - x) ** 2)), rel=1e-12)

    def test_degenerate_block_propagates(self):
        # a single point at the origin maps every input to zero power
        broke = MicParams(Constellation(np.array([[0.0, 0.0]])))
        with pytest.raises(DegenerateInputError):
            end_to_end_loss(np.array([0.4, -0.2, 0.3, 0.9]), broke, NOISELESS_CH, AffineDecoder())

    def test_rejects_odd_batch(self):
        with pytest.raises(ValueError):
            end_to_end_loss(np.zeros(3), None, NOISELESS_CH, AffineDecoder())

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            end_to_end_loss(np.zeros(4), None, NOISELESS_CH, AffineDecoder(), mode="hard")

    def test_decoder_grad_matches_quadratic(self, rng):
        # xhat is affine in (gain, bias), so central differences are exact
        x = rng.uniform(-2.0, 2.0, 32)
        mapping = mrc_init()
        channel = ChannelConfig(10.0, seed=3)
        base = end_to_end_loss(x, mapping, channel, AffineDecoder(0.9, 0.05), noise_stream=1)
        h = 1e-6
        for i, want in enumerate(base.decoder_grad):
            dec_up = AffineDecoder(0.9 + h * (i == 0), 0.05 + h * (i == 1))
            dec_dn = AffineDecoder(0.9 - h * (i == 0), 0.05 - h * (i == 1))
            up = end_to_end_loss(x, mapping, channel, dec_up, noise_stream=1).loss
            dn = end_to_end_loss(x, mapping, channel, dec_dn, noise_stream=1).loss
            assert (up - dn) / (2 * h) == pytest.approx(want, rel=1e-6)


class TestMappingGradients:
    """Loss-level finite differences in soft mode with a frozen scale.

    Batches place one input near every trainable structure (each grid cell,
    each constellation point) so no partial is starved into float64 noise.
    """

    CHANNEL = ChannelConfig(10.0, seed=3)
    DEC = AffineDecoder(0.9, 0.05)

    def _fd(self, mapping, batch, h=1e-5):
        kw = dict(noise_stream=5, frozen_scale=0.8, mode="soft")
        base = end_to_end_loss(batch, mapping, self.CHANNEL, self.DEC, **kw)
        vec = params_vector(mapping)
        errs = np.empty(vec.size)
        for i in range(vec.size):
            up, dn = vec.copy(), vec.copy()
            up[i] += h
            dn[i] -= h
            lu = end_to_end_loss(
                batch, replace_params_vector(mapping, up), self.CHANNEL, self.DEC, **kw
            ).loss
            ld = end_to_end_loss(
                batch, replace_params_vector(mapping, dn), self.CHANNEL, self.DEC, **kw
            ).loss
            num = (lu - ld) / (2 * h)
            errs[i] = abs(num - base.mapping_grad[i]) / max(
                abs(base.mapping_grad[i]), abs(num), 1e-8
            )
        return errs

    def test_mic_grad_matches_fd(self, rng):
        grid = make_qam_grid(LV4, LV4).points
        pts = grid + rng.uniform(-0.15, 0.15, grid.shape)
        batch = np.empty(32)
        batch[0::2] = pts[:, 0]
        batch[1::2] = pts[:, 1]
        errs = self._fd(mic_from_qam(LV4, LV4), batch)
        assert errs.max() < 1e-4

    def test_mrc_grad_matches_fd(self):
        offs = np.array([-1.7, -1.0, -0.5, 0.3, 0.9, 1.2, 1.8, -0.2])
        batch = np.empty(32)
        batch[0::2] = np.tile(offs, 2)
        batch[1::2] = np.tile(offs[::-1], 2)
        errs = self._fd(mrc_init(), batch)
        assert errs.max() < 1e-4

    def test_qam_has_no_mapping_grad(self, rng):
        x = rng.uniform(-2, 2, 32)
        res = end_to_end_loss(x, QamParams(LV4), self.CHANNEL, self.DEC)
        assert res.mapping_grad.size == 0


def _tiny_config(**kw):
    base = dict(
        stage1=StageSchedule(40, 1e-3),
        stage2=StageSchedule(20, 1e-3),
        batch_size=32,
        snr_train_db=10.0,
        seed=0,
    )
    base.update(kw)
    return TrainConfig(**base)


class TestTrain:
    def test_zero_iters_returns_inputs(self):
        cfg = _tiny_config(stage1=StageSchedule(0), stage2=StageSchedule(0))
        mapping = mic_from_qam(LV4, LV4)
        result = train(cfg, mapping, default_mixture())
        assert result.mapping == mapping
        assert result.decoder == AffineDecoder()
        assert result.history == []

    def test_same_seed_identical(self):
        cfg = _tiny_config(seed=9)
        a = train(cfg, mic_from_qam(LV4, LV4), default_mixture())
        b = train(cfg, mic_from_qam(LV4, LV4), default_mixture())
        assert a.history == b.history
        assert np.array_equal(params_vector(a.mapping), params_vector(b.mapping))
        assert a.decoder == b.decoder

    def test_different_seed_differs(self):
        a = train(_tiny_config(seed=0), mic_from_qam(LV4, LV4), default_mixture())
        b = train(_tiny_config(seed=1), mic_from_qam(LV4, LV4), default_mixture())
        assert a.history != b.history

    def test_stage_discipline(self):
        # stage 1 must not touch the decoder; stage 2 must not touch the mapping
        mapping = mic_from_qam(LV4, LV4)
        only1 = train(_tiny_config(stage2=StageSchedule(0)), mapping, default_mixture())
        assert only1.decoder == AffineDecoder()
        assert not np.array_equal(params_vector(only1.mapping), params_vector(mapping))
        only2 = train(_tiny_config(stage1=StageSchedule(0)), mapping, default_mixture())
        assert np.array_equal(params_vector(only2.mapping), params_vector(mapping))
        assert only2.decoder != AffineDecoder()

    def test_history_covers_both_stages(self):
        result = train(_tiny_config(), mic_from_qam(LV4, LV4), default_mixture())
        assert len(result.history) == 60
        assert [row[0] for row in result.history] == list(range(60))
        assert all(row[1] == 1 for row in result.history[:40])
        assert all(row[1] == 2 for row in result.history[40:])
        assert all(row[2] >= 0.0 for row in result.history)

    def test_delta_override(self):
        cfg = _tiny_config(stage1=StageSchedule(1), stage2=StageSchedule(0), delta=5.5)
        result = train(cfg, mic_from_qam(LV4, LV4), default_mixture())
        assert result.mapping.delta == 5.5

    def test_qam_mapping_is_not_trainable(self):
        result = train(_tiny_config(stage2=StageSchedule(0)), QamParams(LV4), default_mixture())
        assert result.mapping == QamParams(LV4)
        assert len(result.history) == 40

    def test_mic_loss_trend_downward(self):
        # clipped unit Gaussian, noiseless channel: compare the first and
        # last 100-iteration loss averages after 2000 stage-1 iterations
        cfg = TrainConfig(
            stage1=StageSchedule(2000, 1e-3, (500, 1500)),
            stage2=StageSchedule(0),
            snr_train_db=NOISELESS,
            seed=0,
        )
        src = SourceSpec(kind="gaussian")
        result = train(cfg, mic_from_qam(LV4, LV4), src)
        losses = [row[2] for row in result.history]
        first = float(np.mean(losses[:100]))
        last = float(np.mean(losses[-100:]))
        assert last <= first


class TestHistoryCsv:
    def test_format_and_values(self, tmp_path):
        history = [(0, 1, 0.25), (1, 2, 1 / 3)]
        path = tmp_path / "history.csv"
        write_history_csv(history, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "iteration,stage,loss"
        assert lines[1] == "0,1,0.25"
        assert lines[2] == f"1,2,{1 / 3!r}"
        assert float(lines[2].split(",")[2]) == 1 / 3


class TestDecoderIo:
    def test_round_trip(self, tmp_path):
        dec = AffineDecoder(0.123456789123456789, -1 / 7)
        path = tmp_path / "decoder.json"
        save_decoder(path, dec)
        assert load_decoder(path) == dec

    def test_wrong_type_field(self, tmp_path):
        path = tmp_path / "decoder.json"
        path.write_text('{"type": "linear", "gain": 1.0, "bias": 0.0}')
        with pytest.raises(SchemaError, match="decoder.type"):
            load_decoder(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "decoder.json"
        path.write_text('{"type": "affine_decoder", "gain": 1.0}')
        with pytest.raises(SchemaError, match="decoder.bias"):
            load_decoder(path)

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "decoder.json"
        path.write_text("gain=1")
        with pytest.raises(SchemaError, match="not valid JSON"):
            load_decoder(path)
