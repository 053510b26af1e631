import numpy as np
import pytest
import torch

from mvpref.diffusion import (
    DiffusionConfig,
    MultiViewDiffusion,
    NoiseScheduler,
    PretrainConfig,
    eval_pretrain_loss,
    load_diffusion_checkpoint,
    make_synthetic_corpus,
    pretrain,
    pretrain_loss,
    save_diffusion_checkpoint,
)
from mvpref.errors import ValidationError


def micro(latent=False, **kw):
    cfg = dict(n_views=2, image_size=8, hidden=8, n_heads=2, latent_space=latent)
    cfg.update(kw)
    return MultiViewDiffusion(DiffusionConfig(**cfg), seed=0).double()


def inputs(model, seed=0, batch=None):
    g = torch.Generator().manual_seed(seed)
    v = model.cfg.total_views
    s = model.cfg.latent_size
    shape = (v, 3, s, s) if batch is None else (batch, v, 3, s, s)
    pshape = (3, model.cfg.image_size, model.cfg.image_size)
    if batch is not None:
        pshape = (batch,) + pshape
    x = torch.randn(shape, generator=g, dtype=torch.float64)
    prompt = torch.rand(pshape, generator=g, dtype=torch.float64)
    return x, prompt


def test_output_shape_matches_input():
    model = micro()
    x, prompt = inputs(model)
    assert model.denoiser(x, prompt, 3).shape == x.shape
    xb, pb = inputs(model, batch=2)
    assert model.denoiser(xb, pb, 3).shape == xb.shape


def test_deterministic_in_eval_mode():
    model = micro()
    model.eval()
    x, prompt = inputs(model)
    assert torch.equal(model.denoiser(x, prompt, 5), model.denoiser(x, prompt, 5))


def test_wrong_view_count_rejected():
    model = micro()
    x, prompt = inputs(model)
    with pytest.raises(ValidationError):
        model.denoiser(x[:3], prompt, 0)


def test_zeroed_cross_view_attention_decouples_views():
    model = micro()
    with torch.no_grad():
        model.denoiser.cross_view_attn.out_proj.weight.zero_()
        model.denoiser.cross_view_attn.out_proj.bias.zero_()
    x, prompt = inputs(model)
    base = model.denoiser(x, prompt, 7)
    bumped = x.clone()
    bumped[2] += 0.5  # perturb one view only
    out = model.denoiser(bumped, prompt, 7)
    for k in range(model.cfg.total_views):
        if k == 2:
            assert not torch.allclose(out[k], base[k])
        else:
            assert torch.equal(out[k], base[k])


def test_cross_view_attention_mixes_by_default():
    model = micro()
    x, prompt = inputs(model)
    base = model.denoiser(x, prompt, 7)
    bumped = x.clone()
    bumped[2] += 0.5
    out = model.denoiser(bumped, prompt, 7)
    assert not torch.allclose(out[0], base[0])  # other views see the change


def test_pixel_decode_is_clamp():
    model = micro(latent=False)
    lat = torch.tensor([[[[-0.5, 0.3], [1.7, 0.9]]]], dtype=torch.float64)
    lat = lat.expand(4, 3, 2, 2)  # wrong spatial size for config
    with pytest.raises(ValidationError):
        model.decode(lat)
    x, _ = inputs(model)
    x = x * 3  # push outside [0, 1]
    assert torch.equal(model.decode(x), x.clamp(0, 1))


@torch.no_grad()
def test_latent_decode_range_and_shape():
    model = micro(latent=True)
    x, _ = inputs(model)
    out = model.decode(x)
    assert out.shape == (model.cfg.total_views, 3,
                         model.cfg.image_size, model.cfg.image_size)
    assert float(out.min()) >= 0.0 and float(out.max()) <= 1.0


def test_latent_encode_decode_shapes():
    model = micro(latent=True)
    images = torch.rand((2, model.cfg.total_views, 3, 8, 8), dtype=torch.float64)
    lat = model.encode(images)
    assert lat.shape == (2, model.cfg.total_views, 3, 4, 4)
    assert model.decode(lat).shape == images.shape


def test_decode_gradient_matches_finite_differences():
    # central-difference oracle over every latent coordinate
    model = micro(latent=True)
    model.eval()
    g = torch.Generator().manual_seed(4)
    lat = torch.randn((2, 3, 4, 4), generator=g, dtype=torch.float64)
    w = torch.randn((2, 3, 8, 8), generator=g, dtype=torch.float64)

    lat_req = lat.clone().requires_grad_(True)
    out = (model.decode(lat_req.unsqueeze(0))[0] * w).sum()
    (grad,) = torch.autograd.grad(out, lat_req)

    h = 1e-6
    flat = lat.flatten()
    fd = torch.zeros_like(flat)
    with torch.no_grad():
        for i in range(flat.numel()):
            for sign in (+1, -1):
                shifted = flat.clone()
                shifted[i] += sign * h
                val = (model.decode(shifted.reshape(lat.shape).unsqueeze(0))[0] * w).sum()
                fd[i] += sign * float(val)
    fd = (fd / (2 * h)).reshape(lat.shape)
    err = (grad - fd).abs()
    tol = 1e-4 * torch.maximum(grad.abs(), fd.abs()) + 1e-8
    assert bool((err <= tol).all())


def test_pretrain_loss_identities():
    a = torch.zeros((2, 3, 4, 4), dtype=torch.float64)
    b = torch.ones_like(a)
    assert float(pretrain_loss(a, a)) == 0.0
    assert float(pretrain_loss(a, b)) == pytest.approx(1.0)
    x = torch.randn_like(a)
    y = torch.randn_like(a)
    assert float(pretrain_loss(x, y)) == pytest.approx(float(pretrain_loss(y, x)))
    with pytest.raises(ValidationError):
        pretrain_loss(a, b[:1])


def test_pretraining_halves_heldout_loss():
    torch.set_num_threads(2)
    model = MultiViewDiffusion(DiffusionConfig(
        n_views=2, image_size=8, hidden=8, n_heads=2), seed=0)
    sched = NoiseScheduler(t_steps=1000, schedule="linear")
    train_corpus = make_synthetic_corpus(12, 2, 8, seed=0)
    heldout = make_synthetic_corpus(6, 2, 8, seed=99, prefix="ho")
    before = eval_pretrain_loss(model, sched, heldout, seed=1)
    model, report = pretrain(model, sched, train_corpus, PretrainConfig(
        steps=200, batch_size=6, learning_rate=2e-3, seed=0))
    after = eval_pretrain_loss(model, sched, heldout, seed=1)
    assert after <= 0.5 * before
    assert len(report.losses) == 200


def test_checkpoint_round_trip(tmp_path):
    model = micro()
    sched = NoiseScheduler(t_steps=77, schedule="cosine")
    path = tmp_path / "dm.pt"
    save_diffusion_checkpoint(model, sched, path)
    clone, sched2 = load_diffusion_checkpoint(path)
    assert sched2.t_steps == 77 and sched2.schedule == "cosine"
    x, prompt = inputs(model)
    clone.eval(); model.eval()
    assert torch.equal(clone.denoiser(x, prompt, 3), model.denoiser(x, prompt, 3))
