import numpy as np
import pytest
from skimage.metrics import structural_similarity

import phatnet


@pytest.fixture(scope="module")
def domain():
    return phatnet.synth_domain(seed=5, size=32, pair_count=3)


def test_synth_domain_shapes(domain):
    assert len(domain) == 3
    for p in domain:
        assert p["hazy"].shape == (32, 32, 3)
        assert p["transmission"].shape == (32, 32)
        assert 0.0 <= p["hazy"].min() and p["hazy"].max() <= 1.0


def test_compose_asm_matches_numpy(domain):
    p = domain[0]
    t = p["transmission"][..., None]
    a = np.asarray(p["airlight"])
    expected = np.clip(p["clean"] * t + a * (1.0 - t), 0.0, 1.0)
    got = phatnet.compose_asm(p["clean"], p["transmission"], p["airlight"])
    np.testing.assert_allclose(got, expected, atol=1e-12)


def test_psnr_identical_is_inf(domain):
    assert phatnet.psnr(domain[0]["clean"], domain[0]["clean"]) == float("inf")


def test_ssim_matches_skimage():
    rng = np.random.default_rng(0)
    a = rng.random((40, 48, 3))
    b = np.clip(a + 0.1 * rng.standard_normal(a.shape), 0.0, 1.0)
    ref = structural_similarity(
        a, b, channel_axis=2, data_range=1.0, gaussian_weights=True, sigma=1.5, use_sample_covariance=False
    )
    assert phatnet.ssim(a, b) == pytest.approx(ref, abs=1e-3)


def test_transfer_and_edits(domain):
    net = phatnet.Phatnet.init(stages=2, channels=8, res_blocks=1, seed=1)
    hazy, clean = domain[0]["hazy"], domain[1]["clean"]
    out = net.transfer(hazy, clean)
    assert out.shape == (32, 32, 3)
    np.testing.assert_array_equal(out, net.transfer(hazy, clean, "gamma1"))
    assert len(net.forward(hazy, clean, "vflip")) == 2
    with pytest.raises(phatnet.ParameterError):
        net.transfer(hazy, clean, "gamma0")
    with pytest.raises(phatnet.DimensionError):
        net.transfer(np.zeros((24, 24, 3)), np.zeros((24, 24, 3)))


def test_checkpoint_round_trip(tmp_path, domain):
    net = phatnet.Phatnet.init(stages=2, channels=8, res_blocks=1, seed=2)
    net.save(tmp_path / "net.ckpt", seed=2)
    loaded = phatnet.Phatnet.load(tmp_path / "net.ckpt")
    assert loaded.parameter_count() == net.parameter_count()
    hazy, clean = domain[0]["hazy"], domain[2]["clean"]
    np.testing.assert_array_equal(loaded.transfer(hazy, clean), net.transfer(hazy, clean))
    (tmp_path / "junk.ckpt").write_bytes(b"junk")
    with pytest.raises(phatnet.CheckpointError):
        phatnet.Phatnet.load(tmp_path / "junk.ckpt")


def test_train_and_adapt(tmp_path, domain):
    hazy = [p["hazy"] for p in domain]
    clean = [p["clean"] for p in domain]
    net, history = phatnet.train_phatnet(hazy, clean, epochs=1, stages=2, channels=8, res_blocks=1, seed=3)
    assert len(history) == 3
    assert all(np.isfinite(r["total"]) for r in history)

    ft = phatnet.build_finetune_set(hazy[:1], clean, net, ["none", "vflip"], workers=2)
    assert len(ft) == 6
    assert ft.entry(5)["edit"] == "vflip"
    ft.save(tmp_path / "ft")
    assert phatnet.FinetuneSet.load(tmp_path / "ft").content_hash() == ft.content_hash()

    base = phatnet.Dehazer.init(depth=1, base_channels=4, res_blocks=0, seed=4)
    before = base.dehaze(hazy[0])
    adapted = phatnet.adapt(base, ft, epochs=1, lr=1e-3)
    np.testing.assert_array_equal(base.dehaze(hazy[0]), before)
    assert not np.array_equal(adapted.dehaze(hazy[0]), before)


def test_png_round_trip(tmp_path, domain):
    img = domain[0]["clean"]
    phatnet.write_image(tmp_path / "a.png", img, bit_depth=16)
    np.testing.assert_allclose(phatnet.read_image(tmp_path / "a.png"), img, atol=1.0 / 65535)


def test_default_edit_set(domain):
    net = phatnet.Phatnet.init(stages=1, channels=4, res_blocks=0, seed=6)
    ft = phatnet.build_finetune_set([domain[0]["hazy"]], [domain[1]["clean"]], net, ["default"])
    assert [ft.entry(k)["edit"] for k in range(len(ft))] == ["none", "gamma0.7", "gamma1.5", "vflip"]
