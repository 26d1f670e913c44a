import numpy as np
import pytest

from riswipt.channel import (ChannelSet, channel_hash, load_channels, path_loss,
                             save_channels, synth_channels)
from riswipt.errors import DomainError, FormatError
from riswipt.scenario import default_scenario


def test_path_loss_reference_points():
    for alpha in (2.0, 2.3, 3.2):
        assert path_loss(1.0, alpha) == pytest.approx(1e-3, rel=1e-12)
    assert path_loss(10.0, 2.0) == pytest.approx(1e-5, rel=1e-12)
    # BS-to-surface distance of the default geometry
    assert path_loss(14.1421, 2.3) == pytest.approx(2.26e-6, rel=1e-2)


def test_path_loss_domain():
    with pytest.raises(DomainError):
        path_loss(0.0, 2.0)
    with pytest.raises(DomainError):
        path_loss(-3.0, 2.0)


def test_synth_deterministic():
    s = default_scenario()
    a = synth_channels(s, seed=1)
    b = synth_channels(s, seed=1)
    assert channel_hash(a) == channel_hash(b)
    np.testing.assert_array_equal(a.bs_ris, b.bs_ris)
    np.testing.assert_array_equal(a.ir_pos, b.ir_pos)


def test_synth_shapes_and_positions_in_disks():
    s = default_scenario()
    cs = synth_channels(s, seed=3)
    assert cs.bs_ris.shape == (20, 4)
    assert cs.bs_ir.shape == (4, 4) and cs.bs_er.shape == (4, 4)
    assert cs.ris_ir.shape == (4, 20) and cs.ris_er.shape == (4, 20)
    assert np.all(np.linalg.norm(cs.ir_pos - np.array(s.ir_center), axis=1) <= s.ir_radius)
    assert np.all(np.linalg.norm(cs.er_pos - np.array(s.er_center), axis=1) <= s.er_radius)


def test_huge_rician_factor_collapses_to_los():
    s = default_scenario().replace(rician_kappa=1e9)
    cs = synth_channels(s, seed=5)
    d = np.hypot(10.0, 10.0)
    expected = np.sqrt(path_loss(d, s.alpha_bs_ris))
    np.testing.assert_allclose(np.abs(cs.bs_ris), expected, rtol=1e-3)


@pytest.mark.slow
def test_second_moment_matches_path_loss():
    s = default_scenario()
    d = np.hypot(10.0, 10.0)
    gain = path_loss(d, s.alpha_bs_ris)
    draws = np.array([np.abs(synth_channels(s, seed=k).bs_ris[0, 0]) ** 2
                      for k in range(10_000)])
    assert abs(draws.mean() - gain) <= 0.2 * gain


@pytest.mark.slow
def test_distinct_seeds_distinct_realizations():
    s = default_scenario()
    hashes = {channel_hash(synth_channels(s, seed=k)) for k in range(1000)}
    assert len(hashes) == 1000


def test_save_load_round_trip(tmp_path):
    cs = synth_channels(default_scenario(), seed=11)
    path = tmp_path / "chan.bin"
    save_channels(cs, path)
    back = load_channels(path)
    for name in ("bs_ris", "bs_ir", "bs_er", "ris_ir", "ris_er", "ir_pos", "er_pos"):
        np.testing.assert_array_equal(getattr(cs, name), getattr(back, name))
    assert back.bs_ris.shape == (20, 4)
    assert channel_hash(back) == channel_hash(cs)


def test_load_truncated_rejected(tmp_path):
    cs = synth_channels(default_scenario(), seed=11)
    path = tmp_path / "chan.bin"
    save_channels(cs, path)
    blob = path.read_bytes()
    (tmp_path / "cut.bin").write_bytes(blob[: len(blob) // 2])
    with pytest.raises(FormatError):
        load_channels(tmp_path / "cut.bin")
    (tmp_path / "junk.bin").write_bytes(b"NOPE" + blob[4:])
    with pytest.raises(FormatError):
        load_channels(tmp_path / "junk.bin")
    (tmp_path / "trail.bin").write_bytes(blob + b"\x00" * 8)
    with pytest.raises(FormatError):
        load_channels(tmp_path / "trail.bin")


def test_channelset_dimension_check():
    cs = synth_channels(default_scenario(), seed=1)
    with pytest.raises(Exception):
        ChannelSet(bs_ris=cs.bs_ris, bs_ir=cs.bs_ir[:, :2], bs_er=cs.bs_er,
                   ris_ir=cs.ris_ir, ris_er=cs.ris_er,
                   ir_pos=cs.ir_pos, er_pos=cs.er_pos)
