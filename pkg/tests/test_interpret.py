import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascadenet import interpret, network, pca
from cascadenet.cascade import Cascade, CascadeConfig, train
from cascadenet.dataset import GeneratorConfig, generate, partition_by_year, signal_patterns
from cascadenet.errors import ParameterError
from cascadenet.interpret import PALETTE, color_indices, export_maps, load_grid_csv, ppm_text, unit_map, weights_map
from cascadenet.network import MlpSpec

H, W = 6, 8


def cosine(a, b):
    return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))


@pytest.fixture(scope="module")
def basis_cascade():
    """Cascade whose standardization is the identity, so maps are raw component sums."""
    rng = np.random.default_rng(0)
    x = rng.normal(size=(30, 2 * H * W))
    model = pca.fit(x, 4)
    return Cascade(model, 4, H, W, np.zeros(4), np.ones(4), 0.0, 1.0)


@pytest.fixture(scope="module")
def two_net():
    d = generate(GeneratorConfig(height=H, width=W))
    p = partition_by_year(d, seed=0)
    casc = train(d, p, 5, CascadeConfig(max_nets=2, gating="try_all_depths"))
    assert len(casc.nets) == 2
    return casc


def with_net(casc, flat):
    spec = MlpSpec(casc.k, 0)
    return Cascade(**{**casc.__dict__, "nets": [(spec, np.asarray(flat, dtype=float))]})


class TestUnitMap:
    @pytest.mark.parametrize("c", [0, 1, 3])
    def test_one_hot_weight_gives_component(self, basis_cascade, c):
        w = np.zeros(basis_cascade.k + 1)
        w[c] = 1.0
        smap = unit_map(with_net(basis_cascade, w), 0, 0)
        comp = basis_cascade.pca.components[:, c]
        np.testing.assert_allclose(smap.temp, comp[: H * W].reshape(H, W), atol=1e-15)
        np.testing.assert_allclose(smap.precip, comp[H * W :].reshape(H, W), atol=1e-15)
        assert (smap.net_index, smap.unit_index) == (0, 0)

    def test_zero_weights_zero_map(self, basis_cascade):
        smap = unit_map(with_net(basis_cascade, np.zeros(basis_cascade.k + 1)), 0, 0)
        assert np.all(smap.temp == 0) and np.all(smap.precip == 0)

    def test_bias_does_not_enter(self, basis_cascade):
        w = np.zeros(basis_cascade.k + 1)
        w[-1] = 5.0
        assert np.all(unit_map(with_net(basis_cascade, w), 0, 0).flat == 0)

    def test_sd_is_folded_in(self, basis_cascade):
        scaled = Cascade(**{**basis_cascade.__dict__, "score_sd": np.array([2.0, 1.0, 4.0, 1.0])})
        w = np.array([1.0, 0.0, 1.0, 0.0])
        expected = basis_cascade.pca.components[:, 0] / 2 + basis_cascade.pca.components[:, 2] / 4
        np.testing.assert_allclose(weights_map(scaled, w), expected, atol=1e-15)

    def test_hidden_net_units(self, two_net):
        spec, params = two_net.nets[1]
        w, _ = network.unpack(spec, params)[0]
        for u in range(2):
            smap = unit_map(two_net, 1, u)
            np.testing.assert_allclose(smap.flat, weights_map(two_net, w[:, u]), atol=0)
        assert len(interpret.all_unit_maps(two_net)) == 3

    def test_bad_indices(self, two_net):
        with pytest.raises(ParameterError):
            unit_map(two_net, 2, 0)
        with pytest.raises(ParameterError):
            unit_map(two_net, 0, 1)
        with pytest.raises(ParameterError):
            unit_map(two_net, 1, 2)
        with pytest.raises(ParameterError):
            unit_map(two_net, -1, 0)

    def test_wrong_weight_count(self, basis_cascade):
        with pytest.raises(ParameterError):
            weights_map(basis_cascade, np.zeros(3))

    @settings(max_examples=40, deadline=None)
    @given(
        u=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
        v=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    )
    def test_linearity(self, basis_cascade, u, v):
        u, v = np.array(u), np.array(v)
        lhs = weights_map(basis_cascade, u + v)
        rhs = weights_map(basis_cascade, u) + weights_map(basis_cascade, v)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(
        u=st.lists(st.floats(-10, 10), min_size=4, max_size=4),
        e=st.integers(-20, 20),
        alpha=st.floats(-100, 100),
    )
    def test_scale_covariance(self, basis_cascade, u, e, alpha):
        u = np.array(u)
        base = weights_map(basis_cascade, u)
        # Powers of two commute exactly with floating-point sums.
        np.testing.assert_array_equal(weights_map(basis_cascade, 2.0**e * u), 2.0**e * base)
        np.testing.assert_allclose(weights_map(basis_cascade, alpha * u), alpha * base, rtol=1e-12, atol=1e-12)


class TestMapRecovery:
    def test_linear_net_recovers_true_pattern(self):
        cfg = GeneratorConfig(height=12, width=24, nonlinear_amplitude=0, noise_sd=0, model_offset_sd=0)
        d = generate(cfg)
        p = partition_by_year(d, seed=0)
        casc = train(d, p, 3)
        truth = signal_patterns(cfg).linear_pattern()
        assert cosine(unit_map(casc, 0, 0).flat, truth) >= 0.9


class TestRendering:
    def test_palette(self):
        assert PALETTE.shape == (256, 3)
        assert tuple(PALETTE[0]) == (0, 0, 255)
        assert tuple(PALETTE[127]) == tuple(PALETTE[128]) == (255, 255, 255)
        assert tuple(PALETTE[255]) == (255, 0, 0)
        assert PALETTE.min() >= 0 and PALETTE.max() <= 255

    def test_color_indices_scale(self):
        idx = color_indices(np.array([[-2.0, 0.0, 2.0, 1.0]]))
        assert list(idx[0]) == [0, 128, 255, 191]

    def test_zero_map_is_uniform_white(self):
        text = ppm_text(np.zeros((3, 4)))
        lines = text.splitlines()
        assert lines[:3] == ["P3", "4 3", "255"]
        pixels = " ".join(lines[3:]).split()
        assert len(pixels) == 36 and set(pixels) == {"255"}

    def test_ppm_comments(self):
        lines = ppm_text(np.ones((2, 2)), comments=["seed: 0"]).splitlines()
        assert lines[:4] == ["P3", "# seed: 0", "2 2", "255"]
        assert lines[4] == "255 0 0 255 0 0"


class TestExport:
    def test_two_net_file_count(self, two_net, tmp_path):
        paths = export_maps(two_net, tmp_path / "maps", comments=["test"])
        csvs = sorted(p.name for p in paths if p.suffix == ".csv")
        ppms = [p for p in paths if p.suffix == ".ppm"]
        assert len(csvs) == 6 and len(ppms) == 6
        assert "net1_unit1_precip.csv" in csvs and "net0_unit0_temp.csv" in csvs
        assert not list((tmp_path / "maps").glob("*.tmp"))

    def test_csv_reload(self, two_net, tmp_path):
        export_maps(two_net, tmp_path)
        for net, unit in ((0, 0), (1, 0), (1, 1)):
            smap = unit_map(two_net, net, unit)
            for channel in ("temp", "precip"):
                grid = load_grid_csv(tmp_path / f"net{net}_unit{unit}_{channel}.csv")
                assert grid.shape == (H, W)
                np.testing.assert_allclose(grid, getattr(smap, channel), rtol=0, atol=1e-9)

    def test_unwritable_directory_names_path(self, two_net, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError, match="file"):
            export_maps(two_net, blocker / "sub")
