import numpy as np
import pytest
from scipy import ndimage

from ers.image_io import AnalysisConfig, GrayImage, to_grayscale, to_lab
from ers.raw_metrics import (
    FLAG_EMPTY_FOREGROUND,
    FLAG_UNIFORM_SALIENCY,
    binarize_strokes,
    canny_edges,
    centering_error,
    compute_raw,
    edge_density,
    fg_bg_contrast,
    palette_count,
    saliency_concentration,
    stroke_samples,
    stroke_thickness,
)
from ers.saliency import label_components
from test_saliency import field_from, flood_fill_labels, mask_from

from conftest import image_from_array, solid_image


def gray_from(values: np.ndarray) -> GrayImage:
    h, w = values.shape
    return GrayImage(width=w, height=h, values=values.astype(np.uint8))


# ---------------------------------------------------------------------------
# Oracles
# ---------------------------------------------------------------------------

def palette_oracle(pixels: np.ndarray, step: int, coverage: float) -> int:
    counts = {}
    h, w = pixels.shape[:2]
    for i in range(h):
        for j in range(w):
            key = tuple((int(c) // step) * step for c in pixels[i, j])
            counts[key] = counts.get(key, 0) + 1
    threshold = int(np.ceil(coverage * h * w))
    return sum(1 for c in counts.values() if c >= threshold)


def hysteresis_oracle(thinned: np.ndarray, low: float, high: float) -> np.ndarray:
    """BFS hysteresis from strong seeds over 8-neighborhoods."""
    h, w = thinned.shape
    out = np.zeros((h, w), dtype=bool)
    stack = [(i, j) for i in range(h) for j in range(w) if thinned[i, j] >= high]
    for i, j in stack:
        out[i, j] = True
    while stack:
        i, j = stack.pop()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ni, nj = i + di, j + dj
                if 0 <= ni < h and 0 <= nj < w and not out[ni, nj] and thinned[ni, nj] >= low:
                    out[ni, nj] = True
                    stack.append((ni, nj))
    return out


def canny_oracle(values: np.ndarray, cfg: AnalysisConfig) -> np.ndarray:
    """Loop-based reference Canny sharing the documented conventions
    (nearest-edge padding, non-strict NMS, 8-connected hysteresis)."""
    blurred = ndimage.gaussian_filter(values.astype(np.float64), cfg.canny_blur_sigma, mode="nearest")
    kx = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
    gx = ndimage.convolve(blurred, kx, mode="nearest")
    gy = ndimage.convolve(blurred, kx.T, mode="nearest")
    h, w = values.shape
    mag = np.sqrt(gx**2 + gy**2)
    thinned = np.zeros_like(mag)
    for i in range(h):
        for j in range(w):
            angle = np.degrees(np.arctan2(gy[i, j], gx[i, j])) % 180.0
            if angle < 22.5 or angle >= 157.5:
                steps = ((0, -1), (0, 1))
            elif angle < 67.5:
                steps = ((-1, 1), (1, -1))
            elif angle < 112.5:
                steps = ((-1, 0), (1, 0))
            else:
                steps = ((-1, -1), (1, 1))
            ok = True
            for di, dj in steps:
                ni, nj = i + di, j + dj
                neighbor = mag[ni, nj] if 0 <= ni < h and 0 <= nj < w else 0.0
                if mag[i, j] < neighbor:
                    ok = False
            if ok:
                thinned[i, j] = mag[i, j]
    return hysteresis_oracle(thinned, cfg.canny_low, cfg.canny_high)


def edt_oracle(fg: np.ndarray) -> np.ndarray:
    """O(n^2) exact Euclidean distance transform."""
    h, w = fg.shape
    bg = np.argwhere(~fg)
    dist = np.zeros((h, w))
    if bg.size == 0:
        return np.full((h, w), np.inf)
    for i in range(h):
        for j in range(w):
            if fg[i, j]:
                d2 = (bg[:, 0] - i) ** 2 + (bg[:, 1] - j) ** 2
                dist[i, j] = np.sqrt(d2.min())
    return dist


def trimmed_mean_oracle(values: np.ndarray, frac: float) -> float:
    ordered = sorted(values.tolist())
    k = int(np.floor(frac * len(ordered)))
    core = ordered[k : len(ordered) - k] or ordered
    return sum(core) / len(core)


def stroke_oracle(values: np.ndarray) -> float | None:
    """Rule-complete stroke oracle on top of the brute-force transform."""
    gray = gray_from(values)
    fg = binarize_strokes(gray)
    if fg is None:
        return None
    dist = edt_oracle(fg)
    h, w = fg.shape
    samples = []
    for i in range(h):
        for j in range(w):
            if not fg[i, j]:
                continue
            neighbors = []
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if (di, dj) == (0, 0):
                        continue
                    ni, nj = i + di, j + dj
                    if 0 <= ni < h and 0 <= nj < w:
                        neighbors.append(dist[ni, nj])
                    else:
                        neighbors.append(0.0)
            if all(dist[i, j] >= n for n in neighbors):
                samples.append(dist[i, j])
    return 2.0 * float(np.median(samples)) / h


# ---------------------------------------------------------------------------
# palette_count
# ---------------------------------------------------------------------------

class TestPaletteCount:
    def test_solid_red(self, config):
        assert palette_count(solid_image(32, 32, (255, 0, 0)), config) == 1

    def test_black_and_white_halves(self, config):
        pixels = np.zeros((16, 16, 3), np.uint8)
        pixels[:, 8:] = 255
        assert palette_count(image_from_array(pixels), config) == 2

    def test_random_matches_histogram_oracle(self, config, rng):
        pixels = rng.integers(0, 256, size=(100, 100, 3), dtype=np.uint8)
        img = image_from_array(pixels)
        expected = palette_oracle(pixels, config.palette_snap_step, config.palette_coverage_fraction)
        assert palette_count(img, config) == expected

    def test_snap_cell_perturbation_invariant(self, config, rng):
        pixels = (rng.integers(0, 32, size=(20, 20, 3)) * 8).astype(np.uint8)
        base = palette_count(image_from_array(pixels), config)
        jitter = rng.integers(0, 8, size=pixels.shape)
        perturbed = np.minimum(pixels.astype(int) + jitter, 255)
        # Stay inside each snap cell (255 would spill into the 248 cell).
        perturbed = (perturbed // 8) * 8 + (perturbed % 8)
        perturbed = np.where(pixels == 248, np.minimum(perturbed, 255), perturbed)
        assert palette_count(image_from_array(perturbed.astype(np.uint8)), config) == base

    def test_tiny_specks_ignored(self, config):
        pixels = np.zeros((40, 40, 3), np.uint8)
        pixels[0, 0] = (255, 0, 0)  # single pixel under the 0.1% threshold of 1600 px? ceil = 2
        assert palette_count(image_from_array(pixels), config) == 1


# ---------------------------------------------------------------------------
# edge_density
# ---------------------------------------------------------------------------

class TestEdgeDensity:
    def test_constant_image_zero(self, config):
        assert edge_density(solid_image(64, 64, (128, 128, 128)), config) == 0.0

    def test_step_edge_roughly_one_column(self, config):
        pixels = np.zeros((512, 512, 3), np.uint8)
        pixels[:, 256:] = 255
        d = edge_density(image_from_array(pixels), config)
        count = d * 512 * 512
        assert 512 <= count <= 2 * 512

    def test_step_edge_matches_loop_oracle(self):
        cfg = AnalysisConfig(reference_width=64)
        pixels = np.zeros((64, 64, 3), np.uint8)
        pixels[:, 32:] = 255
        gray = to_grayscale(image_from_array(pixels))
        edges = canny_edges(gray, cfg)
        oracle = canny_oracle(gray.values, cfg)
        assert np.array_equal(edges, oracle)

    def test_random_small_matches_loop_oracle(self, rng):
        cfg = AnalysisConfig(reference_width=32)
        for _ in range(5):
            values = rng.integers(0, 256, size=(32, 32), dtype=np.uint8)
            edges = canny_edges(gray_from(values), cfg)
            assert np.array_equal(edges, canny_oracle(values, cfg))

    def test_checkerboard_busier_than_step(self, config):
        # 4 px cells: a 1 px checkerboard is wiped out by the sigma-1.4
        # pre-blur (Nyquist attenuation ~6e-5) and would detect no edges.
        step = np.zeros((512, 512, 3), np.uint8)
        step[:, 256:] = 255
        yy, xx = np.mgrid[0:512, 0:512]
        checker = (((yy // 4 + xx // 4) % 2) * 255).astype(np.uint8)
        checker = np.stack([checker] * 3, axis=-1)
        assert edge_density(image_from_array(checker), config) > edge_density(
            image_from_array(step), config
        )

    def test_internal_resize_idempotent(self, config):
        from ers.image_io import resize_to_reference

        pixels = np.zeros((256, 1024, 3), np.uint8)
        pixels[:, 500:] = 255
        img = image_from_array(pixels)
        assert edge_density(img, config) == edge_density(resize_to_reference(img, config), config)


# ---------------------------------------------------------------------------
# saliency_concentration
# ---------------------------------------------------------------------------

class TestSaliencyConcentration:
    def test_single_component(self, config):
        field = field_from(np.ones((8, 8)))
        member = np.zeros((8, 8), dtype=bool)
        member[2:5, 2:5] = True
        mask = mask_from(member, field)
        assert saliency_concentration(label_components(mask, field), mask) == pytest.approx(1.0)

    def test_two_equal_components(self, config):
        field = field_from(np.ones((10, 10)))
        member = np.zeros((10, 10), dtype=bool)
        member[0:2, 0:2] = True
        member[7:9, 7:9] = True
        mask = mask_from(member, field)
        assert saliency_concentration(label_components(mask, field), mask) == pytest.approx(0.5)

    def test_matches_flood_fill_oracle(self, config, rng):
        for _ in range(20):
            member = rng.random((24, 24)) < 0.3
            member[10, 10] = True
            field = field_from(rng.random((24, 24)))
            mask = mask_from(member, field)
            f = saliency_concentration(label_components(mask, field), mask)
            oracle_labels = flood_fill_labels(member)
            masses = [
                field.mass[oracle_labels == k].sum() for k in range(1, oracle_labels.max() + 1)
            ]
            assert f == pytest.approx(max(masses) / mask.captured_mass, abs=1e-12)


# ---------------------------------------------------------------------------
# fg_bg_contrast
# ---------------------------------------------------------------------------

class TestContrast:
    def test_white_blob_on_black(self, config):
        pixels = np.zeros((32, 32, 3), np.uint8)
        pixels[10:22, 10:22] = 255
        lab = to_lab(image_from_array(pixels))
        member = np.zeros((32, 32), dtype=bool)
        member[10:22, 10:22] = True
        field = field_from(np.ones((32, 32)))
        mask = mask_from(member, field)
        assert fg_bg_contrast(lab, mask, config) == pytest.approx(100.0, abs=0.1)

    def test_uniform_image_zero(self, config):
        lab = to_lab(solid_image(16, 16, (90, 90, 90)))
        member = np.zeros((16, 16), dtype=bool)
        member[4:8, 4:8] = True
        mask = mask_from(member, field_from(np.ones((16, 16))))
        assert fg_bg_contrast(lab, mask, config) == pytest.approx(0.0, abs=1e-9)

    def test_full_mask_degenerate_zero(self, config):
        lab = to_lab(solid_image(8, 8, (10, 200, 30)))
        member = np.ones((8, 8), dtype=bool)
        mask = mask_from(member, field_from(np.ones((8, 8))))
        assert fg_bg_contrast(lab, mask, config) == 0.0

    def test_trim_discards_outlier(self, config):
        # Foreground: 30 pixels of gray 10 plus one 200 outlier; 5% trim
        # (floor(0.05 * 31) = 1 per tail) drops the outlier.
        values = np.full((8, 8), 128, np.uint8)
        fg_vals = [10] * 30 + [200]
        member = np.zeros((8, 8), dtype=bool)
        flat = values.ravel()
        for idx, v in enumerate(fg_vals):
            flat[idx] = v
            member.ravel()[idx] = True
        lab = to_lab(image_from_array(np.stack([values] * 3, axis=-1)))
        mask = mask_from(member, field_from(np.ones((8, 8))))
        delta = fg_bg_contrast(lab, mask, config)
        fg_expect = trimmed_mean_oracle(lab.L[member], 0.05)
        bg_expect = trimmed_mean_oracle(lab.L[~member], 0.05)
        assert delta == pytest.approx(abs(fg_expect - bg_expect), abs=1e-12)

    def test_trimmed_mean_matches_oracle_random(self, config, rng):
        from ers.raw_metrics import _trimmed_mean

        for _ in range(100):
            values = rng.random(rng.integers(1, 50))
            assert _trimmed_mean(values, 0.05) == pytest.approx(
                trimmed_mean_oracle(values, 0.05), abs=1e-12
            )

    def test_symmetric_under_complement(self, config, rng):
        for _ in range(20):
            pixels = rng.integers(0, 256, size=(16, 16, 3), dtype=np.uint8)
            lab = to_lab(image_from_array(pixels))
            member = rng.random((16, 16)) < 0.5
            member[0, 0], member[15, 15] = True, False  # both regions nonempty
            field = field_from(np.ones((16, 16)))
            a = fg_bg_contrast(lab, mask_from(member, field), config)
            b = fg_bg_contrast(lab, mask_from(~member, field), config)
            assert a == pytest.approx(b, abs=1e-9)


# ---------------------------------------------------------------------------
# stroke_thickness
# ---------------------------------------------------------------------------

class TestStrokeThickness:
    def test_horizontal_bar_matches_rule_oracle(self, config):
        values = np.full((400, 20), 255, np.uint8)
        values[100:112, :] = 0
        t = stroke_thickness(gray_from(values), config)
        expected = stroke_oracle(values)
        assert t == pytest.approx(expected, abs=1e-9)
        # Ridge plateau of the 12 px bar sits at distance 6, so the
        # doubled median recovers the bar thickness.
        assert t == pytest.approx(12 / 400, abs=0.5 / 400)

    def test_all_white_absent(self, config):
        assert stroke_thickness(gray_from(np.full((20, 20), 255)), config) is None

    def test_all_black_absent_via_inversion(self, config):
        assert stroke_thickness(gray_from(np.zeros((20, 20))), config) is None

    def test_edt_matches_brute_force(self, config, rng):
        for _ in range(20):
            fg = rng.random((32, 32)) < 0.4
            fg[3, 3] = True
            dist, _ = stroke_samples(fg)
            assert np.max(np.abs(dist - edt_oracle(fg))) < 1e-6

    def test_random_images_match_rule_oracle(self, config, rng):
        for _ in range(5):
            values = rng.integers(0, 256, size=(24, 24), dtype=np.uint8)
            t = stroke_thickness(gray_from(values), config)
            expected = stroke_oracle(values)
            if expected is None:
                assert t is None
            else:
                assert t == pytest.approx(expected, abs=1e-9)

    def test_photometric_inversion_invariant(self, config, rng):
        for _ in range(10):
            values = np.full((64, 64), 255, np.uint8)
            # Minority dark strokes: a few random bars.
            for _bar in range(3):
                r = rng.integers(0, 56)
                values[r : r + rng.integers(2, 6), :] = 0
            t_dark = stroke_thickness(gray_from(values), config)
            t_inv = stroke_thickness(gray_from(255 - values), config)
            assert t_dark == pytest.approx(t_inv, abs=1e-12)


# ---------------------------------------------------------------------------
# centering_error
# ---------------------------------------------------------------------------

class TestCenteringError:
    def test_symmetric_mask_zero(self):
        member = np.zeros((16, 16), dtype=bool)
        member[6:10, 6:10] = True
        mask = mask_from(member, field_from(np.ones((16, 16))))
        assert centering_error(mask) == pytest.approx(0.0, abs=1e-9)

    def test_single_pixel_at_three_quarters(self):
        member = np.zeros((2, 2), dtype=bool)
        member[0, 1] = True  # center (0.75, 0.25): offsets 0.25 both axes
        mask = mask_from(member, field_from(np.ones((2, 2))))
        assert centering_error(mask) == pytest.approx(0.25, abs=1e-12)

    def test_matches_direct_summation_oracle(self, rng):
        for _ in range(20):
            member = rng.random((32, 32)) < 0.2
            member[4, 4] = True
            mask = mask_from(member, field_from(np.ones((32, 32))))
            rows, cols = np.nonzero(member)
            cx = sum((j + 0.5) / 32 for j in cols) / len(cols)
            cy = sum((i + 0.5) / 32 for i in rows) / len(rows)
            expected = max(abs(cx - 0.5), abs(cy - 0.5))
            assert centering_error(mask) == pytest.approx(expected, abs=1e-12)

    def test_mirror_invariance(self, rng):
        field = field_from(np.ones((20, 20)))
        for _ in range(20):
            member = rng.random((20, 20)) < 0.3
            member[10, 10] = True
            base = centering_error(mask_from(member, field))
            assert centering_error(mask_from(member[:, ::-1].copy(), field)) == pytest.approx(
                base, abs=1e-9
            )
            assert centering_error(mask_from(member[::-1, :].copy(), field)) == pytest.approx(
                base, abs=1e-9
            )


# ---------------------------------------------------------------------------
# compute_raw
# ---------------------------------------------------------------------------

class TestComputeRaw:
    def test_solid_white(self, config):
        raw = compute_raw(solid_image(512, 512), config)
        assert raw.palette_count == 1
        assert raw.edge_density == 0.0
        assert raw.saliency_fraction == pytest.approx(1.0)
        assert raw.contrast_delta == 0.0
        assert raw.stroke_rel is None
        assert raw.centering_error == pytest.approx(0.0, abs=1e-12)
        assert FLAG_UNIFORM_SALIENCY in raw.flags
        assert FLAG_EMPTY_FOREGROUND in raw.flags

    def test_centered_black_disk_on_white(self, config):
        yy, xx = np.mgrid[0:256, 0:256]
        disk = (yy - 128) ** 2 + (xx - 128) ** 2 <= 60**2
        pixels = np.full((256, 256, 3), 255, np.uint8)
        pixels[disk] = 0
        raw = compute_raw(image_from_array(pixels), config)
        # The top-mass mask captures arcs of the disk boundary ring, so
        # the largest component holds most but not all of the mass and
        # the centroid sits near (not exactly at) the center.
        assert raw.saliency_fraction > 0.5
        assert raw.centering_error < 0.1
        assert raw.contrast_delta > 30.0
        assert raw.flags == ()

    def test_invariants_on_random_inputs(self, config, rng):
        for _ in range(5):
            w = int(rng.integers(16, 128))
            h = int(rng.integers(16, 128))
            pixels = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
            raw = compute_raw(image_from_array(pixels), config)
            assert 0.0 <= raw.edge_density <= 1.0
            assert 0.0 < raw.saliency_fraction <= 1.0
            assert raw.contrast_delta >= 0.0
            assert 0.0 <= raw.centering_error <= 0.5
            assert (raw.stroke_rel is None) == (FLAG_EMPTY_FOREGROUND in raw.flags)
