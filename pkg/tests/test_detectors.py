import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from oracles import brute_hysteresis, brute_nms, random_gradient_field
from thermedge.denoise import DenoiserSpec
from thermedge.detectors import (
    CannyConfig,
    GradientField,
    baseline_detect,
    canny,
    hysteresis,
    log_kernel,
    non_max_suppression,
    quantize_direction,
    sobel_gradients,
)


def brute_quantize(angle):
    a = angle % 180.0
    best, label = None, None
    for lab in (0, 45, 90, 135, 180):
        d = abs(a - lab)
        # midpoints go to the larger label
        if best is None or d <= best:
            best, label = d, lab
    return 0 if label == 180 else label


def test_ramp_x_gradient():
    y, x = np.mgrid[:8, :8].astype(float)
    g = sobel_gradients(x)
    inner = (slice(1, -1), slice(1, -1))
    assert np.all(g.gx[inner] == 8) and np.all(g.gy[inner] == 0)
    assert np.all(g.magnitude[inner] == 8) and np.all(g.direction[inner] == 0)


def test_ramp_y_gradient_sign_follows_printed_kernel():
    y, x = np.mgrid[:8, :8].astype(float)
    g = sobel_gradients(y)
    inner = (slice(1, -1), slice(1, -1))
    assert np.all(g.gy[inner] == -8) and np.all(g.direction[inner] == 90)


def test_constant_frame_zero_field():
    g = sobel_gradients(np.full((5, 6), 4.0))
    assert not g.magnitude.any() and not g.direction.any() and not g.qdirection.any()


def test_small_frame_rejected():
    with pytest.raises(ValueError):
        sobel_gradients(np.zeros((2, 5)))


@pytest.mark.parametrize(
    "angle, label",
    [(90, 90), (20, 0), (170, 0), (22.5, 45), (67.5, 90), (112.5, 135), (157.5, 0), (-45, 135), (405, 45)],
)
def test_quantize_direction(angle, label):
    assert quantize_direction(angle) == label


@given(st.floats(-720, 720, allow_nan=False))
def test_quantize_matches_brute(angle):
    assert quantize_direction(angle) == brute_quantize(angle)


@given(hnp.arrays(np.float64, (6, 6), elements=st.floats(-50, 50)))
def test_magnitude_consistency(f):
    g = sobel_gradients(f)
    # equal up to the rounding of one square root
    assert np.allclose(g.magnitude**2, g.gx**2 + g.gy**2, rtol=1e-14, atol=0)
    assert np.all((g.direction >= 0) & (g.direction < 180))


def _field(mag, q):
    mag = np.asarray(mag, float)
    q = np.asarray(q)
    z = np.zeros_like(mag)
    return GradientField(z, z, mag, q.astype(float), q)


def test_nms_keeps_peak_and_suppresses_neighbour():
    out = non_max_suppression(_field([[3, 10, 4]], [[0, 0, 0]]))
    assert out.tolist() == [[0, 10, 0]]


def test_nms_plateau_keeps_exactly_one():
    out = non_max_suppression(_field([[0, 10, 10, 0]], [[0, 0, 0, 0]]))
    assert np.count_nonzero(out) == 1


@pytest.mark.parametrize("seed", range(20))
def test_nms_matches_brute_force(seed):
    g = random_gradient_field(seed)
    assert np.array_equal(non_max_suppression(g), brute_nms(g.magnitude, g.qdirection))


@pytest.mark.parametrize("seed", range(20))
def test_hysteresis_matches_bfs(seed):
    g = random_gradient_field(seed)
    thin = non_max_suppression(g)
    peak = thin.max()
    for lo, hi in ((0.05, 0.15), (0.3, 0.6), (0.0, 0.9)):
        assert np.array_equal(
            hysteresis(thin, lo * peak, hi * peak), brute_hysteresis(thin, lo * peak, hi * peak)
        )


def test_hysteresis_examples():
    thin = np.zeros((5, 5))
    thin[0, 0] = 0.9
    thin[2, 4] = 0.1  # isolated, between thresholds
    assert hysteresis(thin, 0.05, 0.15).tolist()[0][0]
    assert not hysteresis(thin, 0.05, 0.15)[2, 4]
    chain = np.zeros((4, 4))
    chain[0, 0], chain[1, 1], chain[2, 2] = 1.0, 0.1, 0.1
    assert hysteresis(chain, 0.05, 0.5).sum() == 3


@given(
    hnp.arrays(np.float64, (8, 8), elements=st.floats(0, 1)),
    st.floats(0, 0.5),
    st.floats(0, 0.5),
    st.floats(0, 0.2),
)
def test_hysteresis_monotone_in_thresholds(thin, low, gap, relax):
    high = low + gap
    tight = hysteresis(thin, low, high)
    loose = hysteresis(thin, max(0.0, low - relax), max(0.0, high - relax))
    assert not np.any(tight & ~loose)


@given(hnp.arrays(np.float64, (7, 9), elements=st.floats(-100, 100)))
def test_nms_never_exceeds_input(f):
    g = sobel_gradients(f)
    out = non_max_suppression(g)
    assert np.all(out <= g.magnitude) and not np.any(out[g.magnitude == 0])


def test_canny_vertical_step_single_line():
    f = np.zeros((64, 64))
    f[:, 32:] = 255
    m = canny(f)
    cols = np.nonzero(m)[1]
    assert np.all(np.abs(cols - 31.5) <= 1)
    assert np.all(m.sum(axis=1) == 1)


def test_canny_constant_and_deterministic():
    assert not canny(np.full((10, 10), 9.0)).any()
    rng = np.random.default_rng(0)
    f = rng.normal(100, 20, size=(30, 30))
    assert np.array_equal(canny(f), canny(f))


def test_canny_config_validation():
    with pytest.raises(ValueError):
        CannyConfig(low=0.3, high=0.2)
    with pytest.raises(ValueError):
        CannyConfig(high=1.5)


def test_canny_denoiser_is_applied():
    rng = np.random.default_rng(1)
    f = rng.normal(0, 1, size=(30, 30))
    raw = canny(f, CannyConfig(denoiser=DenoiserSpec()))
    smooth = canny(f, CannyConfig())
    assert not np.array_equal(raw, smooth)


@pytest.mark.parametrize("kind", ["prewitt", "roberts", "sobel", "log"])
def test_baselines_empty_on_constant(kind):
    assert not baseline_detect(np.full((12, 12), 5.0), kind).any()


def test_roberts_on_diagonal_step():
    y, x = np.mgrid[:10, :10]
    m = baseline_detect((x > y) * 100.0, "roberts")
    ys, xs = np.nonzero(m)
    assert len(ys) > 0 and np.all((xs - ys >= 0) & (xs - ys <= 1))


def test_log_on_vertical_step():
    f = np.zeros((20, 20))
    f[:, 10:] = 255
    cols = np.unique(np.nonzero(baseline_detect(f, "log"))[1])
    assert len(cols) and np.all(np.abs(cols - 9.5) <= 1.5)


def test_log_kernel_shape_and_zero_sum():
    k = log_kernel()
    assert k.shape == (9, 9) and abs(k.sum()) < 1e-12 and k[4, 4] < 0


def test_baseline_unknown_kind():
    with pytest.raises(ValueError):
        baseline_detect(np.zeros((5, 5)), "scharr")
