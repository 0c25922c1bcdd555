"""Full-reference image quality metrics on unit-range C x H x W arrays.

PSNR: 10 * log10(1 / MSE) over all channels and pixels (peak 1).

SSIM: 11 x 11 Gaussian window, sigma 1.5, K1 = 0.01, K2 = 0.03, L = 1,
computed per channel over valid window positions and averaged.

FSIM: phase congruency (log-Gabor bank, 4 scales starting at wavelength 6
with multiplier 2, sigmaOnf 0.55; 4 orientations with angular spread
sigma pi/4/1.2; noise threshold k = 2 with the empirical 1.7 correction)
and gradient magnitude (Scharr [[3,0,-3],[10,0,-10],[3,0,-3]]/16 kernels,
same-size zero-padded correlation) on BT.601 luminance scaled to [0, 255].
The similarity map S_PC * S_G (T1 = 0.85, T2 = 160) is pooled weighted by
the pointwise maximum phase congruency. Inputs whose smaller side exceeds
384 are first reduced by block-averaging with factor round(min(H,W)/256).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import correlate1d

LUMA_WEIGHTS = (0.299, 0.587, 0.114)  # BT.601

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03

FSIM_SCALES = 4
FSIM_ORIENTATIONS = 4
FSIM_MIN_WAVELENGTH = 6
FSIM_MULT = 2.0
FSIM_SIGMA_ONF = 0.55
FSIM_DTHETA_ON_SIGMA = 1.2
FSIM_NOISE_K = 2.0
FSIM_EPSILON = 1e-4
FSIM_T1 = 0.85
FSIM_T2 = 160.0
SCHARR_X = np.array([[3, 0, -3], [10, 0, -10], [3, 0, -3]], dtype=np.float64) / 16.0


class MetricError(Exception):
    pass


def _validate_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise MetricError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim != 3:
        raise MetricError(f"expected C x H x W arrays, got shape {a.shape}")
    for name, arr in (("first", a), ("second", b)):
        if arr.min() < -1e-6 or arr.max() > 1.0 + 1e-6:
            raise MetricError(f"{name} image outside the unit range")
    return a, b


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    a, b = _validate_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    xs = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(xs**2) / (2.0 * sigma**2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, window: np.ndarray) -> np.ndarray:
    half = len(window) // 2
    out = correlate1d(img, window, axis=0, mode="constant")
    out = correlate1d(out, window, axis=1, mode="constant")
    return out[half:-half, half:-half]


def ssim(a, b) -> float:
    """Mean structural similarity; 1.0 for identical images."""
    a, b = _validate_pair(a, b)
    _, h, w = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise MetricError(f"image {h}x{w} smaller than the {SSIM_WINDOW}px SSIM window")
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    scores = []
    for ch in range(a.shape[0]):
        x, y = a[ch], b[ch]
        mu_x = _filter_valid(x, window)
        mu_y = _filter_valid(y, window)
        sigma_x = _filter_valid(x * x, window) - mu_x**2
        sigma_y = _filter_valid(y * y, window) - mu_y**2
        sigma_xy = _filter_valid(x * y, window) - mu_x * mu_y
        num = (2 * mu_x * mu_y + c1) * (2 * sigma_xy + c2)
        den = (mu_x**2 + mu_y**2 + c1) * (sigma_x + sigma_y + c2)
        scores.append(float(np.mean(num / den)))
    return float(np.mean(scores))


def luminance(img: np.ndarray) -> np.ndarray:
    if img.shape[0] == 3:
        r, g, b = LUMA_WEIGHTS
        return r * img[0] + g * img[1] + b * img[2]
    if img.shape[0] == 1:
        return img[0]
    raise MetricError(f"luminance undefined for {img.shape[0]} channels")


def _block_reduce(img: np.ndarray, factor: int) -> np.ndarray:
    h, w = img.shape
    h2, w2 = (h // factor) * factor, (w // factor) * factor
    trimmed = img[:h2, :w2]
    return trimmed.reshape(h2 // factor, factor, w2 // factor, factor).mean(axis=(1, 3))


def _log_gabor_bank(rows: int, cols: int):
    """Frequency-domain filters: radial per scale, angular spread per orientation."""

    def freq_range(n):
        if n % 2:
            return np.arange(-(n - 1) / 2, (n - 1) / 2 + 1) / (n - 1)
        return np.arange(-n / 2, n / 2) / n

    fx = freq_range(cols)[None, :]
    fy = freq_range(rows)[:, None]
    radius = np.fft.ifftshift(np.sqrt(fx**2 + fy**2))
    theta = np.fft.ifftshift(np.arctan2(-fy, fx) * np.ones((rows, cols)))
    radius[0, 0] = 1.0

    lowpass = 1.0 / (1.0 + (radius / 0.45) ** 30)
    log_gabor = []
    for s in range(FSIM_SCALES):
        f0 = 1.0 / (FSIM_MIN_WAVELENGTH * FSIM_MULT**s)
        lg = np.exp(-(np.log(radius / f0) ** 2) / (2.0 * math.log(FSIM_SIGMA_ONF) ** 2))
        lg = lg * lowpass
        lg[0, 0] = 0.0
        log_gabor.append(lg)

    theta_sigma = math.pi / FSIM_ORIENTATIONS / FSIM_DTHETA_ON_SIGMA
    spreads = []
    for o in range(FSIM_ORIENTATIONS):
        angle = o * math.pi / FSIM_ORIENTATIONS
        ds = np.sin(theta) * math.cos(angle) - np.cos(theta) * math.sin(angle)
        dc = np.cos(theta) * math.cos(angle) + np.sin(theta) * math.sin(angle)
        dtheta = np.abs(np.arctan2(ds, dc))
        spreads.append(np.exp(-(dtheta**2) / (2.0 * theta_sigma**2)))
    return log_gabor, spreads


def phase_congruency(img: np.ndarray) -> np.ndarray:
    """Pointwise phase congruency of a 2D image, in [0, 1]."""
    rows, cols = img.shape
    log_gabor, spreads = _log_gabor_bank(rows, cols)
    image_fft = np.fft.fft2(img)
    scale_area = math.sqrt(rows * cols)

    total_energy = np.zeros((rows, cols))
    total_an = np.zeros((rows, cols))
    for spread in spreads:
        eo = []
        ifft_filters = []
        for lg in log_gabor:
            filt = lg * spread
            eo.append(np.fft.ifft2(image_fft * filt))
            ifft_filters.append(np.real(np.fft.ifft2(filt)) * scale_area)
        e = np.stack([c.real for c in eo])
        o = np.stack([c.imag for c in eo])
        an = np.sqrt(e**2 + o**2)

        sum_an = an.sum(axis=0)
        sum_e = e.sum(axis=0)
        sum_o = o.sum(axis=0)
        x_energy = np.sqrt(sum_e**2 + sum_o**2) + FSIM_EPSILON
        mean_e = sum_e / x_energy
        mean_o = sum_o / x_energy
        energy = (e * mean_e + o * mean_o - np.abs(e * mean_o - o * mean_e)).sum(axis=0)

        # noise threshold estimated from the smallest-scale response
        median_e2n = float(np.median(an[0] ** 2))
        em_n = float(((log_gabor[0] * spread) ** 2).sum())
        noise_power = -(median_e2n / math.log(0.5)) / em_n
        filters = np.stack(ifft_filters)
        sum_est_an2 = float((filters**2).sum())
        est_sum_aiaj = 0.0
        for si in range(FSIM_SCALES - 1):
            for sj in range(si + 1, FSIM_SCALES):
                est_sum_aiaj += float((filters[si] * filters[sj]).sum())
        est_noise_energy2 = 2.0 * noise_power * sum_est_an2 + 4.0 * noise_power * est_sum_aiaj
        tau = math.sqrt(est_noise_energy2 / 2.0)
        est_noise_energy = tau * math.sqrt(math.pi / 2.0)
        est_noise_sigma = math.sqrt((2.0 - math.pi / 2.0) * tau**2)
        threshold = (est_noise_energy + FSIM_NOISE_K * est_noise_sigma) / 1.7

        total_energy += np.maximum(energy - threshold, 0.0)
        total_an += sum_an
    return total_energy / (total_an + FSIM_EPSILON)


def gradient_magnitude(img: np.ndarray) -> np.ndarray:
    """Scharr gradient magnitude, same-size zero-padded correlation."""
    padded = np.pad(img, 1, mode="constant")
    gx = np.zeros_like(img)
    gy = np.zeros_like(img)
    for di in range(3):
        for dj in range(3):
            window = padded[di : di + img.shape[0], dj : dj + img.shape[1]]
            gx += SCHARR_X[di, dj] * window
            gy += SCHARR_X[dj, di] * window
    return np.sqrt(gx**2 + gy**2)


def fsim(a, b) -> float:
    """Feature similarity on luminance; 1.0 for identical images."""
    a, b = _validate_pair(a, b)
    la = luminance(a) * 255.0
    lb = luminance(b) * 255.0
    factor = max(1, int(math.floor(min(la.shape) / 256.0 + 0.5)))
    if factor > 1:
        la = _block_reduce(la, factor)
        lb = _block_reduce(lb, factor)
    pc1 = phase_congruency(la)
    pc2 = phase_congruency(lb)
    g1 = gradient_magnitude(la)
    g2 = gradient_magnitude(lb)
    s_pc = (2.0 * pc1 * pc2 + FSIM_T1) / (pc1**2 + pc2**2 + FSIM_T1)
    s_g = (2.0 * g1 * g2 + FSIM_T2) / (g1**2 + g2**2 + FSIM_T2)
    pc_max = np.maximum(pc1, pc2)
    weight_sum = float(pc_max.sum())
    if weight_sum == 0.0:
        if np.array_equal(a, b):
            return 1.0
        raise MetricError("degenerate inputs: zero phase congruency everywhere")
    return float((s_pc * s_g * pc_max).sum() / weight_sum)
