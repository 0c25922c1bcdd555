"""Straight-from-the-definition FSIM reference used as an independent oracle.

Written separately from the package implementation: per-orientation and
per-scale processing is sequential with explicit accumulators, filters are
constructed on centered frequency grids and shifted at the end, and FFTs go
through scipy. Constants are the published FSIM/phase-congruency defaults:

  4 log-Gabor scales (wavelength 6, multiplier 2, sigmaOnf 0.55) x
  4 orientations (angular sigma pi/4/1.2), noise k = 2 with the 1.7
  empirical correction, epsilon 1e-4; Scharr kernels /16 for gradients;
  T1 = 0.85, T2 = 160 on luminance scaled to [0, 255]; pooling weighted by
  the pointwise maximum phase congruency.
"""

import math

import numpy as np
import scipy.fft


def _centered_frequencies(n):
    if n % 2 == 1:
        values = [(i - (n - 1) / 2) / (n - 1) for i in range(n)]
    else:
        values = [(i - n / 2) / n for i in range(n)]
    return np.array(values)


def _polar_grids(rows, cols):
    u = _centered_frequencies(cols)
    v = _centered_frequencies(rows)
    uu = np.tile(u, (rows, 1))
    vv = np.tile(v.reshape(-1, 1), (1, cols))
    radius = scipy.fft.ifftshift(np.hypot(uu, vv))
    angle = scipy.fft.ifftshift(np.arctan2(-vv, uu))
    radius[0, 0] = 1.0
    return radius, angle


def _radial_filter(radius, scale):
    wavelength = 6.0 * (2.0**scale)
    f0 = 1.0 / wavelength
    lowpass = 1.0 / (1.0 + (radius / 0.45) ** (2 * 15))
    gabor = np.exp(-(np.log(radius / f0) ** 2) / (2.0 * (math.log(0.55) ** 2)))
    gabor = gabor * lowpass
    gabor[0, 0] = 0.0
    return gabor


def _angular_filter(angle, orientation):
    phi = orientation * math.pi / 4.0
    sigma = (math.pi / 4.0) / 1.2
    d_sin = np.sin(angle) * math.cos(phi) - np.cos(angle) * math.sin(phi)
    d_cos = np.cos(angle) * math.cos(phi) + np.sin(angle) * math.sin(phi)
    delta = np.abs(np.arctan2(d_sin, d_cos))
    return np.exp(-(delta**2) / (2.0 * sigma**2))


def reference_phase_congruency(image):
    rows, cols = image.shape
    radius, angle = _polar_grids(rows, cols)
    spectrum = scipy.fft.fft2(image)

    energy_total = np.zeros((rows, cols))
    amplitude_total = np.zeros((rows, cols))
    for orientation in range(4):
        angular = _angular_filter(angle, orientation)

        even_parts, odd_parts, amplitudes = [], [], []
        spatial_filters = []
        smallest_scale_filter = None
        for scale in range(4):
            filt = _radial_filter(radius, scale) * angular
            if scale == 0:
                smallest_scale_filter = filt
            response = scipy.fft.ifft2(spectrum * filt)
            even_parts.append(response.real)
            odd_parts.append(response.imag)
            amplitudes.append(np.abs(response))
            spatial_filters.append(
                scipy.fft.ifft2(filt).real * math.sqrt(rows * cols)
            )

        amplitude_sum = amplitudes[0] + amplitudes[1] + amplitudes[2] + amplitudes[3]
        even_sum = even_parts[0] + even_parts[1] + even_parts[2] + even_parts[3]
        odd_sum = odd_parts[0] + odd_parts[1] + odd_parts[2] + odd_parts[3]
        norm = np.sqrt(even_sum**2 + odd_sum**2) + 1e-4
        unit_even = even_sum / norm
        unit_odd = odd_sum / norm

        energy = np.zeros((rows, cols))
        for scale in range(4):
            energy = energy + (
                even_parts[scale] * unit_even
                + odd_parts[scale] * unit_odd
                - np.abs(even_parts[scale] * unit_odd - odd_parts[scale] * unit_even)
            )

        median_sq = float(np.median(amplitudes[0] ** 2))
        filter_power = float(np.sum(smallest_scale_filter**2))
        noise_power = -(median_sq / math.log(0.5)) / filter_power

        self_power = 0.0
        cross_power = 0.0
        for i in range(4):
            self_power += float(np.sum(spatial_filters[i] ** 2))
            for j in range(i + 1, 4):
                cross_power += float(np.sum(spatial_filters[i] * spatial_filters[j]))
        noise_energy_sq = 2.0 * noise_power * self_power + 4.0 * noise_power * cross_power
        tau = math.sqrt(noise_energy_sq / 2.0)
        expected_noise = tau * math.sqrt(math.pi / 2.0)
        noise_sigma = math.sqrt((2.0 - math.pi / 2.0) * tau**2)
        threshold = (expected_noise + 2.0 * noise_sigma) / 1.7

        energy_total = energy_total + np.maximum(energy - threshold, 0.0)
        amplitude_total = amplitude_total + amplitude_sum

    return energy_total / (amplitude_total + 1e-4)


def reference_gradient(image):
    rows, cols = image.shape
    kernel_x = np.array([[3, 0, -3], [10, 0, -10], [3, 0, -3]], dtype=np.float64) / 16.0
    kernel_y = kernel_x.T
    gx = np.zeros((rows, cols))
    gy = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            ax = ay = 0.0
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < rows and 0 <= jj < cols:
                        ax += kernel_x[di + 1, dj + 1] * image[ii, jj]
                        ay += kernel_y[di + 1, dj + 1] * image[ii, jj]
            gx[i, j] = ax
            gy[i, j] = ay
    return np.sqrt(gx**2 + gy**2)


def reference_fsim(a, b):
    """FSIM of two unit-range C x H x W arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)

    def to_luma(img):
        if img.shape[0] == 3:
            return (0.299 * img[0] + 0.587 * img[1] + 0.114 * img[2]) * 255.0
        return img[0] * 255.0

    la, lb = to_luma(a), to_luma(b)
    factor = max(1, int(math.floor(min(la.shape) / 256.0 + 0.5)))
    if factor > 1:
        def reduce(img):
            h = (img.shape[0] // factor) * factor
            w = (img.shape[1] // factor) * factor
            out = np.zeros((h // factor, w // factor))
            for i in range(out.shape[0]):
                for j in range(out.shape[1]):
                    out[i, j] = img[
                        i * factor : (i + 1) * factor, j * factor : (j + 1) * factor
                    ].mean()
            return out

        la, lb = reduce(la), reduce(lb)

    pc1 = reference_phase_congruency(la)
    pc2 = reference_phase_congruency(lb)
    g1 = reference_gradient(la)
    g2 = reference_gradient(lb)

    sim_pc = (2.0 * pc1 * pc2 + 0.85) / (pc1**2 + pc2**2 + 0.85)
    sim_g = (2.0 * g1 * g2 + 160.0) / (g1**2 + g2**2 + 160.0)
    weights = np.maximum(pc1, pc2)
    return float(np.sum(sim_pc * sim_g * weights) / np.sum(weights))
