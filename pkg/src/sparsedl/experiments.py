"""Experiment harnesses behind the command line: each runs a protocol
and writes a CSV with a header row.

Every CSV written here round-trips through :func:`read_csv_table`.
Timings use ``time.perf_counter`` and are wall-clock.
"""

from __future__ import annotations

import csv
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .denoise import DenoiseConfig, add_gaussian_noise, denoise_image, psnr, quantize_pixels
from .dictionaries import overcomplete_dct_dictionary, random_dictionary
from .exceptions import ConfigError, FormatError
from .io import write_trace_csv
from .learner import LearnConfig, learn
from .patches import extract_patches

__all__ = [
    "REFERENCE_PSNR",
    "read_csv_table",
    "write_csv_table",
    "sample_patch_columns",
    "convergence_trace",
    "lambda_sweep",
    "denoise_table",
    "scaling_bench",
]

# Reference PSNRs (dB) for the 512x512 standard test images under this
# pipeline's settings (8x8 patches, 256 atoms).  Keyed by lower-case
# image stem and sigma; values are (noisy, dct_baseline, learned).
# denoise_table prints deltas against these when an input matches.
REFERENCE_PSNR = {
    ("couple", 5): (34.16, 37.25, 37.28),
    ("couple", 10): (28.11, 33.40, 33.50),
    ("couple", 20): (22.11, 29.71, 29.99),
    ("couple", 25): (20.17, 28.53, 28.92),
    ("couple", 30): (18.58, 27.53, 27.97),
    ("couple", 100): (8.13, 22.59, 22.71),
    ("barbara", 5): (34.15, 37.94, 38.04),
    ("barbara", 10): (28.14, 33.96, 34.37),
    ("barbara", 20): (22.13, 29.95, 30.79),
    ("barbara", 25): (20.17, 28.68, 29.64),
    ("barbara", 30): (18.59, 27.62, 28.63),
    ("barbara", 100): (8.11, 21.87, 21.97),
    ("boat", 5): (34.15, 37.09, 37.16),
    ("boat", 10): (28.13, 33.43, 33.60),
    ("boat", 20): (22.10, 29.92, 30.37),
    ("boat", 25): (20.17, 28.79, 29.30),
    ("boat", 30): (18.60, 27.93, 28.43),
    ("boat", 100): (8.13, 22.79, 22.96),
    ("hill", 5): (34.15, 37.02, 37.05),
    ("hill", 10): (28.14, 33.26, 33.44),
    ("hill", 20): (22.10, 29.85, 30.20),
    ("hill", 25): (20.18, 28.89, 29.31),
    ("hill", 30): (18.57, 28.14, 28.56),
    ("hill", 100): (8.16, 24.00, 24.03),
    ("lena", 5): (34.16, 38.52, 38.55),
    ("lena", 10): (28.12, 35.30, 35.47),
    ("lena", 20): (22.11, 32.02, 32.40),
    ("lena", 25): (20.18, 30.89, 31.32),
    ("lena", 30): (18.59, 29.98, 30.46),
    ("lena", 100): (8.14, 24.45, 24.63),
}


def write_csv_table(path, header, rows) -> None:
    """Write a CSV with one header row; all cells stringified."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow(list(row))


def read_csv_table(path):
    """Read a CSV written by this module: returns (header, rows) of strings."""
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty CSV") from None
        rows = []
        for row in reader:
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(
                    f"{path}: row {reader.line_num} has {len(row)} fields, header has {len(header)}"
                )
            rows.append(row)
    return header, rows


def sample_patch_columns(image: np.ndarray, patch_size: int, count: int, seed: int = 0) -> np.ndarray:
    """Raw (not mean-removed) patches from ``count`` random grid locations."""
    allp = extract_patches(image, patch_size, stride=1)
    N = allp.shape[1]
    if not 1 <= count <= N:
        raise ConfigError(f"patch count must lie in [1, {N}], got {count}")
    rng = np.random.default_rng(seed)
    return allp[:, rng.choice(N, size=count, replace=False)]


def _init_dictionary(kind: str, signal_dim: int, num_atoms: int, seed: int) -> np.ndarray:
    if kind == "dct":
        return overcomplete_dct_dictionary(signal_dim, num_atoms)
    if kind == "random":
        return random_dictionary(signal_dim, num_atoms, seed)
    raise ConfigError(f"unknown init {kind!r}; choose 'dct' or 'random'")


def convergence_trace(
    image: np.ndarray,
    out_csv,
    *,
    num_patches: int = 30000,
    num_atoms: int = 256,
    lam: float = 69.0,
    iterations: int = 30,
    seed: int = 0,
    init: str = "dct",
):
    """Learn on randomly sampled patches and write the per-iteration trace."""
    Y = sample_patch_columns(image, 8, num_patches, seed)
    D0 = _init_dictionary(init, Y.shape[0], num_atoms, seed)
    _, _, trace = learn(
        Y,
        LearnConfig(num_atoms=num_atoms, iterations=iterations, lam=lam, init_dictionary=D0, seed=seed),
    )
    write_trace_csv(out_csv, trace)
    return trace


def lambda_sweep(
    image: np.ndarray,
    out_csv,
    lambdas,
    *,
    num_patches: int = 30000,
    num_atoms: int = 256,
    iterations: int = 10,
    seed: int = 0,
    init: str = "dct",
):
    """Re-learn from the same start for each sparsity weight.

    Writes rows (lambda, nsre, sparsity_factor, seconds); returns them
    as a list of tuples.  Patches and initialization are shared across
    the grid so only lambda varies.
    """
    lambdas = [float(v) for v in lambdas]
    if not lambdas:
        raise ConfigError("lambda grid must be non-empty")
    Y = sample_patch_columns(image, 8, num_patches, seed)
    D0 = _init_dictionary(init, Y.shape[0], num_atoms, seed)
    rows = []
    for lam in lambdas:
        start = time.perf_counter()
        _, _, trace = learn(
            Y,
            LearnConfig(num_atoms=num_atoms, iterations=iterations, lam=lam, init_dictionary=D0, seed=seed),
        )
        seconds = time.perf_counter() - start
        rows.append((lam, float(trace.nsre[-1]), float(trace.sparsity_factor[-1]), seconds))
    write_csv_table(
        out_csv,
        ("lambda", "nsre", "sparsity_factor", "seconds"),
        [(format(a, ".17g"), format(b, ".17g"), format(c, ".17g"), format(d, ".6f")) for a, b, c, d in rows],
    )
    return rows


def denoise_table(
    clean_images,
    sigmas,
    out_csv,
    *,
    stride: int = 1,
    num_atoms: int = 256,
    iterations: int = 10,
    max_train_patches=None,
    error_gain: float = 1.15,
    seed: int = 0,
    read_image=None,
    log=print,
):
    """Noise/denoise grid over clean images and sigma values.

    ``clean_images`` holds PGM paths; each image is noised per sigma
    with a seed derived as ``seed*10000 + image_index*100 + sigma_index``
    and denoised twice (learned dictionary, then fixed-DCT baseline).
    Writes rows (image, sigma, noisy_psnr, odct_psnr, learned_psnr) and
    prints a delta line whenever (image stem, sigma) appears in
    REFERENCE_PSNR.
    """
    from .io import read_pgm

    reader = read_pgm if read_image is None else read_image
    sigmas = [float(s) for s in sigmas]
    paths = list(clean_images)
    if not paths or not sigmas:
        raise ConfigError("denoise_table needs at least one image and one sigma")
    rows = []
    for i, path in enumerate(paths):
        clean = np.asarray(reader(path), dtype=float)
        name = Path(path).stem
        for k, sigma in enumerate(sigmas):
            noise_seed = seed * 10000 + i * 100 + k
            noisy = add_gaussian_noise(clean, sigma, noise_seed)
            base = DenoiseConfig(
                sigma=sigma,
                num_atoms=num_atoms,
                iterations=iterations,
                stride=stride,
                max_train_patches=max_train_patches,
                error_gain=error_gain,
                seed=noise_seed,
            )
            learned_img, _ = denoise_image(noisy, base)
            dct_img, _ = denoise_image(noisy, replace(base, iterations=0))
            noisy_psnr = psnr(clean, quantize_pixels(noisy))
            learned_psnr = psnr(clean, quantize_pixels(learned_img))
            odct_psnr = psnr(clean, quantize_pixels(dct_img))
            rows.append((name, sigma, noisy_psnr, odct_psnr, learned_psnr))
            key = (name.lower(), int(sigma)) if sigma == int(sigma) else None
            ref = REFERENCE_PSNR.get(key) if key else None
            if ref is not None:
                log(
                    f"{name} sigma={sigma:g}: learned {learned_psnr:.2f} dB "
                    f"(reference {ref[2]:.2f}, delta {learned_psnr - ref[2]:+.2f}); "
                    f"dct {odct_psnr:.2f} dB (reference {ref[1]:.2f}, delta {odct_psnr - ref[1]:+.2f})"
                )
            else:
                log(
                    f"{name} sigma={sigma:g}: noisy {noisy_psnr:.2f} dB, "
                    f"dct {odct_psnr:.2f} dB, learned {learned_psnr:.2f} dB"
                )
    write_csv_table(
        out_csv,
        ("image", "sigma", "noisy_psnr", "odct_psnr", "learned_psnr"),
        [
            (name, format(s, "g"), format(a, ".4f"), format(b, ".4f"), format(c, ".4f"))
            for name, s, a, b, c in rows
        ],
    )
    return rows


def scaling_bench(
    image: np.ndarray,
    out_csv,
    sizes=(30000, 60000),
    *,
    num_atoms: int = 256,
    lam: float = 69.0,
    iterations: int = 3,
    seed: int = 0,
):
    """Per-iteration learning wall time as the signal count grows.

    One untimed warm-up iteration runs per size before the timed run.
    Writes rows (num_signals, seconds_per_iteration).
    """
    sizes = [int(s) for s in sizes]
    if not sizes or min(sizes) < 1:
        raise ConfigError("scaling_bench needs positive sizes")
    if iterations < 1:
        raise ConfigError("scaling_bench needs at least one timed iteration")
    rows = []
    for size in sizes:
        Y = sample_patch_columns(image, 8, size, seed)
        D0 = overcomplete_dct_dictionary(Y.shape[0], num_atoms)
        common = dict(num_atoms=num_atoms, lam=lam, init_dictionary=D0, seed=seed)
        learn(Y, LearnConfig(iterations=1, **common))  # warm-up, untimed
        start = time.perf_counter()
        learn(Y, LearnConfig(iterations=iterations, **common))
        per_iter = (time.perf_counter() - start) / iterations
        rows.append((size, per_iter))
    write_csv_table(
        out_csv,
        ("num_signals", "seconds_per_iteration"),
        [(str(s), format(t, ".6f")) for s, t in rows],
    )
    return rows
