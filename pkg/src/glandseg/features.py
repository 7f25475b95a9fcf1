"""Per-patch features: channel histograms, mean/std-filter 2-D histograms,
and the 14 Haralick texture statistics of gray-level co-occurrence matrices
(Haralick, Shanmugam & Dinstein, IEEE TSMC 1973).

Conventions pinned here and relied on by the tests:

- gray levels quantize as ``floor(v * levels / 256)`` for 8-bit ``v``;
- co-occurrences are counted symmetrically at distance 1 along
  0/45/90/135 degrees and each direction is normalized to sum 1;
- Haralick sums use 0-based level indices, base-2 logarithms with
  ``0 * log 0 := 0``, the sum-variance moment is taken about the sum
  average, and features are averaged over the valid directions;
- correlation and the maximal correlation coefficient are defined as 0
  whenever the needed variance/eigenstructure is degenerate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: (dy, dx) neighbor steps for 0, 45, 90 and 135 degrees.
DIRECTIONS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))

HARALICK_COUNT = 14


@dataclass(frozen=True)
class LevelConfig:
    """Per-level feature settings: window w, filter size m, bin counts."""

    w: int
    m: int
    bins1d: int = 32
    bins2d: int = 8
    glcm_levels: int = 8

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"window must be >= 1, got {self.w}")
        if self.m < 1 or self.m % 2 == 0:
            raise ValueError(f"filter window must be odd and >= 1, got {self.m}")
        for name in ("bins1d", "bins2d", "glcm_levels"):
            if getattr(self, name) < 2:
                raise ValueError(f"{name} must be >= 2, got {getattr(self, name)}")

    @property
    def feature_dim(self) -> int:
        return 3 * self.bins1d + 3 * self.bins2d**2 + 3 * HARALICK_COUNT


def channel_histogram(channel: np.ndarray, bins: int) -> np.ndarray:
    """Raw-count intensity histogram with bin ``floor(v * bins / 256)``."""
    ch = np.asarray(channel)
    if ch.size == 0:
        raise ValueError("empty input")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    idx = (ch.astype(np.int64) * bins) // 256
    return np.bincount(idx.ravel(), minlength=bins).astype(np.float64)


def mean_std_filter(channel: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Windowed mean and population std with replicate-padded borders.

    Runs on integer summed-area tables, so the window sums are exact and
    the result matches a naive per-window computation. ``m == 1`` returns
    the identity image and an all-zero std image.
    """
    ch = np.asarray(channel)
    if ch.size == 0:
        raise ValueError("empty input")
    if m < 1 or m % 2 == 0:
        raise ValueError(f"filter window must be odd and >= 1, got {m}")
    if m == 1:
        return ch.astype(np.float64), np.zeros(ch.shape, dtype=np.float64)
    pad = m // 2
    p = np.pad(ch.astype(np.int64), pad, mode="edge")
    area = float(m * m)

    def window_sums(values: np.ndarray) -> np.ndarray:
        s = np.zeros((values.shape[0] + 1, values.shape[1] + 1), dtype=np.int64)
        s[1:, 1:] = values.cumsum(axis=0).cumsum(axis=1)
        return s[m:, m:] - s[:-m, m:] - s[m:, :-m] + s[:-m, :-m]

    s1 = window_sums(p)
    s2 = window_sums(p * p)
    mean = s1 / area
    var = s2 / area - mean * mean
    return mean, np.sqrt(np.maximum(var, 0.0))


def mean_filter(channel: np.ndarray, m: int) -> np.ndarray:
    return mean_std_filter(channel, m)[0]


def std_filter(channel: np.ndarray, m: int) -> np.ndarray:
    return mean_std_filter(channel, m)[1]


def hist2d(mean_img: np.ndarray, std_img: np.ndarray, bins: int) -> np.ndarray:
    """Joint (mean, std) histogram, flattened row-major with mean-axis major.

    Mean bins cover [0, 256) uniformly; std bins cover [0, 128], which
    bounds the largest possible population std of 8-bit data (127.5).
    Values at or above the top edge clamp into the top bin.
    """
    mi = np.asarray(mean_img, dtype=np.float64)
    si = np.asarray(std_img, dtype=np.float64)
    if mi.shape != si.shape:
        raise ValueError(f"dimension mismatch: {mi.shape} vs {si.shape}")
    if mi.size == 0:
        raise ValueError("empty input")
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    mb = np.clip((mi * bins / 256.0).astype(np.int64), 0, bins - 1)
    sb = np.clip((si * bins / 128.0).astype(np.int64), 0, bins - 1)
    flat = mb * bins + sb
    return np.bincount(flat.ravel(), minlength=bins * bins).astype(np.float64)


def quantize_levels(channel: np.ndarray, levels: int) -> np.ndarray:
    """Quantize 8-bit values into ``levels`` gray levels."""
    return (np.asarray(channel).astype(np.int64) * levels) // 256


def glcm(channel: np.ndarray, levels: int, direction: tuple[int, int]) -> np.ndarray | None:
    """Normalized symmetric co-occurrence matrix for one (dy, dx) direction.

    Returns None when the patch has no pixel pair along the direction,
    in which case the direction is skipped when averaging features.
    """
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    q = quantize_levels(channel, levels)
    if q.ndim != 2 or q.size == 0:
        raise ValueError("expected a non-empty 2-D patch")
    dy, dx = direction
    h, w = q.shape
    rows_a = slice(0, h - dy) if dy >= 0 else slice(-dy, h)
    rows_b = slice(dy, h) if dy >= 0 else slice(0, h + dy)
    cols_a = slice(0, w - dx) if dx >= 0 else slice(-dx, w)
    cols_b = slice(dx, w) if dx >= 0 else slice(0, w + dx)
    a = q[rows_a, cols_a]
    b = q[rows_b, cols_b]
    if a.size == 0:
        return None
    counts = np.bincount((a.ravel() * levels + b.ravel()), minlength=levels * levels)
    sym = counts.reshape(levels, levels)
    sym = sym + sym.T
    return sym / sym.sum()


def glcm_all(channel: np.ndarray, levels: int) -> list[np.ndarray | None]:
    """Co-occurrence matrices for the four canonical directions."""
    return [glcm(channel, levels, d) for d in DIRECTIONS]


_PAIR_CACHE: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _pair_matrices(levels: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scatter matrices mapping flat p(i,j) onto p_{x+y}, p_{x-y}, and the
    inverse-difference weights."""
    cached = _PAIR_CACHE.get(levels)
    if cached is not None:
        return cached
    i = np.arange(levels)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    n2 = levels * levels
    plus = np.zeros((n2, 2 * levels - 1))
    plus[np.arange(n2), (ii + jj).ravel()] = 1.0
    minus = np.zeros((n2, levels))
    minus[np.arange(n2), np.abs(ii - jj).ravel()] = 1.0
    idm_w = (1.0 / (1.0 + (ii - jj) ** 2)).ravel()
    _PAIR_CACHE[levels] = (plus, minus, idm_w)
    return plus, minus, idm_w


def _neg_plogp(p: np.ndarray, axis: int) -> np.ndarray:
    safe = np.where(p > 0, p, 1.0)
    return -(p * np.log2(safe)).sum(axis=axis)


def _max_corr_coeff(p: np.ndarray, px: np.ndarray, py: np.ndarray) -> float:
    """sqrt of the second largest eigenvalue of Haralick's Q matrix."""
    valid = px > 0
    if int(valid.sum()) < 2:
        return 0.0
    sub = p[np.ix_(valid, valid)]
    a = sub / px[valid][:, None]
    b = sub / py[valid][None, :]
    q = a @ b.T
    ev = np.sort(np.linalg.eigvals(q).real)
    return float(np.sqrt(max(ev[-2], 0.0)))


def haralick14(glcms) -> np.ndarray:
    """The 14 Haralick features averaged over the valid directions.

    ``glcms`` is a sequence of normalized co-occurrence matrices with None
    entries for directions the patch was too small for. Raises if every
    direction is degenerate.
    """
    mats = [np.asarray(g, dtype=np.float64) for g in glcms if g is not None]
    if not mats:
        raise ValueError("degenerate patch: no valid co-occurrence direction")
    levels = mats[0].shape[0]
    plus_m, minus_m, idm_w = _pair_matrices(levels)
    i = np.arange(levels, dtype=np.float64)
    k_plus = np.arange(2 * levels - 1, dtype=np.float64)
    k_minus = np.arange(levels, dtype=np.float64)

    p = np.stack(mats)                      # (nd, G, G)
    flat = p.reshape(len(mats), -1)         # (nd, G*G)
    px = p.sum(axis=2)
    py = p.sum(axis=1)
    mu_x = px @ i
    mu_y = py @ i
    var_x = (((i[None, :] - mu_x[:, None]) ** 2) * px).sum(axis=1)
    var_y = (((i[None, :] - mu_y[:, None]) ** 2) * py).sum(axis=1)
    sigma_prod = np.sqrt(var_x) * np.sqrt(var_y)
    p_plus = flat @ plus_m
    p_minus = flat @ minus_m

    asm = (flat**2).sum(axis=1)
    contrast = p_minus @ (k_minus**2)
    sum_ij = flat @ np.outer(i, i).ravel()
    corr = np.where(sigma_prod > 0, (sum_ij - mu_x * mu_y) / np.where(sigma_prod > 0, sigma_prod, 1.0), 0.0)
    variance = var_x
    idm = flat @ idm_w
    sum_avg = p_plus @ k_plus
    sum_var = (((k_plus[None, :] - sum_avg[:, None]) ** 2) * p_plus).sum(axis=1)
    sum_ent = _neg_plogp(p_plus, axis=1)
    entropy = _neg_plogp(flat, axis=1)
    diff_mu = p_minus @ k_minus
    diff_var = (((k_minus[None, :] - diff_mu[:, None]) ** 2) * p_minus).sum(axis=1)
    diff_ent = _neg_plogp(p_minus, axis=1)

    hx = _neg_plogp(px, axis=1)
    hy = _neg_plogp(py, axis=1)
    marg = (px[:, :, None] * py[:, None, :]).reshape(len(mats), -1)
    safe_marg = np.where(marg > 0, marg, 1.0)
    hxy1 = -(flat * np.log2(safe_marg)).sum(axis=1)
    hxy2 = -(marg * np.log2(safe_marg)).sum(axis=1)
    denom = np.maximum(hx, hy)
    imc1 = np.where(denom > 0, (entropy - hxy1) / np.where(denom > 0, denom, 1.0), 0.0)
    imc2 = np.sqrt(np.maximum(0.0, 1.0 - np.exp(-2.0 * (hxy2 - entropy))))
    if (px > 0).all():
        # One batched eigensolve over the direction stack.
        a = p / px[:, :, None]
        b = p / py[:, None, :]
        q = a @ np.swapaxes(b, 1, 2)
        ev = np.sort(np.linalg.eigvals(q).real, axis=1)
        mcc = np.sqrt(np.maximum(ev[:, -2], 0.0))
    else:
        mcc = np.array([_max_corr_coeff(p[d], px[d], py[d]) for d in range(len(mats))])

    per_direction = np.column_stack(
        [
            asm, contrast, corr, variance, idm, sum_avg, sum_var,
            sum_ent, entropy, diff_var, diff_ent, imc1, imc2, mcc,
        ]
    )
    return per_direction.mean(axis=0)


def assemble_features(patch: np.ndarray, cfg: LevelConfig) -> np.ndarray:
    """Full per-patch descriptor in fixed channel-major segment order:

    [hist R | hist G | hist B | 2-D hist R | G | B | Haralick R | G | B]
    """
    arr = np.asarray(patch)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (w, w, 3) patch, got shape {arr.shape}")
    if arr.shape[0] != cfg.w or arr.shape[1] != cfg.w:
        raise ValueError(f"patch shape {arr.shape[:2]} does not match window {cfg.w}")
    hists, joint, texture = [], [], []
    for c in range(3):
        ch = arr[:, :, c]
        hists.append(channel_histogram(ch, cfg.bins1d))
        mean_img, std_img = mean_std_filter(ch, cfg.m)
        joint.append(hist2d(mean_img, std_img, cfg.bins2d))
        texture.append(haralick14(glcm_all(ch, cfg.glcm_levels)))
    return np.concatenate(hists + joint + texture)


def feature_names(cfg: LevelConfig) -> list[str]:
    """Column names matching :func:`assemble_features` order."""
    names = [f"hist_{c}_{i}" for c in "rgb" for i in range(cfg.bins1d)]
    names += [f"hist2d_{c}_{i}" for c in "rgb" for i in range(cfg.bins2d**2)]
    names += [f"haralick_{c}_{i}" for c in "rgb" for i in range(1, HARALICK_COUNT + 1)]
    return names
