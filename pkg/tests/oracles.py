"""Independent reference implementations used to validate the fast paths.

Everything here is written as direct summation / explicit loops from the
definitions, on purpose: these are the oracles the vectorized library code
is checked against, so they must not share its implementation.
"""

import math

import numpy as np


def naive_mean_filter(patch, m):
    """Windowed mean with replicate borders, computed per window."""
    h, w = patch.shape
    r = m // 2
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            acc = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    acc += float(patch[yy, xx])
            out[y, x] = acc / (m * m)
    return out


def naive_std_filter(patch, m):
    """Windowed population std with replicate borders, two-pass per window."""
    h, w = patch.shape
    r = m // 2
    out = np.empty((h, w))
    for y in range(h):
        for x in range(w):
            vals = []
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    vals.append(float(patch[yy, xx]))
            mean = sum(vals) / len(vals)
            out[y, x] = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
    return out


def brute_force_glcm(patch, levels, direction):
    """Symmetric co-occurrence counts by enumerating every pixel pair."""
    h, w = patch.shape
    dy, dx = direction
    counts = [[0] * levels for _ in range(levels)]
    pairs = 0
    for y in range(h):
        for x in range(w):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                a = (int(patch[y, x]) * levels) // 256
                b = (int(patch[yy, xx]) * levels) // 256
                counts[a][b] += 1
                counts[b][a] += 1
                pairs += 1
    if pairs == 0:
        return None
    total = float(2 * pairs)
    return [[c / total for c in row] for row in counts]


def haralick_reference(patch, levels):
    """The 14 features by direct summation from each direction's GLCM.

    Same pinned conventions as the library (0-based indices, log2 with
    0 log 0 = 0, sum-variance about the sum average, degenerate
    correlation/MCC = 0), but computed with plain loops.
    """
    per_direction = []
    for direction in ((0, 1), (-1, 1), (-1, 0), (-1, -1)):
        p = brute_force_glcm(patch, levels, direction)
        if p is None:
            continue
        per_direction.append(_haralick_from_matrix(p, levels))
    if not per_direction:
        raise ValueError("degenerate patch")
    return [sum(col) / len(per_direction) for col in zip(*per_direction)]


def _log2(v):
    return math.log(v, 2.0)


def _haralick_from_matrix(p, g):
    px = [sum(p[i][j] for j in range(g)) for i in range(g)]
    py = [sum(p[i][j] for i in range(g)) for j in range(g)]
    mu_x = sum(i * px[i] for i in range(g))
    mu_y = sum(j * py[j] for j in range(g))
    var_x = sum((i - mu_x) ** 2 * px[i] for i in range(g))
    var_y = sum((j - mu_y) ** 2 * py[j] for j in range(g))

    p_plus = [0.0] * (2 * g - 1)
    p_minus = [0.0] * g
    for i in range(g):
        for j in range(g):
            p_plus[i + j] += p[i][j]
            p_minus[abs(i - j)] += p[i][j]

    f1 = sum(p[i][j] ** 2 for i in range(g) for j in range(g))
    f2 = sum(n * n * p_minus[n] for n in range(g))
    sigma = math.sqrt(var_x) * math.sqrt(var_y)
    if sigma > 0:
        f3 = (sum(i * j * p[i][j] for i in range(g) for j in range(g)) - mu_x * mu_y) / sigma
    else:
        f3 = 0.0
    f4 = sum((i - mu_x) ** 2 * p[i][j] for i in range(g) for j in range(g))
    f5 = sum(p[i][j] / (1.0 + (i - j) ** 2) for i in range(g) for j in range(g))
    f6 = sum(k * p_plus[k] for k in range(2 * g - 1))
    f7 = sum((k - f6) ** 2 * p_plus[k] for k in range(2 * g - 1))
    f8 = -sum(v * _log2(v) for v in p_plus if v > 0)
    f9 = -sum(p[i][j] * _log2(p[i][j]) for i in range(g) for j in range(g) if p[i][j] > 0)
    d_mu = sum(k * p_minus[k] for k in range(g))
    f10 = sum((k - d_mu) ** 2 * p_minus[k] for k in range(g))
    f11 = -sum(v * _log2(v) for v in p_minus if v > 0)

    hx = -sum(v * _log2(v) for v in px if v > 0)
    hy = -sum(v * _log2(v) for v in py if v > 0)
    hxy1 = -sum(
        p[i][j] * _log2(px[i] * py[j])
        for i in range(g)
        for j in range(g)
        if p[i][j] > 0 and px[i] * py[j] > 0
    )
    hxy2 = -sum(
        px[i] * py[j] * _log2(px[i] * py[j])
        for i in range(g)
        for j in range(g)
        if px[i] * py[j] > 0
    )
    denom = max(hx, hy)
    f12 = (f9 - hxy1) / denom if denom > 0 else 0.0
    f13 = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - f9))))

    valid = [i for i in range(g) if px[i] > 0]
    if len(valid) < 2:
        f14 = 0.0
    else:
        q = [
            [
                sum(
                    p[i][k] * p[j][k] / (px[i] * py[k])
                    for k in valid
                )
                for j in valid
            ]
            for i in valid
        ]
        ev = sorted(np.linalg.eigvals(np.array(q)).real)
        f14 = math.sqrt(max(ev[-2], 0.0))

    return [f1, f2, f3, f4, f5, f6, f7, f8, f9, f10, f11, f12, f13, f14]


def exhaustive_knn(train_x, train_y, query, k):
    """Scan every training sample; sort by (distance, index); majority vote
    with count ties resolved by the nearest tied label."""
    dists = []
    for i, row in enumerate(train_x):
        d = math.sqrt(sum((float(a) - float(b)) ** 2 for a, b in zip(row, query)))
        dists.append((d, i))
    dists.sort()
    nearest = [train_y[i] for _, i in dists[: min(k, len(dists))]]
    tally = {}
    for lbl in nearest:
        tally[lbl] = tally.get(lbl, 0) + 1
    top = max(tally.values())
    for lbl in nearest:
        if tally[lbl] == top:
            return lbl
    raise AssertionError("unreachable")


def reference_canny(mask, sigma=1.4, low_fraction=0.1, high_fraction=0.3):
    """Step-by-step Canny trace mirroring the pinned algorithm.

    Explicit separable Gaussian (radius int(4*sigma + 0.5)) and Sobel
    correlations with replicate borders, sector NMS with the plateau
    epsilon, fraction-of-max double threshold, BFS hysteresis.
    """
    h, w = mask.shape
    img = [[255.0 if mask[y][x] else 0.0 for x in range(w)] for y in range(h)]

    radius = int(4.0 * sigma + 0.5)
    kernel = [math.exp(-0.5 * (i / sigma) ** 2) for i in range(-radius, radius + 1)]
    ksum = sum(kernel)
    kernel = [v / ksum for v in kernel]

    def clamp(v, lo, hi):
        return min(max(v, lo), hi)

    def convolve_rows(src):
        out = [[0.0] * w for _ in range(h)]
        for y in range(h):
            for x in range(w):
                out[y][x] = sum(
                    kernel[i + radius] * src[clamp(y + i, 0, h - 1)][x]
                    for i in range(-radius, radius + 1)
                )
        return out

    def convolve_cols(src):
        out = [[0.0] * w for _ in range(h)]
        for y in range(h):
            for x in range(w):
                out[y][x] = sum(
                    kernel[i + radius] * src[y][clamp(x + i, 0, w - 1)]
                    for i in range(-radius, radius + 1)
                )
        return out

    smooth = convolve_cols(convolve_rows(img))

    gx = [[0.0] * w for _ in range(h)]
    gy = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            acc_x = acc_y = 0.0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    v = smooth[clamp(y + dy, 0, h - 1)][clamp(x + dx, 0, w - 1)]
                    # sobel = derivative [-1,0,1] on one axis, smoothing
                    # [1,2,1] on the other, as plain correlations
                    acc_x += v * dx * (2 - abs(dy))
                    acc_y += v * dy * (2 - abs(dx))
            gx[y][x] = acc_x
            gy[y][x] = acc_y

    mag = [[math.hypot(gx[y][x], gy[y][x]) for x in range(w)] for y in range(h)]
    peak = max(max(row) for row in mag)
    if peak == 0.0:
        return np.zeros((h, w), dtype=np.uint8)
    eps = 1e-9 * peak

    def mag_at(y, x):
        if 0 <= y < h and 0 <= x < w:
            return mag[y][x]
        return 0.0

    nms = [[0.0] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            angle = math.degrees(math.atan2(gy[y][x], gx[y][x])) % 180.0
            if angle < 22.5 or angle >= 157.5:
                n1, n2 = mag_at(y, x + 1), mag_at(y, x - 1)
            elif angle < 67.5:
                n1, n2 = mag_at(y + 1, x + 1), mag_at(y - 1, x - 1)
            elif angle < 112.5:
                n1, n2 = mag_at(y + 1, x), mag_at(y - 1, x)
            else:
                n1, n2 = mag_at(y + 1, x - 1), mag_at(y - 1, x + 1)
            if mag[y][x] >= n1 - eps and mag[y][x] >= n2 - eps and mag[y][x] > eps:
                nms[y][x] = mag[y][x]

    high = high_fraction * peak
    low = low_fraction * peak
    strong = [(y, x) for y in range(h) for x in range(w) if nms[y][x] >= high]
    candidate = {(y, x) for y in range(h) for x in range(w) if nms[y][x] >= low}
    edges = set()
    queue = [p for p in strong]
    while queue:
        y, x = queue.pop()
        if (y, x) in edges:
            continue
        edges.add((y, x))
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                q = (y + dy, x + dx)
                if q in candidate and q not in edges:
                    queue.append(q)
    out = np.zeros((h, w), dtype=np.uint8)
    for y, x in edges:
        out[y, x] = 1
    return out


def octagon_pixels(radius):
    """Octagon membership by predicate enumeration."""
    pts = set()
    for y in range(-radius, radius + 1):
        for x in range(-radius, radius + 1):
            if max(abs(x), abs(y)) <= radius and abs(x) + abs(y) <= (4 * radius) // 3:
                pts.add((y, x))
    return pts


def naive_dilate(mask, offsets):
    """Set dilation by shifting every white pixel over the offsets."""
    h, w = mask.shape
    out = np.zeros_like(mask)
    ys, xs = np.nonzero(mask)
    for y, x in zip(ys, xs):
        for dy, dx in offsets:
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                out[yy, xx] = 1
    return out
