"""numba-compiled twins of ``numpy_kernels``."""
import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def biquad_df2t(x, b0, b1, b2, a1, a2):
    out = np.empty(x.shape[0])
    z1 = 0.0
    z2 = 0.0
    for n in range(x.shape[0]):
        xn = x[n]
        yn = b0 * xn + z1
        z1 = b1 * xn - a1 * yn + z2
        z2 = b2 * xn - a2 * yn
        out[n] = yn
    return out


@njit(cache=True, nogil=True)
def resample_polyphase(x, table, up, down, n_out):
    taps = table.shape[1]
    half = taps // 2
    n_in = x.shape[0]
    out = np.empty(n_out)
    for n in range(n_out):
        num = n * down
        base = num // up
        phase = num % up
        start = base - half + 1
        acc = 0.0
        for t in range(taps):
            k = start + t
            if 0 <= k < n_in:
                acc += x[k] * table[phase, t]
        out[n] = acc
    return out


@njit(cache=True, nogil=True)
def gate_gains(mags, floor, threshold, reduction_db, attack, release):
    n_frames, n_bins = mags.shape
    gains = np.ones((n_frames, n_bins))
    if n_frames == 0:
        return gains
    depth = -reduction_db
    step_open = depth / attack if attack > 0 else np.inf
    step_close = depth / release if release > 0 else np.inf
    for k in range(n_bins):
        limit = threshold * floor[k]
        cur = reduction_db if mags[0, k] < limit else 0.0
        for f in range(n_frames):
            target = reduction_db if mags[f, k] < limit else 0.0
            if target > cur:
                cur = min(target, cur + step_open)
            else:
                cur = max(target, cur - step_close)
            gains[f, k] = 10.0 ** (cur / 20.0)
    return gains


@njit(cache=True, nogil=True)
def edit_counts(ref, hyp):
    n = ref.shape[0]
    m = hyp.shape[0]
    cost = np.empty((n + 1, m + 1), dtype=np.int64)
    for j in range(m + 1):
        cost[0, j] = j
    for i in range(1, n + 1):
        cost[i, 0] = i
        for j in range(1, m + 1):
            diag = cost[i - 1, j - 1] + (0 if ref[i - 1] == hyp[j - 1] else 1)
            best = min(diag, cost[i - 1, j] + 1)
            cost[i, j] = min(best, cost[i, j - 1] + 1)
    subs = 0
    dels = 0
    ins = 0
    hits = 0
    i = n
    j = m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = ref[i - 1] == hyp[j - 1]
            if cost[i, j] == cost[i - 1, j - 1] + (0 if same else 1):
                if same:
                    hits += 1
                else:
                    subs += 1
                i -= 1
                j -= 1
                continue
        if i > 0 and cost[i, j] == cost[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return subs, dels, ins, hits
