"""Reference kernels in numpy and plain Python.

Each function mirrors one in ``numba_kernels`` exactly; the numba versions are
tested against these.
"""
import numpy as np


def biquad_df2t(x, b0, b1, b2, a1, a2):
    # Sequential recursion; Python floats beat numpy scalar indexing here.
    out = [0.0] * len(x)
    z1 = 0.0
    z2 = 0.0
    for n, xn in enumerate(x.tolist()):
        yn = b0 * xn + z1
        z1 = b1 * xn - a1 * yn + z2
        z2 = b2 * xn - a2 * yn
        out[n] = yn
    return np.array(out, dtype=np.float64)


def resample_polyphase(x, table, up, down, n_out):
    """Apply a (phases, taps) polyphase table.

    Output sample ``n`` sits at input position ``n * down / up``; with
    ``base = n * down // up`` it reads ``x[base - taps//2 + 1 : base + taps//2 + 1]``
    (zeros outside the signal) weighted by ``table[n * down % up]``.
    """
    taps = table.shape[1]
    half = taps // 2
    n = np.arange(n_out, dtype=np.int64)
    num = n * down
    base = num // up
    phase = num % up
    padded = np.concatenate([np.zeros(half), x, np.zeros(taps)])
    # padded index of x[base - half + 1] is base + 1
    idx = (base + 1)[:, None] + np.arange(taps)[None, :]
    return np.einsum("ij,ij->i", padded[idx], table[phase])


def gate_gains(mags, floor, threshold, reduction_db, attack, release):
    """Per-bin gain track (linear) for a spectral gate.

    A bin is closed in a frame when its magnitude is below ``threshold * floor``.
    The gain in dB moves towards 0 (open) or ``reduction_db`` (closed) at most
    ``|reduction_db| / attack`` resp. ``/ release`` per frame; zero frames means
    an instant jump. The track starts at the first frame's target.
    """
    n_frames, n_bins = mags.shape
    gains = np.ones((n_frames, n_bins))
    if n_frames == 0:
        return gains
    depth = -reduction_db
    step_open = depth / attack if attack > 0 else np.inf
    step_close = depth / release if release > 0 else np.inf
    limit = threshold * floor
    cur = np.where(mags[0] < limit, reduction_db, 0.0)
    for f in range(n_frames):
        target = np.where(mags[f] < limit, reduction_db, 0.0)
        opening = target > cur
        cur = np.where(
            opening,
            np.minimum(target, cur + step_open),
            np.maximum(target, cur - step_close),
        )
        gains[f] = 10.0 ** (cur / 20.0)
    return gains


def edit_counts(ref, hyp):
    """Unit-cost word alignment; returns (substitutions, deletions, insertions, hits).

    Backtrace preference when several optimal moves exist: diagonal
    (hit or substitution), then deletion, then insertion.
    """
    n = len(ref)
    m = len(hyp)
    cost = np.empty((n + 1, m + 1), dtype=np.int64)
    cost[0] = np.arange(m + 1)
    cols = np.arange(m + 1)
    for i in range(1, n + 1):
        prev = cost[i - 1]
        row = np.empty(m + 1, dtype=np.int64)
        row[0] = i
        row[1:] = np.minimum(prev[1:] + 1, prev[:-1] + (hyp != ref[i - 1]))
        # insertions chain left to right: row[j] = min_k (row[k] + j - k)
        cost[i] = np.minimum.accumulate(row - cols) + cols
    subs = dels = ins = hits = 0
    i, j = n, m
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
