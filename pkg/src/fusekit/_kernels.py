"""Hot numeric kernels: batch vote fusion and synthetic-ensemble generation.

Each kernel has a numba @njit implementation and a vectorized pure-numpy
fallback selected through ``fusekit._backend`` (env var FUSEKIT_BACKEND).
The two are kept bit-for-bit identical: same splitmix64 hash constants, same
accumulation order for every float sum, no fastmath.  Tests and the
benchmark assert equality of whole output arrays.

Counter layout for random draws: every uniform is u01(mix(seed, tag, n, i, j))
where n is the image index, i the classifier index, j the class index, and
tag one of the TAG_* constants below.  Unused counters are 0.
"""

from __future__ import annotations

import numpy as np

from ._backend import HAS_NUMBA, resolve_backend
from .rng import GOLDEN, U01_SCALE, mix, u01

TAG_TRUTH = 1      # per-image ground-truth class draw
TAG_SHARED_U = 2   # per-image shared correctness uniform
TAG_SHARED_W = 3   # per-image shared wrong-class draw
TAG_COPY = 4       # per-classifier coin: copy shared latent vs independent
TAG_IND_U = 5      # per-classifier independent correctness uniform
TAG_IND_W = 6      # per-classifier independent wrong-class draw
TAG_ROW = 7        # per-entry raw confidence mass


# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------

def _fuse_rows_np(probs: np.ndarray, weights: np.ndarray):
    m, n, k = probs.shape
    top = probs.argmax(axis=2)
    conf = np.take_along_axis(probs, top[..., None], axis=2)[..., 0]
    class_sums = np.zeros((n, k), dtype=np.float64)
    rows = np.arange(n)
    # classifier-ascending accumulation order, matching the njit loop exactly
    for i in range(m):
        class_sums[rows, top[i]] += weights[i] * conf[i]
    total = class_sums[:, 0].copy()
    for j in range(1, k):
        total += class_sums[:, j]
    degenerate = total == 0.0
    final = class_sums.argmax(axis=1).astype(np.int64)
    final[degenerate] = 0
    fused = np.full((n, k), 1.0 / k, dtype=np.float64)
    np.divide(class_sums, total[:, None], out=fused, where=~degenerate[:, None])
    return class_sums, final, fused, degenerate


def _synth_rows_np(seed, accuracies, n_images, correlation, concentration,
                   class_probs):
    m = accuracies.shape[0]
    k = class_probs.shape[0]
    n_idx = np.arange(n_images, dtype=np.uint64)
    i_idx = np.arange(m, dtype=np.uint64)

    cum = np.empty(k, dtype=np.float64)
    acc = 0.0
    for j in range(k):
        acc += class_probs[j]
        cum[j] = acc

    u_truth = u01(mix(seed, TAG_TRUTH, n_idx, 0, 0))
    below = u_truth[:, None] < cum[None, :]
    truth = np.where(below.any(axis=1), below.argmax(axis=1), k - 1)
    truth = truth.astype(np.int64)

    shared_u = u01(mix(seed, TAG_SHARED_U, n_idx, 0, 0))
    shared_w = (u01(mix(seed, TAG_SHARED_W, n_idx, 0, 0)) * (k - 1)).astype(np.int64)
    np.minimum(shared_w, k - 2, out=shared_w)

    n2 = n_idx[None, :]
    i2 = i_idx[:, None]
    coin = u01(mix(seed, TAG_COPY, n2, i2, 0))
    ind_u = u01(mix(seed, TAG_IND_U, n2, i2, 0))
    ind_w = (u01(mix(seed, TAG_IND_W, n2, i2, 0)) * (k - 1)).astype(np.int64)
    np.minimum(ind_w, k - 2, out=ind_w)

    use_shared = coin < correlation
    acc_col = accuracies[:, None]
    correct = np.where(use_shared, shared_u[None, :] < acc_col, ind_u < acc_col)
    wrong = np.where(use_shared, shared_w[None, :], ind_w)
    wrong_class = wrong + (wrong >= truth[None, :])
    top = np.where(correct, truth[None, :], wrong_class)

    j_idx = np.arange(k, dtype=np.uint64)
    raw = u01(mix(seed, TAG_ROW, n_idx[None, :, None], i_idx[:, None, None],
                  j_idx[None, None, :]))
    is_top = j_idx[None, None, :] == top[:, :, None].astype(np.uint64)
    raw = np.where(is_top, raw * concentration, raw)

    total = raw[..., 0].copy()
    for j in range(1, k):
        total += raw[..., j]
    zero = total <= 0.0
    probs = np.full((m, n_images, k), 1.0 / k, dtype=np.float64)
    np.divide(raw, total[..., None], out=probs, where=~zero[..., None])

    # swap the row maximum into the chosen top slot so argmax equals top
    am = probs.argmax(axis=2)
    top_ix = top[..., None]
    am_ix = am[..., None]
    v_top = np.take_along_axis(probs, top_ix, axis=2)
    v_am = np.take_along_axis(probs, am_ix, axis=2)
    np.put_along_axis(probs, am_ix, v_top, axis=2)
    np.put_along_axis(probs, top_ix, v_am, axis=2)
    return probs, truth


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _fmix64_nb(z):
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    @njit(cache=True)
    def _mix4_nb(seed, a, b, c, d):
        h = _fmix64_nb(seed + np.uint64(GOLDEN))
        h = _fmix64_nb(h ^ _fmix64_nb(a))
        h = _fmix64_nb(h ^ _fmix64_nb(b))
        h = _fmix64_nb(h ^ _fmix64_nb(c))
        h = _fmix64_nb(h ^ _fmix64_nb(d))
        return h

    @njit(cache=True)
    def _u01_nb(h):
        return np.float64(h >> np.uint64(11)) * U01_SCALE

    @njit(cache=True)
    def _fuse_rows_nb(probs, weights):
        m, n, k = probs.shape
        class_sums = np.zeros((n, k), dtype=np.float64)
        final = np.zeros(n, dtype=np.int64)
        fused = np.empty((n, k), dtype=np.float64)
        degenerate = np.zeros(n, dtype=np.bool_)
        for row in range(n):
            for i in range(m):
                t = 0
                c = probs[i, row, 0]
                for j in range(1, k):
                    if probs[i, row, j] > c:
                        c = probs[i, row, j]
                        t = j
                class_sums[row, t] += weights[i] * c
            total = class_sums[row, 0]
            for j in range(1, k):
                total += class_sums[row, j]
            if total == 0.0:
                degenerate[row] = True
                final[row] = 0
                for j in range(k):
                    fused[row, j] = 1.0 / k
            else:
                best = 0
                b = class_sums[row, 0]
                for j in range(1, k):
                    if class_sums[row, j] > b:
                        b = class_sums[row, j]
                        best = j
                final[row] = best
                for j in range(k):
                    fused[row, j] = class_sums[row, j] / total
        return class_sums, final, fused, degenerate

    @njit(cache=True)
    def _synth_rows_nb(seed, accuracies, n_images, correlation, concentration,
                       class_probs):
        m = accuracies.shape[0]
        k = class_probs.shape[0]
        probs = np.empty((m, n_images, k), dtype=np.float64)
        truth = np.empty(n_images, dtype=np.int64)
        u0 = np.uint64(0)
        for row in range(n_images):
            nu = np.uint64(row)
            ut = _u01_nb(_mix4_nb(seed, np.uint64(TAG_TRUTH), nu, u0, u0))
            acc = 0.0
            t = k - 1
            for j in range(k):
                acc += class_probs[j]
                if ut < acc:
                    t = j
                    break
            truth[row] = t
            su = _u01_nb(_mix4_nb(seed, np.uint64(TAG_SHARED_U), nu, u0, u0))
            sw = int(_u01_nb(_mix4_nb(seed, np.uint64(TAG_SHARED_W), nu, u0, u0)) * (k - 1))
            if sw > k - 2:
                sw = k - 2
            for i in range(m):
                iu64 = np.uint64(i)
                coin = _u01_nb(_mix4_nb(seed, np.uint64(TAG_COPY), nu, iu64, u0))
                if coin < correlation:
                    correct = su < accuracies[i]
                    w = sw
                else:
                    iu = _u01_nb(_mix4_nb(seed, np.uint64(TAG_IND_U), nu, iu64, u0))
                    correct = iu < accuracies[i]
                    w = int(_u01_nb(_mix4_nb(seed, np.uint64(TAG_IND_W), nu, iu64, u0)) * (k - 1))
                    if w > k - 2:
                        w = k - 2
                if correct:
                    top = t
                elif w < t:
                    top = w
                else:
                    top = w + 1
                total = 0.0
                for j in range(k):
                    r = _u01_nb(_mix4_nb(seed, np.uint64(TAG_ROW), nu, iu64, np.uint64(j)))
                    if j == top:
                        r *= concentration
                    probs[i, row, j] = r
                    total += r
                if total <= 0.0:
                    for j in range(k):
                        probs[i, row, j] = 1.0 / k
                else:
                    for j in range(k):
                        probs[i, row, j] /= total
                am = 0
                b = probs[i, row, 0]
                for j in range(1, k):
                    if probs[i, row, j] > b:
                        b = probs[i, row, j]
                        am = j
                tmp = probs[i, row, am]
                probs[i, row, am] = probs[i, row, top]
                probs[i, row, top] = tmp
        return probs, truth


# ---------------------------------------------------------------------------
# dispatchers
# ---------------------------------------------------------------------------

def fuse_rows(probs: np.ndarray, weights: np.ndarray, backend: str | None = None):
    """Weighted top-confidence vote over every row.

    probs: (n_classifiers, n_images, n_classes) softmax rows.
    weights: (n_classifiers,) non-negative voter weights.
    Returns (class_sums, final, fused_scores, degenerate), all row-aligned.
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _fuse_rows_nb(probs, weights)
    return _fuse_rows_np(probs, weights)


def synth_rows(seed: int, accuracies: np.ndarray, n_images: int,
               correlation: float, concentration: float,
               class_probs: np.ndarray, backend: str | None = None):
    """Generate softmax rows for a synthetic ensemble.

    Returns (probs, truth) with probs shaped (n_classifiers, n_images,
    n_classes); the argmax of every row is correct with the classifier's
    configured accuracy, and errors are copied from a shared latent draw
    with probability `correlation`.
    """
    accuracies = np.ascontiguousarray(accuracies, dtype=np.float64)
    class_probs = np.ascontiguousarray(class_probs, dtype=np.float64)
    if resolve_backend(backend) == "numba":
        return _synth_rows_nb(np.uint64(seed & 0xFFFFFFFFFFFFFFFF), accuracies,
                              n_images, correlation, concentration, class_probs)
    return _synth_rows_np(seed, accuracies, n_images, correlation,
                          concentration, class_probs)
