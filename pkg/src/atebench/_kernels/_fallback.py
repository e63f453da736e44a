"""Pure-numpy implementations of the hot kernels.

These mirror the compiled versions in ``_core.pyx`` operation-for-operation:
matrix-vector products accumulate column by column in index order, histogram
sums accumulate in row order (``np.bincount`` semantics), and prefix sums are
sequential (``np.cumsum`` semantics).  Together with the extension being
compiled with ``-ffp-contract=off``, this makes the two backends bit-identical,
which the test suite asserts.  Do not "optimize" an accumulation order here
without changing the compiled twin the same way.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"

CHAIN_OK = 0
CHAIN_UNBOUNDED = 1

#: Relative chord-width floor below which the walker is considered to have
#: numerically left the interior and is restarted.
CHORD_UNDERFLOW = 1e-14

#: Clamp applied to the chord-position uniform so kept points stay strictly
#: inside the polytope.
_STEP_EPS = 1e-12


def colwise_matvec(a: np.ndarray, x: np.ndarray, out: np.ndarray) -> None:
    """``out = a @ x`` accumulated one column at a time, in column order."""
    tmp = np.empty(a.shape[0])
    out[:] = 0.0
    for j in range(a.shape[1]):
        np.multiply(a[:, j], x[j], out=tmp)
        np.add(out, tmp, out=out)


def run_chain(
    a: np.ndarray,
    r: np.ndarray,
    v: np.ndarray,
    slack: np.ndarray,
    restart_point: np.ndarray,
    restart_slack: np.ndarray,
    normals: np.ndarray,
    u_mix: np.ndarray,
    u_axis: np.ndarray,
    u_step: np.ndarray,
    axis_prob: float,
    step0: int,
    refresh_every: int,
    keep_steps: np.ndarray,
    out: np.ndarray,
    out_offset: int,
):
    """Advance a hit-and-run walker by ``len(u_mix)`` steps.

    ``v`` and ``slack`` (``= r - a @ v``) are updated in place.  Directions
    mix unnormalized gaussian vectors with single-axis moves (probability
    ``axis_prob``); the chord position is uniform.  Steps whose local index
    appears in ``keep_steps`` record the post-move point into
    ``out[out_offset + i]``.

    Returns ``(status, n_resets, steps_done)`` where a nonzero status means an
    unbounded chord was encountered (the polytope has a recession direction).
    """
    m, d = a.shape
    n_steps = u_mix.shape[0]
    w = np.empty(m)
    tmp_m = np.empty(m)
    tmp_d = np.empty(d)
    ratio = np.empty(m)
    n_resets = 0
    ki = 0
    n_keep = keep_steps.shape[0]

    for s in range(n_steps):
        axis_step = u_mix[s] < axis_prob
        if axis_step:
            j = int(u_axis[s] * d)
            if j >= d:
                j = d - 1
            wv = a[:, j]
        else:
            dvec = normals[s]
            w[:] = 0.0
            for jj in range(d):
                np.multiply(a[:, jj], dvec[jj], out=tmp_m)
                np.add(w, tmp_m, out=w)
            wv = w

        with np.errstate(divide="ignore", invalid="ignore"):
            np.divide(slack, wv, out=ratio)
        t_max = np.where(wv > 0.0, ratio, np.inf).min()
        t_min = np.where(wv < 0.0, ratio, -np.inf).max()
        if t_max == np.inf or t_min == -np.inf:
            return CHAIN_UNBOUNDED, n_resets, s

        width = t_max - t_min
        scale = max(1.0, abs(t_min), abs(t_max))
        if not np.isfinite(width) or width <= CHORD_UNDERFLOW * scale:
            v[:] = restart_point
            slack[:] = restart_slack
            n_resets += 1
        else:
            u = u_step[s]
            if u < _STEP_EPS:
                u = _STEP_EPS
            elif u > 1.0 - _STEP_EPS:
                u = 1.0 - _STEP_EPS
            t = t_min + u * (t_max - t_min)
            if axis_step:
                v[j] = v[j] + t
            else:
                np.multiply(dvec, t, out=tmp_d)
                np.add(v, tmp_d, out=v)
            np.multiply(wv, t, out=tmp_m)
            np.subtract(slack, tmp_m, out=slack)

        if refresh_every > 0 and (step0 + s + 1) % refresh_every == 0:
            colwise_matvec(a, v, tmp_m)
            np.subtract(r, tmp_m, out=slack)

        if ki < n_keep and keep_steps[ki] == s:
            out[out_offset + ki] = v
            ki += 1

    return CHAIN_OK, n_resets, n_steps


def build_tree(
    bins: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    rows: np.ndarray,
    n_bins: np.ndarray,
    max_depth: int,
    lam: float,
    min_child_hess: float,
    min_leaf: int,
    min_gain: float,
):
    """Grow one depth-limited regression tree on pre-binned features.

    Split gain is the usual second-order objective improvement
    ``gl^2/(hl+lam) + gr^2/(hr+lam) - g^2/(h+lam)``; node aggregates are taken
    from the feature-0 histogram so that the accumulation order is fixed.
    Ties break toward the lowest (feature, bin) pair.

    Returns ``(feat, thr, left, right, value, n_nodes)``; ``feat[i] == -1``
    marks node ``i`` as a leaf and ``thr`` holds bin indices (go left when
    ``bin <= thr``).
    """
    n_features = bins.shape[1]
    max_nodes = 2 ** (max_depth + 1) - 1
    feat = np.full(max_nodes, -1, dtype=np.int64)
    thr = np.zeros(max_nodes, dtype=np.int64)
    left = np.full(max_nodes, -1, dtype=np.int64)
    right = np.full(max_nodes, -1, dtype=np.int64)
    value = np.zeros(max_nodes, dtype=np.float64)

    n_nodes = 1
    queue = [(0, rows, 0)]
    while queue:
        nid, nrows, depth = queue.pop(0)
        n_node = nrows.shape[0]

        b0 = bins[nrows, 0]
        cg0 = np.cumsum(np.bincount(b0, weights=grad[nrows], minlength=n_bins[0]))
        ch0 = np.cumsum(np.bincount(b0, weights=hess[nrows], minlength=n_bins[0]))
        value[nid] = -cg0[-1] / (ch0[-1] + lam)

        if depth >= max_depth or n_node < 2 * min_leaf:
            continue

        best_gain = min_gain
        best_f = -1
        best_b = -1
        for f in range(n_features):
            nb = int(n_bins[f])
            if nb < 2:
                continue
            if f == 0:
                cg, ch = cg0, ch0
                cc = np.cumsum(np.bincount(b0, minlength=nb))
            else:
                bf = bins[nrows, f]
                cg = np.cumsum(np.bincount(bf, weights=grad[nrows], minlength=nb))
                ch = np.cumsum(np.bincount(bf, weights=hess[nrows], minlength=nb))
                cc = np.cumsum(np.bincount(bf, minlength=nb))
            g_tot = cg[-1]
            h_tot = ch[-1]
            gl = cg[: nb - 1]
            hl = ch[: nb - 1]
            cl = cc[: nb - 1]
            gr = g_tot - gl
            hr = h_tot - hl
            cr = n_node - cl
            valid = (
                (cl >= min_leaf)
                & (cr >= min_leaf)
                & (hl >= min_child_hess)
                & (hr >= min_child_hess)
            )
            gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - g_tot * g_tot / (h_tot + lam)
            masked = np.where(valid, gain, -np.inf)
            bi = int(np.argmax(masked))
            if masked[bi] > best_gain:
                best_gain = masked[bi]
                best_f = f
                best_b = bi

        if best_f < 0:
            continue
        go_left = bins[nrows, best_f] <= best_b
        feat[nid] = best_f
        thr[nid] = best_b
        left[nid] = n_nodes
        right[nid] = n_nodes + 1
        queue.append((n_nodes, nrows[go_left], depth + 1))
        queue.append((n_nodes + 1, nrows[~go_left], depth + 1))
        n_nodes += 2

    return feat, thr, left, right, value, n_nodes
