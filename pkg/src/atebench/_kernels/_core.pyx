# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled twins of the numpy kernels in ``_fallback``.

Accumulation orders (column-major matvec, row-order histograms, sequential
prefix sums) are kept identical to the fallback, and the extension is built
with ``-ffp-contract=off``, so both backends produce bit-identical results.
Any change here must be mirrored in ``_fallback.py``.
"""

import numpy as np

from libc.math cimport INFINITY, fabs, isfinite

BACKEND_NAME = "cython"

CHAIN_OK = 0
CHAIN_UNBOUNDED = 1

CHORD_UNDERFLOW = 1e-14

cdef double _CHORD_UNDERFLOW = 1e-14
cdef double _STEP_EPS = 1e-12


def run_chain(
    double[::1, :] a,
    double[::1] r,
    double[::1] v,
    double[::1] slack,
    double[::1] restart_point,
    double[::1] restart_slack,
    double[:, ::1] normals,
    double[::1] u_mix,
    double[::1] u_axis,
    double[::1] u_step,
    double axis_prob,
    long long step0,
    long long refresh_every,
    long long[::1] keep_steps,
    double[:, ::1] out,
    Py_ssize_t out_offset,
):
    """See ``_fallback.run_chain``; identical semantics and bit pattern."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef Py_ssize_t n_steps = u_mix.shape[0]
    cdef Py_ssize_t n_keep = keep_steps.shape[0]
    cdef Py_ssize_t s, i, j, jj, ki
    cdef long long n_resets = 0
    cdef bint axis_step
    cdef double wi, rr, t_max, t_min, width, scale, u, t, xj

    wbuf_arr = np.empty(m, dtype=np.float64)
    tmpm_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] wbuf = wbuf_arr
    cdef double[::1] tmpm = tmpm_arr

    ki = 0
    j = 0
    for s in range(n_steps):
        axis_step = u_mix[s] < axis_prob
        t_max = INFINITY
        t_min = -INFINITY
        if axis_step:
            j = <Py_ssize_t> (u_axis[s] * d)
            if j >= d:
                j = d - 1
            for i in range(m):
                wi = a[i, j]
                if wi > 0.0:
                    rr = slack[i] / wi
                    if rr < t_max:
                        t_max = rr
                elif wi < 0.0:
                    rr = slack[i] / wi
                    if rr > t_min:
                        t_min = rr
        else:
            for i in range(m):
                wbuf[i] = 0.0
            for jj in range(d):
                xj = normals[s, jj]
                for i in range(m):
                    wbuf[i] = wbuf[i] + a[i, jj] * xj
            for i in range(m):
                wi = wbuf[i]
                if wi > 0.0:
                    rr = slack[i] / wi
                    if rr < t_max:
                        t_max = rr
                elif wi < 0.0:
                    rr = slack[i] / wi
                    if rr > t_min:
                        t_min = rr

        if t_max == INFINITY or t_min == -INFINITY:
            return CHAIN_UNBOUNDED, n_resets, s

        width = t_max - t_min
        scale = 1.0
        if fabs(t_min) > scale:
            scale = fabs(t_min)
        if fabs(t_max) > scale:
            scale = fabs(t_max)
        if not isfinite(width) or width <= _CHORD_UNDERFLOW * scale:
            for jj in range(d):
                v[jj] = restart_point[jj]
            for i in range(m):
                slack[i] = restart_slack[i]
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
                for i in range(m):
                    slack[i] = slack[i] - a[i, j] * t
            else:
                for jj in range(d):
                    v[jj] = v[jj] + normals[s, jj] * t
                for i in range(m):
                    slack[i] = slack[i] - wbuf[i] * t

        if refresh_every > 0 and (step0 + s + 1) % refresh_every == 0:
            for i in range(m):
                tmpm[i] = 0.0
            for jj in range(d):
                xj = v[jj]
                for i in range(m):
                    tmpm[i] = tmpm[i] + a[i, jj] * xj
            for i in range(m):
                slack[i] = r[i] - tmpm[i]

        if ki < n_keep and keep_steps[ki] == s:
            for jj in range(d):
                out[out_offset + ki, jj] = v[jj]
            ki += 1

    return CHAIN_OK, n_resets, n_steps


def build_tree(
    const unsigned char[:, ::1] bins,
    const double[::1] grad,
    const double[::1] hess,
    rows,
    const long long[::1] n_bins,
    long long max_depth,
    double lam,
    double min_child_hess,
    long long min_leaf,
    double min_gain,
):
    """See ``_fallback.build_tree``; identical semantics and bit pattern."""
    cdef Py_ssize_t n_features = bins.shape[1]
    cdef Py_ssize_t max_nodes = (1 << (max_depth + 1)) - 1
    feat_arr = np.full(max_nodes, -1, dtype=np.int64)
    thr_arr = np.zeros(max_nodes, dtype=np.int64)
    left_arr = np.full(max_nodes, -1, dtype=np.int64)
    right_arr = np.full(max_nodes, -1, dtype=np.int64)
    value_arr = np.zeros(max_nodes, dtype=np.float64)
    cdef long long[::1] feat = feat_arr
    cdef long long[::1] thr = thr_arr
    cdef long long[::1] left = left_arr
    cdef long long[::1] right = right_arr
    cdef double[::1] value = value_arr

    cdef Py_ssize_t max_bins = 0
    cdef Py_ssize_t f
    for f in range(n_features):
        if n_bins[f] > max_bins:
            max_bins = n_bins[f]
    hg_arr = np.empty(max_bins, dtype=np.float64)
    hh_arr = np.empty(max_bins, dtype=np.float64)
    cnt_arr = np.empty(max_bins, dtype=np.int64)
    cdef double[::1] hg = hg_arr
    cdef double[::1] hh = hh_arr
    cdef long long[::1] cnt = cnt_arr

    cdef Py_ssize_t n_nodes = 1
    cdef Py_ssize_t nid, depth, n_node, idx, rr_, b, nb
    cdef long long[::1] nrows
    cdef double g_tot, h_tot, gl, hl, gr, hr, gain, best_gain
    cdef long long cl, cr
    cdef Py_ssize_t best_f, best_b
    cdef Py_ssize_t n_left, pos_l, pos_r
    cdef long long[::1] mv_left, mv_right

    queue = [(0, rows, 0)]
    while queue:
        nid_o, nrows_o, depth_o = queue.pop(0)
        nid = nid_o
        depth = depth_o
        nrows = nrows_o
        n_node = nrows.shape[0]

        # feature-0 histogram fixes the node aggregates
        nb = n_bins[0]
        for b in range(nb):
            hg[b] = 0.0
            hh[b] = 0.0
        for idx in range(n_node):
            rr_ = nrows[idx]
            hg[bins[rr_, 0]] += grad[rr_]
            hh[bins[rr_, 0]] += hess[rr_]
        g_tot = 0.0
        h_tot = 0.0
        for b in range(nb):
            g_tot = g_tot + hg[b]
            h_tot = h_tot + hh[b]
        value[nid] = -g_tot / (h_tot + lam)

        if depth >= max_depth or n_node < 2 * min_leaf:
            continue

        best_gain = min_gain
        best_f = -1
        best_b = -1
        for f in range(n_features):
            nb = n_bins[f]
            if nb < 2:
                continue
            for b in range(nb):
                hg[b] = 0.0
                hh[b] = 0.0
                cnt[b] = 0
            for idx in range(n_node):
                rr_ = nrows[idx]
                hg[bins[rr_, f]] += grad[rr_]
                hh[bins[rr_, f]] += hess[rr_]
                cnt[bins[rr_, f]] += 1
            # in-place sequential prefix sums
            for b in range(1, nb):
                hg[b] = hg[b - 1] + hg[b]
                hh[b] = hh[b - 1] + hh[b]
                cnt[b] = cnt[b - 1] + cnt[b]
            g_tot = hg[nb - 1]
            h_tot = hh[nb - 1]
            for b in range(nb - 1):
                cl = cnt[b]
                cr = n_node - cl
                gl = hg[b]
                hl = hh[b]
                gr = g_tot - gl
                hr = h_tot - hl
                if cl >= min_leaf and cr >= min_leaf and hl >= min_child_hess and hr >= min_child_hess:
                    gain = gl * gl / (hl + lam) + gr * gr / (hr + lam) - g_tot * g_tot / (h_tot + lam)
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_b = b

        if best_f < 0:
            continue
        n_left = 0
        for idx in range(n_node):
            if bins[nrows[idx], best_f] <= best_b:
                n_left += 1
        left_rows = np.empty(n_left, dtype=np.int64)
        right_rows = np.empty(n_node - n_left, dtype=np.int64)
        mv_left = left_rows
        mv_right = right_rows
        pos_l = 0
        pos_r = 0
        for idx in range(n_node):
            rr_ = nrows[idx]
            if bins[rr_, best_f] <= best_b:
                mv_left[pos_l] = rr_
                pos_l += 1
            else:
                mv_right[pos_r] = rr_
                pos_r += 1
        feat[nid] = best_f
        thr[nid] = best_b
        left[nid] = n_nodes
        right[nid] = n_nodes + 1
        queue.append((n_nodes, left_rows, depth + 1))
        queue.append((n_nodes + 1, right_rows, depth + 1))
        n_nodes += 2

    return feat_arr, thr_arr, left_arr, right_arr, value_arr, n_nodes
