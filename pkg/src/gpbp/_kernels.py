"""Compiled inner loops for the edge-message and node-state solvers.

Both half-sweep kernels are sequential over nodes; per-node work only
reads a frozen snapshot of the opposite side, so iteration order does
not affect results.  Status codes: 0 ok, 1 diverged (info = node),
2 singular system (info = node).
"""

import numpy as np
from numba import njit

DOWNDATE_GUARD = 1e-12
APPROX_GUARD = 1e-10
# Largest stored alpha: keeps 1 + y^2 alpha finite so collapsing means
# (alpha ~ 1/||mean||^2 near the zero fixed point) stay representable.
ALPHA_CAP = 1e250


@njit(cache=True)
def _alpha_of(msm, mnorm2):
    """Clamped alpha coefficient msm / mnorm2^2.

    Divides twice instead of squaring the norm so subnormal means do not
    underflow the denominator to zero.
    """
    if mnorm2 <= 0.0:
        return 0.0
    al = (msm / mnorm2) / mnorm2
    if al < 0.0:
        return 0.0
    if al > ALPHA_CAP:
        return ALPHA_CAP
    return al


@njit(cache=True)
def _gj_inverse(a, work, out):
    """Invert a into out via Gauss-Jordan with partial pivoting.

    work is an (r, 2r) scratch block.  Returns False when a pivot
    underflows (singular matrix); out is then garbage.
    """
    r = a.shape[0]
    for i in range(r):
        for j in range(r):
            work[i, j] = a[i, j]
            work[i, r + j] = 0.0
        work[i, r + i] = 1.0
    for col in range(r):
        piv = col
        best = abs(work[col, col])
        for i in range(col + 1, r):
            v = abs(work[i, col])
            if v > best:
                best = v
                piv = i
        if best < 1e-300:
            return False
        if piv != col:
            for j in range(2 * r):
                tmp = work[col, j]
                work[col, j] = work[piv, j]
                work[piv, j] = tmp
        inv_p = 1.0 / work[col, col]
        for j in range(2 * r):
            work[col, j] *= inv_p
        for i in range(r):
            if i == col:
                continue
            f = work[i, col]
            if f != 0.0:
                for j in range(2 * r):
                    work[i, j] -= f * work[col, j]
    for i in range(r):
        for j in range(r):
            out[i, j] = work[i, r + j]
    return True


@njit(cache=True)
def exact_half_sweep(
    ptr,
    eids,
    edge_y,
    opp_mean,
    opp_alpha,
    opp_mean_prev,
    opp_alpha_prev,
    out_mean,
    out_alpha,
    node_mean,
    node_field,
    node_prec,
    node_inv,
    node_alpha,
    lam,
    gamma,
    use_alpha,
    direct_inverse,
    divergence_cap,
):
    """Update all messages leaving one side of the graph.

    ptr/eids group edge ids by node on the side being updated; opp_*
    arrays hold the incoming messages indexed by edge id (current and
    previous sweep).  Writes new outgoing messages into out_* and the
    full-sum node state into node_*.  When direct_inverse is False the
    node inverse is accumulated by Sherman-Morrison updates from
    (1/lam) I instead of being factorized.

    Returns (status, node, n_fallback) where n_fallback counts cavity
    downdates that hit the denominator guard and fell back to a direct
    solve.
    """
    n_nodes = ptr.shape[0] - 1
    r = out_mean.shape[1]
    nt = 1 if gamma == 0.0 else 2
    w0 = 1.0 - gamma
    w1 = gamma

    a = np.empty((r, r))
    acav = np.empty((r, r))
    s = np.empty((r, r))
    scav = np.empty((r, r))
    work = np.empty((r, 2 * r))
    b = np.empty(r)
    bcav = np.empty(r)
    vv = np.empty(r)
    q = np.empty(r)
    u = np.empty(r)
    n_fallback = 0

    for i in range(n_nodes):
        start = ptr[i]
        stop = ptr[i + 1]

        for p in range(r):
            for c in range(r):
                a[p, c] = 0.0
            a[p, p] = lam
            b[p] = 0.0

        if start == stop:
            # unobserved node: prior only
            for p in range(r):
                node_mean[i, p] = 0.0
                node_field[i, p] = 0.0
                for c in range(r):
                    node_prec[i, p, c] = a[p, c]
                    node_inv[i, p, c] = 0.0
                if lam > 0.0:
                    node_inv[i, p, p] = 1.0 / lam
            node_alpha[i] = 0.0
            continue

        for k in range(start, stop):
            e = eids[k]
            y = edge_y[e]
            for t in range(nt):
                if t == 0:
                    w = w0
                    al = opp_alpha[e]
                    for p in range(r):
                        vv[p] = opp_mean[e, p]
                else:
                    w = w1
                    al = opp_alpha_prev[e]
                    for p in range(r):
                        vv[p] = opp_mean_prev[e, p]
                if use_alpha:
                    sca = w / (1.0 + y * y * al)
                else:
                    sca = w
                if sca == 0.0:
                    continue
                for p in range(r):
                    vp = sca * vv[p]
                    b[p] += y * vp
                    for c in range(r):
                        a[p, c] += vp * vv[c]

        if direct_inverse:
            if not _gj_inverse(a, work, s):
                return 2, i, n_fallback
        else:
            for p in range(r):
                for c in range(r):
                    s[p, c] = 0.0
                s[p, p] = 1.0 / lam
            for k in range(start, stop):
                e = eids[k]
                y = edge_y[e]
                for t in range(nt):
                    if t == 0:
                        w = w0
                        al = opp_alpha[e]
                        for p in range(r):
                            vv[p] = opp_mean[e, p]
                    else:
                        w = w1
                        al = opp_alpha_prev[e]
                        for p in range(r):
                            vv[p] = opp_mean_prev[e, p]
                    if use_alpha:
                        sca = w / (1.0 + y * y * al)
                    else:
                        sca = w
                    if sca == 0.0:
                        continue
                    vq = 0.0
                    for p in range(r):
                        acc = 0.0
                        for c in range(r):
                            acc += s[p, c] * vv[c]
                        q[p] = acc
                        vq += vv[p] * acc
                    coef = sca / (1.0 + sca * vq)
                    for p in range(r):
                        for c in range(r):
                            s[p, c] -= coef * q[p] * q[c]

        mnorm2 = 0.0
        for p in range(r):
            acc = 0.0
            for c in range(r):
                acc += s[p, c] * b[c]
            u[p] = acc
            mnorm2 += acc * acc
            if not (abs(acc) <= divergence_cap):
                return 1, i, n_fallback
        if mnorm2 > 0.0:
            msm = 0.0
            for p in range(r):
                acc = 0.0
                for c in range(r):
                    acc += s[p, c] * u[c]
                msm += u[p] * acc
            nal = _alpha_of(msm, mnorm2)
        else:
            nal = 0.0
        node_alpha[i] = nal
        for p in range(r):
            node_mean[i, p] = u[p]
            node_field[i, p] = b[p]
            for c in range(r):
                node_prec[i, p, c] = a[p, c]
                node_inv[i, p, c] = s[p, c]

        for k in range(start, stop):
            e = eids[k]
            y = edge_y[e]
            for p in range(r):
                bcav[p] = b[p]
                for c in range(r):
                    scav[p, c] = s[p, c]
            ok = True
            for t in range(nt):
                if t == 0:
                    w = w0
                    al = opp_alpha[e]
                    for p in range(r):
                        vv[p] = opp_mean[e, p]
                else:
                    w = w1
                    al = opp_alpha_prev[e]
                    for p in range(r):
                        vv[p] = opp_mean_prev[e, p]
                if use_alpha:
                    sca = w / (1.0 + y * y * al)
                else:
                    sca = w
                if sca == 0.0:
                    continue
                for p in range(r):
                    bcav[p] -= sca * y * vv[p]
                if ok:
                    vq = 0.0
                    for p in range(r):
                        acc = 0.0
                        for c in range(r):
                            acc += scav[p, c] * vv[c]
                        q[p] = acc
                        vq += vv[p] * acc
                    den = 1.0 - sca * vq
                    if abs(den) < DOWNDATE_GUARD:
                        ok = False
                    else:
                        coef = sca / den
                        for p in range(r):
                            for c in range(r):
                                scav[p, c] += coef * q[p] * q[c]
            if not ok:
                # downdate denominator vanished: solve the cavity
                # system directly from the accumulated precision
                n_fallback += 1
                for p in range(r):
                    for c in range(r):
                        acav[p, c] = a[p, c]
                for t in range(nt):
                    if t == 0:
                        w = w0
                        al = opp_alpha[e]
                        for p in range(r):
                            vv[p] = opp_mean[e, p]
                    else:
                        w = w1
                        al = opp_alpha_prev[e]
                        for p in range(r):
                            vv[p] = opp_mean_prev[e, p]
                    if use_alpha:
                        sca = w / (1.0 + y * y * al)
                    else:
                        sca = w
                    if sca == 0.0:
                        continue
                    for p in range(r):
                        vp = sca * vv[p]
                        for c in range(r):
                            acav[p, c] -= vp * vv[c]
                if not _gj_inverse(acav, work, scav):
                    return 2, i, n_fallback

            mnorm2 = 0.0
            for p in range(r):
                acc = 0.0
                for c in range(r):
                    acc += scav[p, c] * bcav[c]
                u[p] = acc
                mnorm2 += acc * acc
                if not (abs(acc) <= divergence_cap):
                    return 1, i, n_fallback
            if mnorm2 > 0.0:
                msm = 0.0
                for p in range(r):
                    acc = 0.0
                    for c in range(r):
                        acc += scav[p, c] * u[c]
                    msm += u[p] * acc
                mal = _alpha_of(msm, mnorm2)
            else:
                mal = 0.0
            out_alpha[e] = mal
            for p in range(r):
                out_mean[e, p] = u[p]

    return 0, -1, n_fallback


@njit(cache=True)
def approx_half_sweep(
    ptr,
    eids,
    nbr,
    edge_y,
    opp_inv,
    opp_mean,
    opp_alpha,
    opp_inv_prev,
    opp_mean_prev,
    opp_alpha_prev,
    self_mean,
    self_alpha,
    self_mean_prev,
    self_alpha_prev,
    out_prec,
    out_inv,
    out_mean,
    out_field,
    out_alpha,
    lam,
    gamma,
    use_alpha,
    divergence_cap,
):
    """Rebuild one side's node states from corrected opposite states.

    For each incident edge the opposite node's posterior is turned into
    an approximate cavity message on the fly: the mean gets a rank-one
    residual correction and the alpha is re-evaluated under the
    corrected covariance.  Nothing per-edge is persisted.  nbr[k] is
    the opposite node of edge eids[k].

    Returns (status, node, n_skipped) where n_skipped counts edges
    whose correction denominator hit the guard and were used
    uncorrected this sweep.
    """
    n_nodes = ptr.shape[0] - 1
    r = out_mean.shape[1]
    nt = 1 if gamma == 0.0 else 2
    w0 = 1.0 - gamma
    w1 = gamma

    a = np.empty((r, r))
    s = np.empty((r, r))
    work = np.empty((r, 2 * r))
    b = np.empty(r)
    u = np.empty(r)
    cu = np.empty(r)
    vt = np.empty(r)
    cv = np.empty(r)
    n_skipped = 0

    for i in range(n_nodes):
        start = ptr[i]
        stop = ptr[i + 1]

        for p in range(r):
            for c in range(r):
                a[p, c] = 0.0
            a[p, p] = lam
            b[p] = 0.0

        for k in range(start, stop):
            e = eids[k]
            j = nbr[k]
            y = edge_y[e]
            for t in range(nt):
                if t == 0:
                    w = w0
                    ai = self_alpha[i]
                    for p in range(r):
                        u[p] = self_mean[i, p]
                else:
                    w = w1
                    ai = self_alpha_prev[i]
                    for p in range(r):
                        u[p] = self_mean_prev[i, p]
                if w == 0.0:
                    continue

                uv = 0.0
                ucu = 0.0
                if t == 0:
                    for p in range(r):
                        acc = 0.0
                        for c in range(r):
                            acc += opp_inv[j, p, c] * u[c]
                        cu[p] = acc
                        ucu += u[p] * acc
                        uv += u[p] * opp_mean[j, p]
                else:
                    for p in range(r):
                        acc = 0.0
                        for c in range(r):
                            acc += opp_inv_prev[j, p, c] * u[c]
                        cu[p] = acc
                        ucu += u[p] * acc
                        uv += u[p] * opp_mean_prev[j, p]

                if use_alpha:
                    den = 1.0 + y * y * ai - ucu
                else:
                    den = 1.0 - ucu

                if abs(den) < APPROX_GUARD:
                    # correction formula invalid here; fall back to the
                    # uncorrected posterior for this edge
                    n_skipped += 1
                    if t == 0:
                        for p in range(r):
                            vt[p] = opp_mean[j, p]
                        at = opp_alpha[j]
                    else:
                        for p in range(r):
                            vt[p] = opp_mean_prev[j, p]
                        at = opp_alpha_prev[j]
                    if not use_alpha:
                        at = 0.0
                else:
                    coef = (y - uv) / den
                    vnorm2 = 0.0
                    if t == 0:
                        for p in range(r):
                            vp = opp_mean[j, p] - coef * cu[p]
                            vt[p] = vp
                            vnorm2 += vp * vp
                    else:
                        for p in range(r):
                            vp = opp_mean_prev[j, p] - coef * cu[p]
                            vt[p] = vp
                            vnorm2 += vp * vp
                    if use_alpha and vnorm2 > 0.0:
                        vcv = 0.0
                        cuv = 0.0
                        if t == 0:
                            for p in range(r):
                                acc = 0.0
                                for c in range(r):
                                    acc += opp_inv[j, p, c] * vt[c]
                                cv[p] = acc
                                vcv += vt[p] * acc
                                cuv += cu[p] * vt[p]
                        else:
                            for p in range(r):
                                acc = 0.0
                                for c in range(r):
                                    acc += opp_inv_prev[j, p, c] * vt[c]
                                cv[p] = acc
                                vcv += vt[p] * acc
                                cuv += cu[p] * vt[p]
                        at = _alpha_of(vcv + cuv * cuv / den, vnorm2)
                    else:
                        at = 0.0

                if use_alpha:
                    sca = w / (1.0 + y * y * at)
                else:
                    sca = w
                for p in range(r):
                    vp = sca * vt[p]
                    b[p] += y * vp
                    for c in range(r):
                        a[p, c] += vp * vt[c]

        if not _gj_inverse(a, work, s):
            return 2, i, n_skipped

        mnorm2 = 0.0
        for p in range(r):
            acc = 0.0
            for c in range(r):
                acc += s[p, c] * b[c]
            u[p] = acc
            mnorm2 += acc * acc
            if not (abs(acc) <= divergence_cap):
                return 1, i, n_skipped
        if use_alpha and mnorm2 > 0.0:
            msm = 0.0
            for p in range(r):
                acc = 0.0
                for c in range(r):
                    acc += s[p, c] * u[c]
                msm += u[p] * acc
            nal = _alpha_of(msm, mnorm2)
        else:
            nal = 0.0
        out_alpha[i] = nal
        for p in range(r):
            out_mean[i, p] = u[p]
            out_field[i, p] = b[p]
            for c in range(r):
                out_prec[i, p, c] = a[p, c]
                out_inv[i, p, c] = s[p, c]

    return 0, -1, n_skipped
