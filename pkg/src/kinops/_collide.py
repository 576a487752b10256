"""Compiled pair loops for the collision quadratures.

Every loop walks (v, v_*) pairs with v on the full grid and v_* on a strided
sublattice.  The star list is sorted by decreasing |weight|, so the inner loop
stops as soon as the pair product drops below the pruning threshold.  The
deflection sigma is parametrised in the frame of u = v - v_*:
sigma = cos(theta) u_hat + sin(theta) (cos(phi) e1 + sin(phi) e2).
"""

import numba as nb
import numpy as np

from ._spline import eval_many, eval_one


@nb.njit(cache=True, inline="always")
def _frame(ux, uy, uz):
    # unit vectors orthogonal to u_hat, built from the least aligned axis
    ax, ay, az = abs(ux), abs(uy), abs(uz)
    if ax <= ay and ax <= az:
        px, py, pz = 0.0, -uz, uy
    elif ay <= az:
        px, py, pz = uz, 0.0, -ux
    else:
        px, py, pz = -uy, ux, 0.0
    nrm = np.sqrt(px * px + py * py + pz * pz)
    px /= nrm
    py /= nrm
    pz /= nrm
    qx = uy * pz - uz * py
    qy = uz * px - ux * pz
    qz = ux * py - uy * px
    return px, py, pz, qx, qy, qz


@nb.njit(cache=True, inline="always")
def _kinetic(r, gamma, r_floor):
    if gamma == 0.0:
        return 1.0
    if gamma < 0.0 and r < r_floor:
        r = r_floor
    return r ** gamma


@nb.njit(cache=True)
def qform_pairs(vc, vw, fv, sc, sw, thr, gamma, r_floor,
                theta, wtheta, cphi, sphi, coef, origin, h):
    """sum over pairs of w_v w_* Phi |sum_sigma b (F(v') - F(v))| for stacked F."""
    m = coef.shape[0]
    out = np.zeros(m)
    buf = np.empty(m)
    acc = np.empty(m)
    acc_t = np.empty(m)
    nth = theta.shape[0]
    nph = cphi.shape[0]
    ca = np.cos(theta)
    sa = np.sin(theta)
    for iv in range(vc.shape[0]):
        hv = vw[iv]
        x, y, z = vc[iv, 0], vc[iv, 1], vc[iv, 2]
        row = np.zeros(m)
        for js in range(sc.shape[0]):
            w = hv * sw[js]
            if abs(w) < thr:
                break
            ux = x - sc[js, 0]
            uy = y - sc[js, 1]
            uz = z - sc[js, 2]
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            if r == 0.0:
                continue
            ux /= r
            uy /= r
            uz /= r
            px, py, pz, qx, qy, qz = _frame(ux, uy, uz)
            for f in range(m):
                acc[f] = 0.0
            for a in range(nth):
                al = 0.5 * r * (ca[a] - 1.0)
                be = 0.5 * r * sa[a]
                bx, by, bz = x + al * ux, y + al * uy, z + al * uz
                for f in range(m):
                    acc_t[f] = 0.0
                for b in range(nph):
                    c = be * cphi[b]
                    s = be * sphi[b]
                    eval_many(coef, origin, h, bx + c * px + s * qx, by + c * py + s * qy,
                              bz + c * pz + s * qz, buf)
                    for f in range(m):
                        acc_t[f] += buf[f]
                for f in range(m):
                    acc[f] += wtheta[a] * (acc_t[f] - nph * fv[iv, f])
            k = w * _kinetic(r, gamma, r_floor)
            for f in range(m):
                row[f] += k * acc[f]
        for f in range(m):
            out[f] += row[f]
    return out


@nb.njit(cache=True)
def split_pairs(vc, fv, sc, sw, thr, gamma, r_floor,
                theta, wtheta, cphi, sphi, coef, origin, h):
    """Dissipative sum of (F'-F)^2 and cancellation sum of (F'^2 - F^2)."""
    diss = 0.0
    canc = 0.0
    nth = theta.shape[0]
    nph = cphi.shape[0]
    ca = np.cos(theta)
    sa = np.sin(theta)
    for iv in range(vc.shape[0]):
        x, y, z = vc[iv, 0], vc[iv, 1], vc[iv, 2]
        f0 = fv[iv]
        rd = 0.0
        rc = 0.0
        for js in range(sc.shape[0]):
            w = sw[js]
            if abs(w) < thr:
                break
            ux = x - sc[js, 0]
            uy = y - sc[js, 1]
            uz = z - sc[js, 2]
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            if r == 0.0:
                continue
            ux /= r
            uy /= r
            uz /= r
            px, py, pz, qx, qy, qz = _frame(ux, uy, uz)
            ad = 0.0
            ac = 0.0
            for a in range(nth):
                al = 0.5 * r * (ca[a] - 1.0)
                be = 0.5 * r * sa[a]
                bx, by, bz = x + al * ux, y + al * uy, z + al * uz
                td = 0.0
                tc = 0.0
                for b in range(nph):
                    c = be * cphi[b]
                    s = be * sphi[b]
                    fp = eval_one(coef, origin, h, bx + c * px + s * qx, by + c * py + s * qy,
                                  bz + c * pz + s * qz)
                    d = fp - f0
                    td += d * d
                    tc += fp * fp - f0 * f0
                ad += wtheta[a] * td
                ac += wtheta[a] * tc
            k = w * _kinetic(r, gamma, r_floor)
            rd += k * ad
            rc += k * ac
        diss += rd
        canc += rc
    return diss, canc


@nb.njit(cache=True)
def entropy_pairs(vc, lv, fvals, sc, sl, sf, thr, gamma, r_floor,
                  theta, wtheta, cphi, sphi, coef, origin, h):
    """sum of B (f'f'_* - f f_*) log(f'f'_* / (f f_*)) with log f interpolated."""
    total = 0.0
    nth = theta.shape[0]
    nph = cphi.shape[0]
    ca = np.cos(theta)
    sa = np.sin(theta)
    for iv in range(vc.shape[0]):
        x, y, z = vc[iv, 0], vc[iv, 1], vc[iv, 2]
        row = 0.0
        for js in range(sc.shape[0]):
            prod = fvals[iv] * sf[js]
            if prod < thr:
                break
            ux = x - sc[js, 0]
            uy = y - sc[js, 1]
            uz = z - sc[js, 2]
            r = np.sqrt(ux * ux + uy * uy + uz * uz)
            if r == 0.0:
                continue
            sx, sy, sz = x + sc[js, 0], y + sc[js, 1], z + sc[js, 2]
            ux /= r
            uy /= r
            uz /= r
            px, py, pz, qx, qy, qz = _frame(ux, uy, uz)
            lpre = lv[iv] + sl[js]
            acc = 0.0
            for a in range(nth):
                al = 0.5 * r * (ca[a] - 1.0)
                be = 0.5 * r * sa[a]
                bx, by, bz = x + al * ux, y + al * uy, z + al * uz
                t = 0.0
                for b in range(nph):
                    c = be * cphi[b]
                    s = be * sphi[b]
                    qx1 = bx + c * px + s * qx
                    qy1 = by + c * py + s * qy
                    qz1 = bz + c * pz + s * qz
                    l1 = eval_one(coef, origin, h, qx1, qy1, qz1)
                    l2 = eval_one(coef, origin, h, sx - qx1, sy - qy1, sz - qz1)
                    lpost = l1 + l2
                    t += (np.exp(lpost) - prod) * (lpost - lpre)
                acc += wtheta[a] * t
            row += acc * _kinetic(r, gamma, r_floor)
        total += row
    return total


@nb.njit(cache=True)
def landau_hessian_pairs(vc, vw, grad, hess, sc, sw, thr, gamma, r_floor):
    """sum of w_v w_* |u|^gamma [(|u|^2 I - u u) : H F(v) - 4 u . grad F(v)].

    ``grad`` has shape (nv, m, 3) and ``hess`` (nv, m, 6) with the upper
    triangle ordered xx, xy, xz, yy, yz, zz.
    """
    m = grad.shape[1]
    out = np.zeros(m)
    for iv in range(vc.shape[0]):
        hv = vw[iv]
        x, y, z = vc[iv, 0], vc[iv, 1], vc[iv, 2]
        row = np.zeros(m)
        for js in range(sc.shape[0]):
            w = hv * sw[js]
            if abs(w) < thr:
                break
            ux = x - sc[js, 0]
            uy = y - sc[js, 1]
            uz = z - sc[js, 2]
            r2 = ux * ux + uy * uy + uz * uz
            if r2 == 0.0:
                continue
            k = w * _kinetic(np.sqrt(r2), gamma, r_floor)
            for f in range(m):
                H = hess[iv, f]
                tr = H[0] + H[3] + H[5]
                quad = (ux * ux * H[0] + uy * uy * H[3] + uz * uz * H[5]
                        + 2.0 * (ux * uy * H[1] + ux * uz * H[2] + uy * uz * H[4]))
                g = grad[iv, f]
                row[f] += k * (r2 * tr - quad - 4.0 * (ux * g[0] + uy * g[1] + uz * g[2]))
        for f in range(m):
            out[f] += row[f]
    return out


@nb.njit(cache=True)
def landau_entropy_pairs(vc, fv, gv, sc, sf, sg, thr, gamma, r_floor):
    """sum of f f_* |u|^(gamma+2) (G - G_*)^T (I - u_hat u_hat) (G - G_*)."""
    total = 0.0
    for iv in range(vc.shape[0]):
        x, y, z = vc[iv, 0], vc[iv, 1], vc[iv, 2]
        row = 0.0
        for js in range(sc.shape[0]):
            prod = fv[iv] * sf[js]
            if prod < thr:
                break
            ux = x - sc[js, 0]
            uy = y - sc[js, 1]
            uz = z - sc[js, 2]
            r2 = ux * ux + uy * uy + uz * uz
            if r2 == 0.0:
                continue
            dx = gv[iv, 0] - sg[js, 0]
            dy = gv[iv, 1] - sg[js, 1]
            dz = gv[iv, 2] - sg[js, 2]
            du = dx * ux + dy * uy + dz * uz
            # |u|^2 |d|^2 - (d.u)^2 = |u|^2 d^T (I - u_hat u_hat) d, nonnegative
            perp = r2 * (dx * dx + dy * dy + dz * dz) - du * du
            if perp < 0.0:
                perp = 0.0
            row += prod * _kinetic(np.sqrt(r2), gamma, r_floor) * perp
        total += row
    return total
