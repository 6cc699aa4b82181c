"""Affine recourse policies y(h) = P h + q.

The HRep path builds one compact LP: every robust constraint
"affine(h) >= 0 for all h in U" is replaced by its LP dual over
U = {h >= 0 : R h <= r}, which adds a nonnegative multiplier block per
constraint group.  The VRep path imposes the constraints at the hull's
vertices directly (exact, since both sides are affine in h).  When the
vertex list contains the origin and every coordinate unit vector, the
policy is re-expressed through its values at those m+1 anchor points,
which turns all anchor nonnegativity rows into plain variable bounds
and shrinks the LP considerably.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .instances import Instance, InstanceError
from .lp import LinearProgram, solve_lp


@dataclass(frozen=True)
class AffineLayout:
    """Column slices of the compact HRep LP, in declaration order."""

    n: int
    m: int
    L: int

    @property
    def x(self):
        return slice(0, self.n)

    @property
    def z(self):
        return self.n

    @property
    def P(self):
        o = self.n + 1
        return slice(o, o + self.n * self.m)

    @property
    def q(self):
        o = self.n + 1 + self.n * self.m
        return slice(o, o + self.n)

    @property
    def v(self):
        o = self.n + 1 + self.n * self.m + self.n
        return slice(o, o + self.L)

    @property
    def V(self):
        o = self.n + 1 + self.n * self.m + self.n + self.L
        return slice(o, o + self.L * self.m)

    @property
    def U(self):
        o = self.n + 1 + self.n * self.m + self.n + self.L * (self.m + 1)
        return slice(o, o + self.L * self.n)

    @property
    def num_vars(self):
        n, m, L = self.n, self.m, self.L
        return n + 1 + n * m + n + L + L * m + L * n

    def unpack(self, xfull: np.ndarray):
        n, m = self.n, self.m
        return (xfull[self.x].copy(), float(xfull[self.z]),
                xfull[self.P].reshape(n, m).copy(), xfull[self.q].copy())


@dataclass
class AffineResult:
    status: str
    objective: float | None
    x: np.ndarray | None
    P: np.ndarray | None
    q: np.ndarray | None
    iterations: int = 0


def evaluate_policy(P: np.ndarray, q: np.ndarray, h: np.ndarray) -> np.ndarray:
    return P @ np.asarray(h, dtype=float) + q


def build_affine_lp(inst: Instance) -> tuple[LinearProgram, AffineLayout]:
    """Compact LP whose optimum is the best affine-policy value (HRep sets).

    Columns in order x, z, P (row-major), q, v, V (row-major), U
    (row-major); v prices the worst-case objective, column i of V the
    i-th covering row, column j of U the j-th policy-sign row.
    """
    if not inst.uncertainty.is_hrep:
        raise InstanceError("compact affine LP needs an HRep uncertainty set")
    inst.validate()
    m, n = inst.m, inst.n
    R, r = inst.uncertainty.R, inst.uncertainty.r
    L = R.shape[0]
    A, B, d = inst.A, inst.B, inst.d

    lay = AffineLayout(n=n, m=m, L=L)
    nv = lay.num_vars
    ox, oz = 0, n
    oP, oq, ov = n + 1, n + 1 + n * m, n + 1 + n * m + n
    oV, oU = ov + L, ov + L + L * m

    nrows = 1 + m + m + m * m + n + n * m
    G = np.zeros((nrows, nv))
    rhs = np.zeros(nrows)
    row = 0

    # worst-case objective: z - d.q >= r.v with R^T v >= P^T d
    G[row, oz] = 1.0
    G[row, oq:oq + n] = -d
    G[row, ov:ov + L] = -r
    row += 1
    for i in range(m):
        G[row, ov:ov + L] = R[:, i]
        for j in range(n):
            G[row, oP + j * m + i] = -d[j]
        row += 1

    # covering rows: (Ax + Bq)_i >= price of h_i - (BPh)_i over U
    for i in range(m):
        G[row, ox:ox + n] = A[i]
        G[row, oq:oq + n] = B[i]
        G[row, oV + np.arange(L) * m + i] = -r
        row += 1
    for i in range(m):
        for k in range(m):
            G[row, oV + np.arange(L) * m + i] = R[:, k]
            for j in range(n):
                G[row, oP + j * m + k] += B[i, j]
            rhs[row] = 1.0 if i == k else 0.0
            row += 1

    # policy sign: q_j >= price of (-Ph)_j over U
    for j in range(n):
        G[row, oq + j] = 1.0
        G[row, oU + np.arange(L) * n + j] = -r
        row += 1
    for j in range(n):
        for k in range(m):
            G[row, oU + np.arange(L) * n + j] = R[:, k]
            G[row, oP + j * m + k] = 1.0
            row += 1
    assert row == nrows

    obj = np.zeros(nv)
    obj[ox:ox + n] = inst.c
    obj[oz] = 1.0
    lower = np.zeros(nv)
    upper = np.full(nv, np.inf)
    lower[oz] = -np.inf
    lower[oP:oP + n * m] = -np.inf
    lower[oq:oq + n] = -np.inf

    lp = LinearProgram.from_arrays("min", obj, G, [">="] * nrows, rhs,
                                   lower=lower, upper=upper)
    return lp, lay


def _solve_hrep(inst: Instance, tol: float) -> AffineResult:
    lp, lay = build_affine_lp(inst)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        return AffineResult(sol.status, None, None, None, None, sol.iterations)
    x, _, P, q = lay.unpack(sol.x)
    return AffineResult("optimal", sol.objective, x, P, q, sol.iterations)


def _anchor_indices(V: np.ndarray, tol: float = 1e-9) -> list[int] | None:
    """Indices of 0, e_1, ..., e_m inside the vertex array, if all present."""
    m = V.shape[1]
    targets = np.vstack([np.zeros((1, m)), np.eye(m)])
    idx = []
    for t in targets:
        hits = np.where(np.max(np.abs(V - t), axis=1) <= tol)[0]
        if hits.size == 0:
            return None
        idx.append(int(hits[0]))
    return idx


def _solve_vrep_anchored(inst: Instance, anchors: list[int],
                         tol: float) -> AffineResult:
    # variables: x, z, then u_0..u_m with u_k = y at anchor k (all >= 0);
    # y(h) = (1 - sum h) u_0 + sum_k h_k u_k recovers P = [u_k - u_0], q = u_0
    Vx = inst.uncertainty.vertices
    m, n = inst.m, inst.n
    A, B, d = inst.A, inst.B, inst.d
    nu = (m + 1) * n
    nv = n + 1 + nu
    oz, ou = n, n + 1

    def ycoef(h):
        # weight on u_0..u_m for y(h); returns length m+1
        w = np.empty(m + 1)
        w[0] = 1.0 - h.sum()
        w[1:] = h
        return w

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for h in Vx:
        w = ycoef(h)
        # objective epigraph: z >= d . y(h)
        g = np.zeros(nv)
        g[oz] = 1.0
        for k in range(m + 1):
            if w[k] != 0.0:
                g[ou + k * n:ou + (k + 1) * n] -= w[k] * d
        rows.append(g)
        rhs.append(0.0)
        # covering rows with positive right side only: others follow from
        # A, B >= 0, x >= 0 and the policy rows below
        for i in range(m):
            if h[i] <= 1e-12:
                continue
            g = np.zeros(nv)
            g[:n] = A[i]
            for k in range(m + 1):
                if w[k] != 0.0:
                    g[ou + k * n:ou + (k + 1) * n] += w[k] * B[i]
            rows.append(g)
            rhs.append(float(h[i]))
        # y(h) >= 0, unless y(h) is a conic combination of the u_k
        if w[0] < -1e-12:
            for j in range(n):
                g = np.zeros(nv)
                for k in range(m + 1):
                    g[ou + k * n + j] = w[k]
                rows.append(g)
                rhs.append(0.0)

    G = np.asarray(rows)
    obj = np.zeros(nv)
    obj[:n] = inst.c
    obj[oz] = 1.0
    lower = np.zeros(nv)
    lower[oz] = -np.inf
    lp = LinearProgram.from_arrays("min", obj, G, [">="] * len(rows),
                                   np.asarray(rhs), lower=lower)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        return AffineResult(sol.status, None, None, None, None, sol.iterations)
    x = sol.x[:n].copy()
    U = sol.x[ou:].reshape(m + 1, n)
    q = U[0].copy()
    P = (U[1:] - q).T
    return AffineResult("optimal", sol.objective, x, P, q, sol.iterations)


def _solve_vrep_generic(inst: Instance, tol: float) -> AffineResult:
    Vx = inst.uncertainty.vertices
    m, n = inst.m, inst.n
    A, B, d = inst.A, inst.B, inst.d
    oz, oP, oq = n, n + 1, n + 1 + n * m
    nv = n + 1 + n * m + n

    rows: list[np.ndarray] = []
    rhs: list[float] = []
    for h in Vx:
        g = np.zeros(nv)
        g[oz] = 1.0
        for j in range(n):
            g[oP + j * m:oP + (j + 1) * m] -= d[j] * h
        g[oq:oq + n] -= d
        rows.append(g)
        rhs.append(0.0)
        for i in range(m):
            if h[i] <= 1e-12:
                continue  # implied by A, B >= 0 plus the policy rows
            g = np.zeros(nv)
            g[:n] = A[i]
            for j in range(n):
                g[oP + j * m:oP + (j + 1) * m] += B[i, j] * h
            g[oq:oq + n] += B[i]
            rows.append(g)
            rhs.append(float(h[i]))
        for j in range(n):
            g = np.zeros(nv)
            g[oP + j * m:oP + (j + 1) * m] = h
            g[oq + j] = 1.0
            rows.append(g)
            rhs.append(0.0)

    obj = np.zeros(nv)
    obj[:n] = inst.c
    obj[oz] = 1.0
    lower = np.zeros(nv)
    lower[oz] = -np.inf
    lower[oP:] = -np.inf
    lp = LinearProgram.from_arrays("min", obj, np.asarray(rows),
                                   [">="] * len(rows), np.asarray(rhs),
                                   lower=lower)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        return AffineResult(sol.status, None, None, None, None, sol.iterations)
    x = sol.x[:n].copy()
    P = sol.x[oP:oP + n * m].reshape(n, m).copy()
    q = sol.x[oq:oq + n].copy()
    return AffineResult("optimal", sol.objective, x, P, q, sol.iterations)


def solve_affine(inst: Instance, tol: float = 1e-8) -> AffineResult:
    """Best affine-policy value for either uncertainty representation."""
    inst.validate()
    if inst.uncertainty.is_hrep:
        return _solve_hrep(inst, tol)
    anchors = _anchor_indices(inst.uncertainty.vertices)
    if anchors is not None:
        return _solve_vrep_anchored(inst, anchors, tol)
    return _solve_vrep_generic(inst, tol)


def solve_affine_dualized(inst: Instance, tol: float = 1e-8) -> AffineResult:
    """Affine policy applied to the dualized second stage.

    The inner problem is rewritten over W = {w >= 0 : B^T w <= d}; the
    recourse prices the support of U, lam(w) = Lam w + lam0, and each
    robust constraint is dualized over W.  Returns the same optimal
    value as solve_affine (on HRep sets) through an entirely different
    LP, which makes it a useful consistency oracle.
    """
    if not inst.uncertainty.is_hrep:
        raise InstanceError("dualized affine path needs an HRep uncertainty set")
    inst.validate()
    m, n = inst.m, inst.n
    R, r = inst.uncertainty.R, inst.uncertainty.r
    L = R.shape[0]
    A, B, d = inst.A, inst.B, inst.d

    # columns: x, z, Lam (L x m, row-major, free), lam0 (L, free),
    # mu (n), M (L x n, row-major), N (m x n, row-major); last three >= 0
    ox, oz = 0, n
    oL = n + 1
    o0 = oL + L * m
    om = o0 + L
    oM = om + n
    oN = oM + L * n
    nv = oN + m * n

    nrows = 1 + m + L + L * m + m + m * m
    G = np.zeros((nrows, nv))
    rhs = np.zeros(nrows)
    row = 0

    # epigraph: z - r.lam0 >= d.mu with B mu + A x >= Lam^T r
    G[row, oz] = 1.0
    G[row, o0:o0 + L] = -r
    G[row, om:om + n] = -d
    row += 1
    for i in range(m):
        G[row, om:om + n] = B[i]
        G[row, ox:ox + n] = A[i]
        G[row, oL + np.arange(L) * m + i] = -r
        row += 1

    # lam(w) >= 0: lam0_l >= d.M_l with B M_l >= -Lam_l
    for l in range(L):
        G[row, o0 + l] = 1.0
        G[row, oM + l * n:oM + (l + 1) * n] = -d
        row += 1
    for l in range(L):
        for i in range(m):
            G[row, oM + l * n:oM + (l + 1) * n] = B[i]
            G[row, oL + l * m + i] = 1.0
            row += 1

    # support rows R^T lam(w) >= w, coordinate k dualized over W
    for k in range(m):
        G[row, o0:o0 + L] = R[:, k]
        G[row, oN + k * n:oN + (k + 1) * n] = -d
        row += 1
    for k in range(m):
        for i in range(m):
            G[row, oN + k * n:oN + (k + 1) * n] = B[i]
            G[row, oL + np.arange(L) * m + i] = R[:, k]
            rhs[row] = 1.0 if i == k else 0.0
            row += 1
    assert row == nrows

    obj = np.zeros(nv)
    obj[ox:ox + n] = inst.c
    obj[oz] = 1.0
    lower = np.zeros(nv)
    lower[oz] = -np.inf
    lower[oL:o0 + L] = -np.inf  # Lam and lam0 free
    lp = LinearProgram.from_arrays("min", obj, G, [">="] * nrows, rhs,
                                   lower=lower)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        return AffineResult(sol.status, None, None, None, None, sol.iterations)
    return AffineResult("optimal", sol.objective, sol.x[:n].copy(), None, None,
                        sol.iterations)


def solve_affine_symmetric_worstcase(m: int, tol: float = 1e-8):
    """Best symmetric affine policy P = theta I + mu (ee^T - I), q = lam e
    for the deterministic structured family; its value equals the full
    affine optimum there because the instance is permutation invariant.
    Returns (value, theta, mu, lam)."""
    from .instances import gen_worst_case

    inst = gen_worst_case(m)
    B, d = inst.B, inst.d
    Vx = inst.uncertainty.vertices
    # variables (theta, mu, lam, z); y_j(h) = theta h_j + mu (sum h - h_j) + lam
    rows: list[tuple[float, ...]] = []
    rhs: list[float] = []
    for h in Vx:
        s = float(h.sum())
        ycoef = [(float(h[j]), s - float(h[j]), 1.0) for j in range(m)]
        # z >= d . y(h)
        gt = -sum(d[j] * ycoef[j][0] for j in range(m))
        gm = -sum(d[j] * ycoef[j][1] for j in range(m))
        gl = -sum(d[j] * ycoef[j][2] for j in range(m))
        rows.append((gt, gm, gl, 1.0))
        rhs.append(0.0)
        for i in range(m):
            # (B y(h))_i >= h_i
            bt = sum(B[i, j] * ycoef[j][0] for j in range(m))
            bm = sum(B[i, j] * ycoef[j][1] for j in range(m))
            bl = sum(B[i, j] * ycoef[j][2] for j in range(m))
            rows.append((bt, bm, bl, 0.0))
            rhs.append(float(h[i]))
            # y_i(h) >= 0
            rows.append((ycoef[i][0], ycoef[i][1], ycoef[i][2], 0.0))
            rhs.append(0.0)

    # symmetry collapses most rows to exact duplicates
    uniq: dict[tuple, float] = {}
    for g, b in zip(rows, rhs):
        key = tuple(round(v, 12) for v in g) + (round(b, 12),)
        uniq[key] = b
    G = np.array([k[:4] for k in uniq])
    rr = np.array([k[4] for k in uniq])

    lp = LinearProgram.from_arrays(
        "min", [0.0, 0.0, 0.0, 1.0], G, [">="] * len(G), rr,
        lower=[-np.inf] * 4)
    sol = solve_lp(lp, tol=tol)
    if sol.status != "optimal":
        raise InstanceError(f"symmetric policy LP came back {sol.status}")
    th, mu, lam, _ = sol.x
    return float(sol.objective), float(th), float(mu), float(lam)
