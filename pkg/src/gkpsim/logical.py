"""Logical noise channels: cell integrals of channel kernels and the resulting
qudit superoperator in the Pauli-pair representation
N(rho) = sum_{s,t} c_{s,t} P(s) rho P(t)^dag.

Box cells are integrated analytically (per-coordinate complex Gaussians via
the complex error function); other bounded cells go through tensor/triangle
quadrature.  A high-precision mpmath backend covers the deeply squeezed
regime where coefficients underflow double precision.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np
import scipy.special

from .charfun import DIAG_DELTA, FULL, OPERATOR, POINT, ChannelCharFn, GaussianKernel
from .lattice import BoxCell, GkpCode, PrimitiveCell, VoronoiCell
from .symplectic import omega


class DecayViolationError(ValueError):
    """The channel characteristic function does not decay; truncation is meaningless."""


# ---------------------------------------------------------------------------
# complex error function


def complex_erf(z):
    """erf on the complex plane (Faddeeva-backed), with asymptotic guard.

    Accurate to ~1e-13 relative in the strip |Im z| <= 10; for huge |Re z|
    where exp(-z^2) underflows it returns the +-1 asymptote directly.
    """
    z = complex(z)
    if abs(z.real) > 26.5 and z.real * z.real - z.imag * z.imag > 745.0:
        return 1.0 if z.real > 0 else -1.0
    return complex(scipy.special.erf(z))


def _erf_diff_np(z1, z2):
    """erf(z2) - erf(z1) without saturation loss for large same-sign real parts."""
    z1, z2 = complex(z1), complex(z2)
    if z1.real > 4.0 and z2.real > 4.0:
        return complex(scipy.special.erfc(z1) - scipy.special.erfc(z2))
    if z1.real < -4.0 and z2.real < -4.0:
        return complex(scipy.special.erfc(-z2) - scipy.special.erfc(-z1))
    return complex_erf(z2) - complex_erf(z1)


def _erf_diff_mp(z1, z2):
    if mp.re(z1) > 4 and mp.re(z2) > 4:
        return mp.erfc(z1) - mp.erfc(z2)
    if mp.re(z1) < -4 and mp.re(z2) < -4:
        return mp.erfc(-z2) - mp.erfc(-z1)
    return mp.erf(z2) - mp.erf(z1)


class _NumpyBackend:
    name = "numpy"
    pi = np.pi

    @staticmethod
    def to_scalar(x):
        return complex(x)

    exp = staticmethod(lambda z: np.exp(complex(z)))
    sqrt = staticmethod(lambda z: np.sqrt(complex(z)))
    erf_diff = staticmethod(_erf_diff_np)


class _MpmathBackend:
    name = "mpmath"

    def __init__(self, dps: int = 60):
        self.dps = dps

    @property
    def pi(self):
        return mp.pi

    @staticmethod
    def to_scalar(x):
        x = complex(x)
        return mp.mpc(x.real, x.imag)

    exp = staticmethod(mp.exp)
    sqrt = staticmethod(mp.sqrt)
    erf_diff = staticmethod(_erf_diff_mp)


def get_backend(backend):
    if backend in (None, "numpy", "float"):
        return _NumpyBackend()
    if backend == "mpmath":
        return _MpmathBackend()
    if isinstance(backend, (_NumpyBackend, _MpmathBackend)):
        return backend
    raise ValueError(f"unknown backend {backend!r}")


# ---------------------------------------------------------------------------
# truncation window


@dataclass(frozen=True)
class TruncationSpec:
    """Component-wise truncation |s_J|, |t_J| <= s_max."""

    s_max: int = 1

    def __post_init__(self):
        if self.s_max < 0:
            raise ValueError("s_max must be nonnegative")

    def window(self, two_n: int):
        rng = range(-self.s_max, self.s_max + 1)
        return [tuple(s) for s in itertools.product(rng, repeat=two_n)]


# ---------------------------------------------------------------------------
# cell integrals


def _diag_quadratic(kernel: GaussianKernel, code: GkpCode, s, t):
    """Exponent of c_{s,t}(v, v) as (Q_v, b_v, const) in v.

    c_{s,t}(u,v) = c(u + lbar(s), v + lbar(t)) e^{i pi (u^T Om lbar(s) - v^T Om lbar(t))}.
    """
    n = kernel.n_modes
    om = omega(n)
    ls = code.dual_vector(s)
    lt = code.dual_vector(t)
    j = np.vstack([np.eye(2 * n), np.eye(2 * n)])
    c0 = np.concatenate([ls, lt])
    qv = j.T @ kernel.q_matrix @ j
    bv = 2 * j.T @ kernel.q_matrix @ c0 + j.T @ kernel.linear + 1j * np.pi * (om @ (ls - lt))
    const = c0 @ kernel.q_matrix @ c0 + kernel.linear @ c0
    return qv, bv, const


def _gaussian_1d_parts(bk, q, b, lo, hi):
    """(exponent, prefactor) with int_lo^hi exp(-q x^2 + b x) dx = prefactor * exp(exponent).

    Split so callers can sum exponents across coordinates before
    exponentiating; the factored form overflows double precision in the
    deeply squeezed regime even though the product is tiny.
    """
    q = bk.to_scalar(q)
    b = bk.to_scalar(b)
    sq = bk.sqrt(q)
    center = b / (2 * q)
    pref = (bk.sqrt(bk.pi) / (2 * sq)
            * bk.erf_diff(sq * (bk.to_scalar(lo) - center), sq * (bk.to_scalar(hi) - center)))
    return b * b / (4 * q), pref


def box_cell_integral(kernel: GaussianKernel, code: GkpCode, cell: BoxCell, s, t,
                      backend=None):
    """Exact integral of c_{s,t}(v, v) over a box cell.

    Requires the diagonal-restricted quadratic form to be axis-diagonal (true
    for every isotropic single-mode kernel family here).  Delta-constrained
    kernels follow their density conventions: DIAG_DELTA contributes only for
    lbar(s) = lbar(t), POINT only when the point falls in the cell.
    """
    bk = get_backend(backend)
    if kernel.kind == POINT:
        ls = code.dual_vector(s)
        lt = code.dual_vector(t)
        inside = cell.contains(-ls) and cell.contains(-lt)
        return bk.to_scalar(kernel.amp) if inside else bk.to_scalar(0.0)
    if kernel.kind == DIAG_DELTA:
        if not np.array_equal(np.asarray(s, dtype=np.int64), np.asarray(t, dtype=np.int64)):
            return bk.to_scalar(0.0)
        ls = code.dual_vector(s)
        qv = kernel.q_matrix
        bv = 2 * kernel.q_matrix @ ls + kernel.linear
        const = ls @ kernel.q_matrix @ ls + kernel.linear @ ls
    elif kernel.kind == FULL:
        qv, bv, const = _diag_quadratic(kernel, code, s, t)
    else:
        raise ValueError(f"cannot cell-integrate a kernel of kind {kernel.kind}")
    scale = max(1.0, float(np.max(np.abs(qv))))
    if np.max(np.abs(qv - np.diag(np.diag(qv)))) > 1e-10 * scale:
        raise ValueError("diagonal-restricted form is not axis-aligned; use numeric_cell_integral")
    diag = np.diag(qv)
    if np.any(diag.real >= 0):
        raise ValueError("diagonal-restricted form is not decaying; cell integral diverges")
    exponent = bk.to_scalar(const)
    pref = bk.to_scalar(kernel.amp)
    for i, (lo, hi) in enumerate(cell.intervals):
        ex, pf = _gaussian_1d_parts(bk, -diag[i], bv[i], lo, hi)
        exponent = exponent + ex
        pref = pref * pf
    if bk.name == "numpy" and exponent.real < -745.0:
        return 0.0 + 0.0j  # value underflows double precision
    return pref * bk.exp(exponent)


def _cell_quadrature_points(cell: PrimitiveCell, order: int):
    """(points, weights) covering the cell exactly (box tensor or triangulated polygon)."""
    x, w = np.polynomial.legendre.leggauss(order)
    if isinstance(cell, BoxCell):
        axes = []
        for lo, hi in cell.intervals:
            axes.append(((hi - lo) / 2 * x + (hi + lo) / 2, (hi - lo) / 2 * w))
        grids = np.meshgrid(*[a for a, _ in axes], indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=1)
        wt = axes[0][1]
        for _, ww in axes[1:]:
            wt = np.outer(wt, ww).ravel()
        return pts, wt
    if isinstance(cell, VoronoiCell) and cell.dim == 2:
        poly = cell.vertices_2d()
        centroid = poly.mean(axis=0)
        pts_all, wts_all = [], []
        xi = (x + 1) / 2
        wi = w / 2
        for i in range(len(poly)):
            v0, v1, v2 = centroid, poly[i], poly[(i + 1) % len(poly)]
            # collapsed-square map onto the triangle (v0, v1, v2)
            xx, yy = np.meshgrid(xi, xi, indexing="ij")
            px = (1 - xx) * v0[0] + xx * ((1 - yy) * v1[0] + yy * v2[0])
            py = (1 - xx) * v0[1] + xx * ((1 - yy) * v1[1] + yy * v2[1])
            e1x = -v0[0] + (1 - yy) * v1[0] + yy * v2[0]
            e1y = -v0[1] + (1 - yy) * v1[1] + yy * v2[1]
            e2x = xx * (v2[0] - v1[0])
            e2y = xx * (v2[1] - v1[1])
            jac = np.abs(e1x * e2y - e1y * e2x)
            pts_all.append(np.stack([px.ravel(), py.ravel()], axis=1))
            wts_all.append((np.outer(wi, wi) * jac).ravel())
        return np.concatenate(pts_all), np.concatenate(wts_all)
    raise ValueError(f"no quadrature rule for cell type {type(cell).__name__} in dim {cell.dim}")


def _diag_eval_grid(kernel: GaussianKernel, code: GkpCode, s, t, pts: np.ndarray):
    """Vectorized c_{s,t}(v, v) on grid points (FULL kernels; delta kinds handled above)."""
    qv, bv, const = _diag_quadratic(kernel, code, s, t)
    quad = np.einsum("ki,ij,kj->k", pts, qv, pts)
    return kernel.amp * np.exp(quad + pts @ bv + const)


def numeric_cell_integral(kernel: GaussianKernel, code: GkpCode, cell: PrimitiveCell, s, t,
                          order: int = 40, tol: float = 1e-9):
    """Quadrature of c_{s,t}(v, v) over a bounded cell; returns (value, error_estimate).

    The estimate compares two quadrature orders; if it exceeds tol a warning
    is issued (never silently swallowed).
    """
    if kernel.kind == POINT or kernel.kind == DIAG_DELTA:
        val = box_cell_integral(kernel, code, cell, s, t) if isinstance(cell, BoxCell) else None
        if val is None:
            # delta kinds integrate in closed form over any cell via membership
            if kernel.kind == POINT:
                ls, lt = code.dual_vector(s), code.dual_vector(t)
                val = kernel.amp if (cell.contains(-ls) and cell.contains(-lt)) else 0.0
            else:
                if not np.array_equal(np.asarray(s), np.asarray(t)):
                    return 0.0 + 0j, 0.0
                pts, wts = _cell_quadrature_points(cell, order)
                ls = code.dual_vector(s)
                sh = pts + ls
                quad = np.einsum("ki,ij,kj->k", sh, kernel.q_matrix, sh)
                vals = kernel.amp * np.exp(quad + sh @ kernel.linear)
                return complex(vals @ wts), 0.0
        return complex(val), 0.0
    pts1, wts1 = _cell_quadrature_points(cell, order)
    pts2, wts2 = _cell_quadrature_points(cell, order + order // 2)
    v1 = complex(_diag_eval_grid(kernel, code, s, t, pts1) @ wts1)
    v2 = complex(_diag_eval_grid(kernel, code, s, t, pts2) @ wts2)
    err = abs(v1 - v2)
    if err > tol * max(1.0, abs(v2)):
        warnings.warn(f"cell quadrature not converged: estimate {err:.2e} at order {order}")
    return v2, err


# ---------------------------------------------------------------------------
# logical superoperator


def _qudit_xz(d: int):
    x = np.zeros((d, d), dtype=complex)
    for a in range(d):
        x[(a + 1) % d, a] = 1.0
    z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return x, z


def pauli_matrix(dims, s) -> np.ndarray:
    """P_d(s) = prod_j e^{i pi s_j s_{j+n} / d_j} X^{s_j} Z^{s_{j+n}} (integer s, any sign)."""
    s = np.asarray(s, dtype=np.int64)
    n = len(dims)
    out = None
    for j, d in enumerate(dims):
        x, z = _qudit_xz(d)
        phase = np.exp(1j * np.pi * s[j] * s[j + n] / d)
        mat = phase * np.linalg.matrix_power(x, int(s[j] % d)) @ np.linalg.matrix_power(z, int(s[j + n] % d))
        out = mat if out is None else np.kron(out, mat)
    return out


@dataclass
class LogicalSuperop:
    """Qudit superoperator sum_{s,t} c_{s,t} P(s) rho P(t)^dag.

    Coefficients are keyed by integer tuple pairs (s, t).  The realized
    matrix acts on column-major vec(rho).
    """

    dims: tuple
    coeffs: dict
    meta: dict = field(default_factory=dict)

    @property
    def d_total(self) -> int:
        return int(np.prod(self.dims))

    def matrix(self) -> np.ndarray:
        d = self.d_total
        out = np.zeros((d * d, d * d), dtype=complex)
        for (s, t), c in sorted(self.coeffs.items()):
            ps = pauli_matrix(self.dims, s)
            pt = pauli_matrix(self.dims, t)
            out += c * np.kron(pt.conj(), ps)
        return out

    def apply(self, rho: np.ndarray) -> np.ndarray:
        d = self.d_total
        rho = np.asarray(rho, dtype=complex)
        return (self.matrix() @ rho.reshape(-1, order="F")).reshape(d, d, order="F")

    def hermitivity_defect(self) -> float:
        worst = 0.0
        for (s, t), c in self.coeffs.items():
            worst = max(worst, abs(c - np.conj(self.coeffs.get((t, s), 0.0))))
        return worst

    def conjugate_input(self, op: np.ndarray) -> "LogicalSuperop":
        """The composition rho -> self(op rho op^dag), re-expanded over Pauli pairs."""
        op = np.asarray(op, dtype=complex)
        d = self.d_total
        # expand op over the Pauli frame
        gammas = {}
        ranges = [range(dd) for dd in self.dims] + [range(dd) for dd in self.dims]
        for u in itertools.product(*ranges):
            pu = pauli_matrix(self.dims, u)
            g = np.trace(pu.conj().T @ op) / d
            if abs(g) > 1e-16:
                gammas[u] = g
        new = {}
        for (s, t), c in self.coeffs.items():
            for u, gu in gammas.items():
                su, phase_su = _pauli_product_key(self.dims, s, u)
                for w, gw in gammas.items():
                    tw, phase_tw = _pauli_product_key(self.dims, t, w)
                    key = (su, tw)
                    new[key] = new.get(key, 0.0) + c * gu * np.conj(gw) * phase_su * np.conj(phase_tw)
        return LogicalSuperop(self.dims, new, dict(self.meta))

    def to_dict(self) -> dict:
        entries = [{"s": list(s), "t": list(t), "re": float(np.real(c)), "im": float(np.imag(c))}
                   for (s, t), c in sorted(self.coeffs.items())]
        return {"dims": list(self.dims), "coeffs": entries,
                "matrix_re": np.real(self.matrix()).tolist(),
                "matrix_im": np.imag(self.matrix()).tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "LogicalSuperop":
        coeffs = {(tuple(e["s"]), tuple(e["t"])): e["re"] + 1j * e["im"] for e in data["coeffs"]}
        return cls(tuple(data["dims"]), coeffs)


def _pauli_product_key(dims, s, u):
    """P(s) P(u) = phase * P(s + u); returns (tuple(s + u), phase)."""
    s = np.asarray(s, dtype=np.int64)
    u = np.asarray(u, dtype=np.int64)
    n = len(dims)
    phase = 1.0 + 0j
    for j, d in enumerate(dims):
        # single-mode rule: P(s)P(u) = e^{-i pi (s_j u_{j+n} - s_{j+n} u_j)/d} P(s+u)
        phase *= np.exp(-1j * np.pi * (s[j] * u[j + n] - s[j + n] * u[j]) / d)
    return tuple((s + u).tolist()), phase


# ---------------------------------------------------------------------------
# channel construction


def _decay_precheck(cf: ChannelCharFn, code: GkpCode, s_max: int,
                    probe_radius: int = 16, threshold: float = 1e-30):
    """Reject channels whose kernel does not decay along the dual lattice.

    Probes |c| on a far shell (relative to |c(0,0)|) along each generator
    direction and on the diagonal (u = v), which is where loss acting on an
    ideal codestate stays at constant modulus.
    """
    r = max(probe_radius, 4 * (s_max + 1))
    two_n = 2 * code.n_modes
    zero = np.zeros(two_n)

    def probe(u, v, diagonal):
        total = 0.0
        for w, k in cf.terms:
            if k.kind == POINT:
                continue  # concentrated at the origin
            if k.kind == DIAG_DELTA:
                if diagonal:
                    total += abs(w * k.evaluate(u, u))
                continue
            total += abs(w * k.evaluate(u, v))
        return total

    ref = max(probe(zero, zero, True), probe(zero, zero, False), 1e-300)
    worst = 0.0
    worst_shell = None
    for j in range(two_n):
        for sign in (+1, -1):
            s = np.zeros(two_n, dtype=np.int64)
            s[j] = sign * r
            ls = code.dual_vector(s)
            for val, tag in ((probe(ls, zero, False), "off-diagonal"),
                             (probe(ls, ls, True), "diagonal")):
                rel = val / ref
                if rel > worst:
                    worst, worst_shell = rel, (tuple(s.tolist()), tag)
    if worst > threshold:
        raise DecayViolationError(
            f"characteristic function does not decay: relative modulus {worst:.3e} on the "
            f"{worst_shell[1]} shell s = {worst_shell[0]} exceeds {threshold:.1e}"
        )


def logical_channel(code: GkpCode, cell: PrimitiveCell, cf: ChannelCharFn,
                    trunc: TruncationSpec = TruncationSpec(1), backend=None,
                    quad_order: int = 40, decay_threshold: float = 1e-30,
                    probe_radius: int = 16) -> LogicalSuperop:
    """Logical noise superoperator of the channel on the code/cell decoder.

    Coefficients are cell integrals of c_{s,t}(v, v) over the truncation
    window; summation order is fixed (sorted keys) for reproducibility.
    """
    _decay_precheck(cf, code, trunc.s_max, probe_radius, decay_threshold)
    window = trunc.window(2 * code.n_modes)
    bk = get_backend(backend)
    use_box = isinstance(cell, BoxCell)
    coeffs = {}
    for s in window:
        for t in window:
            total = bk.to_scalar(0.0)
            for w, kern in cf.terms:
                if use_box:
                    total = total + bk.to_scalar(w) * box_cell_integral(kern, code, cell, s, t, bk)
                else:
                    val, _ = numeric_cell_integral(kern, code, cell, s, t, order=quad_order)
                    total = total + complex(w) * val
            coeffs[(s, t)] = total
    meta = {"s_max": trunc.s_max, "backend": bk.name}
    if bk.name == "numpy":
        coeffs = {k: complex(v) for k, v in coeffs.items()}
    return LogicalSuperop(code.dims, coeffs, meta)


# ---------------------------------------------------------------------------
# high-precision channel analysis (deep-squeezing regime)


def _mp_pauli(s):
    """Exact 2x2 qubit Pauli P(s) as an mpmath matrix."""
    s1, s2 = int(s[0]), int(s[1])
    phase = mp.exp(1j * mp.pi * s1 * s2 / 2)
    x = mp.matrix([[0, 1], [1, 0]])
    z = mp.matrix([[1, 0], [0, -1]])
    out = mp.eye(2)
    if s1 % 2:
        out = x * out
    if s2 % 2:
        out = out * z
    return phase * out


def suggest_dps(delta: float, margin: int = 60) -> int:
    """Working precision that resolves the envelope-channel infidelity at Delta.

    The smallest structural scale is exp(-pi/(4 Delta^2)), i.e. about
    0.341/Delta^2 decimal digits below unity.
    """
    return int(0.35 / delta ** 2) + margin


def highprec_channel_analysis(cf: ChannelCharFn, code: GkpCode, cell: BoxCell,
                              trunc: TruncationSpec = TruncationSpec(1),
                              dps: int = 50) -> dict:
    """Orthonormalized logical-channel metrics computed in arbitrary precision.

    Returns {"infidelity", "fidelity", "tp_defect", "min_choi_eig", "gram"}
    as mpmath numbers.  Restricted to single-mode qubit codes over box cells;
    kernels are composed in double precision (their parameters are O(1/Delta^2)
    and well conditioned) while every erf difference and coefficient is
    accumulated in mpmath, which is what the deeply squeezed regime needs.
    """
    if code.dims != (2,):
        raise ValueError("high-precision analysis supports single-mode qubit codes")
    _decay_precheck(cf, code, trunc.s_max)
    old_dps = mp.mp.dps
    mp.mp.dps = dps
    try:
        bk = _MpmathBackend(dps)
        window = trunc.window(2)
        coeffs = {}
        for s in window:
            for t in window:
                total = mp.mpc(0)
                for w, kern in cf.terms:
                    total += bk.to_scalar(w) * box_cell_integral(kern, code, cell, s, t, bk)
                coeffs[(s, t)] = total

        paulis = {s: _mp_pauli(s) for s in window}
        # Gram G[mu, nu] = sum c_{s,t} <mu| P(t)^dag P(s) |nu>
        gram = mp.zeros(2, 2)
        for (s, t), c in coeffs.items():
            m = paulis[t].H * paulis[s]
            for mu in range(2):
                for nu in range(2):
                    gram[mu, nu] += c * m[mu, nu]
        n0 = mp.sqrt(mp.re(gram[0, 0]))
        n1 = mp.sqrt(mp.re(gram[1, 1]))
        overlap = gram[0, 1]
        r = abs(overlap) / (n0 * n1)
        phi = mp.arg(overlap) if abs(overlap) > mp.mpf("1e-100") * n0 * n1 else mp.mpf(0)
        rp = 1 / mp.sqrt(1 + r) + 1 / mp.sqrt(1 - r)
        rm = 1 / mp.sqrt(1 + r) - 1 / mp.sqrt(1 - r)
        c_mat = mp.matrix([
            [rp / (2 * n0), mp.exp(-1j * phi) * rm / (2 * n1)],
            [mp.exp(1j * phi) * rm / (2 * n0), rp / (2 * n1)],
        ])
        c_hat = c_mat.T

        ops = {s: paulis[s] * c_hat for s in window}
        traces = {s: ops[s][0, 0] + ops[s][1, 1] for s in window}
        fe = mp.mpc(0)
        tp = mp.zeros(2, 2)
        choi = mp.zeros(4, 4)
        for (s, t), c in coeffs.items():
            fe += c * traces[s] * mp.conj(traces[t])
            m = ops[t].H * ops[s]
            for a in range(2):
                for b in range(2):
                    tp[a, b] += c * m[a, b]
            for i in range(2):
                for a in range(2):
                    for j in range(2):
                        for b in range(2):
                            choi[i * 2 + a, j * 2 + b] += c * ops[s][a, i] * mp.conj(ops[t][b, j])
        fe = mp.re(fe) / 4
        fidelity = (2 * fe + 1) / 3
        tp_defect = max(abs(tp[a, b] - (1 if a == b else 0)) for a in range(2) for b in range(2))
        choi_h = (choi + choi.H) / 2
        eigs = mp.eighe(choi_h, eigvals_only=True)
        min_eig = min(mp.re(e) for e in eigs)
        return {
            "infidelity": 1 - fidelity,
            "fidelity": fidelity,
            "tp_defect": tp_defect,
            "min_choi_eig": min_eig,
            "gram": gram,
        }
    finally:
        mp.mp.dps = old_dps
