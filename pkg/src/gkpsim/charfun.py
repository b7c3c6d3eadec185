"""Characteristic functions of Gaussian unitaries and channels.

A channel N acts as N(rho) = integral du dv c(u,v) W(u) rho W(v)^dag with
W(v) = exp(sqrt(2 pi) i xi^T Omega v).  Kernels here are Gaussians in the
stacked variable w = (u, v), optionally constrained by delta^{2n}(u - v)
(classical displacement noise) or concentrated at the origin (identity).

Composition of two kernels is evaluated in closed form by completing the
square; no numerical integration is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .symplectic import assert_symplectic, omega

FULL = "full"
DIAG_DELTA = "diag_delta"   # f(u) * delta^{2n}(u - v)
POINT = "point"             # amp * delta^{2n}(u) delta^{2n}(v)
OPERATOR = "operator"       # kernel in a single argument: c(v) of an operator


def sqrt_det_rhp(m: np.ndarray) -> complex:
    """sqrt(det m) for a matrix whose eigenvalues lie in the right half-plane.

    The branch is the analytic continuation from positive-definite matrices,
    which equals the product of principal square roots of the eigenvalues.
    """
    lam = np.linalg.eigvals(m)
    if np.any(lam.real <= 0):
        raise ValueError("matrix has eigenvalues outside the right half-plane")
    return complex(np.prod(np.sqrt(lam)))


@dataclass
class GaussianKernel:
    """amp * exp(w^T Q w + L^T w) on w = (u, v), or a delta-constrained variant.

    For kind == DIAG_DELTA, Q and L have dimension 2n and parameterize the
    density f(u) multiplying delta^{2n}(u - v).  For kind == POINT only amp
    is meaningful.
    """

    n_modes: int
    amp: complex
    q_matrix: np.ndarray
    linear: np.ndarray = None
    kind: str = FULL
    channel_tn: tuple = None   # optional (T, N) metadata for Gaussian channels

    def __post_init__(self):
        dim = 4 * self.n_modes if self.kind == FULL else 2 * self.n_modes
        if self.kind == POINT:
            self.q_matrix = np.zeros((0, 0), dtype=complex)
            self.linear = np.zeros(0, dtype=complex)
            return
        self.q_matrix = np.asarray(self.q_matrix, dtype=complex)
        if self.q_matrix.shape != (dim, dim):
            raise ValueError(f"Q must be {dim}x{dim}, got {self.q_matrix.shape}")
        if np.max(np.abs(self.q_matrix - self.q_matrix.T)) > 1e-12 * max(1.0, np.max(np.abs(self.q_matrix))):
            raise ValueError("Q must be symmetric")
        if self.linear is None:
            self.linear = np.zeros(dim, dtype=complex)
        else:
            self.linear = np.asarray(self.linear, dtype=complex)

    def evaluate(self, u, v) -> complex:
        """Kernel value at (u, v).

        Delta-constrained kernels return the density against the delta factor:
        the smooth prefactor f(u) for DIAG_DELTA (meaningful on u == v), and
        amp for POINT (meaningful at the origin).
        """
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == FULL:
            w = np.concatenate([u, v])
            return self.amp * np.exp(w @ self.q_matrix @ w + self.linear @ w)
        if self.kind in (DIAG_DELTA, OPERATOR):
            return self.amp * np.exp(u @ self.q_matrix @ u + self.linear @ u)
        return self.amp

    def conjugate_pair(self) -> "GaussianKernel":
        """Kernel of the Hermitian-conjugate integrand, c(v, u)^*."""
        if self.kind != FULL:
            return GaussianKernel(self.n_modes, np.conj(self.amp), np.conj(self.q_matrix),
                                  np.conj(self.linear), self.kind, self.channel_tn)
        n2 = 2 * self.n_modes
        perm = np.concatenate([np.arange(n2, 2 * n2), np.arange(n2)])
        q = np.conj(self.q_matrix)[np.ix_(perm, perm)]
        lin = np.conj(self.linear)[perm]
        return GaussianKernel(self.n_modes, np.conj(self.amp), q, lin, FULL)


@dataclass
class ChannelCharFn:
    """Weighted sum of Gaussian kernels, optionally from a quadrature family."""

    n_modes: int
    terms: list  # of (weight: complex, GaussianKernel)
    quadrature: dict = None  # {"nodes": [...], "weights": [...]} when applicable

    def evaluate(self, u, v) -> complex:
        return sum(w * k.evaluate(u, v) for w, k in self.terms)

    def __len__(self):
        return len(self.terms)

    @classmethod
    def single(cls, kernel: GaussianKernel) -> "ChannelCharFn":
        return cls(kernel.n_modes, [(1.0 + 0j, kernel)])

    def to_dict(self) -> dict:
        out = {"n_modes": self.n_modes, "terms": []}
        for w, k in self.terms:
            out["terms"].append({
                "weight": [w.real, w.imag] if isinstance(w, complex) else [float(w), 0.0],
                "kind": k.kind,
                "amp": [complex(k.amp).real, complex(k.amp).imag],
                "q_re": np.real(k.q_matrix).tolist(),
                "q_im": np.imag(k.q_matrix).tolist(),
                "linear_re": np.real(k.linear).tolist(),
                "linear_im": np.imag(k.linear).tolist(),
            })
        if self.quadrature is not None:
            out["quadrature"] = {key: list(map(float, val)) for key, val in self.quadrature.items()}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelCharFn":
        terms = []
        for t in data["terms"]:
            q = np.array(t["q_re"]) + 1j * np.array(t["q_im"])
            lin = np.array(t["linear_re"]) + 1j * np.array(t["linear_im"])
            k = GaussianKernel(data["n_modes"], t["amp"][0] + 1j * t["amp"][1], q, lin, t["kind"])
            terms.append((t["weight"][0] + 1j * t["weight"][1], k))
        quad = data.get("quadrature")
        return cls(data["n_modes"], terms, quad)

    @classmethod
    def from_json(cls, text: str) -> "ChannelCharFn":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# constructors


def gaussian_unitary_charfun(s_matrix, tol: float = 1e-10) -> GaussianKernel:
    """Characteristic function c_S(v) of a Gaussian unitary, as a kernel in v only.

    c_S(v) = exp(i pi v^T M v) / sqrt(|det(S - I)|),
    M = Omega (S + I) (S - I)^{-1} / 2, for the representative with
    Arg(tr U_S) = 0.  Raises if S - I is singular; factor S = S1 S2 and
    compose in that case.
    """
    s = np.asarray(s_matrix, dtype=float)
    assert_symplectic(s)
    n = s.shape[0] // 2
    si = s - np.eye(2 * n)
    if abs(np.linalg.det(si)) < tol:
        raise ValueError(
            "S - I is singular: factor S = S1 S2 with both factors regular and compose"
        )
    m = 0.5 * omega(n) @ (s + np.eye(2 * n)) @ np.linalg.inv(si)
    if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
        raise RuntimeError("M is not symmetric; S is not symplectic enough")
    m = (m + m.T) / 2
    amp = 1.0 / np.sqrt(abs(np.linalg.det(si)))
    return GaussianKernel(n, amp, 1j * np.pi * m, np.zeros(2 * n), kind=OPERATOR)


def kraus_pair_kernel(op_kernel: "GaussianKernel") -> GaussianKernel:
    """Channel kernel c(u, v) = c_E(u) c_E(v)^* from an operator kernel c_E."""
    if op_kernel.kind != OPERATOR:
        raise ValueError("expected an operator kernel")
    n = op_kernel.n_modes
    n2 = 2 * n
    q = np.zeros((2 * n2, 2 * n2), dtype=complex)
    q[:n2, :n2] = op_kernel.q_matrix
    q[n2:, n2:] = np.conj(op_kernel.q_matrix)
    lin = np.concatenate([op_kernel.linear, np.conj(op_kernel.linear)])
    amp = op_kernel.amp * np.conj(op_kernel.amp)
    return GaussianKernel(n, amp, q, lin, FULL)


def gaussian_channel_charfun(t_matrix, n_matrix, check_cptp: bool = False) -> GaussianKernel:
    """Kernel of the Gaussian channel (T, N): V -> T V T^T + N.

    Requires det(T - I) != 0; T = I channels are delta-constrained, use
    displacement_noise_charfun.
    """
    t = np.asarray(t_matrix, dtype=float)
    nn = np.asarray(n_matrix, dtype=float)
    two_n = t.shape[0]
    n = two_n // 2
    om = omega(n)
    ti = t - np.eye(two_n)
    if abs(np.linalg.det(ti)) < 1e-10:
        raise ValueError("T - I is singular; use a delta-kernel constructor")
    if check_cptp:
        herm = nn + 0.5j * om - 0.5j * t @ om @ t.T
        ev = np.linalg.eigvalsh((herm + herm.conj().T) / 2)
        if ev.min() < -1e-10:
            raise ValueError("(T, N) is not a valid CPTP Gaussian channel")
    ti_inv = np.linalg.inv(ti)
    l_mat = om @ ti_inv @ nn @ ti_inv.T @ om.T
    m = 0.5 * om @ (t + np.eye(two_n)) @ ti_inv
    ms = (m + m.T) / 2
    ma = (m - m.T) / 2
    quu = 1j * np.pi * ms - np.pi * l_mat
    qvv = -1j * np.pi * ms - np.pi * l_mat
    quv = 1j * np.pi * ma + np.pi * l_mat
    q = np.block([[quu, quv], [quv.T, qvv]])
    amp = 1.0 / abs(np.linalg.det(ti))
    return GaussianKernel(n, amp, q, kind=FULL, channel_tn=(t, nn))


def loss_charfun(gamma: float) -> ChannelCharFn:
    """Single-mode pure loss, gamma = 1 - e^{-kappa t}."""
    if not 0 < gamma < 1:
        raise ValueError(f"loss rate must lie in (0, 1), got {gamma}")
    tau = np.sqrt(1 - gamma)
    return ChannelCharFn.single(gaussian_channel_charfun(tau * np.eye(2), (gamma / 2) * np.eye(2)))


def amplification_charfun(g: float) -> ChannelCharFn:
    """Single-mode quantum-limited amplification, g = e^{kappa t} > 1."""
    if g <= 1:
        raise ValueError(f"gain must exceed 1, got {g}")
    return ChannelCharFn.single(
        gaussian_channel_charfun(np.sqrt(g) * np.eye(2), ((g - 1) / 2) * np.eye(2))
    )


def random_displacement_charfun(sigma: float) -> ChannelCharFn:
    """Gaussian random displacement noise: c(u,v) = sigma^-2 e^{-pi|u|^2/sigma^2} delta^2(u-v)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    k = GaussianKernel(1, sigma ** -2.0, (-np.pi / sigma ** 2) * np.eye(2), kind=DIAG_DELTA,
                       channel_tn=(np.eye(2), sigma ** 2 * np.eye(2)))
    return ChannelCharFn.single(k)


def displacement_noise_from_n(n_matrix) -> ChannelCharFn:
    """Classical displacement noise with covariance update V -> V + N (T = I)."""
    nn = np.asarray(n_matrix, dtype=float)
    two_n = nn.shape[0]
    n = two_n // 2
    amp = 1.0 / np.sqrt(np.linalg.det(nn))
    k = GaussianKernel(n, amp, -np.pi * np.linalg.inv(nn), kind=DIAG_DELTA,
                       channel_tn=(np.eye(two_n), nn))
    return ChannelCharFn.single(k)


def identity_charfun(n: int = 1) -> ChannelCharFn:
    return ChannelCharFn(n, [(1.0 + 0j, GaussianKernel(n, 1.0 + 0j, None, kind=POINT))])


def _envelope_operator_kernel(z: complex) -> GaussianKernel:
    """Operator kernel of e^{-z a^dag a} (single mode), z with positive real part.

    c(v) = exp(-(pi/2) coth(z/2) |v|^2) / (1 - e^{-z}).
    """
    coth = 1.0 / np.tanh(z / 2.0)
    amp = 1.0 / (1.0 - np.exp(-z))
    return GaussianKernel(1, amp, (-np.pi / 2) * coth * np.eye(2), np.zeros(2), kind=OPERATOR)


def envelope_charfun(delta: float) -> ChannelCharFn:
    """Kraus-form kernel of the (non-TP) envelope map rho -> E rho E^dag, E = e^{-Delta^2 n}."""
    if delta <= 0:
        raise ValueError(f"Delta must be positive, got {delta}")
    return ChannelCharFn.single(kraus_pair_kernel(_envelope_operator_kernel(delta ** 2)))


def dephased_envelope_charfun(sigma: float, delta: float, nodes: int = 64) -> ChannelCharFn:
    """White-noise dephasing composed with the envelope, D^sigma o E^Delta.

    Each Gauss-Hermite node phi contributes the Kraus pair of the complex
    envelope e^{-(Delta^2 - i phi) n}; the raw dephasing kernel is never
    formed standalone (its phi -> 0 prefactor is non-integrable).
    """
    if delta <= 0:
        raise ValueError(f"Delta must be positive, got {delta}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0:
        return envelope_charfun(delta)
    if nodes < 8:
        raise ValueError("need at least 8 quadrature nodes")
    xs, ws = np.polynomial.hermite.hermgauss(nodes)
    terms = []
    phis = np.sqrt(2.0) * sigma * xs
    for x, w, phi in zip(xs, ws, phis):
        kern = kraus_pair_kernel(_envelope_operator_kernel(delta ** 2 - 1j * phi))
        terms.append((w / np.sqrt(np.pi) + 0j, kern))
    return ChannelCharFn(1, terms, quadrature={"nodes": phis, "weights": ws / np.sqrt(np.pi)})


# ---------------------------------------------------------------------------
# composition


def _compose_kernels(outer: GaussianKernel, inner: GaussianKernel) -> GaussianKernel:
    """Closed-form Gaussian convolution
    c(u,v) = int du~ dv~ e^{i pi (u^T Om u~ - v^T Om v~)} c_in(u-u~, v-v~) c_out(u~, v~).
    """
    n = inner.n_modes
    n2 = 2 * n
    om = omega(n)
    z = np.zeros((n2, n2))

    if outer.kind == POINT:
        return GaussianKernel(n, outer.amp * inner.amp, inner.q_matrix, inner.linear, inner.kind,
                              inner.channel_tn)
    if inner.kind == POINT:
        # c(u, v) = amp_in * e^{i pi (u^T Om u - v^T Om v)} c_out(u, v) = amp_in * c_out(u, v)
        return GaussianKernel(n, outer.amp * inner.amp, outer.q_matrix, outer.linear, outer.kind,
                              outer.channel_tn)

    if outer.kind == FULL and inner.kind == FULL:
        p = 1j * np.pi * np.block([[om, z], [z, -om]])  # phase = w^T P x, x = (u~, v~)
        a = inner.q_matrix + outer.q_matrix
        b_mat = p.T - 2 * inner.q_matrix
        b0 = outer.linear - inner.linear
        a_inv = np.linalg.inv(a)
        q = inner.q_matrix - 0.25 * b_mat.T @ a_inv @ b_mat
        lin = inner.linear - 0.5 * b_mat.T @ a_inv @ b0
        amp = (inner.amp * outer.amp * np.pi ** n2 / sqrt_det_rhp(-a)
               * np.exp(-0.25 * b0 @ a_inv @ b0))
        return GaussianKernel(n, amp, (q + q.T) / 2, lin, FULL)

    if outer.kind == DIAG_DELTA and inner.kind == FULL:
        # integrate over u~ only, v~ = u~ + (v - u) on the delta support => w_in = w0 - J u~
        j = np.vstack([np.eye(n2), np.eye(n2)])
        duv = np.hstack([np.eye(n2), -np.eye(n2)])
        a = outer.q_matrix + j.T @ inner.q_matrix @ j
        b_mat = -2 * j.T @ inner.q_matrix + 1j * np.pi * om.T @ duv
        b0 = outer.linear - j.T @ inner.linear
        a_inv = np.linalg.inv(a)
        q = inner.q_matrix - 0.25 * b_mat.T @ a_inv @ b_mat
        lin = inner.linear - 0.5 * b_mat.T @ a_inv @ b0
        amp = (inner.amp * outer.amp * np.pi ** n / sqrt_det_rhp(-a)
               * np.exp(-0.25 * b0 @ a_inv @ b0))
        return GaussianKernel(n, amp, (q + q.T) / 2, lin, FULL)

    if outer.kind == FULL and inner.kind == DIAG_DELTA:
        # inner delta sets u - u~ = v - v~ = y; integrate over y:
        # c(u,v) = int dy f_in(y) e^{i pi (u^T Om (u-y) - v^T Om (v-y))} c_out(u-y, v-y)
        j = np.vstack([np.eye(n2), np.eye(n2)])
        duv = np.hstack([np.eye(n2), -np.eye(n2)])
        a = inner.q_matrix + j.T @ outer.q_matrix @ j
        # expansion in y around w0=(u,v): c_out at (w0 - J y); phase -i pi (u-v)^T Om y
        b_mat = -2 * j.T @ outer.q_matrix - 1j * np.pi * om.T @ duv
        b0 = inner.linear - j.T @ outer.linear
        a_inv = np.linalg.inv(a)
        q = outer.q_matrix - 0.25 * b_mat.T @ a_inv @ b_mat
        lin = outer.linear - 0.5 * b_mat.T @ a_inv @ b0
        amp = (inner.amp * outer.amp * np.pi ** n / sqrt_det_rhp(-a)
               * np.exp(-0.25 * b0 @ a_inv @ b0))
        return GaussianKernel(n, amp, (q + q.T) / 2, lin, FULL)

    if outer.kind == DIAG_DELTA and inner.kind == DIAG_DELTA:
        # classical convolution of the two densities
        a = inner.q_matrix + outer.q_matrix
        b_mat = -2 * inner.q_matrix
        b0 = outer.linear - inner.linear
        a_inv = np.linalg.inv(a)
        q = inner.q_matrix - 0.25 * b_mat.T @ a_inv @ b_mat
        lin = inner.linear - 0.5 * b_mat.T @ a_inv @ b0
        amp = (inner.amp * outer.amp * np.pi ** n / sqrt_det_rhp(-a)
               * np.exp(-0.25 * b0 @ a_inv @ b0))
        return GaussianKernel(n, amp, (q + q.T) / 2, lin, DIAG_DELTA)

    raise ValueError(f"unsupported kernel kinds {outer.kind} o {inner.kind}")


def compose(outer: ChannelCharFn, inner: ChannelCharFn) -> ChannelCharFn:
    """Characteristic function of outer o inner (inner applied first)."""
    if outer.n_modes != inner.n_modes:
        raise ValueError("mode counts differ")
    # (T, N)-tagged single-kernel channels compose at the (T, N) level, which
    # also covers compositions that degenerate to delta kernels (T2 T1 = I).
    if (len(outer) == 1 and len(inner) == 1
            and outer.terms[0][1].channel_tn is not None
            and inner.terms[0][1].channel_tn is not None):
        w = outer.terms[0][0] * inner.terms[0][0]
        t2, n2m = outer.terms[0][1].channel_tn
        t1, n1m = inner.terms[0][1].channel_tn
        t = t2 @ t1
        nn = t2 @ n1m @ t2.T + n2m
        if abs(np.linalg.det(t - np.eye(t.shape[0]))) < 1e-10:
            if np.max(np.abs(t - np.eye(t.shape[0]))) > 1e-9:
                raise ValueError("composite T - I is singular but T != I; not representable")
            out = displacement_noise_from_n(nn)
        else:
            out = ChannelCharFn.single(gaussian_channel_charfun(t, nn))
        return ChannelCharFn(outer.n_modes, [(w, out.terms[0][1])])
    terms = []
    for w2, k2 in outer.terms:
        for w1, k1 in inner.terms:
            try:
                terms.append((w1 * w2, _compose_kernels(k2, k1)))
            except ValueError as exc:
                raise ValueError(f"divergent composition: {exc}") from exc
    return ChannelCharFn(outer.n_modes, terms)


# ---------------------------------------------------------------------------
# diagnostics


def hermitian_defect(cf: ChannelCharFn, n_samples: int = 100, scale: float = 0.7, rng=None) -> float:
    """max |c(u,v) - c(v,u)^*| over random points (0 for valid channel kernels).

    Delta-constrained kernels are supported only on u = v, so channels
    containing them are sampled on the diagonal (where Hermitivity requires
    the density to be real).
    """
    rng = np.random.default_rng(1) if rng is None else rng
    diagonal_only = any(k.kind != FULL for _, k in cf.terms)
    worst = 0.0
    for _ in range(n_samples):
        u = rng.normal(size=2 * cf.n_modes) * scale
        v = u if diagonal_only else rng.normal(size=2 * cf.n_modes) * scale
        worst = max(worst, abs(cf.evaluate(u, v) - np.conj(cf.evaluate(v, u))))
    return worst


def trace_preservation_defect(cf: ChannelCharFn) -> float:
    """Residual of the regularized TP condition at the u = 0 slice.

    The TP identity integral c(u+v, v) e^{-i pi u^T Om v} dv = delta(u)
    reduces, for a single Gaussian kernel, to three closed-form conditions:
    the diagonal-restricted quadratic form vanishes, the delta's argument is a
    real linear map B u, and amp (2 pi)^{2n} / |det B| = 1.  Returns the max
    violation; raises for multi-term quadrature families (not spot-checkable).
    """
    if len(cf) != 1:
        raise ValueError("TP spot-check applies to single-kernel channels only")
    k = cf.terms[0][1]
    w = cf.terms[0][0]
    n = cf.n_modes
    n2 = 2 * n
    if k.kind == POINT:
        return abs(w * k.amp - 1.0)
    if k.kind == DIAG_DELTA:
        # total probability of the classical displacement density
        a = -k.q_matrix
        val = w * k.amp * np.pi ** n / sqrt_det_rhp(a) * np.exp(0.25 * k.linear @ np.linalg.inv(a) @ k.linear)
        return abs(val - 1.0)
    om = omega(n)
    j = np.vstack([np.eye(n2), np.eye(n2)])
    e_u = np.vstack([np.eye(n2), np.zeros((n2, n2))])
    q_diag = j.T @ k.q_matrix @ j
    lin_diag = j.T @ k.linear
    b_of_u = 2 * j.T @ k.q_matrix @ e_u - 1j * np.pi * om.T
    b_real = -1j * b_of_u
    defect = float(np.max(np.abs(q_diag)))
    defect = max(defect, float(np.max(np.abs(lin_diag))))
    defect = max(defect, float(np.max(np.abs(b_real.imag))))
    density = w * k.amp * (2 * np.pi) ** n2 / abs(np.linalg.det(b_real.real))
    defect = max(defect, abs(density - 1.0))
    return defect


def transform_gaussian_state(cf: ChannelCharFn, mu, v_cov):
    """Push a Gaussian state (mean mu, covariance V) through the channel.

    Evaluates the closed-form integral of the state characteristic function
    against the channel kernel and reads the output moments back off.  Used
    to validate kernels against the moment update V -> T V T^T + N.
    """
    mu = np.asarray(mu, dtype=float)
    v_cov = np.asarray(v_cov, dtype=float)
    n = cf.n_modes
    n2 = 2 * n
    om = omega(n)
    # state kernel: c_rho(y) = exp(-pi y^T (Om V Om^T) y - i pi (Om mu)^T y)
    q_rho = -np.pi * om @ v_cov @ om.T + 0j
    l_rho = -1j * np.pi * om @ mu
    amp_acc = 0.0
    q_acc = None
    l_acc = None
    for w, k in cf.terms:
        if k.kind == DIAG_DELTA:
            # classical displacement noise multiplies c_rho by the Fourier
            # transform of the displacement density f:
            # c_out(x) = c_rho(x) * int dy f(y) e^{-2 i pi y^T Om x}
            a = -k.q_matrix
            a_inv = np.linalg.inv(a)
            pref = w * k.amp * np.pi ** n / sqrt_det_rhp(a) * np.exp(0.25 * k.linear @ a_inv @ k.linear)
            q_term = q_rho - np.pi ** 2 * om @ a_inv @ om.T
            l_term = l_rho + 1j * np.pi * om @ a_inv @ k.linear
            amp_term = pref
        elif k.kind == POINT:
            q_term, l_term, amp_term = q_rho, l_rho, w * k.amp
        else:
            # c_out(x) = int du dv c(u,v) e^{i pi x^T Om v} e^{i pi (x+v)^T Om u} c_rho(x + v - u):
            # Gaussian integral over z = (u, v) with c_rho argument x + G z, G = [-I, I]
            g = np.hstack([-np.eye(n2), np.eye(n2)])
            cross = np.block([[np.zeros((n2, n2)), 0.5j * np.pi * om.T],
                              [0.5j * np.pi * om, np.zeros((n2, n2))]])  # i pi v^T Om u
            a = k.q_matrix + g.T @ q_rho @ g + cross
            b_x = 2 * g.T @ q_rho + np.vstack([1j * np.pi * om.T, 1j * np.pi * om.T])
            b0 = k.linear + g.T @ l_rho
            a_inv = np.linalg.inv(a)
            q_term = q_rho - 0.25 * b_x.T @ a_inv @ b_x
            l_term = l_rho - 0.5 * b_x.T @ a_inv @ b0
            amp_term = w * k.amp * np.pi ** n2 / sqrt_det_rhp(-a) * np.exp(-0.25 * b0 @ a_inv @ b0)
        if q_acc is None:
            q_acc, l_acc, amp_acc = q_term, l_term, amp_term
        else:
            if np.max(np.abs(q_term - q_acc)) > 1e-9 or np.max(np.abs(l_term - l_acc)) > 1e-9:
                raise ValueError("multi-term channel is not Gaussian; cannot extract moments")
            amp_acc += amp_term
    q_acc = (q_acc + q_acc.T) / 2
    v_out = np.real(-om.T @ q_acc @ om / np.pi)
    mu_out = np.real(1j * (om.T @ l_acc) / np.pi)
    return mu_out, v_out, amp_acc
