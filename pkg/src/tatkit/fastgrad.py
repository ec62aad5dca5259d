"""Almost-linear gradient engine.

Builds low-rank factor triples for the attention matrix, the residual-driven
matrix W, and the two softmax-Jacobian pieces Pa and Pb, then contracts the
concatenated factors against A1, A2, A3.  No step ever materializes an
n x n^2 (or even n x n) buffer; everything is n x k for small ranks k.
"""

import time
import tracemalloc
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError, ValidationError
from .lowrank import RANK_CAP, LowRankTriple, build_F_factors, choose_degree
from .tensorops import row_kron

EPS_NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class FastGradientReport:
    """Output of :func:`grad_fast` plus rank/ timing/ error bookkeeping.

    ``eps_target`` is a worst-case runtime bound on the gradient error,
    derived from the requested eps and the instance magnitudes; the measured
    error is typically far below it.  ``peak_bytes`` is filled only on
    audited runs.
    """

    g_tilde: np.ndarray
    k1: int
    k2: int
    k3: int
    k4: int
    k5: int
    degree: int
    eps_requested: float
    eps_internal: float
    eps_target: float
    stage_timings: dict
    peak_bytes: int = 0


def build_residual_U2(inst, f_factors):
    """Residual U2 = U1 @ ((V1.T @ A4 Y1) * (W1.T @ A5 Y2)) - E, shape n x d.

    The middle factor applies the Gram trick, so the cost is O(n k1 d) and
    the n^2-row value matrix never exists.
    """
    _, _, _, v1h, v2h = inst.projected()
    mid = (f_factors.V.T @ v1h) * (f_factors.W.T @ v2h)
    return f_factors.U @ mid - inst.E


def build_W_factors(inst, u2):
    """Factor triple for W: (U2, A4 Y1, A5 Y2), rank d (exact given U2)."""
    u2 = np.asarray(u2, dtype=np.float64)
    if u2.shape != (inst.n, inst.d):
        raise ValidationError(
            f"u2 must have shape ({inst.n}, {inst.d}), got {u2.shape}"
        )
    _, _, _, v1h, v2h = inst.projected()
    return LowRankTriple(U=u2, V=v1h, W=v2h)


def build_Pa_factors(f_factors, w_factors):
    """Factor triple for Pa = F o W via row-wise products, rank k1*k2."""
    if f_factors.n != w_factors.n:
        raise ValidationError(
            f"factor row counts differ: {f_factors.n} vs {w_factors.n}"
        )
    k3 = f_factors.k * w_factors.k
    if k3 > RANK_CAP:
        raise ValidationError(f"Pa rank k1*k2 = {k3} exceeds rank cap {RANK_CAP}")
    return LowRankTriple(
        U=row_kron(f_factors.U, w_factors.U),
        V=row_kron(f_factors.V, w_factors.V),
        W=row_kron(f_factors.W, w_factors.W),
    )


def build_Pb_factors(f_factors, w_factors):
    """Factor triple for Pb (rows R_j * F_j) plus the per-row scalars R.

    R[j] = U1[j] @ ((V1.T V2) * (W1.T W2)) @ U2[j]; the two k1 x k2 Gram
    matrices are formed once, then each row costs O(k1 k2).
    """
    if f_factors.n != w_factors.n:
        raise ValidationError(
            f"factor row counts differ: {f_factors.n} vs {w_factors.n}"
        )
    gram = (f_factors.V.T @ w_factors.V) * (f_factors.W.T @ w_factors.W)
    r_tilde = kernels.bilinear_rows(f_factors.U, gram, w_factors.U)
    triple = LowRankTriple(
        U=r_tilde[:, None] * f_factors.U,
        V=f_factors.V,
        W=f_factors.W,
    )
    return triple, r_tilde


def _colkron_inf_norm(a, b):
    # max |col_kron(a, b)| without forming it: per-column max product
    return float((np.abs(a).max(axis=0) * np.abs(b).max(axis=0)).max())


def _error_budget(inst, eps_internal, u2):
    # worst-case amplification of the entrywise F error through the pipeline;
    # rows of the (approximate) attention matrix sum to 1 and stay in (0, 1]
    n, d = inst.n, inst.d
    _, _, _, v1h, v2h = inst.projected()
    h_inf = _colkron_inf_norm(v1h, v2h)
    delta_f = eps_internal
    delta_v = min(2.0, n * n * delta_f) * h_inf
    w_inf = d * (float(np.abs(u2).max()) + delta_v) * h_inf
    delta_w = d * delta_v * h_inf
    delta_pa = delta_w + delta_f * w_inf
    delta_r = delta_w + n * n * delta_f * w_inf
    delta_pb = delta_r + delta_f * w_inf
    delta_p = delta_pa + delta_pb
    amp = (
        float(np.abs(inst.A1).max())
        * float(np.abs(inst.A2).max())
        * float(np.abs(inst.A3).max())
    )
    return (n ** 3 / d) * amp * delta_p


def _audit_named(arrays, limit_entries):
    for name, a in arrays:
        if a.size >= limit_entries:
            raise NumericalError(
                f"allocation audit: buffer {name} has {a.size} entries, "
                f"over the n^2 = {limit_entries} limit"
            )


def grad_fast(inst, eps, audit=False):
    """Approximate gradient w.r.t. the composite X in near-linear time.

    ``audit=True`` additionally traces allocations: every named pipeline
    buffer must stay below n^2 entries and the traced peak must stay below
    three n^2-entry float64 buffers.  The audit is meaningful in the target
    regime n*k5 << n^2 and slows the run; leave it off when timing.
    """
    if eps >= 1:
        raise ValidationError(f"eps must be below 1, got {eps}")
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if eps < EPS_NOISE_FLOOR:
        warnings.warn(
            f"eps={eps:g} is below {EPS_NOISE_FLOOR:g}; double-precision "
            f"rounding noise will dominate the approximation error"
        )
    n, d = inst.n, inst.d
    eps_internal = eps / 2.0
    if audit:
        tracemalloc.start()
        tracemalloc.reset_peak()
        base = tracemalloc.get_traced_memory()[0]

    timings = {}
    t = time.perf_counter()
    f_factors, _ = build_F_factors(inst, eps_internal)
    timings["f_factors"] = time.perf_counter() - t

    t = time.perf_counter()
    u2 = build_residual_U2(inst, f_factors)
    timings["residual_u2"] = time.perf_counter() - t

    t = time.perf_counter()
    w_factors = build_W_factors(inst, u2)
    timings["w_factors"] = time.perf_counter() - t

    t = time.perf_counter()
    pa = build_Pa_factors(f_factors, w_factors)
    timings["pa_factors"] = time.perf_counter() - t

    t = time.perf_counter()
    pb, r_tilde = build_Pb_factors(f_factors, w_factors)
    timings["pb_factors"] = time.perf_counter() - t

    k1 = f_factors.k
    k2 = w_factors.k
    k3 = pa.k
    k4 = pb.k
    k5 = k3 + k4
    degree = choose_degree(inst.b_eff() ** 3, eps_internal)

    if audit:
        _audit_named(
            [
                ("U1", f_factors.U), ("V1", f_factors.V), ("W1", f_factors.W),
                ("U2", w_factors.U), ("V2", w_factors.V), ("W2", w_factors.W),
                ("U3", pa.U), ("V3", pa.V), ("W3", pa.W),
                ("U4", pb.U), ("R", r_tilde),
            ],
            n * n,
        )
        if n * k5 >= n * n:
            raise NumericalError(
                f"allocation audit: concatenated factors would hold n*k5 = "
                f"{n * k5} entries, over the n^2 = {n * n} limit"
            )

    t = time.perf_counter()
    u5 = np.hstack([pa.U, -pb.U])
    g1 = inst.A1.T @ u5
    del u5
    v5 = np.hstack([pa.V, pb.V])
    g2 = inst.A2.T @ v5
    del v5
    w5 = np.hstack([pa.W, pb.W])
    g3 = inst.A3.T @ w5
    del w5
    g_tilde = np.einsum("ak,bk,ck->abc", g1, g2, g3).reshape(d, d * d) / d
    timings["assemble"] = time.perf_counter() - t

    peak_bytes = 0
    if audit:
        peak_bytes = tracemalloc.get_traced_memory()[1] - base
        tracemalloc.stop()
        limit = 3 * n * n * 8
        if peak_bytes >= limit:
            raise NumericalError(
                f"allocation audit: traced peak {peak_bytes} bytes is over "
                f"the limit {limit} (three n^2-entry float64 buffers)"
            )

    eps_target = _error_budget(inst, eps_internal, u2)
    return FastGradientReport(
        g_tilde=g_tilde,
        k1=k1, k2=k2, k3=k3, k4=k4, k5=k5,
        degree=degree,
        eps_requested=eps,
        eps_internal=eps_internal,
        eps_target=eps_target,
        stage_timings=timings,
        peak_bytes=peak_bytes,
    )
