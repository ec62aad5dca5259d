"""Exact dense engine: forward pass, loss, intermediates, closed-form gradient.

Everything here materializes (or, on the jitted path, streams over) the full
n x n^2 attention matrix, so it is cubic in n and guarded by a sequence cap.
It serves as the ground-truth oracle for the low-rank engine.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NumericalError, ValidationError
from .instance import AttnInstance
from .tensorops import col_kron, kron

DEFAULT_EXACT_CAP = 256
EXP_ARG_LIMIT = 700.0
FD_N_CAP = 8
FD_D_CAP = 4


def exact_cap():
    """Sequence-length cap for the dense engine (env TAT_EXACT_CAP overrides)."""
    raw = os.environ.get("TAT_EXACT_CAP", "")
    try:
        cap = int(raw)
    except ValueError:
        return DEFAULT_EXACT_CAP
    return cap if cap >= 1 else DEFAULT_EXACT_CAP


def _check_cap(n):
    cap = exact_cap()
    if n > cap:
        raise ValidationError(
            f"exact engine capped at n <= {cap} (got n={n}); "
            f"set TAT_EXACT_CAP to override"
        )


def _check_exp_bound(q, k1, k2):
    # every softmax argument is bounded by ||Q||_inf ||K1||_inf ||K2||_inf
    # (d terms of size bound^3 / d each)
    bound = float(np.abs(q).max() * np.abs(k1).max() * np.abs(k2).max())
    if bound > EXP_ARG_LIMIT:
        raise NumericalError(
            f"softmax argument bound {bound:.6g} exceeds exp limit {EXP_ARG_LIMIT:g}"
        )
    return bound


def _softmax_rows(scores):
    m = scores.max(axis=1)
    a = np.exp(scores - m[:, None])
    tot = a.sum(axis=1)
    f = a / tot[:, None]
    d_diag = np.exp(m + np.log(tot))
    return f, d_diag


def attention_weights(inst, x_override=None):
    """Row-normalized attention matrix F, shape n x n^2.

    With ``x_override`` the composite d x d^2 variable replaces the one
    derived from X1, X2, X3 (used by the finite-difference oracle).
    """
    _check_cap(inst.n)
    if x_override is None:
        q, k1, k2, _, _ = inst.projected()
        _check_exp_bound(q, k1, k2)
        scores = (q / inst.d) @ col_kron(k1, k2).T
    else:
        scores = (inst.A1 @ x_override) @ kron(inst.A2, inst.A3).T / inst.d
        amax = float(np.abs(scores).max()) if scores.size else 0.0
        if amax > EXP_ARG_LIMIT:
            raise NumericalError(
                f"softmax argument bound {amax:.6g} exceeds exp limit {EXP_ARG_LIMIT:g}"
            )
    f, _ = _softmax_rows(scores)
    return f


def _value_matrix(inst):
    v1, v2 = inst.A4 @ inst.Y1, inst.A5 @ inst.Y2
    return col_kron(v1, v2)


def forward(inst):
    """Attention output F @ H, shape n x d."""
    _check_cap(inst.n)
    q, k1, k2, v1, v2 = inst.projected()
    _check_exp_bound(q, k1, k2)
    if kernels.NUMBA_ENABLED:
        return kernels.attn_forward_stream(q / inst.d, k1, k2, v1, v2)
    scores = (q / inst.d) @ col_kron(k1, k2).T
    f, _ = _softmax_rows(scores)
    return f @ col_kron(v1, v2)


def loss(inst):
    """0.5 * squared Frobenius distance between the forward pass and E."""
    r = forward(inst) - inst.E
    return 0.5 * float((r * r).sum())


def _loss_given_x(inst, x):
    scores = (inst.A1 @ x) @ kron(inst.A2, inst.A3).T / inst.d
    f, _ = _softmax_rows(scores)
    r = f @ _value_matrix(inst) - inst.E
    return 0.5 * float((r * r).sum())


@dataclass(frozen=True)
class ExactIntermediates:
    """Dense intermediates of the gradient pipeline.

    F is the n x n^2 row-stochastic attention matrix, H the n^2 x d value
    matrix, Vres the n x d residual, W = Vres @ H.T, and P applies each
    row's softmax Jacobian to the matching row of W.  D_diag holds the
    unnormalized row sums of the exponentiated scores.
    """

    F: np.ndarray
    H: np.ndarray
    Vres: np.ndarray
    W: np.ndarray
    P: np.ndarray
    D_diag: np.ndarray


def compute_intermediates(inst):
    _check_cap(inst.n)
    q, k1, k2, v1, v2 = inst.projected()
    _check_exp_bound(q, k1, k2)
    scores = (q / inst.d) @ col_kron(k1, k2).T
    f, d_diag = _softmax_rows(scores)
    h = col_kron(v1, v2)
    vres = f @ h - inst.E
    w = vres @ h.T
    fw = f * w
    r = fw.sum(axis=1)
    p = fw - r[:, None] * f
    return ExactIntermediates(F=f, H=h, Vres=vres, W=w, P=p, D_diag=d_diag)


def grad_exact(inst):
    """Closed-form loss gradient w.r.t. the composite X, shape d x d^2.

    Computed as ``A1.T @ P @ (A2 kron A3) / d`` with the Kronecker factor
    contracted axis by axis instead of materialized.
    """
    _check_cap(inst.n)
    n, d = inst.n, inst.d
    q, k1, k2, v1, v2 = inst.projected()
    _check_exp_bound(q, k1, k2)
    if kernels.NUMBA_ENABLED:
        tp = kernels.grad_row_contract_stream(
            q / d, k1, k2, v1, v2, inst.E, inst.A2, inst.A3
        )
        return (inst.A1.T @ tp.reshape(n, d * d)) / d
    inter = compute_intermediates(inst)
    p3 = inter.P.reshape(n, n, n)
    t1 = np.tensordot(p3, inst.A2, axes=(1, 0))         # (n, n, d): sum over j
    t2 = np.tensordot(t1, inst.A3, axes=(1, 0))         # (n, d, d): sum over l
    g3 = np.tensordot(inst.A1, t2, axes=(0, 0))         # (d, d, d): sum over j0
    return g3.reshape(d, d * d) / d


def grad_fd(inst, step):
    """Central-difference gradient w.r.t. the composite X (slow oracle).

    Requires d*d^2 paired loss evaluations, so the instance must be tiny:
    n <= 8 and d <= 4.
    """
    if step <= 0:
        raise ValidationError(f"step must be positive, got {step}")
    if inst.n > FD_N_CAP or inst.d > FD_D_CAP:
        raise ValidationError(
            f"finite differences capped at n <= {FD_N_CAP}, d <= {FD_D_CAP} "
            f"(got n={inst.n}, d={inst.d})"
        )
    d = inst.d
    x0 = inst.composite_x()
    g = np.empty((d, d * d))
    for i in range(d):
        for j in range(d * d):
            xp = x0.copy()
            xp[i, j] += step
            lp = _loss_given_x(inst, xp)
            xm = x0.copy()
            xm[i, j] -= step
            lm = _loss_given_x(inst, xm)
            g[i, j] = (lp - lm) / (2.0 * step)
    return g
