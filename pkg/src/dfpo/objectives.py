"""Receive combiners and the rate / mean-squared-error objectives.

All formulas work on the effective channel G = sqrt(P) * H so that transmit
power enters the SINR; rates are in bits (log base 2). Channel matrices are
(M, K) complex arrays, combiners likewise with column k serving user k.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannel, UsageError


def _as_column(h):
    h = np.asarray(h, complex)
    if h.ndim == 1:
        return h[:, None]
    if h.ndim == 2 and h.shape[1] == 1:
        return h
    raise UsageError("expected a single-user channel (one column)")


def single_user_power_objective(h) -> float:
    """Channel power ||h||^2, the single-user position-optimization objective."""
    col = _as_column(h)[:, 0]
    return float(np.real(np.vdot(col, col)))


def mrc_combiner(h):
    """Maximum-ratio combiner w = h / ||h||; optimal for a single user."""
    col = _as_column(h)
    norm = np.linalg.norm(col)
    if norm == 0.0:
        raise DegenerateChannel("cannot combine a zero channel")
    w = col / norm
    return w[:, 0] if np.asarray(h).ndim == 1 else w


def mmse_combiner(H, noise_power_w: float, transmit_power_w: float):
    """Linear MMSE combiner W = (G G^H + sigma^2 I)^{-1} G with G = sqrt(P) H."""
    if not noise_power_w > 0:
        raise UsageError("MMSE combiner needs a positive noise power")
    G = np.sqrt(transmit_power_w) * np.asarray(H, complex)
    M = G.shape[0]
    J = G @ G.conj().T + noise_power_w * np.eye(M)
    return np.linalg.solve(J, G)


@dataclass(frozen=True)
class RateReport:
    """Per-user SINR, rate, MSE and the sum rate for one channel/combiner pair."""

    sinr: np.ndarray
    rate: np.ndarray
    mse: np.ndarray
    sum_rate: float


def rate_report(H, combiner, noise_power_w: float, transmit_power_w: float) -> RateReport:
    """SINR, per-user rate and per-user MSE for a combiner.

    ``combiner=None`` selects the MMSE combiner, in which case the MSE uses
    the closed form e_k = 1 - g_k^H (G G^H + sigma^2 I)^{-1} g_k; for an
    explicit combiner the general quadratic form is used.

    SINR for user k: |w_k^H g_k|^2 / (sum_{i != k} |w_k^H g_i|^2 + sigma^2 ||w_k||^2).
    """
    H = np.asarray(H, complex)
    if H.ndim == 1:
        H = H[:, None]
    G = np.sqrt(transmit_power_w) * H
    M, K = G.shape
    sigma2 = noise_power_w

    mmse_mse = None
    if combiner is None:
        W = mmse_combiner(H, sigma2, transmit_power_w)
        J = G @ G.conj().T + sigma2 * np.eye(M)
        quad = np.real(np.sum(G.conj() * np.linalg.solve(J, G), axis=0))
        mmse_mse = 1.0 - quad
    else:
        W = np.asarray(combiner, complex)
        if W.ndim == 1:
            W = W[:, None]
        if W.shape != G.shape:
            raise UsageError("combiner shape must match the channel matrix")

    cross = W.conj().T @ G  # (K, K), entry [k, i] = w_k^H g_i
    signal = np.abs(np.diag(cross)) ** 2
    interference = np.sum(np.abs(cross) ** 2, axis=1) - signal
    noise = sigma2 * np.sum(np.abs(W) ** 2, axis=0)
    sinr = signal / (interference + noise)
    rate = np.log2(1.0 + sinr)

    if mmse_mse is not None:
        mse = mmse_mse
    else:
        # general quadratic form: w^H G G^H w - 2 Re(w^H g_k) + 1 + sigma^2 ||w||^2
        mse = (np.sum(np.abs(cross) ** 2, axis=1)
               - 2.0 * np.real(np.diag(cross))
               + 1.0
               + noise)
    return RateReport(sinr=sinr, rate=rate, mse=mse, sum_rate=float(np.sum(rate)))


def multi_user_mse_objective(H, noise_power_w: float, transmit_power_w: float) -> float:
    """Sum-MSE surrogate tr[(G^H G + sigma^2 I_K)^{-1}], minimized over positions.

    Requires K <= M; equals (sum_k e_k) / sigma^2 for the MMSE combiner.
    """
    H = np.asarray(H, complex)
    if H.ndim == 1:
        H = H[:, None]
    M, K = H.shape
    if K > M:
        raise UsageError("sum-MSE surrogate assumes K <= M")
    G = np.sqrt(transmit_power_w) * H
    A = G.conj().T @ G + noise_power_w * np.eye(K)
    return float(np.real(np.trace(np.linalg.inv(A))))


def batch_mse_objective(H_batch, noise_power_w: float, transmit_power_w: float):
    """Vectorized ``multi_user_mse_objective`` over a (..., M, K) batch."""
    G = np.sqrt(transmit_power_w) * np.asarray(H_batch, complex)
    K = G.shape[-1]
    if K > G.shape[-2]:
        raise UsageError("sum-MSE surrogate assumes K <= M")
    A = np.swapaxes(G, -1, -2).conj() @ G + noise_power_w * np.eye(K)
    inv = np.linalg.inv(A)
    return np.real(np.trace(inv, axis1=-2, axis2=-1))
