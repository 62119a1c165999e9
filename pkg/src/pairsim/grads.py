"""Analytic gradients of the losses, plus finite-difference verification.

The circle-loss gradient follows the detached-weighting convention: the
self-paced weights are treated as constants during back-propagation, so
the per-score factor is gamma * (sn + m) rather than gamma * 2 * sn. A
"full" finite-difference mode that differentiates through the weights
exists for comparison only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import (
    HINGE_ACTIVE_TOL,
    CircleParams,
    UnifiedParams,
    circle_logits,
    circle_loss,
    circle_weights,
    log1p_sum_exp,
    stable_logsumexp,
    triplet_hard_loss,
    unified_loss,
)
from .simcore import SimilarityGroup


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)

__all__ = [
    "LossGrad",
    "circle_grad",
    "unified_grad",
    "triplet_grad",
    "loss_grad",
    "fd_check",
    "backprop_to_params",
]


@dataclass(frozen=True)
class LossGrad:
    """Loss value with gradients over sp / sn and the attenuation factor Z."""

    value: float
    d_sp: np.ndarray
    d_sn: np.ndarray
    z: float


def circle_grad(g: SimilarityGroup, p: CircleParams) -> LossGrad:
    """Detached-weight gradient of the reduced circle loss.

    d_sn_j = Z * softmax_j(weighted logits) * gamma * (sn_j + m)
    d_sp_i = Z * softmax_i(weighted logits) * gamma * (sp_i - 1 - m)

    Entries whose cut-off weight is zero contribute a logit of exactly 0
    to the softmax normalization and receive a zero gradient.
    """
    if not p.is_reduced:
        raise ValueError("gradients defined for reduced mode")
    un, vp = circle_logits(g, p)
    lse_n = stable_logsumexp(un)
    lse_p = stable_logsumexp(vp)
    total = lse_n + lse_p
    value = float(np.logaddexp(0.0, total))
    z = _sigmoid(total)
    alpha_p, alpha_n = circle_weights(g, p)
    d_sn = z * np.exp(un - lse_n) * p.gamma * (g.sn + p.m)
    d_sn[alpha_n <= 0.0] = 0.0
    d_sp = z * np.exp(vp - lse_p) * p.gamma * (g.sp - 1.0 - p.m)
    d_sp[alpha_p <= 0.0] = 0.0
    return LossGrad(value=value, d_sp=d_sp, d_sn=d_sn, z=z)


def unified_grad(g: SimilarityGroup, p: UnifiedParams) -> LossGrad:
    """Exact gradient of the unified loss; |d_sp| = |d_sn| when K = L = 1."""
    un = p.gamma * (g.sn + p.m)
    vp = -p.gamma * g.sp
    lse_n = stable_logsumexp(un)
    lse_p = stable_logsumexp(vp)
    total = lse_n + lse_p
    value = float(np.logaddexp(0.0, total))
    z = _sigmoid(total)
    d_sn = z * np.exp(un - lse_n) * p.gamma
    d_sp = -z * np.exp(vp - lse_p) * p.gamma
    return LossGrad(value=value, d_sp=d_sp, d_sn=d_sn, z=z)


def triplet_grad(g: SimilarityGroup, m: float) -> LossGrad:
    """Subgradient of the hard-mining triplet loss.

    Inside the violating region the hardest pair gets (+1, -1); at the
    hinge kink (activation within HINGE_ACTIVE_TOL of zero) and beyond
    the boundary the gradient is zero.
    """
    value = triplet_hard_loss(g, m)
    d_sp = np.zeros(g.k)
    d_sn = np.zeros(g.l)
    if value > HINGE_ACTIVE_TOL:
        d_sn[int(np.argmax(g.sn))] = 1.0
        d_sp[int(np.argmin(g.sp))] = -1.0
    return LossGrad(value=value, d_sp=d_sp, d_sn=d_sn, z=-math.expm1(-value))


def loss_grad(loss_id: str, g: SimilarityGroup, gamma: float, m: float) -> LossGrad:
    """Dispatch a loss id to its value-and-gradient evaluation."""
    if loss_id == "circle":
        return circle_grad(g, CircleParams.reduced(gamma, m))
    if loss_id in ("unified", "am_softmax"):
        return unified_grad(g, UnifiedParams(gamma, m))
    if loss_id == "normface":
        return unified_grad(g, UnifiedParams(gamma, 0.0))
    if loss_id == "softmax":
        return unified_grad(g, UnifiedParams(1.0, 0.0))
    if loss_id == "triplet":
        return triplet_grad(g, m)
    raise ValueError(
        f"unknown loss id {loss_id!r}; valid: circle, unified, am_softmax, "
        "normface, softmax, triplet"
    )


def _frozen_circle_forward(sp, sn, p: CircleParams, alpha_p, alpha_n) -> float:
    un = p.gamma * alpha_n * (sn - p.dn)
    vp = -p.gamma * alpha_p * (sp - p.dp)
    return log1p_sum_exp(np.add.outer(un, vp).ravel())


def fd_check(
    loss_id: str,
    g: SimilarityGroup,
    params,
    eps: float = 1e-5,
    mode: str = "frozen",
) -> float:
    """Max scaled error between analytic gradients and central differences.

    For the circle loss, mode="frozen" holds the self-paced weights at
    their unperturbed values during the probe, matching the detached
    semantics of the analytic gradient. mode="full" differentiates
    through the weights and is expected to disagree away from sn = m.
    Entries within eps of a cut-off kink are skipped (subgradient
    ambiguity). Errors are scaled by max(1, |analytic|, |fd|).
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps must lie in [1e-7, 1e-3]")
    if mode not in ("frozen", "full"):
        raise ValueError("mode must be 'frozen' or 'full'")

    if loss_id == "circle":
        if not isinstance(params, CircleParams):
            raise ValueError("circle fd_check needs CircleParams")
        analytic = circle_grad(g, params)
        if mode == "frozen":
            ap0, an0 = circle_weights(g, params)

            def forward(sp, sn):
                return _frozen_circle_forward(sp, sn, params, ap0, an0)

        else:

            def forward(sp, sn):
                return circle_loss(SimilarityGroup(sp, sn), params)

        kink_p = np.abs(g.sp - params.op) <= eps
        kink_n = np.abs(g.sn - params.on) <= eps
    elif loss_id in ("unified", "am_softmax"):
        if not isinstance(params, UnifiedParams):
            raise ValueError("unified fd_check needs UnifiedParams")
        analytic = unified_grad(g, params)

        def forward(sp, sn):
            return unified_loss(SimilarityGroup(sp, sn), params)

        kink_p = np.zeros(g.k, dtype=bool)
        kink_n = np.zeros(g.l, dtype=bool)
    else:
        raise ValueError(f"fd_check does not support loss id {loss_id!r}")

    worst = 0.0
    for side, kinks, grad in (("sp", kink_p, analytic.d_sp), ("sn", kink_n, analytic.d_sn)):
        base = g.sp if side == "sp" else g.sn
        for idx in range(base.size):
            if kinks[idx]:
                continue
            hi = base.copy()
            lo = base.copy()
            hi[idx] += eps
            lo[idx] -= eps
            if side == "sp":
                fd = (forward(hi, g.sn) - forward(lo, g.sn)) / (2 * eps)
            else:
                fd = (forward(g.sp, hi) - forward(g.sp, lo)) / (2 * eps)
            a = float(grad[idx])
            err = abs(fd - a) / max(1.0, abs(a), abs(fd))
            worst = max(worst, err)
    return worst


def backprop_to_params(model, features, labels, loss_id: str, gamma: float, m: float, paradigm: str):
    """Mean batch loss, its parameter gradients, and batch similarity stats.

    Chains LossGrad entries through the cosine-similarity Jacobian and
    the embedding map. All reductions run in fixed index order, so the
    result is bit-reproducible. ``model`` must expose forward / backward
    in the EmbeddingModel sense (see engine module).

    Returns (param_grads dict, mean_loss, mean_sp, mean_sn).
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    batch = features.shape[0]
    if labels.shape[0] != batch:
        raise ValueError("features/labels batch size mismatch")

    emb, cache = model.forward(features)
    norms = np.linalg.norm(emb, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("degenerate feature: zero-norm embedding")
    ehat = emb / norms[:, None]

    if paradigm == "class_level":
        if model.class_weights is None:
            raise ValueError("class_level paradigm needs class weights")
        w = model.class_weights
        wnorms = np.linalg.norm(w, axis=1)
        what = w / wnorms[:, None]
        scores = np.clip(ehat @ what.T, -1.0, 1.0)
        n_classes = w.shape[0]
        grad_s = np.zeros_like(scores)
        total_loss = 0.0
        sp_all, sn_all = [], []
        for b in range(batch):
            y = int(labels[b])
            mask = np.arange(n_classes) != y
            group = SimilarityGroup(sp=scores[b, y : y + 1], sn=scores[b, mask])
            lg = loss_grad(loss_id, group, gamma, m)
            total_loss += lg.value
            grad_s[b, y] = lg.d_sp[0] / batch
            grad_s[b, mask] = lg.d_sn / batch
            sp_all.append(group.sp)
            sn_all.append(group.sn)
        d_ehat = grad_s @ what
        d_what = grad_s.T @ ehat
        # Jacobian of row normalization for the class weights.
        d_w = (d_what - np.sum(d_what * what, axis=1, keepdims=True) * what) / wnorms[:, None]
    elif paradigm == "pair_wise":
        scores = np.clip(ehat @ ehat.T, -1.0, 1.0)
        same = labels[:, None] == labels[None, :]
        np.fill_diagonal(same, False)
        diff = labels[:, None] != labels[None, :]
        grad_s = np.zeros_like(scores)
        total_loss = 0.0
        sp_all, sn_all = [], []
        for b in range(batch):
            pos = same[b]
            neg = diff[b]
            if not pos.any() or not neg.any():
                raise ValueError("empty similarity side: anchor lacks positives or negatives")
            group = SimilarityGroup(sp=scores[b, pos], sn=scores[b, neg])
            lg = loss_grad(loss_id, group, gamma, m)
            total_loss += lg.value
            grad_s[b, pos] = lg.d_sp / batch
            grad_s[b, neg] = lg.d_sn / batch
            sp_all.append(group.sp)
            sn_all.append(group.sn)
        d_ehat = (grad_s + grad_s.T) @ ehat
        d_w = None
    else:
        raise ValueError(f"unknown paradigm {paradigm!r}")

    # Jacobian of the embedding normalization.
    d_emb = (d_ehat - np.sum(d_ehat * ehat, axis=1, keepdims=True) * ehat) / norms[:, None]
    param_grads = model.backward(d_emb, cache)
    if d_w is not None:
        param_grads["class_weights"] = d_w

    mean_loss = total_loss / batch
    mean_sp = float(np.mean(np.concatenate(sp_all)))
    mean_sn = float(np.mean(np.concatenate(sn_all)))
    return param_grads, mean_loss, mean_sp, mean_sn
