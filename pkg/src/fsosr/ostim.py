"""Transductive prototype refinement by information maximization.

The classifier keeps one learnable prototype per closed-set class and scores
queries by temperature-scaled cosine similarity in a center-normalized
feature space. Three variants share the machinery:

* ``implicit``  —  a (K+1)-th outlier logit defined as the negative average
  of the K inlier logits, i.e. similarity to the diametrical opposite of the
  mean inlier prototype. No extra parameters. The (K+1)-th probability is
  the outlierness score.
* ``closed``    —  plain K-way classification; outlierness falls back to the
  negative maximum probability.
* ``explicit_dummy`` — the outlier logit comes from a free D-vector in the
  normalized space, initialized at the implicit value and optimized jointly
  with the prototypes.

Prototypes start at the raw support class means and are refined by
full-batch gradient descent on

    cross-entropy(support)  -  marginal entropy(queries)
                            +  alpha * conditional entropy(queries)

which pushes query predictions to be individually confident while keeping
class usage spread out. Gradients are computed analytically, including the
chain rule through the prototype normalization; the centering vector stays
frozen throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DegenerateFeatureError, DivergenceError
from .episodes import Episode
from .predictions import PredictionSheet
from .transforms import CenteringPolicy, center_normalize

_EPS = 1e-12
_PLOGP_FLOOR = 1e-30


class Variant(str, Enum):
    IMPLICIT = "implicit"
    CLOSED = "closed"
    EXPLICIT_DUMMY = "explicit_dummy"


@dataclass(frozen=True)
class OstimConfig:
    alpha: float = 1.0
    n_steps: int = 200
    learning_rate: float = 1e-3
    temperature: float = 10.0

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be >= 0, got {self.n_steps}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.temperature > 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class PrototypeSet:
    """Optimization state: K prototypes, the frozen centering vector, and
    (for the explicit_dummy variant) the free outlier vector."""

    w: np.ndarray
    mu: np.ndarray
    variant: Variant
    dummy: np.ndarray | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.w, dtype=np.float64)
        mu = np.asarray(self.mu, dtype=np.float64)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "mu", mu)
        if w.ndim != 2 or w.shape[0] < 2:
            raise ValueError(f"need >= 2 prototypes, got shape {w.shape}")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(mu))):
            raise ValueError("prototypes and centering vector must be finite")
        if self.variant is Variant.EXPLICIT_DUMMY:
            if self.dummy is None:
                raise ValueError("explicit_dummy variant requires a dummy vector")
            dummy = np.asarray(self.dummy, dtype=np.float64)
            if not np.all(np.isfinite(dummy)):
                raise ValueError("dummy vector must be finite")
            object.__setattr__(self, "dummy", dummy)
        elif self.dummy is not None:
            raise ValueError(f"variant {self.variant.value} takes no dummy vector")

    @property
    def n_way(self) -> int:
        return self.w.shape[0]


@dataclass(frozen=True)
class LossBreakdown:
    ce: float
    marginal_entropy: float
    conditional_entropy: float
    total: float


def _xlogx(p: np.ndarray) -> np.ndarray:
    return np.where(p > _PLOGP_FLOOR, p * np.log(np.maximum(p, _PLOGP_FLOOR)), 0.0)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _normalized_prototypes(ps: PrototypeSet) -> tuple[np.ndarray, np.ndarray]:
    shifted = ps.w - ps.mu
    radii = np.linalg.norm(shifted, axis=1)
    if np.any(radii < _EPS):
        k = int(np.argmax(radii < _EPS))
        raise DegenerateFeatureError(f"prototype {k} coincides with the centering point")
    return shifted / radii[:, None], radii


def _logit_matrix(u: np.ndarray, ps: PrototypeSet, temperature: float) -> np.ndarray:
    """Logits for already-normalized inputs ``u`` of shape (N, D)."""
    v, _ = _normalized_prototypes(ps)
    inlier = temperature * (u @ v.T)
    if ps.variant is Variant.CLOSED:
        return inlier
    if ps.variant is Variant.IMPLICIT:
        extra = -inlier.mean(axis=1)
    else:
        extra = temperature * (u @ ps.dummy)
    return np.concatenate([inlier, extra[:, None]], axis=1)


def init_prototypes(
    episode: Episode, policy: CenteringPolicy, variant: Variant | str = Variant.IMPLICIT
) -> PrototypeSet:
    """Prototypes start at the per-class means of the raw support vectors.

    For the explicit_dummy variant the outlier vector starts at the implicit
    value, the negated average of the normalized prototypes, so its logits
    coincide with the implicit variant's before any refinement.
    """
    variant = Variant(variant)
    mu = policy.resolve(episode)
    k_way = episode.n_way
    w = np.stack(
        [
            episode.support_vectors[episode.support_labels == k].mean(axis=0)
            for k in range(k_way)
        ]
    )
    dummy = None
    if variant is Variant.EXPLICIT_DUMMY:
        v = center_normalize(w, mu)
        dummy = -v.mean(axis=0)
    return PrototypeSet(w=w, mu=mu, variant=variant, dummy=dummy)


def logits(ps: PrototypeSet, z: np.ndarray, temperature: float = 10.0) -> np.ndarray:
    """Logit vector(s) for raw feature input ``z`` (single vector or batch)."""
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    u = center_normalize(z[None, :] if single else z, ps.mu)
    out = _logit_matrix(u, ps, temperature)
    return out[0] if single else out


def _loss_terms(
    p_support: np.ndarray,
    support_labels: np.ndarray,
    p_query: np.ndarray,
    alpha: float,
) -> LossBreakdown:
    n_support = p_support.shape[0]
    n_query = p_query.shape[0]
    ce = float(-np.log(p_support[np.arange(n_support), support_labels]).mean())
    p_marginal = p_query.mean(axis=0)
    marginal_entropy = float(-_xlogx(p_marginal).sum())
    conditional_entropy = float(-_xlogx(p_query).sum() / n_query)
    total = ce - marginal_entropy + alpha * conditional_entropy
    return LossBreakdown(ce, marginal_entropy, conditional_entropy, total)


def compute_loss(ps: PrototypeSet, episode: Episode, cfg: OstimConfig) -> LossBreakdown:
    """Objective value split into its three terms.

    ``total = ce - marginal_entropy + alpha * conditional_entropy``; support
    labels are one-hot over the closed classes (the outlier column, when
    present, carries zero target mass).
    """
    u_s = center_normalize(episode.support_vectors, ps.mu)
    u_q = center_normalize(episode.query_vectors, ps.mu)
    p_s = _softmax(_logit_matrix(u_s, ps, cfg.temperature))
    p_q = _softmax(_logit_matrix(u_q, ps, cfg.temperature))
    return _loss_terms(p_s, episode.support_labels, p_q, cfg.alpha)


def loss_and_grad(
    ps: PrototypeSet, episode: Episode, cfg: OstimConfig
) -> tuple[LossBreakdown, np.ndarray, np.ndarray | None]:
    """Loss plus analytic gradients w.r.t. the prototypes (and dummy vector).

    The gradient flows through the softmax, both entropy terms, and the
    prototype normalization; inputs and the centering vector are constants.
    """
    tau = cfg.temperature
    k_way = ps.n_way
    u_s = center_normalize(episode.support_vectors, ps.mu)
    u_q = center_normalize(episode.query_vectors, ps.mu)
    v, radii = _normalized_prototypes(ps)
    n_s, n_q = u_s.shape[0], u_q.shape[0]

    logits_s = _logit_matrix(u_s, ps, tau)
    logits_q = _logit_matrix(u_q, ps, tau)
    p_s = _softmax(logits_s)
    p_q = _softmax(logits_q)
    breakdown = _loss_terms(p_s, episode.support_labels, p_q, cfg.alpha)

    # d(loss)/d(logit), support rows: softmax cross-entropy.
    g_s = p_s.copy()
    g_s[np.arange(n_s), episode.support_labels] -= 1.0
    g_s /= n_s

    # Query rows: marginal-entropy and conditional-entropy terms. Softmax
    # outputs are strictly positive, so the logs are finite.
    log_p_hat = np.log(p_q.mean(axis=0))
    g_m = p_q * (log_p_hat[None, :] - (p_q @ log_p_hat)[:, None]) / n_q
    log_p_q = np.log(p_q)
    row_dot = (p_q * log_p_q).sum(axis=1)
    g_c = -(cfg.alpha / n_q) * p_q * (log_p_q - row_dot[:, None])
    g_q = g_m + g_c

    g_all = np.vstack([g_s, g_q])
    u_all = np.vstack([u_s, u_q])

    dummy_grad = None
    if ps.variant is Variant.CLOSED:
        g_sim = tau * g_all
    elif ps.variant is Variant.IMPLICIT:
        g_sim = tau * (g_all[:, :k_way] - g_all[:, k_way:] / k_way)
    else:
        g_sim = tau * g_all[:, :k_way]
        dummy_grad = u_all.T @ (tau * g_all[:, k_way])

    v_grad = g_sim.T @ u_all
    w_grad = (v_grad - v * (v_grad * v).sum(axis=1, keepdims=True)) / radii[:, None]
    return breakdown, w_grad, dummy_grad


def refine(
    ps: PrototypeSet, episode: Episode, cfg: OstimConfig
) -> tuple[PrototypeSet, list[LossBreakdown]]:
    """Run ``cfg.n_steps`` full-batch gradient-descent steps.

    Returns the refined state and the loss breakdown evaluated at each step
    before its update. Non-finite losses or gradients abort with the step
    index rather than silently propagating NaNs.
    """
    state = ps
    trace: list[LossBreakdown] = []
    for step in range(cfg.n_steps):
        breakdown, w_grad, dummy_grad = loss_and_grad(state, episode, cfg)
        finite = np.isfinite(breakdown.total) and np.all(np.isfinite(w_grad))
        if finite and dummy_grad is not None:
            finite = bool(np.all(np.isfinite(dummy_grad)))
        if not finite:
            raise DivergenceError(f"non-finite loss or gradient at step {step}")
        new_w = state.w - cfg.learning_rate * w_grad
        new_dummy = state.dummy
        if dummy_grad is not None:
            new_dummy = state.dummy - cfg.learning_rate * dummy_grad
        state = replace(state, w=new_w, dummy=new_dummy)
        trace.append(breakdown)
    return state, trace


def predict(ps: PrototypeSet, episode: Episode, cfg: OstimConfig) -> PredictionSheet:
    """Softmax predictions for the episode's queries.

    The outlierness score is the outlier-column probability when one exists,
    otherwise the negative maximum closed-set probability.
    """
    u_q = center_normalize(episode.query_vectors, ps.mu)
    probs = _softmax(_logit_matrix(u_q, ps, cfg.temperature))
    k_way = ps.n_way
    if ps.variant is Variant.CLOSED:
        outlier_score = -probs.max(axis=1)
    else:
        outlier_score = probs[:, k_way]
    return PredictionSheet(
        probs=probs,
        outlier_score=outlier_score,
        closed_pred=probs[:, :k_way].argmax(axis=1),
        n_closed=k_way,
    )


def closed_set_entropy(sheet: PredictionSheet) -> np.ndarray:
    """Entropy of each query's distribution renormalized over the closed
    classes only. A diagnostic: it is not any variant's outlierness score."""
    head = sheet.probs[:, : sheet.n_closed]
    head = head / head.sum(axis=1, keepdims=True)
    return -_xlogx(head).sum(axis=1)
