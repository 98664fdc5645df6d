"""Human-side bandit policies: learners and fully-informed baselines.

Every policy is a single-episode state machine exposing

* ``observe(arm, reward)`` – update internal state with an executed arm and
  its reward,
* ``suggest(rng)`` – sample an arm,
* ``action_distribution()`` – the exact probability vector over arms at the
  current state, when one exists (``exact_distribution`` is False for the
  finite multi-sample Thompson variants, which are Monte-Carlo only),
* ``reset()`` – return to the exact initial state.

Randomness protocol
-------------------
``suggest`` consumes draws from the caller's stream in a fixed, documented
order so that the compiled engine can replay the same stream bit-for-bit:

* uniform arm choices are ``floor(u * k)`` with one ``rng.random()`` draw;
* epsilon exploration always draws its gate uniform first, even when eps=0;
* Thompson draws n Beta samples per arm, arm-major, and averages them with a
  sequential (cumsum) reduction;
* UCL samples its softmax by inverse CDF over a sequential cumulative sum,
  with ``math.exp`` (libm) rather than numpy's vectorized exp;
* deterministic choices (win-stay, Gittins argmax, posterior-mean argmax)
  consume nothing.

Argmax ties resolve to the lowest index unless a policy documents otherwise.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy import special as sps

from .gittins import GittinsTable

__all__ = [
    "HumanPolicy",
    "BeliefState",
    "EpsilonGreedy",
    "WinStayLoseShift",
    "Communicative",
    "EpsilonOptimal",
    "ThompsonSampling",
    "UpperCredibleLimit",
    "GittinsIndexPolicy",
    "epsilon_greedy_distribution",
    "wsls_distribution",
    "thompson_sample",
    "ts_argmax_probabilities",
    "ucl_index",
    "ucl_distribution",
    "epsilon_optimal_distribution",
    "communicative_suggestion",
]


def _uniform_arm(rng: np.random.Generator, k: int) -> int:
    return int(rng.random() * k)


def _argmax_set(values: np.ndarray) -> list[int]:
    top = values[0]
    out = [0]
    for i in range(1, len(values)):
        v = values[i]
        if v > top:
            top = v
            out = [i]
        elif v == top:
            out.append(i)
    return out


class BeliefState:
    """Per-arm Beta(alpha, beta) posterior counts."""

    def __init__(self, n_arms: int, alpha0: float = 1.0, beta0: float = 1.0):
        self.n_arms = n_arms
        self.alpha0 = alpha0
        self.beta0 = beta0
        self.alpha = np.full(n_arms, alpha0)
        self.beta = np.full(n_arms, beta0)

    def update(self, arm: int, reward: int) -> None:
        if reward:
            self.alpha[arm] += 1.0
        else:
            self.beta[arm] += 1.0

    def means(self) -> np.ndarray:
        return self.alpha / (self.alpha + self.beta)

    def reset(self) -> None:
        self.alpha.fill(self.alpha0)
        self.beta.fill(self.beta0)


class HumanPolicy:
    """Base class; see module docstring for the contract."""

    exact_distribution: bool = True
    n_arms: int

    def reset(self) -> None:
        raise NotImplementedError

    def observe(self, arm: int, reward: int) -> None:
        raise NotImplementedError

    def suggest(self, rng: np.random.Generator) -> int:
        raise NotImplementedError

    def action_distribution(self) -> np.ndarray:
        raise NotImplementedError


# ---------------------------------------------------------------------------
# distribution helpers (also the public single-shot operations)


def epsilon_greedy_distribution(
    means: Sequence[float], eps: float, tie_break: str = "uniform"
) -> np.ndarray:
    """Mass 1-eps on the empirical argmax (split per tie rule) plus eps/N everywhere."""
    means = np.asarray(means, dtype=np.float64)
    n = len(means)
    out = np.full(n, eps / n)
    ties = _argmax_set(means)
    if tie_break == "lowest":
        out[ties[0]] += 1.0 - eps
    else:
        out[np.asarray(ties)] += (1.0 - eps) / len(ties)
    return out


def wsls_distribution(last_arm: int, last_reward: int, n_arms: int) -> np.ndarray:
    """Point mass after a win, uniform over the other arms after a loss."""
    out = np.zeros(n_arms)
    if last_reward:
        out[last_arm] = 1.0
    else:
        out[:] = 1.0 / (n_arms - 1)
        out[last_arm] = 0.0
    return out


def epsilon_optimal_distribution(theta: Sequence[float], eps: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=np.float64)
    n = len(theta)
    out = np.full(n, eps / n)
    out[int(np.argmax(theta))] += 1.0 - eps
    return out


def communicative_suggestion(last_reward: int) -> int:
    """Encode the previous reward bit directly as arm 0 or arm 1."""
    return int(last_reward)


def thompson_sample(
    alpha: Sequence[float],
    beta: Sequence[float],
    n_samples: Optional[int],
    rng: np.random.Generator,
) -> int:
    """Argmax of per-arm means of ``n_samples`` posterior draws; None means exact means."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    n_arms = len(alpha)
    if n_samples is None:
        means = alpha / (alpha + beta)
    else:
        if n_samples < 1:
            raise ValueError("n_samples must be >= 1 (or None for the exact mean)")
        draws = rng.beta(np.repeat(alpha, n_samples), np.repeat(beta, n_samples))
        # sequential per-arm reduction; keeps compiled/pure lanes bit-identical
        means = draws.reshape(n_arms, n_samples).cumsum(axis=1)[:, -1] / n_samples
    return _argmax_set(means)[0]


def _gauss_legendre_unit(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    return (nodes + 1.0) / 2.0, weights / 2.0


def ts_argmax_probabilities(
    alpha: Sequence[float], beta: Sequence[float], n_nodes: Optional[int] = None
) -> np.ndarray:
    """P(arm j yields the largest of one Beta draw per arm), for each j.

    With integer counts the integrand of P(X_j = max) is a polynomial, so
    Gauss-Legendre with enough nodes is exact (degree sum(a+b) - N - 1).
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    n = len(alpha)
    if n_nodes is None:
        n_nodes = max(32, int(math.ceil((alpha.sum() + beta.sum() - n) / 2.0)) + 2)
    x, w = _gauss_legendre_unit(n_nodes)
    logpdf = (
        (alpha[:, None] - 1.0) * np.log(x)[None, :]
        + (beta[:, None] - 1.0) * np.log1p(-x)[None, :]
        - sps.betaln(alpha, beta)[:, None]
    )
    pdf = np.exp(logpdf)
    cdf = sps.betainc(alpha[:, None], beta[:, None], x[None, :])
    out = np.empty(n)
    for j in range(n):
        integrand = w * pdf[j]
        for k in range(n):
            if k != j:
                integrand = integrand * cdf[k]
        out[j] = integrand.sum()
    total = out.sum()
    if total > 0:
        out /= total
    return out


def ucl_index(alpha: float, beta: float, t: int, K: float) -> float:
    """The 1 - 1/(K t) quantile of Beta(alpha, beta), level clamped to [0.5, 1-1e-12]."""
    if t < 1:
        raise ValueError("round index starts at 1")
    level = 1.0 - 1.0 / (K * t)
    level = min(max(level, 0.5), 1.0 - 1e-12)
    return float(sps.betaincinv(alpha, beta, level))


def ucl_distribution(
    indices: Sequence[float], tau: float, tau_role: str = "multiply"
) -> np.ndarray:
    """Softmax over indices with max-subtraction; tau multiplies by default."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    indices = np.asarray(indices, dtype=np.float64)
    scale = tau if tau_role == "multiply" else 1.0 / tau
    top = indices.max()
    e = np.array([math.exp(scale * (q - top)) for q in indices])
    return e / e.cumsum()[-1]


# ---------------------------------------------------------------------------
# policies


class EpsilonGreedy(HumanPolicy):
    """Best arm in hindsight w.p. 1-eps, uniform over all arms w.p. eps.

    Unpulled arms carry an empirical mean of 0.5.  ``pinned_means`` fixes an
    arm's hindsight mean regardless of observations (the known arm of the
    1.5-arm bandit); ``tie_break`` is "uniform" (split the greedy mass) or
    "lowest" (deterministic).
    """

    def __init__(
        self,
        n_arms: int,
        eps: float = 0.1,
        tie_break: str = "uniform",
        pinned_means: Optional[Sequence[Optional[float]]] = None,
    ):
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        if tie_break not in ("uniform", "lowest"):
            raise ValueError("tie_break must be 'uniform' or 'lowest'")
        self.n_arms = n_arms
        self.eps = eps
        self.tie_break = tie_break
        self.pinned = list(pinned_means) if pinned_means is not None else [None] * n_arms
        self.succ = np.zeros(n_arms, dtype=np.int64)
        self.pulls = np.zeros(n_arms, dtype=np.int64)

    def reset(self) -> None:
        self.succ.fill(0)
        self.pulls.fill(0)

    def observe(self, arm: int, reward: int) -> None:
        self.succ[arm] += reward
        self.pulls[arm] += 1

    def hindsight_means(self) -> np.ndarray:
        means = np.where(self.pulls > 0, self.succ / np.maximum(self.pulls, 1), 0.5)
        for i, v in enumerate(self.pinned):
            if v is not None:
                means[i] = v
        return means

    def suggest(self, rng: np.random.Generator) -> int:
        if rng.random() < self.eps:
            return _uniform_arm(rng, self.n_arms)
        ties = _argmax_set(self.hindsight_means())
        if self.tie_break == "lowest" or len(ties) == 1:
            return ties[0]
        return ties[_uniform_arm(rng, len(ties))]

    def action_distribution(self) -> np.ndarray:
        return epsilon_greedy_distribution(self.hindsight_means(), self.eps, self.tie_break)


class WinStayLoseShift(HumanPolicy):
    """Repeat the previous arm after reward 1, else shift uniformly; round 1 uniform."""

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.last_arm: Optional[int] = None
        self.last_reward = 0

    def reset(self) -> None:
        self.last_arm = None
        self.last_reward = 0

    def observe(self, arm: int, reward: int) -> None:
        self.last_arm = arm
        self.last_reward = reward

    def suggest(self, rng: np.random.Generator) -> int:
        if self.last_arm is None:
            return _uniform_arm(rng, self.n_arms)
        if self.last_reward:
            return self.last_arm
        k = _uniform_arm(rng, self.n_arms - 1)
        return k + 1 if k >= self.last_arm else k

    def action_distribution(self) -> np.ndarray:
        if self.last_arm is None:
            return np.full(self.n_arms, 1.0 / self.n_arms)
        return wsls_distribution(self.last_arm, self.last_reward, self.n_arms)


class Communicative(HumanPolicy):
    """Ignores its own payoff: encodes the last reward bit as arm 0 or arm 1."""

    def __init__(self, n_arms: int):
        self.n_arms = n_arms
        self.last_reward: Optional[int] = None

    def reset(self) -> None:
        self.last_reward = None

    def observe(self, arm: int, reward: int) -> None:
        self.last_reward = reward

    def suggest(self, rng: np.random.Generator) -> int:
        if self.last_reward is None:
            return _uniform_arm(rng, self.n_arms)
        return communicative_suggestion(self.last_reward)

    def action_distribution(self) -> np.ndarray:
        if self.last_reward is None:
            return np.full(self.n_arms, 1.0 / self.n_arms)
        out = np.zeros(self.n_arms)
        out[communicative_suggestion(self.last_reward)] = 1.0
        return out


class EpsilonOptimal(HumanPolicy):
    """Knows theta; plays the best arm w.p. 1-eps, uniform over all arms w.p. eps."""

    def __init__(self, theta: Sequence[float], eps: float = 0.1):
        theta = np.asarray(theta, dtype=np.float64)
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        self.n_arms = len(theta)
        self.eps = eps
        self.best_arm = int(np.argmax(theta))
        self._dist = epsilon_optimal_distribution(theta, eps)

    def reset(self) -> None:
        pass

    def observe(self, arm: int, reward: int) -> None:
        pass  # i.i.d. by construction

    def suggest(self, rng: np.random.Generator) -> int:
        if rng.random() < self.eps:
            return _uniform_arm(rng, self.n_arms)
        return self.best_arm

    def action_distribution(self) -> np.ndarray:
        return self._dist.copy()


class ThompsonSampling(HumanPolicy):
    """Argmax of per-arm averages of n posterior draws; n=None uses exact means.

    n=1 is classic Thompson sampling and has an exact action distribution
    (quadrature); n=None is greedy-Bayes (deterministic); finite n >= 2 is
    Monte-Carlo only.
    """

    def __init__(self, n_arms: int, n_samples: Optional[int] = 1):
        if n_samples is not None and n_samples < 1:
            raise ValueError("n_samples must be >= 1 or None")
        self.n_arms = n_arms
        self.n_samples = n_samples
        self.belief = BeliefState(n_arms)
        self.exact_distribution = n_samples is None or n_samples == 1

    def reset(self) -> None:
        self.belief.reset()

    def observe(self, arm: int, reward: int) -> None:
        self.belief.update(arm, reward)

    def suggest(self, rng: np.random.Generator) -> int:
        return thompson_sample(self.belief.alpha, self.belief.beta, self.n_samples, rng)

    def action_distribution(self) -> np.ndarray:
        if self.n_samples is None:
            out = np.zeros(self.n_arms)
            out[_argmax_set(self.belief.means())[0]] = 1.0
            return out
        if self.n_samples == 1:
            return ts_argmax_probabilities(self.belief.alpha, self.belief.beta)
        raise NotImplementedError(
            "finite multi-sample Thompson has no exact action distribution"
        )


class UpperCredibleLimit(HumanPolicy):
    """Softmax over per-arm posterior quantile indices (level 1 - 1/(K t))."""

    def __init__(
        self, n_arms: int, K: float = 4.0, tau: float = 4.0, tau_role: str = "multiply"
    ):
        if tau <= 0 or K <= 0:
            raise ValueError("K and tau must be positive")
        self.n_arms = n_arms
        self.K = K
        self.tau = tau
        self.tau_role = tau_role
        self.belief = BeliefState(n_arms)
        self.t = 1
        self._qcache: dict[tuple[float, float, int], float] = {}

    def reset(self) -> None:
        self.belief.reset()
        self.t = 1

    def observe(self, arm: int, reward: int) -> None:
        self.belief.update(arm, reward)
        self.t += 1

    def indices(self) -> np.ndarray:
        out = np.empty(self.n_arms)
        for j in range(self.n_arms):
            key = (float(self.belief.alpha[j]), float(self.belief.beta[j]), self.t)
            if key not in self._qcache:
                self._qcache[key] = ucl_index(key[0], key[1], self.t, self.K)
            out[j] = self._qcache[key]
        return out

    def action_distribution(self) -> np.ndarray:
        return ucl_distribution(self.indices(), self.tau, self.tau_role)

    def suggest(self, rng: np.random.Generator) -> int:
        probs = self.action_distribution()
        cum = probs.cumsum()
        u = rng.random() * cum[-1]
        return min(int(np.searchsorted(cum, u, side="right")), self.n_arms - 1)


class GittinsIndexPolicy(HumanPolicy):
    """Pull the arm with the largest Gittins index; deterministic, ties lowest."""

    def __init__(self, n_arms: int, table: GittinsTable):
        self.n_arms = n_arms
        self.table = table
        self.belief = BeliefState(n_arms)

    def reset(self) -> None:
        self.belief.reset()

    def observe(self, arm: int, reward: int) -> None:
        self.belief.update(arm, reward)

    def indices(self) -> np.ndarray:
        return np.array(
            [
                self.table.index(int(self.belief.alpha[j]), int(self.belief.beta[j]))
                for j in range(self.n_arms)
            ]
        )

    def suggest(self, rng: np.random.Generator) -> int:
        return _argmax_set(self.indices())[0]

    def action_distribution(self) -> np.ndarray:
        out = np.zeros(self.n_arms)
        out[_argmax_set(self.indices())[0]] = 1.0
        return out
