"""Particle belief over reward parameters and the modeled human's latent state.

Each particle carries a theta hypothesis, a full copy of the assumed human
policy's internal state evolved with imputed rewards, and a weight.  The
robot sees suggestions only, so conditioning happens through the model's
action likelihood at each observed suggestion.

Float discipline: every reduction that feeds a branch or a selection (weight
totals, quadrature sums, softmax normalizers) is a sequential cumulative sum,
and exponentials go through libm's scalar exp, so the compiled engine lane
can reproduce these operations bit-for-bit.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import BetaPrior
from .engine.tables import TableSet
from .specs import HumanSpec

__all__ = ["ParticleFilter"]

_exp_scalar = np.frompyfunc(math.exp, 1, 1)


def _seq_sum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sequential (left-to-right) sum; matches a plain C accumulation loop."""
    return np.cumsum(a, axis=axis).take(-1, axis=axis)


def _first_argmax(a: np.ndarray) -> np.ndarray:
    return np.argmax(a, axis=-1)


class ParticleFilter:
    def __init__(
        self,
        model: HumanSpec,
        n_arms: int,
        n_particles: int,
        prior: BetaPrior,
        tables: TableSet,
        ess_frac: float,
        rng: np.random.Generator,
    ):
        self.model = model
        self.n_arms = n_arms
        self.n_particles = n_particles
        self.ess_frac = ess_frac
        self.tables = tables
        self.degeneracy_events = 0
        self.t = 1

        P, N = n_particles, n_arms
        theta = np.empty((P, N))
        free = [j for j in range(N) if prior.fixed[j] is None]
        if free:
            a = np.tile(prior.alpha[free], P)
            b = np.tile(prior.beta[free], P)
            theta[:, free] = rng.beta(a, b).reshape(P, len(free))
        for j in range(N):
            if prior.fixed[j] is not None:
                theta[:, j] = prior.fixed[j]
        self.theta = theta
        self.weights = np.ones(P)

        # modeled-human state: executed-arm pull counts are common knowledge,
        # successes are particle-specific imputations
        self.pulls = np.zeros(N, dtype=np.int64)
        self.succ = np.zeros((P, N), dtype=np.int64)
        self.last_arm = -1
        self.last_reward = np.zeros(P, dtype=np.int8)

        if model.kind == "gi":
            self._gittins_values = tables.gittins[model.gamma].values
        if model.kind == "ucl":
            self._ucl_q = tables.ucl_q[model.K]

    # -- likelihood of a suggested arm under each particle -------------------
    def likelihood(self, h: int) -> np.ndarray:
        kind = self.model.kind
        P, N = self.n_particles, self.n_arms
        if kind == "epsilon_greedy":
            means = np.where(
                self.pulls[None, :] > 0,
                self.succ / np.maximum(self.pulls[None, :], 1),
                0.5,
            )
            if self.model.pinned_means is not None:
                for j, v in enumerate(self.model.pinned_means):
                    if v is not None:
                        means[:, j] = v
            eps = self.model.eps
            top = means.max(axis=1)
            if self.model.tie_break == "lowest":
                pick = _first_argmax(means)
                return eps / N + (1.0 - eps) * (pick == h)
            ties = means == top[:, None]
            n_ties = ties.sum(axis=1)
            return eps / N + (1.0 - eps) * ties[:, h] / n_ties
        if kind == "wsls":
            if self.last_arm < 0:
                return np.full(P, 1.0 / N)
            if h == self.last_arm:
                return (self.last_reward == 1).astype(np.float64)
            return (self.last_reward == 0) / float(N - 1)
        if kind == "epsilon_optimal":
            eps = self.model.eps
            pick = _first_argmax(self.theta)
            return eps / N + (1.0 - eps) * (pick == h)
        if kind == "ts":
            n = self.model.n_samples
            if n is None:
                means = (1.0 + self.succ) / (2.0 + self.pulls[None, :])
                return (_first_argmax(means) == h).astype(np.float64)
            if n == 1:
                w, pdf, cdf = self.tables.ts1_w, self.tables.ts1_pdf, self.tables.ts1_cdf
            else:
                _, w, pdf, cdf = self.tables.tsn[n]
            acc = w[None, :] * pdf[self.pulls[h], self.succ[:, h], :]
            for j in range(N):
                if j != h:
                    acc = acc * cdf[self.pulls[j], self.succ[:, j], :]
            return _seq_sum(acc, axis=1)
        if kind == "ucl":
            q = np.empty((P, N))
            for j in range(N):
                q[:, j] = self._ucl_q[self.t, self.pulls[j], self.succ[:, j]]
            scale = self.model.tau if self.model.tau_role == "multiply" else 1.0 / self.model.tau
            top = q.max(axis=1)
            e = _exp_scalar(scale * (q - top[:, None])).astype(np.float64)
            tot = _seq_sum(e, axis=1)
            return e[:, h] / tot
        if kind == "gi":
            idx = np.empty((P, N))
            for j in range(N):
                idx[:, j] = self._gittins_values[1 + self.succ[:, j], 1 + self.pulls[j] - self.succ[:, j]]
            return (_first_argmax(idx) == h).astype(np.float64)
        raise ValueError(f"unsupported belief model {kind!r}")

    # -- filter steps --------------------------------------------------------
    def reweight(self, h: int) -> None:
        w = self.weights * self.likelihood(h)
        total = _seq_sum(w)
        if total == 0.0:
            # model mismatch: no particle explains the suggestion
            self.weights = np.ones(self.n_particles)
            self.degeneracy_events += 1
        else:
            # rescale to mean 1 so long horizons cannot underflow the weights
            self.weights = w * (self.n_particles / total)

    def maybe_resample(self, rng: np.random.Generator) -> None:
        cum = np.cumsum(self.weights)
        total = cum[-1]
        sumsq = _seq_sum(self.weights * self.weights)
        ess = total * total / sumsq
        if ess >= self.ess_frac * self.n_particles:
            return
        u = rng.random()
        P = self.n_particles
        positions = (np.arange(P) + u) * total / P
        idx = np.searchsorted(cum, positions, side="right")
        np.clip(idx, 0, P - 1, out=idx)
        self.theta = self.theta[idx]
        self.succ = self.succ[idx]
        self.last_reward = self.last_reward[idx]
        self.weights = np.ones(P)

    def thompson_arm(self, rng: np.random.Generator) -> int:
        cum = np.cumsum(self.weights)
        u = rng.random() * cum[-1]
        p = min(int(np.searchsorted(cum, u, side="right")), self.n_particles - 1)
        return int(np.argmax(self.theta[p]))

    def best_arm_mass(self) -> np.ndarray:
        """Posterior probability each arm is best (weight on argmax-theta particles)."""
        am = _first_argmax(self.theta)
        mass = np.bincount(am, weights=self.weights, minlength=self.n_arms)
        return mass

    def map_best_arm(self) -> int:
        return int(np.argmax(self.best_arm_mass()))

    def trusted_pick(self) -> tuple[int, float]:
        """Most-likely-best arm and its posterior mass fraction."""
        mass = self.best_arm_mass()
        total = _seq_sum(mass)
        arm = int(np.argmax(mass))
        return arm, float(mass[arm] / total)

    def predictive_suggestion_mass(self) -> np.ndarray:
        """Posterior predictive of the human's next suggestion, marginalized
        over particles (unnormalized)."""
        mass = np.empty(self.n_arms)
        for j in range(self.n_arms):
            mass[j] = _seq_sum(self.weights * self.likelihood(j))
        return mass

    def sample_predicted(self, rng: np.random.Generator) -> int:
        """Draw an arm from the predictive suggestion distribution: a
        calibrated stand-in for the human's own choice (exploration included)
        on rounds where no suggestion is revealed."""
        cum = np.cumsum(self.predictive_suggestion_mass())
        u = rng.random() * cum[-1]
        return min(int(np.searchsorted(cum, u, side="right")), self.n_arms - 1)

    def propagate(self, executed: int, rng: np.random.Generator) -> None:
        """Impute the human's reward for the executed arm and advance each copy."""
        u = rng.random(self.n_particles)
        r = (u < self.theta[:, executed]).astype(np.int8)
        self.succ[:, executed] += r
        self.pulls[executed] += 1
        self.last_arm = executed
        self.last_reward = r
        self.t += 1
