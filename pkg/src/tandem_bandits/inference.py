"""Inverse-bandit inference from action-only observations, and mutual
information between the best arm and human action prefixes.

The sequence likelihood exploits a structural fact: for every learning policy
the per-step action probabilities depend only on the observable history
(arms and rewards), never on theta directly, so

    P(h_1..h_t | theta) = sum over reward paths r in {0,1}^(t-1) of
        A(path) * prod_k theta_{h_k}^{r_k} (1-theta_{h_k})^{1-r_k}

where the path weights A(path) = prod_k P(h_k | prefix) are theta-free and
computed once by replaying the policy.  Metropolis-Hastings then costs only a
small mixture evaluation per proposal, which makes the 200-instance inference
tables cheap.  The fully informed epsilon-optimal model is the one
theta-dependent case and has a closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as st

from . import engine
from .core import ROLE_ANALYSIS, SeedTree
from .gittins import GittinsTable, get_gittins_table
from .specs import BatchConfig, HumanSpec, RobotSpec

__all__ = [
    "ActionOnlyObservation",
    "PosteriorSampleSet",
    "MIEstimate",
    "InferenceError",
    "exact_sequence_likelihood",
    "mc_sequence_likelihood",
    "mh_posterior",
    "mh_posterior_batch",
    "log_density_at",
    "mutual_information_bits",
    "estimate_mi_best_arm",
]

MAX_EXACT_HORIZON = 12  # enumeration over 2^(t-1) latent reward paths


class InferenceError(RuntimeError):
    """Degenerate chain or an observation the model assigns zero probability."""


@dataclass(frozen=True)
class ActionOnlyObservation:
    """Human arm choices from a solo episode; rewards were never seen."""

    arms: tuple
    n_arms: int

    def __post_init__(self):
        if any(not 0 <= a < self.n_arms for a in self.arms):
            raise ValueError("arm index out of range")

    @property
    def horizon(self) -> int:
        return len(self.arms)


@dataclass
class PosteriorSampleSet:
    samples: np.ndarray  # (n, N)
    acceptance_rate: float
    n_chains: int
    burn_in: int


@dataclass
class MIEstimate:
    bits: float
    prefix_t: int
    n_samples: int
    se: float


def _build_model(model: HumanSpec, n_arms: int, gittins_table: Optional[GittinsTable]):
    if model.kind == "gi" and gittins_table is None:
        gittins_table = get_gittins_table(model.gamma)
    return model.build(n_arms, gittins_table=gittins_table)


class _PathMixture:
    """Theta-free path weights plus per-path reward counts for one observation."""

    def __init__(self, model: HumanSpec, obs: ActionOnlyObservation,
                 gittins_table: Optional[GittinsTable] = None):
        t = obs.horizon
        if t > MAX_EXACT_HORIZON:
            raise ValueError(
                f"exact enumeration supports horizons up to {MAX_EXACT_HORIZON}"
            )
        policy = _build_model(model, obs.n_arms, gittins_table)
        if not policy.exact_distribution:
            raise ValueError(
                f"{model.label()} has no exact action distribution; "
                "use mc_sequence_likelihood"
            )
        n_paths = 1 << max(t - 1, 0)
        N = obs.n_arms
        self.log_weights = np.full(n_paths, -np.inf)
        self.succ = np.zeros((n_paths, N), dtype=np.int64)
        self.fail = np.zeros((n_paths, N), dtype=np.int64)
        for path in range(n_paths):
            policy.reset()
            logw = 0.0
            for k in range(t):
                p = policy.action_distribution()[obs.arms[k]]
                if p <= 0.0:
                    logw = -np.inf
                    break
                logw += math.log(p)
                if k < t - 1:
                    r = (path >> k) & 1
                    policy.observe(obs.arms[k], r)
                    if r:
                        self.succ[path, obs.arms[k]] += 1
                    else:
                        self.fail[path, obs.arms[k]] += 1
            self.log_weights[path] = logw
        if np.all(np.isinf(self.log_weights)):
            raise InferenceError("observation has zero probability under the model")

    def log_prob(self, theta: np.ndarray) -> np.ndarray:
        """(W, N) -> (W,) log-likelihoods."""
        theta = np.clip(theta, 1e-300, 1.0 - 1e-16)
        log_t = np.log(theta)
        log_1mt = np.log1p(-theta)
        # (W, paths): reward-path log factors plus theta-free weights
        terms = (
            self.log_weights[None, :]
            + log_t @ self.succ.T
            + log_1mt @ self.fail.T
        )
        return _logsumexp(terms, axis=1)


class _EpsOptLikelihood:
    """Closed form for the fully informed noisy-optimal model."""

    def __init__(self, eps: float, obs: ActionOnlyObservation):
        self.eps = eps
        self.N = obs.n_arms
        self.t = obs.horizon
        self.match_counts = np.bincount(np.asarray(obs.arms), minlength=obs.n_arms)

    def log_prob(self, theta: np.ndarray) -> np.ndarray:
        jstar = np.argmax(theta, axis=1)
        m = self.match_counts[jstar]
        p_best = (1.0 - self.eps) + self.eps / self.N
        p_other = self.eps / self.N
        if p_other == 0.0:
            out = np.where(m == self.t, self.t * math.log(p_best), -np.inf)
            return out.astype(np.float64)
        return m * math.log(p_best) + (self.t - m) * math.log(p_other)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    top = np.max(a, axis=axis, keepdims=True)
    top = np.where(np.isfinite(top), top, 0.0)
    out = np.log(np.sum(np.exp(a - top), axis=axis)) + np.squeeze(top, axis=axis)
    return out


def _likelihood_for(model: HumanSpec, obs: ActionOnlyObservation,
                    gittins_table: Optional[GittinsTable] = None):
    if model.kind == "epsilon_optimal":
        return _EpsOptLikelihood(model.eps, obs)
    return _PathMixture(model, obs, gittins_table)


def exact_sequence_likelihood(
    model: HumanSpec,
    obs: ActionOnlyObservation,
    theta: Sequence[float],
    gittins_table: Optional[GittinsTable] = None,
) -> float:
    """P(h_1..h_t | theta) with the latent rewards marginalized exactly."""
    lik = _likelihood_for(model, obs, gittins_table)
    theta = np.asarray(theta, dtype=np.float64)[None, :]
    return float(np.exp(lik.log_prob(theta)[0]))


def posterior_mean_exact(
    model: HumanSpec,
    obs: ActionOnlyObservation,
    gittins_table: Optional[GittinsTable] = None,
) -> np.ndarray:
    """Exact posterior mean of theta under the uniform prior.

    The posterior is a mixture over latent reward paths of independent Beta
    marginals, so the mean is available in closed form; used as a noise-free
    oracle for the MH checks.
    """
    from scipy.special import betaln

    mix = _PathMixture(model, obs, gittins_table)
    s, f = mix.succ, mix.fail
    # mixture log-weight of each path includes the Beta normalizers
    logw = mix.log_weights + betaln(1.0 + s, 1.0 + f).sum(axis=1)
    logw -= logw.max()
    w = np.exp(logw)
    w /= w.sum()
    means = (1.0 + s) / (2.0 + s + f)
    return w @ means


def mc_sequence_likelihood(
    model: HumanSpec,
    obs: ActionOnlyObservation,
    theta: Sequence[float],
    m: int,
    rng: np.random.Generator,
    inner_samples: int = 512,
    gittins_table: Optional[GittinsTable] = None,
) -> float:
    """Unbiased estimate of the sequence likelihood by simulating latent rewards.

    Per replica the policy is replayed along the observed arms with rewards
    drawn from theta; the per-step suggestion probability is exact when the
    policy exposes one, otherwise estimated from ``inner_samples`` suggest()
    draws (conditionally unbiased, so the product stays unbiased and the
    pseudo-marginal MH construction is valid).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    theta = np.asarray(theta, dtype=np.float64)
    if model.kind == "epsilon_optimal":
        policy = model.build(obs.n_arms, theta=theta)
    else:
        policy = _build_model(model, obs.n_arms, gittins_table)
    total = 0.0
    for _ in range(m):
        policy.reset()
        prob = 1.0
        for k, arm in enumerate(obs.arms):
            if policy.exact_distribution:
                prob *= float(policy.action_distribution()[arm])
            else:
                hits = sum(policy.suggest(rng) == arm for _ in range(inner_samples))
                prob *= hits / inner_samples
            if prob == 0.0:
                break
            if k < len(obs.arms) - 1:
                r = 1 if rng.random() < theta[arm] else 0
                policy.observe(arm, r)
        total += prob
    return total / m


# ---------------------------------------------------------------------------
# Metropolis-Hastings over theta in [0,1]^N (uniform prior, logit walk)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


def _run_chains(
    log_prob,  # (W, N) thetas -> (W,) loglik
    n_instances: int,
    n_arms: int,
    n_samples: int,
    proposal_scale: float,
    rng: np.random.Generator,
    n_chains: int = 4,
    noisy=None,  # optional (theta, rng) -> (W,) loglik estimates (pseudo-marginal)
):
    keep_per_chain = max(1, n_samples // n_chains)
    thin = 2
    post_iters = keep_per_chain * thin
    burn = max(100, post_iters // 4)  # ~20% of the chain
    total_iters = burn + post_iters
    W = n_instances * n_chains

    # exact draw from the uniform-theta prior in logit space
    u = rng.random((W, n_arms))
    z = np.log(u) - np.log1p(-u)
    theta = _sigmoid(z)
    ll = noisy(theta, rng) if noisy is not None else log_prob(theta)
    ljac = np.sum(np.log(theta) + np.log1p(-theta), axis=1)
    lp = ll + ljac

    sigma = proposal_scale
    kept = np.empty((W, keep_per_chain, n_arms))
    accepts_window = 0
    window = 0
    post_accepts = 0
    post_total = 0

    for it in range(total_iters):
        zp = z + sigma * rng.normal(size=(W, n_arms))
        thetap = _sigmoid(zp)
        llp = noisy(thetap, rng) if noisy is not None else log_prob(thetap)
        lpp = llp + np.sum(np.log(thetap) + np.log1p(-thetap), axis=1)
        with np.errstate(invalid="ignore"):
            # -inf minus -inf (both states impossible) is NaN: reject, stay put
            accept = np.log(rng.random(W)) < lpp - lp
        accept &= ~np.isnan(lpp)
        z[accept] = zp[accept]
        theta[accept] = thetap[accept]
        lp[accept] = lpp[accept]

        if it < burn:
            accepts_window += int(accept.sum())
            window += W
            if window >= 50 * W:
                rate = accepts_window / window
                sigma = float(np.clip(sigma * math.exp(1.5 * (rate - 0.3)), 1e-3, 10.0))
                accepts_window = 0
                window = 0
        else:
            post_accepts += int(accept.sum())
            post_total += W
            k = it - burn
            if k % thin == 0 and k // thin < keep_per_chain:
                kept[:, k // thin] = theta

    acceptance = post_accepts / max(post_total, 1)
    samples = kept.reshape(n_instances, n_chains, keep_per_chain, n_arms)
    samples = samples.reshape(n_instances, n_chains * keep_per_chain, n_arms)
    return samples, acceptance, burn


def mh_posterior(
    obs: ActionOnlyObservation,
    model: HumanSpec,
    n_samples: int = 2000,
    proposal_scale: float = 0.8,
    rng: Optional[np.random.Generator] = None,
    n_chains: int = 4,
    use_mc: bool = False,
    mc_samples: int = 64,
    gittins_table: Optional[GittinsTable] = None,
) -> PosteriorSampleSet:
    """Random-walk MH posterior over theta given an action-only observation."""
    sets = mh_posterior_batch(
        [obs], model, n_samples, proposal_scale, rng, n_chains, use_mc, mc_samples,
        gittins_table,
    )
    return sets[0]


def mh_posterior_batch(
    observations: Sequence[ActionOnlyObservation],
    model: HumanSpec,
    n_samples: int = 2000,
    proposal_scale: float = 0.8,
    rng: Optional[np.random.Generator] = None,
    n_chains: int = 4,
    use_mc: bool = False,
    mc_samples: int = 64,
    gittins_table: Optional[GittinsTable] = None,
) -> list[PosteriorSampleSet]:
    """Run per-instance posteriors jointly; chains across instances vectorize."""
    if rng is None:
        rng = np.random.default_rng()
    n_arms = observations[0].n_arms
    I = len(observations)

    if use_mc:

        def noisy(theta, rng_):
            out = np.empty(len(theta))
            for w in range(len(theta)):
                obs_w = observations[w // n_chains]  # instance-major walker blocks
                est = mc_sequence_likelihood(
                    model, obs_w, theta[w], mc_samples, rng_,
                    gittins_table=gittins_table,
                )
                out[w] = math.log(est) if est > 0 else -np.inf
            return out

        samples, acc, burn = _run_chains(
            None, I, n_arms, n_samples, proposal_scale, rng, n_chains, noisy=noisy
        )
    else:
        liks = [_likelihood_for(model, o, gittins_table) for o in observations]

        def log_prob(theta):
            out = np.empty(len(theta))
            for i, lik in enumerate(liks):  # instance-major walker blocks
                idx = slice(i * n_chains, (i + 1) * n_chains)
                out[idx] = lik.log_prob(theta[idx])
            return out

        samples, acc, burn = _run_chains(
            log_prob, I, n_arms, n_samples, proposal_scale, rng, n_chains
        )

    if acc < 0.01:
        raise InferenceError(f"degenerate chain: acceptance {acc:.4f} after tuning")
    return [
        PosteriorSampleSet(samples=samples[i], acceptance_rate=acc,
                           n_chains=n_chains, burn_in=burn)
        for i in range(I)
    ]


# ---------------------------------------------------------------------------
# kernel density of the true parameters under the posterior samples


def log_density_at(
    theta_true: Sequence[float],
    samples: np.ndarray,
    bandwidth: Optional[Sequence[float]] = None,
) -> float:
    """Boundary-reflected product-Gaussian KDE evaluated at theta_true (natural log).

    Bandwidth defaults to Scott's rule per dimension.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or len(samples) == 0:
        raise ValueError("need a nonempty (n, d) sample array")
    x = np.asarray(theta_true, dtype=np.float64)
    n, d = samples.shape
    if bandwidth is None:
        sd = samples.std(axis=0, ddof=1)
        h = sd * n ** (-1.0 / (d + 4))
        h = np.maximum(h, 1e-3)
    else:
        h = np.asarray(bandwidth, dtype=np.float64)
    # reflect at both boundaries so mass never leaks outside the unit cube
    z0 = (x[None, :] - samples) / h
    z1 = (x[None, :] + samples) / h
    z2 = (2.0 - x[None, :] - samples) / h
    k = (st.norm.pdf(z0) + st.norm.pdf(z1) + st.norm.pdf(z2)) / h
    dens = float(np.mean(np.prod(k, axis=1)))
    if dens <= 0.0:
        return -np.inf
    return math.log(dens)


# ---------------------------------------------------------------------------
# mutual information between the best arm and action prefixes


def mutual_information_bits(
    x: np.ndarray,
    y: np.ndarray,
    n_boot: int = 200,
    rng: Optional[np.random.Generator] = None,
) -> tuple[float, float]:
    """Plug-in MI (bits) with the Miller-Madow correction, floored at 0;
    bootstrap standard error over the empirical joint."""
    if rng is None:
        rng = np.random.default_rng()
    n = len(x)
    pairs = np.stack([np.asarray(x, dtype=np.int64), np.asarray(y, dtype=np.int64)], axis=1)
    uniq, counts = np.unique(pairs, axis=0, return_counts=True)

    def mi_of(counts_vec: np.ndarray) -> float:
        total = counts_vec.sum()
        mask = counts_vec > 0
        c = counts_vec[mask]
        ux = uniq[mask, 0]
        uy = uniq[mask, 1]
        p = c / total
        px = np.bincount(ux, weights=p)
        py_map: dict[int, float] = {}
        for val, pv in zip(uy, p):
            py_map[val] = py_map.get(val, 0.0) + pv
        py = np.array([py_map[v] for v in uy])
        mi = float(np.sum(p * (np.log2(p) - np.log2(px[ux]) - np.log2(py))))
        kx = len(np.unique(ux))
        ky = len(py_map)
        kxy = len(c)
        mi += ((kx - 1) + (ky - 1) - (kxy - 1)) / (2.0 * total * math.log(2.0))
        return max(mi, 0.0)

    mi = mi_of(counts)
    boots = np.empty(n_boot)
    for b in range(n_boot):
        boots[b] = mi_of(rng.multinomial(n, counts / n))
    return mi, float(boots.std(ddof=1))


def estimate_mi_best_arm(
    human: HumanSpec,
    robot: RobotSpec,
    mode: str,
    prefix_t: int,
    n_traj: int,
    master_seed: int,
    horizon: Optional[int] = None,
    n_arms: int = 4,
    experiment_id: int = 0,
) -> tuple[MIEstimate, float]:
    """MI(best arm; h_1..h_t) in bits from simulated episodes, plus the rate
    at which the executed arm at round t misses the best arm (Fano's error)."""
    horizon = horizon or prefix_t
    cfg = BatchConfig(
        mode=mode,
        horizon=horizon,
        n_arms=n_arms,
        human=human,
        robot=robot,
        n_episodes=n_traj,
        master_seed=master_seed,
        experiment_id=experiment_id,
        prefix_len=prefix_t,
    )
    res = engine.run_batch(cfg)
    codes = encode_prefixes(res.sugg_prefix, n_arms)
    rng = SeedTree(master_seed).stream(experiment_id, 0, ROLE_ANALYSIS)
    mi, se = mutual_information_bits(res.jstar, codes, rng=rng)
    err = float(np.mean(res.exec_prefix[:, prefix_t - 1] != res.jstar))
    return MIEstimate(bits=mi, prefix_t=prefix_t, n_samples=n_traj, se=se), err


def encode_prefixes(prefix: np.ndarray, n_arms: int) -> np.ndarray:
    """Pack rows of arm indices (-1 allowed for absent) into integer codes."""
    base = n_arms + 1
    codes = np.zeros(len(prefix), dtype=np.int64)
    for col in range(prefix.shape[1]):
        codes = codes * base + (prefix[:, col].astype(np.int64) + 1)
    return codes
