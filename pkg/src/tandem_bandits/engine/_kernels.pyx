# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled engine lane: episode rollouts, particle filtering, Gittins DP.

Mirrors engine/reference.py (and particles.py) operation for operation
against the same PCG64 streams: uniform draws via random_standard_uniform,
Beta draws via random_beta, sequential reductions wherever the pure lane uses
cumulative sums, and libm exp where the pure lane calls math.exp.  The
equality tests in tests/test_engine.py hold this lane to bit-identical
trajectories.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp as c_exp
from libc.math cimport isnan, sqrt
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_beta, random_standard_uniform

cnp.import_array()

DEF MAXN = 24  # arm-count ceiling for fixed-size per-episode state

# kind codes shared with engine/fast.py
DEF H_EG = 0
DEF H_WSLS = 1
DEF H_COMM = 2
DEF H_EOPT = 3
DEF H_TS = 4
DEF H_UCL = 5
DEF H_GI = 6

DEF R_NONE = 0
DEF R_COPY = 1
DEF R_MOSTFREQ = 2
DEF R_GLIE = 3
DEF R_WSLS_DEC = 4
DEF R_COMM_DEC = 5
DEF R_SCRIPTED = 6
DEF R_BELIEF = 7

DEF M_SOLO = 0
DEF M_TELEOP = 1
DEF M_TURNS = 2
DEF M_PREEMPT = 3

_SEEDSEQ = np.random.SeedSequence
_PCG64 = np.random.PCG64
_GENERATOR = np.random.Generator


cdef inline double unext(bitgen_t* bg) noexcept:
    return random_standard_uniform(bg)


cdef inline int uniform_arm(bitgen_t* bg, int k) noexcept:
    return <int>(random_standard_uniform(bg) * k)


cdef inline long square_explore_arm(long t, int n_arms) noexcept:
    """Round-robin while t <= 4*N*N, then arm m % N when t == m*m, else -1."""
    if t <= 4 * n_arms * n_arms:
        return (t - 1) % n_arms
    cdef long m = <long>sqrt(<double>t)
    while (m + 1) * (m + 1) <= t:
        m += 1
    while m * m > t:
        m -= 1
    if m * m == t:
        return m % n_arms
    return -1


# ---------------------------------------------------------------------------
# learner state: the human, and the decoder robots' inner standard-MAB player


cdef class Learner:
    cdef int kind, N, nsamp, tie_lowest, last_arm, last_reward, best_arm
    cdef long t
    cdef double eps, scale
    cdef long succ[MAXN]
    cdef long pulls[MAXN]
    cdef double pinned[MAXN]
    cdef double theta[MAXN]  # epsilon_optimal only
    cdef double[:, :, ::1] ucl_q
    cdef double[:, ::1] gittins
    cdef long gcap

    def __init__(self, int kind, int n_arms, double eps, int nsamp, double scale,
                  int tie_lowest, object pinned, object ucl_q, object gittins,
                  long gcap):
        cdef int j
        self.kind = kind
        self.N = n_arms
        self.eps = eps
        self.nsamp = nsamp
        self.scale = scale
        self.tie_lowest = tie_lowest
        for j in range(n_arms):
            self.pinned[j] = pinned[j]
        self.ucl_q = ucl_q
        self.gittins = gittins
        self.gcap = gcap
        self.reset()

    cdef void reset(self) noexcept:
        cdef int j
        for j in range(self.N):
            self.succ[j] = 0
            self.pulls[j] = 0
        self.last_arm = -1
        self.last_reward = -1
        self.t = 1
        self.best_arm = 0

    cdef void set_theta(self, double* theta, int best_arm) noexcept:
        cdef int j
        for j in range(self.N):
            self.theta[j] = theta[j]
        self.best_arm = best_arm

    cdef void observe(self, int a, int r) noexcept:
        if self.kind == H_EOPT:
            return
        if self.kind == H_WSLS or self.kind == H_COMM:
            self.last_arm = a
            self.last_reward = r
            return
        self.succ[a] += r
        self.pulls[a] += 1
        self.t += 1

    cdef int suggest(self, bitgen_t* bg) noexcept:
        cdef int j, k, best, cnt
        cdef double u, top, m
        cdef double vals[MAXN]
        cdef int N = self.N

        if self.kind == H_EG or self.kind == H_EOPT:
            u = unext(bg)
            if u < self.eps:
                return uniform_arm(bg, N)
            if self.kind == H_EOPT:
                return self.best_arm
            for j in range(N):
                if not isnan(self.pinned[j]):
                    vals[j] = self.pinned[j]
                elif self.pulls[j] > 0:
                    vals[j] = self.succ[j] / <double>self.pulls[j]
                else:
                    vals[j] = 0.5
            top = vals[0]
            best = 0
            cnt = 1
            for j in range(1, N):
                if vals[j] > top:
                    top = vals[j]
                    best = j
                    cnt = 1
                elif vals[j] == top:
                    cnt += 1
            if self.tie_lowest or cnt == 1:
                return best
            k = uniform_arm(bg, cnt)
            cnt = 0
            for j in range(N):
                if vals[j] == top:
                    if cnt == k:
                        return j
                    cnt += 1
            return best

        if self.kind == H_WSLS:
            if self.last_arm < 0:
                return uniform_arm(bg, N)
            if self.last_reward == 1:
                return self.last_arm
            k = uniform_arm(bg, N - 1)
            return k + 1 if k >= self.last_arm else k

        if self.kind == H_COMM:
            if self.last_reward < 0:
                return uniform_arm(bg, N)
            return self.last_reward

        if self.kind == H_TS:
            if self.nsamp == 0:  # exact posterior means
                for j in range(N):
                    vals[j] = (1.0 + self.succ[j]) / (2.0 + self.pulls[j])
            else:
                for j in range(N):
                    m = 0.0
                    for k in range(self.nsamp):
                        m += random_beta(bg, 1.0 + self.succ[j],
                                         1.0 + self.pulls[j] - self.succ[j])
                    vals[j] = m / self.nsamp
            best = 0
            top = vals[0]
            for j in range(1, N):
                if vals[j] > top:
                    top = vals[j]
                    best = j
            return best

        if self.kind == H_UCL:
            return self._suggest_ucl(bg)

        # H_GI
        for j in range(N):
            if 2 + self.pulls[j] <= self.gcap:
                vals[j] = self.gittins[1 + self.succ[j],
                                       1 + self.pulls[j] - self.succ[j]]
            else:
                vals[j] = (1.0 + self.succ[j]) / (2.0 + self.pulls[j])
        best = 0
        top = vals[0]
        for j in range(1, N):
            if vals[j] > top:
                top = vals[j]
                best = j
        return best

    cdef int _suggest_ucl(self, bitgen_t* bg) noexcept:
        cdef int j
        cdef int N = self.N
        cdef double q[MAXN]
        cdef double e[MAXN]
        cdef double cum[MAXN]
        cdef double top, tot, u, thr
        for j in range(N):
            q[j] = self.ucl_q[self.t, self.pulls[j], self.succ[j]]
        top = q[0]
        for j in range(1, N):
            if q[j] > top:
                top = q[j]
        tot = 0.0
        for j in range(N):
            e[j] = c_exp(self.scale * (q[j] - top))
            tot += e[j]
        cum[0] = e[0] / tot
        for j in range(1, N):
            cum[j] = cum[j - 1] + e[j] / tot
        u = unext(bg)
        thr = u * cum[N - 1]
        for j in range(N):
            if cum[j] > thr:
                return j
        return N - 1


# ---------------------------------------------------------------------------
# particle filter over (theta, modeled human state)


cdef class Filter:
    cdef int kind, N, nsamp, tie_lowest, last_arm
    cdef long P, t, tsq, degeneracy
    cdef double eps, scale, ess_frac
    cdef double pinned[MAXN]
    cdef long pulls[MAXN]
    cdef double[:, ::1] theta
    cdef double[::1] weights
    cdef long[:, ::1] succ
    cdef signed char[::1] last_r
    cdef double[::1] like
    cdef double[::1] cum
    cdef long[::1] idx
    cdef double[:, ::1] theta_tmp
    cdef long[:, ::1] succ_tmp
    cdef signed char[::1] last_r_tmp
    cdef double[:, :, ::1] ts_pdf, ts_cdf, ucl_q
    cdef double[::1] ts_w
    cdef double[:, ::1] gittins
    cdef long gcap

    def __init__(self, int kind, int n_arms, long n_particles, double eps,
                  int nsamp, double scale, int tie_lowest, object pinned,
                  double ess_frac,
                  object theta, object weights, object succ, object last_r,
                  object like, object cum, object idx,
                  object theta_tmp, object succ_tmp, object last_r_tmp,
                  object ts_pdf, object ts_cdf, object ts_w,
                  object ucl_q, object gittins, long gcap):
        cdef int j
        self.kind = kind
        self.N = n_arms
        self.P = n_particles
        self.eps = eps
        self.nsamp = nsamp
        self.scale = scale
        self.tie_lowest = tie_lowest
        for j in range(n_arms):
            self.pinned[j] = pinned[j]
        self.ess_frac = ess_frac
        self.theta = theta
        self.weights = weights
        self.succ = succ
        self.last_r = last_r
        self.like = like
        self.cum = cum
        self.idx = idx
        self.theta_tmp = theta_tmp
        self.succ_tmp = succ_tmp
        self.last_r_tmp = last_r_tmp
        self.ts_pdf = ts_pdf
        self.ts_cdf = ts_cdf
        self.ts_w = ts_w
        self.tsq = self.ts_w.shape[0]
        self.ucl_q = ucl_q
        self.gittins = gittins
        self.gcap = gcap
        self.degeneracy = 0

    cdef void init_particles(self, double* pa, double* pb, double* pfixed,
                             bitgen_t* bg) noexcept:
        cdef long p
        cdef int j
        for p in range(self.P):
            for j in range(self.N):
                if isnan(pfixed[j]):
                    self.theta[p, j] = random_beta(bg, pa[j], pb[j])
                else:
                    self.theta[p, j] = pfixed[j]
            self.weights[p] = 1.0
            for j in range(self.N):
                self.succ[p, j] = 0
            self.last_r[p] = 0
        for j in range(self.N):
            self.pulls[j] = 0
        self.last_arm = -1
        self.t = 1

    cdef void _likelihood(self, int h) noexcept:
        cdef long p
        cdef int j, q, best, cnt
        cdef double m, top, v, acc, tot
        cdef double vals[MAXN]
        cdef double e[MAXN]
        cdef int N = self.N

        if self.kind == H_EG:
            for p in range(self.P):
                for j in range(N):
                    if not isnan(self.pinned[j]):
                        vals[j] = self.pinned[j]
                    elif self.pulls[j] > 0:
                        vals[j] = self.succ[p, j] / <double>self.pulls[j]
                    else:
                        vals[j] = 0.5
                top = vals[0]
                best = 0
                cnt = 1
                for j in range(1, N):
                    if vals[j] > top:
                        top = vals[j]
                        best = j
                        cnt = 1
                    elif vals[j] == top:
                        cnt += 1
                if self.tie_lowest:
                    self.like[p] = self.eps / N + (1.0 - self.eps) * (best == h)
                else:
                    self.like[p] = self.eps / N + \
                        (1.0 - self.eps) * (vals[h] == top) / cnt
            return

        if self.kind == H_WSLS:
            if self.last_arm < 0:
                for p in range(self.P):
                    self.like[p] = 1.0 / N
            elif h == self.last_arm:
                for p in range(self.P):
                    self.like[p] = 1.0 if self.last_r[p] == 1 else 0.0
            else:
                for p in range(self.P):
                    self.like[p] = (1.0 if self.last_r[p] == 0 else 0.0) / (N - 1)
            return

        if self.kind == H_EOPT:
            for p in range(self.P):
                top = self.theta[p, 0]
                best = 0
                for j in range(1, N):
                    if self.theta[p, j] > top:
                        top = self.theta[p, j]
                        best = j
                self.like[p] = self.eps / N + (1.0 - self.eps) * (best == h)
            return

        if self.kind == H_TS:
            if self.nsamp == 0:
                for p in range(self.P):
                    top = (1.0 + self.succ[p, 0]) / (2.0 + self.pulls[0])
                    best = 0
                    for j in range(1, N):
                        m = (1.0 + self.succ[p, j]) / (2.0 + self.pulls[j])
                        if m > top:
                            top = m
                            best = j
                    self.like[p] = 1.0 if best == h else 0.0
                return
            for p in range(self.P):
                acc = 0.0
                for q in range(self.tsq):
                    v = self.ts_w[q] * self.ts_pdf[self.pulls[h], self.succ[p, h], q]
                    for j in range(N):
                        if j != h:
                            v = v * self.ts_cdf[self.pulls[j], self.succ[p, j], q]
                    acc += v
                self.like[p] = acc
            return

        if self.kind == H_UCL:
            for p in range(self.P):
                for j in range(N):
                    vals[j] = self.ucl_q[self.t, self.pulls[j], self.succ[p, j]]
                top = vals[0]
                for j in range(1, N):
                    if vals[j] > top:
                        top = vals[j]
                tot = 0.0
                for j in range(N):
                    e[j] = c_exp(self.scale * (vals[j] - top))
                    tot += e[j]
                self.like[p] = e[h] / tot
            return

        # H_GI
        for p in range(self.P):
            for j in range(N):
                if 2 + self.pulls[j] <= self.gcap:
                    vals[j] = self.gittins[1 + self.succ[p, j],
                                           1 + self.pulls[j] - self.succ[p, j]]
                else:
                    vals[j] = (1.0 + self.succ[p, j]) / (2.0 + self.pulls[j])
            top = vals[0]
            best = 0
            for j in range(1, N):
                if vals[j] > top:
                    top = vals[j]
                    best = j
            self.like[p] = 1.0 if best == h else 0.0

    cdef void reweight(self, int h) noexcept:
        cdef long p
        cdef double total, sc
        self._likelihood(h)
        total = 0.0
        for p in range(self.P):
            self.weights[p] = self.weights[p] * self.like[p]
            total += self.weights[p]
        if total == 0.0:
            for p in range(self.P):
                self.weights[p] = 1.0
            self.degeneracy += 1
        else:
            sc = self.P / total
            for p in range(self.P):
                self.weights[p] = self.weights[p] * sc

    cdef void maybe_resample(self, bitgen_t* bg) noexcept:
        cdef long p, i, j
        cdef int k
        cdef double total, sumsq, ess, u, pos
        total = 0.0
        for p in range(self.P):
            total += self.weights[p]
            self.cum[p] = total
        sumsq = 0.0
        for p in range(self.P):
            sumsq += self.weights[p] * self.weights[p]
        ess = total * total / sumsq
        if ess >= self.ess_frac * self.P:
            return
        u = unext(bg)
        i = 0
        j = 0
        while i < self.P:
            pos = (i + u) * total / self.P
            while j < self.P - 1 and self.cum[j] <= pos:
                j += 1
            self.idx[i] = j
            i += 1
        for i in range(self.P):
            j = self.idx[i]
            for k in range(self.N):
                self.theta_tmp[i, k] = self.theta[j, k]
                self.succ_tmp[i, k] = self.succ[j, k]
            self.last_r_tmp[i] = self.last_r[j]
        for i in range(self.P):
            for k in range(self.N):
                self.theta[i, k] = self.theta_tmp[i, k]
                self.succ[i, k] = self.succ_tmp[i, k]
            self.last_r[i] = self.last_r_tmp[i]
            self.weights[i] = 1.0

    cdef int thompson(self, bitgen_t* bg) noexcept:
        cdef long p, pick
        cdef int j, best
        cdef double total, u, top
        total = 0.0
        for p in range(self.P):
            total += self.weights[p]
            self.cum[p] = total
        u = unext(bg) * total
        pick = self.P - 1
        for p in range(self.P):
            if self.cum[p] > u:
                pick = p
                break
        top = self.theta[pick, 0]
        best = 0
        for j in range(1, self.N):
            if self.theta[pick, j] > top:
                top = self.theta[pick, j]
                best = j
        return best

    cdef int best_mass_argmax(self) noexcept:
        cdef double frac
        return self.best_frac_arm(&frac)

    cdef int sample_predicted(self, bitgen_t* bg) noexcept:
        cdef long p
        cdef int j
        cdef double mass, u
        cdef double cum[MAXN]
        for j in range(self.N):
            self._likelihood(j)
            mass = 0.0
            for p in range(self.P):
                mass += self.weights[p] * self.like[p]
            cum[j] = mass if j == 0 else cum[j - 1] + mass
        u = unext(bg) * cum[self.N - 1]
        for j in range(self.N):
            if cum[j] > u:
                return j
        return self.N - 1

    cdef int best_frac_arm(self, double* frac_out) noexcept:
        cdef long p
        cdef int j, best
        cdef double top, total
        cdef double mass[MAXN]
        for j in range(self.N):
            mass[j] = 0.0
        for p in range(self.P):
            top = self.theta[p, 0]
            best = 0
            for j in range(1, self.N):
                if self.theta[p, j] > top:
                    top = self.theta[p, j]
                    best = j
            mass[best] += self.weights[p]
        total = 0.0
        for j in range(self.N):
            total += mass[j]
        top = mass[0]
        best = 0
        for j in range(1, self.N):
            if mass[j] > top:
                top = mass[j]
                best = j
        frac_out[0] = mass[best] / total
        return best

    cdef void propagate(self, int a, bitgen_t* bg) noexcept:
        cdef long p
        cdef signed char r
        for p in range(self.P):
            r = 1 if unext(bg) < self.theta[p, a] else 0
            self.succ[p, a] += r
            self.last_r[p] = r
        self.pulls[a] += 1
        self.last_arm = a
        self.t += 1


# ---------------------------------------------------------------------------
# batch driver


cdef int _mostfreq(long* counts, int N, bitgen_t* bg) noexcept:
    cdef int j, best, cnt, k
    cdef long top, total
    total = 0
    for j in range(N):
        total += counts[j]
    if total == 0:
        return uniform_arm(bg, N)
    top = counts[0]
    best = 0
    cnt = 1
    for j in range(1, N):
        if counts[j] > top:
            top = counts[j]
            best = j
            cnt = 1
        elif counts[j] == top:
            cnt += 1
    if cnt == 1:
        return best
    k = uniform_arm(bg, cnt)
    cnt = 0
    for j in range(N):
        if counts[j] == top:
            if cnt == k:
                return j
            cnt += 1
    return best


def run_block(int mode, int horizon, int n_arms,
              long episode_lo, long episode_hi,
              object master_seed, long experiment_id,
              double[::1] prior_alpha, double[::1] prior_beta,
              double[::1] prior_fixed, double[::1] theta_fixed,
              int h_kind, double h_eps, int h_nsamp, double h_scale,
              int h_tie_lowest, double[::1] h_pinned,
              object h_ucl_q, object h_gittins, long h_gcap,
              int r_kind, int r_schedule, double r_trust,
              int r_texplore, int r_tobserve,
              int i_kind, double i_eps, int i_nsamp, double i_scale,
              int i_tie_lowest, double[::1] i_pinned,
              object i_ucl_q, object i_gittins, long i_gcap,
              object pf,  # Filter instance or None
              double[::1] regrets, signed char[::1] jstar_out,
              double[::1] curve,
              signed char[:, ::1] sugg_prefix, signed char[:, ::1] exec_prefix,
              signed char[:, ::1] traj_h, signed char[:, ::1] traj_a,
              signed char[:, ::1] traj_r, double[:, ::1] thetas_out):
    """Simulate episodes [lo, hi); returns the particle degeneracy count."""
    cdef long E = episode_hi - episode_lo
    cdef long ep, i, t, sched
    cdef int last_sugg
    cdef int j, h, a, r, d
    cdef int N = n_arms
    cdef int record_curve = curve.shape[0] > 0
    cdef int k_prefix = sugg_prefix.shape[1]
    cdef int record_traj = traj_a.shape[1] > 0
    cdef double theta[MAXN]
    cdef double gaps[MAXN]
    cdef long counts[MAXN]
    cdef double cum_regret, best_mean, u
    cdef int jstar, prev_exec, cur_t_flag, cur_arm
    cdef bitgen_t* ebg
    cdef bitgen_t* hbg
    cdef bitgen_t* rbg
    cdef Learner hum, inner
    cdef Filter flt = <Filter>pf if pf is not None else None

    hum = Learner(h_kind, N, h_eps, h_nsamp, h_scale, h_tie_lowest,
                  [h_pinned[j] for j in range(N)], h_ucl_q, h_gittins, h_gcap)
    inner = Learner(i_kind, N, i_eps, i_nsamp, i_scale, i_tie_lowest,
                    [i_pinned[j] for j in range(N)], i_ucl_q, i_gittins, i_gcap)

    for i in range(E):
        ep = episode_lo + i
        gen_env = _GENERATOR(_PCG64(_SEEDSEQ(master_seed, spawn_key=(experiment_id, ep, 0))))
        gen_hum = _GENERATOR(_PCG64(_SEEDSEQ(master_seed, spawn_key=(experiment_id, ep, 1))))
        gen_rob = _GENERATOR(_PCG64(_SEEDSEQ(master_seed, spawn_key=(experiment_id, ep, 2))))
        ebg = <bitgen_t*>PyCapsule_GetPointer(gen_env.bit_generator.capsule, "BitGenerator")
        hbg = <bitgen_t*>PyCapsule_GetPointer(gen_hum.bit_generator.capsule, "BitGenerator")
        rbg = <bitgen_t*>PyCapsule_GetPointer(gen_rob.bit_generator.capsule, "BitGenerator")

        # instance
        if theta_fixed.shape[0] > 0:
            for j in range(N):
                theta[j] = theta_fixed[j]
        else:
            for j in range(N):
                if isnan(prior_fixed[j]):
                    theta[j] = random_beta(ebg, prior_alpha[j], prior_beta[j])
                else:
                    theta[j] = prior_fixed[j]
        jstar = 0
        best_mean = theta[0]
        for j in range(1, N):
            if theta[j] > best_mean:
                best_mean = theta[j]
                jstar = j
        for j in range(N):
            gaps[j] = best_mean - theta[j]
        jstar_out[i] = <signed char>jstar
        if thetas_out.shape[1] > 0:
            for j in range(N):
                thetas_out[i, j] = theta[j]

        # per-episode state
        hum.reset()
        if h_kind == H_EOPT:
            hum.set_theta(theta, jstar)
        inner.reset()
        for j in range(N):
            counts[j] = 0
        prev_exec = -1
        cur_t_flag = -1
        cur_arm = -1
        last_sugg = -1
        if flt is not None:
            flt.init_particles(&prior_alpha[0], &prior_beta[0], &prior_fixed[0], rbg)
        cum_regret = 0.0

        for t in range(1, horizon + 1):
            h = -1
            if mode == M_SOLO:
                h = hum.suggest(hbg)
                a = h
            elif mode == M_TELEOP or (mode == M_TURNS and t % 2 == 1):
                h = hum.suggest(hbg)
                # robot sees the suggestion
                if r_kind == R_COPY:
                    counts[h] += 1
                    cur_t_flag = <int>t
                    cur_arm = h
                elif r_kind == R_MOSTFREQ or r_kind == R_GLIE:
                    counts[h] += 1
                elif r_kind == R_WSLS_DEC or r_kind == R_COMM_DEC:
                    if prev_exec >= 0:
                        if r_kind == R_WSLS_DEC:
                            r = 1 if h == prev_exec else 0
                        else:
                            r = 1 if h == 1 else 0
                        inner.observe(prev_exec, r)
                elif r_kind == R_BELIEF:
                    flt.reweight(h)
                    flt.maybe_resample(rbg)
                    last_sugg = h
                if mode == M_TURNS:
                    a = h
                else:
                    a = _choose(r_kind, r_schedule, r_trust, t, N, counts,
                                cur_t_flag, cur_arm, h, last_sugg, inner, flt, rbg)
            elif mode == M_TURNS:  # robot round, no suggestion
                a = _choose(r_kind, r_schedule, r_trust, t, N, counts,
                            cur_t_flag, cur_arm, -1, last_sugg, inner, flt, rbg)
            else:  # M_PREEMPT: scripted act-or-defer
                if t <= r_texplore:
                    d = <int>((t - 1) % N)
                elif t <= r_texplore + r_tobserve:
                    d = -1
                elif flt is not None:
                    d = flt.best_mass_argmax()
                else:
                    d = _mostfreq(counts, N, rbg)
                if d < 0:
                    h = hum.suggest(hbg)
                    counts[h] += 1
                    if flt is not None:
                        flt.reweight(h)
                        flt.maybe_resample(rbg)
                    a = h
                else:
                    a = d

            u = unext(ebg)
            r = 1 if u < theta[a] else 0
            hum.observe(a, r)
            if r_kind == R_WSLS_DEC or r_kind == R_COMM_DEC:
                prev_exec = a
            elif flt is not None:
                flt.propagate(a, rbg)

            cum_regret += gaps[a]
            if record_curve:
                curve[t - 1] += cum_regret
            if k_prefix > 0 and t <= k_prefix:
                if h >= 0:
                    sugg_prefix[i, t - 1] = <signed char>h
                exec_prefix[i, t - 1] = <signed char>a
            if record_traj:
                if h >= 0:
                    traj_h[i, t - 1] = <signed char>h
                traj_a[i, t - 1] = <signed char>a
                traj_r[i, t - 1] = <signed char>r

        regrets[i] = cum_regret

    return flt.degeneracy if flt is not None else 0


cdef int _choose(int r_kind, int r_schedule, double r_trust, long t, int N,
                 long* counts, int cur_t_flag, int cur_arm, int fresh_sugg,
                 int cur_sugg, Learner inner, Filter flt, bitgen_t* rbg) noexcept:
    cdef long sched
    cdef int arm
    cdef double frac
    if r_kind == R_COPY:
        if cur_t_flag == <int>t:
            return cur_arm
        return _mostfreq(counts, N, rbg)
    if r_kind == R_MOSTFREQ:
        return _mostfreq(counts, N, rbg)
    if r_kind == R_GLIE:
        sched = square_explore_arm(t, N)
        if sched >= 0:
            return <int>sched
        return _mostfreq(counts, N, rbg)
    if r_kind == R_WSLS_DEC or r_kind == R_COMM_DEC:
        return inner.suggest(rbg)
    # R_BELIEF: explore on schedule, exploit once confident, else trust the human
    if r_schedule:
        sched = square_explore_arm(t, N)
        if sched >= 0:
            return <int>sched
    arm = flt.best_frac_arm(&frac)
    if frac >= r_trust:
        return arm
    if fresh_sugg >= 0:
        return fresh_sugg
    return flt.sample_predicted(rbg)


def make_filter(int kind, int n_arms, long n_particles, double eps, int nsamp,
                double scale, int tie_lowest, object pinned, double ess_frac,
                object ts_pdf, object ts_cdf, object ts_w, object ucl_q,
                object gittins, long gcap):
    """Allocate a Filter with its scratch buffers."""
    P, N = n_particles, n_arms
    return Filter(
        kind, n_arms, n_particles, eps, nsamp, scale, tie_lowest, pinned,
        ess_frac,
        np.zeros((P, N)), np.ones(P), np.zeros((P, N), dtype=np.int64),
        np.zeros(P, dtype=np.int8),
        np.zeros(P), np.zeros(P), np.zeros(P, dtype=np.int64),
        np.zeros((P, N)), np.zeros((P, N), dtype=np.int64),
        np.zeros(P, dtype=np.int8),
        ts_pdf, ts_cdf, ts_w, ucl_q, gittins, gcap,
    )


# ---------------------------------------------------------------------------
# Gittins index DP


def gittins_solve(double gamma, int cap, double tolerance, int depth):
    """Bisection on the retirement rate with a truncated restart DP per state."""
    values_arr = np.full((cap + 1, cap + 1), np.nan)
    cdef double[:, ::1] values = values_arr
    v_arr = np.zeros(depth + 1)
    cdef double[::1] v = v_arr
    cdef int a0, b0, d, i
    cdef double lo, hi, lam, retire, mu, pull, cont, rs
    rs = 1.0 / (1.0 - gamma)
    for a0 in range(1, cap):
        for b0 in range(1, cap + 1 - a0):
            lo = a0 / <double>(a0 + b0)
            hi = 1.0
            while hi - lo > tolerance:
                lam = 0.5 * (lo + hi)
                retire = lam * rs
                for i in range(depth + 1):
                    v[i] = retire
                for d in range(depth - 1, 0, -1):
                    for i in range(d + 1):
                        mu = (a0 + i) / <double>(a0 + b0 + d)
                        pull = mu + gamma * (mu * v[i + 1] + (1.0 - mu) * v[i])
                        v[i] = retire if retire > pull else pull
                mu = a0 / <double>(a0 + b0)
                cont = mu + gamma * (mu * v[1] + (1.0 - mu) * v[0])
                if cont > lam * rs:
                    lo = lam
                else:
                    hi = lam
            values[a0, b0] = 0.5 * (lo + hi)
    return values_arr
