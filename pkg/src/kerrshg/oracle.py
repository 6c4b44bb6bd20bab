"""Independent numerical checks.

* :func:`simulate_linear_ou` integrates the linearized fluctuation SDE with
  Euler-Maruyama in the doubled phase space and estimates the spectrum
  matrix by Hann-windowed, 50 %-overlap Welch averaging.  It never calls the
  resolvent formula it is meant to validate.
* :func:`steady_state_oracle` finds the photon number from an explicitly
  built companion matrix, without the Newton polish of the model.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigTooCoarse, UnstableSystem

#: modes whose share of the stationary variance is below this are ignored
#: when picking the relaxation time that burn-in and windows must cover
RELEVANT_MODE_WEIGHT = 1e-3


@dataclass(frozen=True)
class OracleConfig:
    """Monte Carlo controls, all times in units of ``1/gamma_a``.

    ``t_total`` is the horizon of each trajectory including ``burn_in``.
    ``noise_substeps > 1`` builds each Wiener increment from that many finer
    normal draws, so runs at ``dt`` and ``dt/k`` can share one noise path.
    """

    dt: float
    t_total: float
    n_traj: int
    seed: int
    omega_grid: tuple
    segment_length: float
    burn_in: float
    g0_sq: float = 1.0
    noise_substeps: int = 1
    batch_size: int = 1000
    chunk_steps: int = 64
    noise_block: int = 16

    def __post_init__(self):
        if not (self.dt > 0 and self.t_total > 0 and self.segment_length > 0):
            raise ValueError("dt, t_total and segment_length must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if min(self.n_traj, self.noise_substeps, self.batch_size, self.chunk_steps,
               self.noise_block) < 1:
            raise ValueError("n_traj, noise_substeps, batch_size, chunk_steps and "
                             "noise_block must be >= 1")
        if not self.g0_sq > 0:
            raise ValueError("g0_sq must be positive")
        if len(self.omega_grid) == 0:
            raise ValueError("omega_grid must not be empty")

    @classmethod
    def auto(cls, sys, omega_grid, n_traj=2000, segments_per_traj=3, seed=0,
             dt_factor=1.0, segment_factor=60.0, burn_factor=10.0, **kw):
        """Config that satisfies :func:`check_config` for ``sys``.

        Window length and burn-in are rounded up to whole integration chunks,
        and the horizon holds exactly ``segments_per_traj`` back-to-back
        windows, i.e. ``2 * segments_per_traj - 1`` half-overlapping ones.
        """
        _require_stable(sys)
        kmax = np.abs(np.linalg.eigvals(sys.A)).max()
        dt = dt_factor * 0.01 / max(1.0, kmax)
        tau = relaxation_time(sys)
        K = kw.get("chunk_steps", cls.chunk_steps)
        half = math.ceil(segment_factor * tau / (2.0 * dt * K)) * K
        burn = math.ceil(burn_factor * tau / (dt * K)) * K
        n_half = 2 * segments_per_traj
        min_steps = 50.0 * tau / dt
        if burn + n_half * half < min_steps:
            n_half = math.ceil((min_steps - burn) / half)
        return cls(dt=dt, t_total=(burn + n_half * half + 0.5) * dt, n_traj=n_traj, seed=seed,
                   omega_grid=tuple(float(w) for w in omega_grid),
                   segment_length=2 * half * dt, burn_in=burn * dt, **kw)


@dataclass
class SpectrumEstimate:
    """Monte Carlo estimate of the spectrum matrix on ``omega``.

    ``per_traj`` holds one window-averaged estimate per trajectory; those are
    independent, so standard errors are taken across them.
    """

    omega: np.ndarray
    mean: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    per_traj: np.ndarray = field(repr=False)
    windows_per_traj: int = 0

    @property
    def n_windows(self):
        return self.per_traj.shape[0] * self.windows_per_traj

    def rows(self):
        return [
            (float(w), self.mean[k], self.stderr_re[k] + 1j * self.stderr_im[k])
            for k, w in enumerate(self.omega)
        ]


def _require_stable(sys):
    if np.linalg.eigvals(sys.A).real.max() >= 0.0:
        raise UnstableSystem("oracle needs a Hurwitz drift matrix")


def noise_matrix(D):
    """Channel matrix ``B`` (4 x m) with ``B @ B.T == D`` for diagonal ``D``.

    One real Wiener channel per nonzero diagonal entry.  When entry 1 is the
    conjugate of entry 0 (the physical case) it gets ``conj(sqrt(D[0, 0]))``.
    """
    D = np.asarray(D, dtype=complex)
    if np.any(D - np.diag(np.diag(D))):
        raise ValueError("only diagonal diffusion matrices are supported")
    d = np.diag(D)
    root = np.sqrt(d)
    if d[1] == np.conj(d[0]):
        root[1] = np.conj(root[0])
    channels = [i for i in range(d.size) if d[i] != 0]
    B = np.zeros((d.size, len(channels)), dtype=complex)
    for c, i in enumerate(channels):
        B[i, c] = root[i]
    return B


def relaxation_time(sys, weight_tol=RELEVANT_MODE_WEIGHT):
    """Slowest relaxation time among modes that carry stationary noise.

    Eigenmodes whose stationary variance is a fraction below ``weight_tol``
    of the largest are skipped, so an almost noiseless slow mode (the
    harmonic at ``r -> 0``) does not dictate the simulation horizon.
    """
    k, V = np.linalg.eig(sys.A)
    rates = -k.real
    if np.linalg.cond(V) > 1e12 or not np.any(sys.D):
        return float(1.0 / rates.min())
    Vi = np.linalg.inv(V)
    Q = Vi @ sys.D @ Vi.T
    w = np.abs(np.diag(Q)) / (2.0 * rates) * np.linalg.norm(V, axis=0) ** 2
    relevant = w >= weight_tol * w.max()
    return float(1.0 / rates[relevant].min())


def check_config(sys, cfg):
    """Raise :class:`ConfigTooCoarse` unless ``cfg`` resolves ``sys``."""
    _require_stable(sys)
    kmax = np.abs(np.linalg.eigvals(sys.A)).max()
    tau = relaxation_time(sys)
    problems = []
    if cfg.dt > 0.01 / max(1.0, kmax) * (1 + 1e-12):
        problems.append(f"dt={cfg.dt:.3g} exceeds 0.01/max(1,|k|)={0.01 / max(1.0, kmax):.3g}")
    if cfg.t_total < 50.0 * tau * (1 - 1e-12):
        problems.append(f"t_total={cfg.t_total:.3g} below 50 relaxation times ({50 * tau:.3g})")
    if cfg.segment_length < 20.0 * tau * (1 - 1e-12):
        problems.append(f"segment_length={cfg.segment_length:.3g} below 20 relaxation times")
    if cfg.burn_in + cfg.segment_length > cfg.t_total:
        problems.append("no complete window fits after burn-in")
    wmax = max(abs(w) for w in cfg.omega_grid)
    if wmax * cfg.dt > 0.5 * math.pi:
        problems.append(f"probe frequency {wmax:.3g} too close to Nyquist")
    if problems:
        raise ConfigTooCoarse("; ".join(problems))


def _layout(cfg):
    """Integer step counts: chunk, half-window, burn-in, number of half-windows."""
    K = cfg.chunk_steps

    def chunks(t):
        # whole chunks covering t, forgiving float noise in exact multiples
        return math.ceil(t / (cfg.dt * K) - 1e-9)

    half = max(1, chunks(0.5 * cfg.segment_length)) * K
    burn = chunks(cfg.burn_in) * K
    n_half = int((cfg.t_total / cfg.dt - burn) // half)
    return K, half, burn, n_half


def _trajectory_streams(cfg):
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_traj)
    return [np.random.default_rng(c) for c in children]


def simulate_linear_ou(sys, cfg, check=True):
    """Monte Carlo spectrum matrix of ``dv = A v dt + B dW``.

    Every trajectory owns the random stream ``SeedSequence(seed).spawn``'s
    child with its index, so results do not depend on ``batch_size``.
    """
    if check:
        check_config(sys, cfg)
    else:
        _require_stable(sys)
    A = np.asarray(sys.A, dtype=complex)
    B = noise_matrix(sys.D) * math.sqrt(cfg.g0_sq)
    K, half, burn, n_half = _layout(cfg)
    if n_half < 2:
        raise ConfigTooCoarse("horizon shorter than one window")
    seg = 2 * half
    omega = np.asarray(cfg.omega_grid, dtype=float)
    M = omega.size
    win = np.sin(np.pi * (np.arange(seg) + 0.5) / seg) ** 2
    norm = np.sum(win**2) * cfg.dt
    step = np.eye(4) + cfg.dt * A.T
    sub = cfg.noise_substeps
    sq = math.sqrt(cfg.dt / sub)
    m = B.shape[1]
    rows = [int(np.flatnonzero(B[:, c])[0]) for c in range(m)]
    gains = [B[i, c] * sq for c, i in enumerate(rows)]
    streams = _trajectory_streams(cfg)
    n_windows = n_half - 1
    n_steps = burn + n_half * half
    block = K * cfg.noise_block

    per_traj = np.zeros((cfg.n_traj, M, 4, 4), dtype=complex)
    for i0 in range(0, cfg.n_traj, cfg.batch_size):
        rngs = streams[i0:i0 + cfg.batch_size]
        nb = len(rngs)
        v = np.zeros((nb, 4), dtype=complex)
        # windowed transforms are accumulated as cosine and sine sums, so the
        # +omega and -omega transforms come out of one real matmul
        acc = np.zeros((2, 2 * M, nb, 4), dtype=complex)
        total = np.zeros((nb, M, 4, 4), dtype=complex)
        buf = np.empty((nb, block * sub, m))
        hist = np.empty((K, nb, 4), dtype=complex)
        kicks = np.zeros((K, nb, 4), dtype=complex)
        for s0 in range(0, n_steps, K):
            o = s0 % block
            if o == 0:
                n_draw = min(block, n_steps - s0) * sub
                for b, g in enumerate(rngs):
                    g.standard_normal(out=buf[b, :n_draw])
            if sub > 1:
                dw = buf[:, o * sub:(o + K) * sub].reshape(nb, K, sub, m).sum(axis=2)
            else:
                dw = buf[:, o:o + K]
            for c, i in enumerate(rows):
                np.multiply(dw[:, :, c].T, gains[c], out=kicks[:, :, i])
            for j in range(K):
                np.matmul(v, step, out=v)
                v += kicks[j]
                hist[j] = v
            if s0 < burn:
                continue
            p = s0 - burn
            q, off = divmod(p, half)
            wt = np.outer(omega, (s0 + 1 + np.arange(K)) * cfg.dt)
            trig = np.concatenate([np.cos(wt), np.sin(wt)]) * cfg.dt
            flat = hist.reshape(K, nb * 4).view(float)
            # window sets: A starts at even half-blocks, B at odd ones
            for which, start_q in ((0, 0), (1, 1)):
                if q < start_q:
                    continue
                pos = ((q - start_q) % 2) * half + off
                cs = (trig * win[pos:pos + K]) @ flat
                acc[which] += cs.view(complex).reshape(2 * M, nb, 4)
                if pos + K == seg:
                    C, S = acc[which][:M], acc[which][M:]
                    X, Xm = C - 1j * S, C + 1j * S
                    total += np.einsum("mbi,mbj->bmij", X, Xm) / norm
                    acc[which] = 0.0
        per_traj[i0:i0 + nb] = total / n_windows

    per_traj /= cfg.g0_sq
    mean = per_traj.mean(axis=0)
    ddof = 1 if cfg.n_traj > 1 else 0
    se_re = per_traj.real.std(axis=0, ddof=ddof) / math.sqrt(cfg.n_traj)
    se_im = per_traj.imag.std(axis=0, ddof=ddof) / math.sqrt(cfg.n_traj)
    return SpectrumEstimate(omega, mean, se_re, se_im, per_traj, n_windows)


def entry_zscores(est, F):
    """``(z_re, z_im)`` of every spectrum-matrix entry, shape ``(n_omega, 4, 4)``.

    An entry with zero spread across trajectories scores 0 if it matches
    ``F`` to rounding and ``inf`` otherwise.
    """
    F = np.asarray(F)
    out = []
    for part, se in ((np.real, est.stderr_re), (np.imag, est.stderr_im)):
        diff = part(est.mean) - part(F)
        tiny = 1e-9 * max(np.abs(F).max(), 1e-300)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, diff / se, np.where(np.abs(diff) <= tiny, 0.0, np.inf))
        out.append(z)
    return out[0], out[1]


def agreement_zscores(est, F):
    """One agreement z-score per probe frequency.

    The 32 real components of the spectrum matrix are compared entry by
    entry; the smallest two-sided p-value is Sidak-corrected for the number
    of live components and reported as the equivalent two-sided normal z.
    """
    z_re, z_im = entry_zscores(est, F)
    zs = np.concatenate([z_re.reshape(len(est.omega), -1), z_im.reshape(len(est.omega), -1)], axis=1)
    live = np.concatenate([est.stderr_re.reshape(len(est.omega), -1),
                           est.stderr_im.reshape(len(est.omega), -1)], axis=1) > 0
    out = np.zeros(len(est.omega))
    for k in range(len(est.omega)):
        worst = np.abs(zs[k]).max()
        m = int(live[k].sum())
        if not np.isfinite(worst):
            out[k] = np.inf
        elif m and worst > 0:
            p_min = 2.0 * stats.norm.sf(worst)
            # 1 - (1 - p)^m without cancellation
            p_family = -np.expm1(m * np.log1p(-p_min))
            out[k] = stats.norm.isf(p_family / 2.0)
    return out


def ensemble_moments(sys, cfg, v0, t):
    """Mean and second moments of ``v(t)`` started from ``v0``.

    Returns ``(mean, mean_se, second, second_se)`` where ``second[i, j]`` is
    the ensemble average of ``v_i v_j``.
    """
    _require_stable(sys)
    A = np.asarray(sys.A, dtype=complex)
    B = noise_matrix(sys.D) * math.sqrt(cfg.g0_sq)
    steps = int(round(t / cfg.dt))
    step = np.eye(4) + cfg.dt * A.T
    sq = math.sqrt(cfg.dt)
    rngs = _trajectory_streams(cfg)
    v = np.tile(np.asarray(v0, dtype=complex), (cfg.n_traj, 1))
    dw = np.stack([g.standard_normal((steps, B.shape[1])) for g in rngs], axis=1) * sq
    kicks = dw @ B.T
    for j in range(steps):
        v = v @ step + kicks[j]
    second = np.einsum("bi,bj->bij", v, v)

    def se(x):
        return (x.real.std(axis=0, ddof=1) + 1j * x.imag.std(axis=0, ddof=1)) / math.sqrt(cfg.n_traj)

    return v.mean(axis=0), se(v), second.mean(axis=0), se(second)


def steady_state_oracle(drive, r, lambda_kerr):
    """Photon numbers from the eigenvalues of the cubic's companion matrix."""
    c = 1.0 + lambda_kerr**2
    a2, a1, a0 = 2.0 / c, 1.0 / c, -abs(complex(drive)) ** 2 / c
    companion = np.array([[-a2, -a1, -a0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    roots = np.linalg.eigvals(companion)
    found = [max(z.real, 0.0) for z in roots if abs(z.imag) < 1e-9 and z.real >= -1e-9]
    return sorted(found)
