"""Desk-scale random-binning scheme: codebook, typicality encoder, binning,
universal hashing, decoder, Monte-Carlo error estimation, and exact small-n
leakage accounting.

Blocklengths stay tiny (exact leakage enumerates all binary sequences), so
measured leakages are finite-n values, not the vanishing asymptotic ones.
Typicality thresholds are information-density sums in bits per block:

  encoder set: sum_t log2 P(u_t|xt_t)/P(u_t) <= n (I(Xt;U) + gamma),
               restricted to codewords of positive posterior probability
  decoder set: sum_t log2 P(y_t|u_t)/P(y_t)  >= n (I(Y;U) - gamma)

Key extraction hashes the chosen codeword index with an affine map over
GF(2^64) truncated to log2(M_S) bits, a 2-universal family.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .infotheory import Channel, LN2, _entropy_nats
from .regions import AuthModel

WILSON_Z_95 = 1.959963984540054

_MASK64 = (1 << 64) - 1
_GF64_REDUCTION = 0x1B  # x^64 = x^4 + x^3 + x + 1


class SimLimitError(ValueError):
    """A configured simulator cap (blocklength, codebook size) was exceeded."""


def _gf64_mul(a: int, b: int) -> int:
    """Carry-less product in GF(2^64)."""
    r = 0
    while b:
        if b & 1:
            r ^= a
        b >>= 1
        hi = a >> 63
        a = (a << 1) & _MASK64
        if hi:
            a ^= _GF64_REDUCTION
    return r


def hash_index(a: int, b: int, index: int, m_s: int) -> int:
    """Affine GF(2^64) hash of a codeword index truncated to [0, m_s)."""
    return (_gf64_mul(a, index) ^ b) & (m_s - 1)


def wilson_interval(successes: int, trials: int, z: float = WILSON_Z_95):
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2.0 * trials)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / trials
                         + z * z / (4.0 * trials * trials)) / denom
    return (min(phat, max(0.0, center - half)), max(phat, min(1.0, center + half)))


def _safe_log2(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log2(p)


def _log_ratio(cond: np.ndarray, marg: np.ndarray) -> np.ndarray:
    """log2 cond - log2 marg with zero-marginal cells zeroed (unreachable)."""
    marg = np.broadcast_to(marg, cond.shape)
    with np.errstate(invalid="ignore"):
        out = _safe_log2(cond) - _safe_log2(marg)
    return np.where(marg <= 0.0, 0.0, out)


def _h_bits(p: np.ndarray) -> float:
    return _entropy_nats(p) / LN2


class ProtocolTables:
    """Per-symbol laws and information-density tables derived from a model
    and a test channel; everything downstream reads these."""

    def __init__(self, model: AuthModel, test: Channel):
        if test.num_inputs != model.n_xt:
            raise ValueError("test channel must act on the enrollment alphabet")
        px = model.px.probs
        ec = model.ec.matrix
        acy = model.ac_y.matrix
        acz = model.ac_z.matrix
        t = test.matrix

        self.nu = test.num_outputs
        p_xa = px[:, None] * ec                    # joint (X, Xt)
        self.p_xt = p_xa.sum(axis=0)
        p_au = self.p_xt[:, None] * t              # joint (Xt, U)
        self.p_u = p_au.sum(axis=0)
        p_xu = p_xa @ t                            # joint (X, U)

        with np.errstate(invalid="ignore", divide="ignore"):
            rev_test = np.where(self.p_u[:, None] > 0, p_au.T / self.p_u[:, None], 0.0)
            rev_ec = np.where(self.p_xt[:, None] > 0, p_xa.T / self.p_xt[:, None], 0.0)

        self.ch_y_u = rev_test @ rev_ec @ acy      # P(y|u)
        self.p_y = px @ acy
        self.p_z = px @ acz
        self.p_xtz = p_xa.T @ acz                  # joint (Xt, Z)
        with np.errstate(invalid="ignore", divide="ignore"):
            self.ch_z_xt = np.where(self.p_xt[:, None] > 0,
                                    self.p_xtz / self.p_xt[:, None], 0.0)

        self.tn_table = _log_ratio(t, self.p_u[None, :])          # [xt, u]
        self.an_table = _log_ratio(self.ch_y_u, self.p_y[None, :])  # [u, y]

        self.i_xt_u = self._mi_bits(p_au)
        self.i_y_u = self._mi_bits(acy.T @ p_xu)
        self.i_z_u = self._mi_bits(acz.T @ p_xu)
        self.i_xz = self._mi_bits(px[:, None] * acz)

        # Diagnostic sets: source-vs-auxiliary densities given the
        # eavesdropper's symbol, and enrollment-noise densities.
        p_uxz = p_xu.T[:, :, None] * acz[None, :, :]     # (U, X, Z)
        p_uz = p_uxz.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond_x_uz = np.where(p_uz[:, None, :] > 0, p_uxz / p_uz[:, None, :], 0.0)
            cond_x_z = np.where(self.p_z[None, :] > 0,
                                (px[:, None] * acz) / self.p_z[None, :], 0.0)
        self.bn_table = _log_ratio(cond_x_uz, cond_x_z[None, :, :])
        self.i_x_u_given_z = max(0.0, (_h_bits(p_uz) + _h_bits(p_uxz.sum(axis=0))
                                       - _h_bits(p_uxz) - _h_bits(self.p_z)))

        p_uax = p_au.T[:, :, None] * rev_ec[None, :, :]  # (U, Xt, X)
        p_ux = p_uax.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond_a_ux = np.where(p_ux[:, None, :] > 0, p_uax / p_ux[:, None, :], 0.0)
        self.kn_table = _log_ratio(cond_a_ux, ec.T[None, :, :])
        px_h = _h_bits(px)
        self.i_xt_u_given_x = max(0.0, (_h_bits(p_ux) + _h_bits(p_xa)
                                        - _h_bits(p_uax) - px_h))

    @staticmethod
    def _mi_bits(joint2d: np.ndarray) -> float:
        v = (_h_bits(joint2d.sum(axis=1)) + _h_bits(joint2d.sum(axis=0))
             - _h_bits(joint2d))
        return max(0.0, v)


@dataclass
class SimConfig:
    """Simulation settings; rates default to the scheme's own settings
    (storage I(Xt;U|Y) + 4 gamma, key I(Y;U) - I(Z;U) - 6 gamma, codebook
    size 2^{n (I(Xt;U) + 2 gamma)}), with M_S and M_J rounded to integer
    powers of two.  rate_overrides = (r_j_bits, r_s_bits) replaces the two
    rates for experiments outside the region."""

    n: int
    test_channel: Channel
    gamma: float = 0.1
    rate_overrides: tuple = None
    seed: int = 0
    exact_leakage_limit: int = 10
    trials: int = 10_000
    max_codebook_size: int = 1 << 20
    bijective_bins: bool = False
    collect_trace: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("blocklength n must be >= 1")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be > 0")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


@dataclass
class Codebook:
    """Realised code: i.i.d. codewords, uniform bin map, and hash parameters."""

    codewords: np.ndarray
    bin_of: np.ndarray
    key_of: np.ndarray
    hash_a: int
    hash_b: int
    m_s: int
    m_j: int
    gamma: float
    seed: int
    rates: dict
    tables: ProtocolTables
    _bins: dict = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def n(self) -> int:
        return self.codewords.shape[1]

    def bin_members(self, j: int) -> np.ndarray:
        if self._bins is None:
            order = np.argsort(self.bin_of, kind="stable")
            sorted_bins = self.bin_of[order]
            starts = np.searchsorted(sorted_bins, np.arange(self.m_j), side="left")
            ends = np.searchsorted(sorted_bins, np.arange(self.m_j), side="right")
            self._bins = {"order": order, "starts": starts, "ends": ends}
        b = self._bins
        return b["order"][b["starts"][j]:b["ends"][j]]

    def encoder_threshold(self) -> float:
        return self.n * (self.rates["i_xt_u"] + self.gamma)

    def decoder_threshold(self) -> float:
        return self.n * (self.rates["i_y_u"] - self.gamma)


def _require_binary(model: AuthModel):
    if model.n_xt != 2 or model.nx != 2 or model.ac_z.num_outputs != 2:
        raise ValueError("desk-scale simulation requires binary source, "
                         "enrollment, and eavesdropper alphabets")


def generate_codebook(model: AuthModel, config: SimConfig) -> Codebook:
    """Draw the code: 2^{n (I(Xt;U) + 2 gamma)} i.i.d. codewords from the
    auxiliary marginal, uniform bins, and a random affine hash over GF(2^64)
    with nonzero multiplier.  Deterministic given config.seed."""
    _require_binary(model)
    t = ProtocolTables(model, config.test_channel)

    exponent = config.n * (t.i_xt_u + 2.0 * config.gamma)
    if exponent > math.log2(config.max_codebook_size):
        raise SimLimitError(
            f"codebook size 2^{exponent:.2f} exceeds cap {config.max_codebook_size}")
    size = max(1, math.ceil(2.0 ** exponent))

    r_j = t.i_xt_u - t.i_y_u + 4.0 * config.gamma
    r_s = t.i_y_u - t.i_z_u - 6.0 * config.gamma
    if config.rate_overrides is not None:
        r_j, r_s = config.rate_overrides
    m_j = 1 << max(0, round(config.n * r_j))
    m_s = 1 << max(0, round(config.n * r_s))

    rng = np.random.default_rng(config.seed)
    codewords = rng.choice(t.nu, size=(size, config.n), p=t.p_u)
    if config.bijective_bins:
        m_j = size
        bin_of = np.arange(size)
    else:
        bin_of = rng.integers(0, m_j, size=size)

    hash_a = 0
    while hash_a == 0:
        hash_a = (int(rng.integers(0, 1 << 32)) << 32) | int(rng.integers(0, 1 << 32))
    hash_b = (int(rng.integers(0, 1 << 32)) << 32) | int(rng.integers(0, 1 << 32))
    key_of = np.array([hash_index(hash_a, hash_b, i, m_s) for i in range(size)])

    rates = {"r_j": r_j, "r_s": r_s, "i_xt_u": t.i_xt_u, "i_y_u": t.i_y_u,
             "i_z_u": t.i_z_u, "i_xz": t.i_xz}
    return Codebook(codewords, bin_of, key_of, hash_a, hash_b, m_s, m_j,
                    config.gamma, config.seed, rates, t)


def _enroll_index(codebook: Codebook, x_tilde_seq: np.ndarray, rng) -> int:
    """Index of the selected codeword, or -1 when none qualifies."""
    t = codebook.tables
    dens = t.tn_table[np.asarray(x_tilde_seq)[None, :], codebook.codewords].sum(axis=1)
    qualify = np.isfinite(dens) & (dens <= codebook.encoder_threshold())
    hits = np.flatnonzero(qualify)
    if hits.size == 0:
        return -1
    if hits.size == 1:
        return int(hits[0])
    return int(rng.choice(hits))


def enroll(codebook: Codebook, x_tilde_seq, rng=None):
    """Map an enrollment observation to (bin index, key, encoder_failed).

    Collects the codewords whose information density with the observation
    stays below the encoder threshold (zero-posterior codewords excluded)
    and picks one uniformly at random; with no qualifier the fallback output
    is bin 0, key 0, flagged as a failure.
    """
    x = np.asarray(x_tilde_seq)
    if x.shape != (codebook.n,):
        raise ValueError(f"expected a length-{codebook.n} sequence")
    if rng is None:
        rng = np.random.default_rng(codebook.seed)
    idx = _enroll_index(codebook, x, rng)
    if idx < 0:
        return 0, 0, True
    return int(codebook.bin_of[idx]), int(codebook.key_of[idx]), False


def _decode(codebook: Codebook, y_seq: np.ndarray, j: int):
    """(key, failed, hit_count, decoded_index or -1)."""
    t = codebook.tables
    members = codebook.bin_members(j)
    if members.size == 0:
        return 0, True, 0, -1
    dens = t.an_table[codebook.codewords[members], np.asarray(y_seq)[None, :]].sum(axis=1)
    qualify = dens >= codebook.decoder_threshold()
    hits = np.flatnonzero(qualify)
    if hits.size != 1:
        return 0, True, int(hits.size), -1
    idx = int(members[hits[0]])
    return int(codebook.key_of[idx]), False, 1, idx


def authenticate(codebook: Codebook, y_seq, j: int):
    """Recover the key from the authentication observation and the helper
    bin index; anything but a unique in-bin typical codeword is a failure
    with fallback key 0."""
    y = np.asarray(y_seq)
    if y.shape != (codebook.n,):
        raise ValueError(f"expected a length-{codebook.n} sequence")
    if not 0 <= j < codebook.m_j:
        raise ValueError(f"bin index {j} outside [0, {codebook.m_j})")
    s_hat, failed, _, _ = _decode(codebook, y, j)
    return s_hat, failed


def _all_sequences(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int64)


def _sequence_probs(seqs: np.ndarray, per_symbol: np.ndarray) -> np.ndarray:
    out = np.ones(len(seqs))
    for t in range(seqs.shape[1]):
        out *= per_symbol[seqs[:, t]]
    return out


def _pair_kernel(seqs: np.ndarray, per_symbol_2x2: np.ndarray) -> np.ndarray:
    """Matrix over (row sequence, column sequence) of the product law
    prod_t per_symbol[row_t, col_t]."""
    m = np.ones((len(seqs), len(seqs)))
    for t in range(seqs.shape[1]):
        m *= per_symbol_2x2[seqs[:, t][:, None], seqs[None, :, t]]
    return m


def _encoder_kernel(codebook: Codebook, seqs: np.ndarray) -> np.ndarray:
    """Exact encoder law P(s, j | xt-sequence), with the uniform choice among
    qualifying codewords marginalised; rows indexed by sequence, columns by
    the combined code s * m_j + j."""
    t = codebook.tables
    thr = codebook.encoder_threshold()
    sj_code = codebook.key_of * codebook.m_j + codebook.bin_of
    ncols = codebook.m_s * codebook.m_j
    out = np.zeros((len(seqs), ncols))
    chunk = max(1, (1 << 22) // max(1, codebook.size * codebook.n))
    for lo in range(0, len(seqs), chunk):
        block = seqs[lo:lo + chunk]
        dens = t.tn_table[block[:, None, :], codebook.codewords[None, :, :]].sum(axis=2)
        qualify = np.isfinite(dens) & (dens <= thr)
        for i in range(len(block)):
            q = np.flatnonzero(qualify[i])
            if q.size == 0:
                out[lo + i, 0] = 1.0   # fallback (s, j) = (0, 0)
            else:
                out[lo + i] = np.bincount(sj_code[q], minlength=ncols) / q.size
    return out


def exact_leakage(codebook: Codebook, model: AuthModel, config: SimConfig) -> dict:
    """Exact secrecy leakage I(S; J, Z^n), privacy leakage I(X^n; J, Z^n)/n,
    and the key-uniformity distance mu_n, by enumeration over all binary
    sequences.

    Secrecy side: P(s, j, z^n) = sum over xt-sequences of the pair law
    P(xt^n, z^n) (per-symbol joint, since the eavesdropper's observation is
    conditionally independent of the enrollment one given the source) times
    the exact encoder law.  Privacy side uses
    I(X^n; J, Z^n) = n I(X;Z) + H(J|Z^n) - H(J|X^n), valid because the
    helper is conditionally independent of the eavesdropper's sequence given
    the source sequence.
    """
    _require_binary(model)
    n = codebook.n
    if n > config.exact_leakage_limit:
        raise SimLimitError(f"n={n} exceeds exact enumeration limit "
                            f"{config.exact_leakage_limit}")
    t = codebook.tables
    seqs = _all_sequences(n)
    enc = _encoder_kernel(codebook, seqs)

    w = _pair_kernel(seqs, t.p_xtz)             # P(xt^n, z^n)
    p_sjz = enc.T @ w                           # (m_s * m_j, 2^n)
    table_mass = float(p_sjz.sum())

    m_s, m_j = codebook.m_s, codebook.m_j
    cube = p_sjz.reshape(m_s, m_j, len(seqs))
    p_jz = cube.sum(axis=0)
    p_z = p_jz.sum(axis=0)
    p_z_product = _sequence_probs(seqs, t.p_z)
    z_marginal_gap = float(np.max(np.abs(p_z - p_z_product)))

    h_s = _h_bits(cube.sum(axis=(1, 2)))
    secrecy = max(0.0, h_s + _h_bits(p_jz) - _h_bits(cube))
    mu_n = float(np.abs(cube - p_jz[None, :, :] / m_s).sum())

    v = _pair_kernel(seqs, model.ec.matrix)     # P(xt^n | x^n) as [x, xt]
    enc_j = enc.reshape(len(seqs), m_s, m_j).sum(axis=1)
    p_j_given_x = v @ enc_j
    p_x_seq = _sequence_probs(seqs, model.px.probs)
    h_j_given_x = float(np.sum(
        p_x_seq * np.array([_h_bits(row) for row in p_j_given_x])))
    h_j_given_z = _h_bits(p_jz) - _h_bits(p_z)
    privacy_total = n * t.i_xz + h_j_given_z - h_j_given_x

    return {
        "secrecy_leakage_bits": secrecy,
        "privacy_leakage_rate_bits": max(0.0, privacy_total) / n,
        "mu_n": mu_n,
        "table_mass": table_mass,
        "z_marginal_gap": z_marginal_gap,
    }


@dataclass
class SimReport:
    """Measured protocol statistics; exact fields are None above the
    enumeration limit or when the run is Monte-Carlo only."""

    n: int
    seed: int
    gamma: float
    trials: int
    codebook_size: int
    m_s: int
    m_j: int
    rates: dict
    bijective_bins: bool
    error_prob: float
    error_count: int
    wilson_low: float
    wilson_high: float
    encoder_failure_rate: float
    decoder_failure_rate: float
    decoder_ambiguity_rate: float
    codeword_error_rate: float
    bn_rate: float
    kn_rate: float
    exact_computed: bool
    exact_secrecy_leakage_bits: float = None
    exact_privacy_leakage_rate_bits: float = None
    mu_n: float = None
    checks: dict = field(default_factory=dict)
    trace: list = field(default=None, repr=False)

    def to_json_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            if k == "trace":
                continue
            if isinstance(v, (np.floating, np.integer)):
                v = v.item()
            out[k] = v
        return out

    TRACE_COLUMNS = ("trial", "j", "s", "s_hat", "encoder_failed",
                     "decoder_failed", "ambiguous", "error")

    def trace_csv_text(self) -> str:
        if self.trace is None:
            raise ValueError("run with collect_trace=True to record a trace")
        lines = [",".join(self.TRACE_COLUMNS)]
        lines.extend(",".join(str(int(v)) for v in row) for row in self.trace)
        return "\n".join(lines) + "\n"


def _sample_through(rng, rows: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Per-symbol categorical sampling of channel outputs given inputs."""
    cdf = np.cumsum(rows, axis=1)
    r = rng.random(inputs.shape)
    return (r[..., None] >= cdf[inputs][..., :-1]).sum(axis=-1)


def run_simulation(model: AuthModel, config: SimConfig,
                   monte_carlo_only: bool = False) -> SimReport:
    """Generate a codebook, measure error statistics over Monte-Carlo
    enrollment/authentication trials, and (within the enumeration limit)
    attach exact leakage figures.  Deterministic given config.seed."""
    _require_binary(model)
    if config.n > config.exact_leakage_limit and not monte_carlo_only:
        raise SimLimitError(
            f"n={config.n} exceeds exact limit {config.exact_leakage_limit}; "
            f"pass monte_carlo_only=True to skip exact leakage")

    codebook = generate_codebook(model, config)
    t = codebook.tables
    rng = np.random.default_rng([config.seed, 1])

    n, trials = config.n, config.trials
    xs = _sample_through(rng, model.px.probs[None, :],
                         np.zeros((trials, n), dtype=np.int64))
    xts = _sample_through(rng, model.ec.matrix, xs)
    ys = _sample_through(rng, model.ac_y.matrix, xs)
    zs = _sample_through(rng, model.ac_z.matrix, xs)

    thr_b = n * (t.i_x_u_given_z - config.gamma)
    thr_k = n * (t.i_xt_u_given_x - config.gamma)

    errors = enc_fail = dec_fail = ambig = cw_err = bn_hits = kn_hits = 0
    trace = [] if config.collect_trace else None
    for i in range(trials):
        idx = _enroll_index(codebook, xts[i], rng)
        if idx < 0:
            enc_fail += 1
            j, s = 0, 0
        else:
            j, s = int(codebook.bin_of[idx]), int(codebook.key_of[idx])
            cw = codebook.codewords[idx]
            if t.bn_table[cw, xs[i], zs[i]].sum() >= thr_b:
                bn_hits += 1
            if t.kn_table[cw, xts[i], xs[i]].sum() >= thr_k:
                kn_hits += 1
        s_hat, failed, hits, decoded = _decode(codebook, ys[i], j)
        if failed:
            dec_fail += 1
            if hits > 1:
                ambig += 1
        if decoded != idx:
            cw_err += 1
        if s_hat != s:
            errors += 1
        if trace is not None:
            trace.append((i, j, s, s_hat, idx < 0, failed, hits > 1, s_hat != s))

    lo, hi = wilson_interval(errors, trials)
    report = SimReport(
        n=n, seed=config.seed, gamma=config.gamma, trials=trials,
        codebook_size=codebook.size, m_s=codebook.m_s, m_j=codebook.m_j,
        rates=codebook.rates, bijective_bins=config.bijective_bins,
        error_prob=errors / trials, error_count=errors,
        wilson_low=lo, wilson_high=hi,
        encoder_failure_rate=enc_fail / trials,
        decoder_failure_rate=dec_fail / trials,
        decoder_ambiguity_rate=ambig / trials,
        codeword_error_rate=cw_err / trials,
        bn_rate=bn_hits / trials, kn_rate=kn_hits / trials,
        exact_computed=False, trace=trace,
    )

    if not monte_carlo_only and n <= config.exact_leakage_limit:
        ex = exact_leakage(codebook, model, config)
        report.exact_computed = True
        report.exact_secrecy_leakage_bits = ex["secrecy_leakage_bits"]
        report.exact_privacy_leakage_rate_bits = ex["privacy_leakage_rate_bits"]
        report.mu_n = ex["mu_n"]
        report.checks = {"table_mass": ex["table_mass"],
                         "z_marginal_gap": ex["z_marginal_gap"]}
    return report
