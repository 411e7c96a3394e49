import itertools
import json
import math

import numpy as np
import pytest

from authcap import (
    AuthModel,
    Channel,
    Codebook,
    SimConfig,
    SimLimitError,
    authenticate,
    enroll,
    exact_leakage,
    generate_codebook,
    run_simulation,
    wilson_interval,
)
from authcap.protocol import ProtocolTables, hash_index


def hb(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def hsm_model(p=0.1, q=0.5, eps=0.2):
    return AuthModel.binary_hsm(p, q, eps, classifier_trials=500)


def noiseless_model():
    return AuthModel(hsm_model().px, Channel.bsc(0.0), Channel.bsc(0.0),
                     Channel.bsc(0.5), classifier_trials=500)


def hand_codebook(model, test, codewords, bins, m_s, m_j, gamma, hash_a=3, hash_b=5):
    t = ProtocolTables(model, test)
    codewords = np.asarray(codewords)
    key_of = np.array([hash_index(hash_a, hash_b, i, m_s)
                       for i in range(len(codewords))])
    rates = {"r_j": math.log2(m_j), "r_s": math.log2(m_s), "i_xt_u": t.i_xt_u,
             "i_y_u": t.i_y_u, "i_z_u": t.i_z_u, "i_xz": t.i_xz}
    return Codebook(codewords, np.asarray(bins), key_of, hash_a, hash_b,
                    m_s, m_j, gamma, 0, rates, t)


# ---------------------------------------------------------------------------
# Brute-force leakage oracle: plain dict accumulation over all sequences,
# with information densities computed from probability products rather than
# the library's per-symbol log tables.
# ---------------------------------------------------------------------------

def brute_force_leakage(codebook, model, test):
    n = codebook.n
    px = model.px.probs
    ec = model.ec.matrix
    acz = model.ac_z.matrix
    tmat = test.matrix
    p_xtz = np.zeros((2, 2))
    p_u = np.zeros(tmat.shape[1])
    for x in range(2):
        for a in range(2):
            for u in range(tmat.shape[1]):
                p_u[u] += px[x] * ec[x, a] * tmat[a, u]
            for z in range(2):
                p_xtz[a, z] += px[x] * ec[x, a] * acz[x, z]

    thr = codebook.rates["i_xt_u"] + codebook.gamma

    def encoder_dist(xt):
        hits = []
        for i, cw in enumerate(codebook.codewords):
            p_cond = math.prod(tmat[xt[t], cw[t]] for t in range(n))
            if p_cond <= 0.0:
                continue
            p_marg = math.prod(p_u[cw[t]] for t in range(n))
            if math.log2(p_cond / p_marg) / n <= thr:
                hits.append(i)
        dist = {}
        if not hits:
            dist[(0, 0)] = 1.0
        else:
            for i in hits:
                key = (int(codebook.key_of[i]), int(codebook.bin_of[i]))
                dist[key] = dist.get(key, 0.0) + 1.0 / len(hits)
        return dist

    def entropy(d):
        return -sum(v * math.log2(v) for v in d.values() if v > 0)

    seqs = list(itertools.product((0, 1), repeat=n))
    p_sjz = {}
    for xt in seqs:
        e = encoder_dist(xt)
        for z in seqs:
            w = math.prod(p_xtz[xt[t], z[t]] for t in range(n))
            for (s, j), pe in e.items():
                k = (s, j, z)
                p_sjz[k] = p_sjz.get(k, 0.0) + w * pe

    def marg(keys, which):
        out = {}
        for k, v in keys.items():
            kk = tuple(k[i] for i in which)
            out[kk] = out.get(kk, 0.0) + v
        return out

    secrecy = (entropy(marg(p_sjz, (0,))) + entropy(marg(p_sjz, (1, 2)))
               - entropy(p_sjz))
    p_jz = marg(p_sjz, (1, 2))
    mu = 0.0
    for j, z in p_jz:
        for s in range(codebook.m_s):
            mu += abs(p_sjz.get((s, j, z), 0.0) - p_jz[(j, z)] / codebook.m_s)

    # privacy: accumulate P(x^n, j, z^n) directly
    p_xjz = {}
    for x in seqs:
        px_seq = math.prod(px[x[t]] for t in range(n))
        for xt in seqs:
            w1 = math.prod(ec[x[t], xt[t]] for t in range(n))
            if w1 == 0.0:
                continue
            e = marg_encoder_j(encoder_dist(xt))
            for z in seqs:
                w2 = math.prod(acz[x[t], z[t]] for t in range(n))
                if w2 == 0.0:
                    continue
                for j, pe in e.items():
                    k = (x, j, z)
                    p_xjz[k] = p_xjz.get(k, 0.0) + px_seq * w1 * w2 * pe
    privacy = (entropy(marg(p_xjz, (0,))) + entropy(marg(p_xjz, (1, 2)))
               - entropy(p_xjz)) / n
    return secrecy, privacy, mu


def marg_encoder_j(dist):
    out = {}
    for (s, j), v in dist.items():
        out[j] = out.get(j, 0.0) + v
    return out


# ---------------------------------------------------------------------------
# Codebook generation
# ---------------------------------------------------------------------------

def test_codebook_size_formula():
    m = hsm_model()
    cfg = SimConfig(n=8, test_channel=Channel.bsc(0.1), gamma=0.05, seed=0,
                    trials=1)
    book = generate_codebook(m, cfg)
    i_xt_u = 1 - hb(0.1)
    assert book.size == math.ceil(2 ** (8 * (i_xt_u + 0.1)))
    assert book.codewords.shape == (book.size, 8)


def test_rate_defaults_round_to_powers_of_two():
    m = hsm_model()
    cfg = SimConfig(n=10, test_channel=Channel.identity(2), gamma=0.1, seed=0,
                    trials=1)
    book = generate_codebook(m, cfg)
    r_j = book.rates["r_j"]
    r_s = book.rates["r_s"]
    assert book.m_j == 2 ** max(0, round(10 * r_j))
    assert book.m_s == 2 ** max(0, round(10 * r_s))
    # key rate is negative at this operating point, so the key set is trivial
    assert r_s < 0 and book.m_s == 1


def test_bijective_binning():
    m = noiseless_model()
    cfg = SimConfig(n=4, test_channel=Channel.identity(2), gamma=0.5, seed=1,
                    trials=1, bijective_bins=True)
    book = generate_codebook(m, cfg)
    assert book.m_j == book.size
    assert np.array_equal(book.bin_of, np.arange(book.size))
    # each bin holds exactly one codeword
    assert all(book.bin_members(j).size == 1 for j in range(book.m_j))


def test_uniform_bin_expected_occupancy():
    m = hsm_model()
    cfg = SimConfig(n=6, test_channel=Channel.bsc(0.1), gamma=0.1, seed=2,
                    trials=1)
    book = generate_codebook(m, cfg)
    counts = np.bincount(book.bin_of, minlength=book.m_j)
    assert counts.sum() == book.size
    assert abs(counts.mean() - book.size / book.m_j) <= 1e-12


def test_codebook_cap():
    m = hsm_model()
    cfg = SimConfig(n=10, test_channel=Channel.identity(2), gamma=0.1, seed=0,
                    trials=1, max_codebook_size=100)
    with pytest.raises(SimLimitError):
        generate_codebook(m, cfg)


def test_codebook_deterministic():
    m = hsm_model()
    cfg = SimConfig(n=6, test_channel=Channel.bsc(0.1), gamma=0.1, seed=7,
                    trials=1)
    a = generate_codebook(m, cfg)
    b = generate_codebook(m, cfg)
    assert np.array_equal(a.codewords, b.codewords)
    assert np.array_equal(a.bin_of, b.bin_of)
    assert (a.hash_a, a.hash_b) == (b.hash_a, b.hash_b)


# ---------------------------------------------------------------------------
# Hashing
# ---------------------------------------------------------------------------

def test_hash_range_and_determinism():
    for i in range(50):
        v = hash_index(0x9E3779B97F4A7C15, 0x12345, i, 16)
        assert 0 <= v < 16
        assert v == hash_index(0x9E3779B97F4A7C15, 0x12345, i, 16)
    assert hash_index(12345, 999, 7, 1) == 0


def test_hash_two_universal_bound():
    rng = np.random.default_rng(3)
    n_idx, m_s, draws = 64, 8, 400
    pair_count = n_idx * (n_idx - 1) // 2
    fractions = []
    for _ in range(draws):
        a = 0
        while a == 0:
            a = int(rng.integers(1, 1 << 63))
        b = int(rng.integers(0, 1 << 63))
        keys = [hash_index(a, b, i, m_s) for i in range(n_idx)]
        collisions = sum(1 for i in range(n_idx) for k in range(i + 1, n_idx)
                         if keys[i] == keys[k])
        fractions.append(collisions / pair_count)
    mean = float(np.mean(fractions))
    sigma = float(np.std(fractions)) / math.sqrt(draws)
    assert mean <= 1.0 / m_s + 3.0 * sigma + 1e-12


# ---------------------------------------------------------------------------
# Enroll / authenticate
# ---------------------------------------------------------------------------

def test_enroll_selects_matching_codeword():
    m = noiseless_model()
    cws = np.array([[0, 1, 0, 1], [1, 1, 0, 0], [0, 0, 0, 0]])
    book = hand_codebook(m, Channel.identity(2), cws, [0, 1, 2], m_s=4, m_j=3,
                         gamma=0.5)
    j, s, failed = enroll(book, np.array([1, 1, 0, 0]),
                          rng=np.random.default_rng(0))
    assert not failed
    assert j == 1
    assert s == int(book.key_of[1])


def test_enroll_no_qualifier_fallback():
    m = noiseless_model()
    cws = np.array([[0, 1, 0, 1], [1, 1, 0, 0]])
    book = hand_codebook(m, Channel.identity(2), cws, [0, 1], m_s=4, m_j=2,
                         gamma=0.5)
    j, s, failed = enroll(book, np.array([1, 0, 1, 0]),
                          rng=np.random.default_rng(0))
    assert failed and (j, s) == (0, 0)


def test_enroll_length_check():
    m = noiseless_model()
    book = hand_codebook(m, Channel.identity(2), np.zeros((1, 4), dtype=int),
                         [0], m_s=2, m_j=1, gamma=0.5)
    with pytest.raises(ValueError):
        enroll(book, np.array([0, 1]))


def test_encoder_failure_rate_identity_leaning():
    m = hsm_model()
    cfg = SimConfig(n=8, test_channel=Channel.bsc(0.05), gamma=0.1, seed=4,
                    trials=10_000)
    rep = run_simulation(m, cfg, monte_carlo_only=True)
    assert rep.encoder_failure_rate < 0.05


def test_authenticate_empty_bin_fails():
    m = noiseless_model()
    cws = np.array([[0, 1, 0, 1], [1, 1, 0, 0]])
    book = hand_codebook(m, Channel.identity(2), cws, [0, 0], m_s=4, m_j=2,
                         gamma=0.5)
    s_hat, failed = authenticate(book, np.array([0, 1, 0, 1]), 1)
    assert failed and s_hat == 0
    with pytest.raises(ValueError):
        authenticate(book, np.array([0, 1, 0, 1]), 5)


def test_noiseless_bijective_recovery():
    m = noiseless_model()
    cfg = SimConfig(n=6, test_channel=Channel.identity(2), gamma=0.4, seed=5,
                    trials=2_000, bijective_bins=True, rate_overrides=(1.4, 0.5))
    rep = run_simulation(m, cfg)
    assert rep.m_s == 8
    assert rep.error_prob == 0.0
    assert rep.codeword_error_rate == 0.0


def test_membership_density_forms_agree():
    # per-symbol log-ratio sums match the n-normalised definition computed
    # from full sequence probabilities
    m = hsm_model()
    cfg = SimConfig(n=6, test_channel=Channel.bsc(0.1), gamma=0.1, seed=6,
                    trials=1)
    book = generate_codebook(m, cfg)
    t = book.tables
    rng = np.random.default_rng(7)
    for _ in range(50):
        xt = rng.integers(0, 2, size=6)
        y = rng.integers(0, 3, size=6)
        for cw in book.codewords[rng.integers(0, book.size, size=5)]:
            sum_form = t.tn_table[xt, cw].sum() / 6
            p_cond = math.prod(cfg.test_channel.matrix[xt[i], cw[i]] for i in range(6))
            p_marg = math.prod(t.p_u[cw[i]] for i in range(6))
            if p_cond > 0:
                assert abs(sum_form - math.log2(p_cond / p_marg) / 6) <= 1e-12
            py_cond = math.prod(t.ch_y_u[cw[i], y[i]] for i in range(6))
            py_marg = math.prod(t.p_y[y[i]] for i in range(6))
            if py_cond > 0 and py_marg > 0:
                sum_a = t.an_table[cw, y].sum() / 6
                assert abs(sum_a - math.log2(py_cond / py_marg) / 6) <= 1e-12


# ---------------------------------------------------------------------------
# Exact leakage
# ---------------------------------------------------------------------------

def test_exact_leakage_against_brute_force():
    m = hsm_model()
    test = Channel.bsc(0.1)
    cfg = SimConfig(n=3, test_channel=test, gamma=0.2, seed=8, trials=1,
                    rate_overrides=(1.0, 1.0 / 3.0))
    book = generate_codebook(m, cfg)
    assert book.m_s == 2
    got = exact_leakage(book, m, cfg)
    secrecy, privacy, mu = brute_force_leakage(book, m, test)
    assert got["secrecy_leakage_bits"] == pytest.approx(secrecy, abs=1e-10)
    assert got["privacy_leakage_rate_bits"] == pytest.approx(privacy, abs=1e-10)
    assert got["mu_n"] == pytest.approx(mu, abs=1e-10)


def test_exact_leakage_trivial_key():
    m = hsm_model()
    cfg = SimConfig(n=5, test_channel=Channel.identity(2), gamma=0.1, seed=9,
                    trials=1)
    book = generate_codebook(m, cfg)
    assert book.m_s == 1
    got = exact_leakage(book, m, cfg)
    assert got["secrecy_leakage_bits"] == 0.0
    assert got["mu_n"] == 0.0


def test_exact_leakage_independent_eavesdropper():
    # eps = 1/2 decouples the observed sequence: I(S;J,Z^n) = I(S;J)
    m = hsm_model(eps=0.5)
    test = Channel.bsc(0.1)
    cfg = SimConfig(n=3, test_channel=test, gamma=0.2, seed=10, trials=1,
                    rate_overrides=(1.0, 1.0 / 3.0))
    book = generate_codebook(m, cfg)
    got = exact_leakage(book, m, cfg)
    secrecy, privacy, mu = brute_force_leakage(book, m, test)
    assert got["secrecy_leakage_bits"] == pytest.approx(secrecy, abs=1e-10)
    assert got["privacy_leakage_rate_bits"] == pytest.approx(privacy, abs=1e-10)
    assert got["mu_n"] == pytest.approx(mu, abs=1e-10)


def test_exact_leakage_invariants():
    m = hsm_model()
    cfg = SimConfig(n=6, test_channel=Channel.bsc(0.1), gamma=0.1, seed=11,
                    trials=1, rate_overrides=(0.8, 1.0 / 3.0))
    book = generate_codebook(m, cfg)
    got = exact_leakage(book, m, cfg)
    assert abs(got["table_mass"] - 1.0) <= 1e-10
    assert got["z_marginal_gap"] <= 1e-10
    assert 0.0 <= got["mu_n"] <= 2.0
    assert got["secrecy_leakage_bits"] <= math.log2(book.m_s) + 1e-9
    assert got["privacy_leakage_rate_bits"] >= 0.0


def test_exact_leakage_limit():
    m = hsm_model()
    cfg = SimConfig(n=11, test_channel=Channel.bsc(0.1), gamma=0.1, seed=12,
                    trials=1, exact_leakage_limit=10)
    book = generate_codebook(m, cfg)
    with pytest.raises(SimLimitError):
        exact_leakage(book, m, cfg)


def test_injective_binning_leaks_key():
    # destroying the compression (one codeword per bin) exposes the key:
    # leakage jumps to ~H(S), strictly above uniform binning at modest M_J
    m = hsm_model()
    test = Channel.bsc(0.1)
    uniform_leaks, injective_leaks = [], []
    for seed in range(5):
        cfg_u = SimConfig(n=6, test_channel=test, gamma=0.1, seed=seed, trials=1,
                          rate_overrides=(0.4, 1.0 / 6.0))
        book_u = generate_codebook(m, cfg_u)
        assert book_u.m_s == 2 and book_u.m_j < book_u.size
        uniform_leaks.append(exact_leakage(book_u, m, cfg_u)["secrecy_leakage_bits"])

        cfg_i = SimConfig(n=6, test_channel=test, gamma=0.1, seed=seed, trials=1,
                          rate_overrides=(0.4, 1.0 / 6.0), bijective_bins=True)
        book_i = generate_codebook(m, cfg_i)
        injective_leaks.append(exact_leakage(book_i, m, cfg_i)["secrecy_leakage_bits"])
    assert np.mean(injective_leaks) > np.mean(uniform_leaks) + 0.1


# ---------------------------------------------------------------------------
# Full runs
# ---------------------------------------------------------------------------

def test_single_codeword_book_zero_error():
    m = noiseless_model()
    book = hand_codebook(m, Channel.identity(2), np.array([[0, 1, 0, 1]]),
                         [0], m_s=1, m_j=1, gamma=0.5)
    j, s, failed = enroll(book, np.array([0, 1, 0, 1]))
    s_hat, dec_failed = authenticate(book, np.array([0, 1, 0, 1]), j)
    assert s_hat == s == 0


def test_run_simulation_deterministic():
    m = hsm_model()
    cfg = SimConfig(n=6, test_channel=Channel.bsc(0.1), gamma=0.1, seed=13,
                    trials=300)
    a = run_simulation(m, cfg)
    b = run_simulation(m, cfg)
    assert json.dumps(a.to_json_dict(), sort_keys=True) == \
        json.dumps(b.to_json_dict(), sort_keys=True)


def test_run_simulation_limit_guard():
    m = hsm_model()
    cfg = SimConfig(n=12, test_channel=Channel.bsc(0.1), gamma=0.1, seed=0,
                    trials=10, max_codebook_size=1 << 22)
    with pytest.raises(SimLimitError):
        run_simulation(m, cfg)
    rep = run_simulation(m, cfg, monte_carlo_only=True)
    assert not rep.exact_computed


def test_trial_trace():
    m = hsm_model()
    cfg = SimConfig(n=5, test_channel=Channel.bsc(0.1), gamma=0.1, seed=14,
                    trials=50, collect_trace=True)
    rep = run_simulation(m, cfg, monte_carlo_only=True)
    assert len(rep.trace) == 50
    text = rep.trace_csv_text()
    lines = text.strip().splitlines()
    assert lines[0] == ",".join(rep.TRACE_COLUMNS)
    assert len(lines) == 51
    # trace is excluded from the JSON payload
    assert "trace" not in rep.to_json_dict()
    untr = run_simulation(m, SimConfig(n=5, test_channel=Channel.bsc(0.1),
                                       gamma=0.1, seed=14, trials=50),
                          monte_carlo_only=True)
    with pytest.raises(ValueError):
        untr.trace_csv_text()


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and 0.0 < hi < 0.05
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)
