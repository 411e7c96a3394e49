"""Authentication-system model, achievable rate triples, and Pareto frontiers.

A model is a source plus an enrollment channel and the two
authentication-channel marginals (main decoder's and eavesdropper's).  Rate
corners (secret-key, storage, privacy-leakage) are evaluated by closing the
chain auxiliary - enrollment observation - source - (main, eavesdropper)
over a test channel, either with one auxiliary variable (the computable
form for degraded / less-noisy channel pairs) or with two auxiliaries at
tiny alphabets (numerical evidence that one suffices).
"""

from __future__ import annotations

import bisect
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .classifier import ChannelOrderVerdict, Relation, classify_ac
from .infotheory import (
    Channel,
    DiscreteDistribution,
    InfoUnit,
    JointDistribution,
    _clamp_mi,
    _entropy_nats,
)

DOMINANCE_TOL = 1e-9

Y_FAVOR = (Relation.DEGRADED_Z_WRT_Y, Relation.LESS_NOISY_Y_OVER_Z)
Z_FAVOR = (Relation.DEGRADED_Y_WRT_Z, Relation.LESS_NOISY_Z_OVER_Y)


class UnsupportedClassError(ValueError):
    """The channel-pair ordering does not select a computable region."""


class CardinalityError(ValueError):
    """An auxiliary alphabet exceeds its cap."""


@dataclass
class AuthModel:
    """Source, enrollment channel, and the two authentication-channel marginals.

    Only marginals enter: the region depends on the pair law solely through
    them, so no joint main/eavesdropper conditional is accepted.  The
    channel-pair ordering is classified once at construction.
    """

    px: DiscreteDistribution
    ec: Channel
    ac_y: Channel
    ac_z: Channel
    verdict: ChannelOrderVerdict = None
    classifier_trials: int = 20_000
    classifier_seed: int = 0

    def __post_init__(self):
        nx = len(self.px)
        for name, ch in (("ec", self.ec), ("ac_y", self.ac_y), ("ac_z", self.ac_z)):
            if ch.num_inputs != nx:
                raise ValueError(f"{name} expects {ch.num_inputs} inputs, source has {nx}")
        if self.verdict is None:
            self.verdict = classify_ac(self.ac_y, self.ac_z,
                                       trials=self.classifier_trials,
                                       seed=self.classifier_seed)

    @property
    def nx(self) -> int:
        return len(self.px)

    @property
    def n_xt(self) -> int:
        return self.ec.num_outputs

    def content_hash(self) -> str:
        h = hashlib.sha256()
        for a in (self.px.probs, self.ec.matrix, self.ac_y.matrix, self.ac_z.matrix):
            h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
            h.update(repr(a.shape).encode())
        return h.hexdigest()

    def i_xz_nats(self) -> float:
        return _mi2_nats(self.px.probs[:, None] * self.ac_z.matrix)

    @staticmethod
    def binary_hsm(p: float, q: float, eps: float, **kwargs) -> "AuthModel":
        """Uniform binary source, symmetric enrollment noise p, erasure-q main
        channel, symmetric eavesdropper noise eps."""
        return AuthModel(DiscreteDistribution.uniform(2), Channel.bsc(p),
                         Channel.bec(q), Channel.bsc(eps), **kwargs)

    @staticmethod
    def binary_symmetric(p: float, eps_y: float, eps_z: float, **kwargs) -> "AuthModel":
        """Uniform binary source with symmetric channels everywhere."""
        return AuthModel(DiscreteDistribution.uniform(2), Channel.bsc(p),
                         Channel.bsc(eps_y), Channel.bsc(eps_z), **kwargs)


@dataclass
class RateCorner:
    """Achievable (secret-key, storage, privacy-leakage) triple."""

    rs: float
    rj: float
    rl: float
    unit: InfoUnit
    test_channel: Channel = None
    extras: dict = field(default_factory=dict)

    def as_tuple(self):
        return (self.rs, self.rj, self.rl)


@dataclass
class RegionBoundary:
    """Pareto-filtered corner set with reproducibility metadata."""

    corners: list
    unit: InfoUnit
    metadata: dict = field(default_factory=dict)

    def to_csv_text(self) -> str:
        meta = self.metadata
        lines = [
            "# version=%s config_hash=%s seed=%s" % (
                meta.get("version", ""), meta.get("config_hash", ""), meta.get("seed", "")),
            "rs,rj,rl,unit,param,u_size,test_channel",
        ]
        for c in self.corners:
            param = c.extras.get("param", "")
            u_size = c.test_channel.num_outputs if c.test_channel is not None else ""
            tc = ""
            if c.test_channel is not None:
                tc = ";".join(repr(float(v)) for v in c.test_channel.matrix.ravel())
            lines.append(",".join([
                repr(float(c.rs)), repr(float(c.rj)), repr(float(c.rl)),
                self.unit.value, _fmt_param(param), str(u_size), tc,
            ]))
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        corners = []
        for c in self.corners:
            d = {"rs": float(c.rs), "rj": float(c.rj), "rl": float(c.rl)}
            d.update({k: _jsonable(v) for k, v in c.extras.items()})
            if c.test_channel is not None:
                d["test_channel"] = c.test_channel.matrix.tolist()
            corners.append(d)
        return {"unit": self.unit.value,
                "metadata": {k: _jsonable(v) for k, v in self.metadata.items()},
                "corners": corners}


def _fmt_param(p) -> str:
    if p == "":
        return ""
    if isinstance(p, float):
        return repr(p)
    return str(p)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, ChannelOrderVerdict):
        return v.to_json_dict()
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


# ---------------------------------------------------------------------------
# Rate evaluation
# ---------------------------------------------------------------------------

def _mi2_nats(j: np.ndarray) -> float:
    """Mutual information of a 2-D joint array, nats."""
    return _clamp_mi(_entropy_nats(j.sum(axis=1)) + _entropy_nats(j.sum(axis=0))
                     - _entropy_nats(j))


def _one_aux_rates_nats(model: AuthModel, test_matrix: np.ndarray):
    """(rs_raw, rj, rl, i_xz) in nats for a test channel matrix over the
    enrollment-observation alphabet.

    All four region quantities reduce to pairwise mutual informations along
    the chain, so only small 2-D joints are formed.
    """
    px = model.px.probs
    p_xa = px[:, None] * model.ec.matrix          # joint (X, Xt)
    p_a = p_xa.sum(axis=0)
    p_xu = p_xa @ test_matrix                     # joint (X, U)
    p_au = p_a[:, None] * test_matrix             # joint (Xt, U)

    i_u_xt = _mi2_nats(p_au)
    i_u_y = _mi2_nats(model.ac_y.matrix.T @ p_xu)  # joint (Y, U)
    i_u_z = _mi2_nats(model.ac_z.matrix.T @ p_xu)  # joint (Z, U)
    i_u_x = _mi2_nats(p_xu)
    i_xz = model.i_xz_nats()

    rs_raw = i_u_y - i_u_z
    rj = _clamp_mi(i_u_xt - i_u_y)
    rl = i_u_x - i_u_y + i_xz
    return rs_raw, rj, max(0.0, rl), i_xz


def eval_one_aux(model: AuthModel, test: Channel,
                 unit: InfoUnit = InfoUnit.BITS) -> RateCorner:
    """Rate corner for a single auxiliary obtained through `test`.

    rs = I(U;Y) - I(U;Z) clamped at 0 (equals I(Y;U|Z) when the
    eavesdropper's channel is a degraded version of the main one),
    rj = I(U;Xt) - I(U;Y), rl = I(U;X) - I(U;Y) + I(X;Z).
    """
    if test.num_inputs != model.n_xt:
        raise ValueError(f"test channel expects {test.num_inputs} inputs, "
                         f"enrollment alphabet has {model.n_xt}")
    if test.num_outputs > model.n_xt + 3:
        raise CardinalityError(
            f"|U| = {test.num_outputs} exceeds cap {model.n_xt + 3}")
    if model.verdict.relation not in Y_FAVOR:
        raise UnsupportedClassError(
            f"one-auxiliary evaluation needs a degraded or less-noisy pair in the "
            f"main channel's favor; classifier found {model.verdict.relation.value}")

    rs_raw, rj, rl, _ = _one_aux_rates_nats(model, test.matrix)
    conv = unit.from_nats
    return RateCorner(conv(max(0.0, rs_raw)), conv(rj), conv(rl), unit,
                      test_channel=test,
                      extras={"rs_unclamped": conv(rs_raw),
                              "u_size": test.num_outputs})


_AXIS_V, _AXIS_U, _AXIS_A, _AXIS_X, _AXIS_Y, _AXIS_Z = range(6)


def _two_aux_rates_nats(model: AuthModel, tu: np.ndarray, tv: np.ndarray):
    """(rs_raw, rj, rl) in nats from the explicit six-axis joint
    (V, U, Xt, X, Y, Z)."""
    px = model.px.probs
    ec = model.ec.matrix
    acy = model.ac_y.matrix
    acz = model.ac_z.matrix

    p_ax = ec.T * px[None, :]                     # joint (Xt, X)
    arr = (tv.T[:, :, None, None, None, None]
           * tu.T[None, :, :, None, None, None]
           * p_ax[None, None, :, :, None, None]
           * acy[None, None, None, :, :, None]
           * acz[None, None, None, :, None, :])

    def h(*keep):
        drop = tuple(i for i in range(6) if i not in keep)
        return _entropy_nats(arr.sum(axis=drop))

    h_v = h(_AXIS_V)
    h_uv = h(_AXIS_V, _AXIS_U)
    i_y_u_given_v = _clamp_mi(h(_AXIS_V, _AXIS_Y) + h_uv - h(_AXIS_V, _AXIS_U, _AXIS_Y) - h_v)
    i_z_u_given_v = _clamp_mi(h(_AXIS_V, _AXIS_Z) + h_uv - h(_AXIS_V, _AXIS_U, _AXIS_Z) - h_v)

    h_y = h(_AXIS_Y)
    h_uy = h(_AXIS_U, _AXIS_Y)
    rj = _clamp_mi(h(_AXIS_A, _AXIS_Y) + h_uy - h(_AXIS_U, _AXIS_A, _AXIS_Y) - h_y)

    h_xv = h(_AXIS_V, _AXIS_X)
    i_x_uy = _clamp_mi(h(_AXIS_X) + h_uy - h(_AXIS_U, _AXIS_X, _AXIS_Y))
    i_x_y_given_v = _clamp_mi(h_xv + h(_AXIS_V, _AXIS_Y) - h(_AXIS_V, _AXIS_X, _AXIS_Y) - h_v)
    i_x_z_given_v = _clamp_mi(h_xv + h(_AXIS_V, _AXIS_Z) - h(_AXIS_V, _AXIS_X, _AXIS_Z) - h_v)

    rs_raw = i_y_u_given_v - i_z_u_given_v
    rl = i_x_uy - i_x_y_given_v + i_x_z_given_v
    return rs_raw, rj, max(0.0, rl)


def eval_two_aux(model: AuthModel, test_u: Channel, test_v: Channel,
                 unit: InfoUnit = InfoUnit.BITS,
                 max_u: int = 4, max_v: int = 3) -> RateCorner:
    """Rate corner for the two-auxiliary chain V - U - Xt - X - (Y, Z).

    Intended for tiny alphabets only; the default caps keep the six-axis
    joint small.  With a constant V this collapses to eval_one_aux exactly.
    """
    if test_u.num_inputs != model.n_xt:
        raise ValueError("test_u input alphabet does not match enrollment observations")
    if test_v.num_inputs != test_u.num_outputs:
        raise ValueError("test_v input alphabet must equal test_u output alphabet")
    if test_u.num_outputs > max_u or test_v.num_outputs > max_v:
        raise CardinalityError(
            f"auxiliary caps exceeded: |U|={test_u.num_outputs} (max {max_u}), "
            f"|V|={test_v.num_outputs} (max {max_v})")

    rs_raw, rj, rl = _two_aux_rates_nats(model, test_u.matrix, test_v.matrix)
    conv = unit.from_nats
    return RateCorner(conv(max(0.0, rs_raw)), conv(rj), conv(rl), unit,
                      test_channel=test_u,
                      extras={"rs_unclamped": conv(rs_raw),
                              "u_size": test_u.num_outputs,
                              "v_size": test_v.num_outputs,
                              "v_channel": test_v.matrix.tolist()})


def build_joint(model: AuthModel, test: Channel,
                degraded_witness: Channel = None) -> JointDistribution:
    """Five-axis joint (U, Xt, X, Y, Z) under the auxiliary chain.

    By default the two authentication observations are coupled independently
    given the source (the region only sees marginals).  Passing the
    intermediate channel of a degradedness certificate couples the
    eavesdropper's observation through the main one instead, which realises
    the full Markov chain used by degraded-order properties.
    """
    px = model.px.probs
    ec = model.ec.matrix
    acy = model.ac_y.matrix
    t = test.matrix
    p_ax = ec.T * px[None, :]
    if degraded_witness is None:
        acz = model.ac_z.matrix
        arr = (t.T[:, :, None, None, None]
               * p_ax[None, :, :, None, None]
               * acy[None, None, :, :, None]
               * acz[None, None, :, None, :])
    else:
        w = degraded_witness.matrix
        arr = (t.T[:, :, None, None, None]
               * p_ax[None, :, :, None, None]
               * acy[None, None, :, :, None]
               * w[None, None, None, :, :])
    return JointDistribution(arr)


def zero_key_region(model: AuthModel, unit: InfoUnit = InfoUnit.BITS) -> RegionBoundary:
    """Degenerate region: zero key, any storage, leakage floor I(X;Z)."""
    i_xz = unit.from_nats(model.i_xz_nats())
    corner = RateCorner(0.0, 0.0, i_xz, unit,
                        test_channel=Channel.constant(model.n_xt),
                        extras={"param": "zero_key", "u_size": 1})
    return RegionBoundary([corner], unit,
                          metadata={"region": "zero_key", "model_hash": model.content_hash(),
                                    "verdict": model.verdict})


# ---------------------------------------------------------------------------
# Pareto machinery
# ---------------------------------------------------------------------------

def pareto_filter(corners, tol: float = DOMINANCE_TOL):
    """Remove corners dominated in (higher rs, lower rj, lower rl).

    Deterministic: corners are sorted by (-rs, rj, rl) first, so the result
    does not depend on input order; exact ties collapse to the first sorted
    representative.  Idempotent.
    """
    if not corners:
        return []
    pts = np.array([[c.rs, c.rj, c.rl] for c in corners], dtype=float)
    order = np.lexsort((pts[:, 2], pts[:, 1], -pts[:, 0]))
    kept = []
    stair_rj = []   # strictly increasing
    stair_rl = []   # strictly decreasing
    for i in order:
        rs, rj, rl = pts[i]
        pos = bisect.bisect_right(stair_rj, rj) - 1
        if pos >= 0 and stair_rl[pos] <= rl:
            continue
        kept.append(corners[i])
        j = bisect.bisect_left(stair_rj, rj)
        while j < len(stair_rj) and stair_rl[j] >= rl:
            stair_rj.pop(j)
            stair_rl.pop(j)
        stair_rj.insert(j, rj)
        stair_rl.insert(j, rl)
    return kept


def region_contains(boundary: RegionBoundary, point,
                    tol: float = DOMINANCE_TOL,
                    unit: InfoUnit = None) -> bool:
    """Whether (rs, rj, rl) is achievable per some corner of the boundary."""
    if unit is not None and unit != boundary.unit:
        raise ValueError(f"unit mismatch: boundary in {boundary.unit.value}, point in {unit.value}")
    rs, rj, rl = point
    for c in boundary.corners:
        if rs <= c.rs + tol and rj >= c.rj - tol and rl >= c.rl - tol:
            return True
    return False


def compare_regions(a: RegionBoundary, b: RegionBoundary) -> float:
    """One-sided excess of region a over region b.

    For each corner of a, the smallest dominance slack any corner of b
    leaves; the maximum of those (clamped at 0) is returned.  0 means every
    corner of a is dominated by b within floating tolerance.
    """
    if a.unit != b.unit:
        raise ValueError(f"unit mismatch: {a.unit.value} vs {b.unit.value}")
    if not a.corners:
        return 0.0
    if not b.corners:
        return float("inf")
    pa = np.array([[c.rs, c.rj, c.rl] for c in a.corners])
    pb = np.array([[c.rs, c.rj, c.rl] for c in b.corners])
    worst = -np.inf
    for lo in range(0, len(pa), 4096):
        chunk = pa[lo:lo + 4096]
        slack = np.maximum(
            chunk[:, None, 0] - pb[None, :, 0],
            np.maximum(pb[None, :, 1] - chunk[:, None, 1],
                       pb[None, :, 2] - chunk[:, None, 2]))
        worst = max(worst, float(slack.min(axis=1).max()))
    return max(0.0, worst)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass
class SamplerConfig:
    """Test-channel sampling plan for sweep_region.

    The structured family (symmetric test channels on a beta grid) only
    applies to binary enrollment alphabets; random samples draw each channel
    row from the flat Dirichlet measure, sweeping the auxiliary size.
    """

    random_samples: int = 100_000
    beta_grid_step: float = 1e-3
    u_sizes: tuple = None
    seed: int = 0

    def sizes_for(self, n_xt: int) -> tuple:
        if self.u_sizes is not None:
            return tuple(self.u_sizes)
        return tuple(range(1, n_xt + 4))


def sweep_region(model: AuthModel, config: SamplerConfig = None,
                 unit: InfoUnit = InfoUnit.BITS) -> RegionBoundary:
    """Union over sampled test channels, Pareto-filtered.

    Deterministic given the sampler seed.  Raises UnsupportedClassError when
    the classifier verdict does not favor the main channel.
    """
    if config is None:
        config = SamplerConfig()
    if model.verdict.relation not in Y_FAVOR:
        raise UnsupportedClassError(
            f"region sweep unsupported for verdict {model.verdict.relation.value}")

    conv = unit.from_nats
    corners = []

    def add_corner(matrix, param, u_size):
        rs_raw, rj, rl, _ = _one_aux_rates_nats(model, matrix)
        corners.append(RateCorner(conv(max(0.0, rs_raw)), conv(rj), conv(rl), unit,
                                  test_channel=Channel(matrix),
                                  extras={"param": param,
                                          "rs_unclamped": conv(rs_raw),
                                          "u_size": u_size}))

    if model.n_xt == 2 and config.beta_grid_step:
        step = config.beta_grid_step
        betas = np.arange(0.0, 0.5, step).tolist()
        betas.append(0.5)
        for beta in betas:
            add_corner(np.array([[1.0 - beta, beta], [beta, 1.0 - beta]]),
                       float(beta), 2)

    rng = np.random.default_rng(config.seed)
    sizes = config.sizes_for(model.n_xt)
    if config.random_samples and sizes:
        per = config.random_samples // len(sizes)
        rem = config.random_samples - per * len(sizes)
        counter = 0
        for si, u in enumerate(sizes):
            count = per + (1 if si < rem else 0)
            for _ in range(count):
                m = rng.dirichlet(np.ones(u), size=model.n_xt)
                add_corner(m, counter, u)
                counter += 1

    filtered = pareto_filter(corners)
    meta = {"model_hash": model.content_hash(), "seed": config.seed,
            "sampler": {"random_samples": config.random_samples,
                        "beta_grid_step": config.beta_grid_step,
                        "u_sizes": list(sizes)},
            "verdict": model.verdict,
            "corners_sampled": len(corners)}
    return RegionBoundary(filtered, unit, metadata=meta)


def two_aux_random_search(model: AuthModel, n_pairs: int, seed: int = 0,
                          max_u: int = 4, max_v: int = 3,
                          unit: InfoUnit = InfoUnit.BITS):
    """Random (U, V) test-channel pairs for the two-auxiliary region.

    Returns the raw corner list (not Pareto-filtered) so containment checks
    can cover every sampled pair.
    """
    if model.verdict.relation not in Y_FAVOR:
        raise UnsupportedClassError(
            f"two-auxiliary search unsupported for verdict {model.verdict.relation.value}")
    rng = np.random.default_rng(seed)
    conv = unit.from_nats
    corners = []
    for idx in range(n_pairs):
        u = int(rng.integers(1, max_u + 1))
        v = int(rng.integers(1, max_v + 1))
        tu = rng.dirichlet(np.ones(u), size=model.n_xt)
        tv = rng.dirichlet(np.ones(v), size=u)
        rs_raw, rj, rl = _two_aux_rates_nats(model, tu, tv)
        corners.append(RateCorner(conv(max(0.0, rs_raw)), conv(rj), conv(rl), unit,
                                  test_channel=Channel(tu),
                                  extras={"param": idx, "u_size": u, "v_size": v}))
    return corners
