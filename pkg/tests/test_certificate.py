import random

import mpmath
import pytest

import oracles
from silver.certificate import (
    STAR,
    GramForm,
    MultiplierMatrix,
    base_cert_n0,
    base_cert_n1,
    build_cert,
    check_star_multipliers,
    expand_Q,
    export_cert,
    glue,
    glue_parts,
    helper_linear_forms,
    helper_quadratic_forms,
    verify,
)
from silver.exact_scalar import ONE, RHO, SQRT2, CertScalar, RadicalScalar, Sign, ring_sign, rho_pow
from silver.schedule import horizon, schedule_direct, silver_step

C = CertScalar.symbol


def const(x):
    return CertScalar.const(x)


# --------------------------------------------------------------------------
# expand_Q
# --------------------------------------------------------------------------


class TestExpandQ:
    def test_star_to_zero(self):
        q = expand_Q(STAR, 0, (), n=0)
        assert q.lin == {STAR: const(2), 0: const(-2)}
        # 2<g0, x0> - |g0|^2
        assert q.quad == {(0, 1): const(2), (1, 1): const(-1)}

    def test_zero_to_star(self):
        q = expand_Q(0, STAR, (), n=0)
        assert q.lin == {0: const(2), STAR: const(-2)}
        assert q.quad == {(1, 1): const(-1)}

    def test_zero_to_one_level_one(self):
        q = expand_Q(0, 1, schedule_direct(1))
        assert q.lin == {0: const(2), 1: const(-2)}
        # 2<g1, -sqrt2 g0> - |g1 - g0|^2
        assert q.quad == {(1, 2): const(-2 * SQRT2 + 2), (1, 1): const(-1), (2, 2): const(-1)}

    def test_diagonal_rejected(self):
        with pytest.raises(ValueError):
            expand_Q(1, 1, schedule_direct(1))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            expand_Q(0, 5, schedule_direct(2))

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_against_direct_numeric_q(self, k):
        rng = random.Random(k)
        sched = schedule_direct(k)
        n = sched.n
        idx = list(range(n + 1)) + [STAR]
        with mpmath.mp.workprec(200):
            steps = [oracles.step_value(t) for t in range(n)]
            for _ in range(5):
                X, G, F = oracles.synthetic_trajectory(rng, steps, dim=4)
                basis = [X[0]] + [G[t] for t in range(n + 1)]
                for i in idx:
                    for j in idx:
                        if i == j:
                            continue
                        got = oracles.gram_value(expand_Q(i, j, sched), basis, F)
                        want = oracles.q_value(X, G, F, i, j)
                        assert abs(got - want) < mpmath.mpf(10) ** -50


# --------------------------------------------------------------------------
# base certificates
# --------------------------------------------------------------------------


class TestBaseCerts:
    def test_n0(self):
        lam = base_cert_n0()
        assert lam[(STAR, 0)] == 1
        assert len(lam) == 1

    def test_n0_verifies(self):
        rep = verify(base_cert_n0(), 0)
        assert rep.passed and rep.identity_ok
        assert rep.helper_linear_ok is None

    def test_n1_entries(self):
        lam = base_cert_n1()
        assert lam[(0, 1)] == RadicalScalar(1, 1)
        assert lam[(1, 0)] == 1
        assert lam[(1, STAR)] == SQRT2
        assert lam[(STAR, 0)] == SQRT2
        assert lam[(STAR, 1)] == C(1)
        assert lam[(0, STAR)] == 0
        assert lam.has_star_sparsity()

    def test_n1_verifies(self):
        rep = verify(base_cert_n1(), 1)
        assert rep.passed, rep.failures

    def test_diagonal_entries_rejected(self):
        with pytest.raises(ValueError):
            MultiplierMatrix(1, {(0, 0): const(1)})


# --------------------------------------------------------------------------
# gluing
# --------------------------------------------------------------------------


class TestGlue:
    lam2 = glue(base_cert_n1(), 1)

    def test_star_to_last(self):
        assert self.lam2[(STAR, 3)] == C(2)

    def test_n_to_star_cancels(self):
        assert self.lam2[(1, STAR)] == 0

    def test_star_to_second_block(self):
        assert self.lam2[(STAR, 2)] == silver_step(2) == SQRT2

    def test_last_to_star(self):
        assert self.lam2[(3, STAR)] == rho_pow(2) - 1

    def test_star_to_n(self):
        assert self.lam2[(STAR, 1)] == 1 + rho_pow(0) == 2

    def test_rejects_wrong_horizon(self):
        with pytest.raises(ValueError):
            glue(base_cert_n1(), 2)

    def test_rejects_missing_star_sparsity(self):
        bad = base_cert_n1().with_entry(0, STAR, 1)
        with pytest.raises(ValueError):
            glue(bad, 1)

    def test_level_zero_gives_level_one(self):
        assert glue(base_cert_n0(), 0) == base_cert_n1()

    def test_delta_entries_negative_where_expected(self):
        parts = glue_parts(base_cert_n1(), 1)
        assert ring_sign(parts.delta[(1, STAR)]).verdict is Sign.NEGATIVE
        assert ring_sign(parts.delta[(3, STAR)]).verdict is Sign.NEGATIVE
        assert ring_sign(parts.delta[(STAR, 3)]).verdict is Sign.NEGATIVE

    @pytest.mark.parametrize("k", range(1, 6))
    def test_final_entry_list(self, k):
        lam = build_cert(k + 1)
        n = horizon(k)
        N = 2 * n + 1
        assert lam[(n, STAR)] == 0
        assert lam[(N, STAR)] == rho_pow(k + 1) - 1
        assert lam[(STAR, n)] == rho_pow(k - 1) + 1
        assert lam[(STAR, N)] == C(k + 1)
        for t in range(n + 1, N):
            assert lam[(STAR, t)] == silver_step(t)


class TestBuildCert:
    def test_k1_is_base(self):
        assert build_cert(1) == base_cert_n1()

    def test_k3_last_star_entry(self):
        assert build_cert(3)[(STAR, 7)] == C(3)

    @pytest.mark.parametrize("k", range(1, 8))
    def test_horizon_and_sparsity(self, k):
        lam = build_cert(k)
        assert lam.n == horizon(k)
        assert lam.has_star_sparsity()

    def test_rejects_level_zero(self):
        with pytest.raises(ValueError):
            build_cert(0)

    @pytest.mark.parametrize("k", range(1, 7))
    def test_star_multipliers(self, k):
        assert check_star_multipliers(build_cert(k), k)

    def test_star_multiplier_mutation(self):
        lam = base_cert_n1().with_entry(STAR, 0, 1)
        assert not check_star_multipliers(lam, 1)


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------


@pytest.mark.parametrize("k", range(1, 7))
def test_verify_passes(k):
    rep = verify(build_cert(k), k)
    assert rep.passed, rep.failures
    assert rep.identity_ok and rep.nonneg_ok and rep.sparsity_ok and rep.lemma2_ok
    assert rep.helper_linear_ok and rep.helper_quadratic_ok
    assert rep.residual_max_abs.hi == 0


class TestMutations:
    def test_perturbed_last_star_entry(self):
        lam = build_cert(2)
        bad = lam.with_entry(STAR, 3, lam[(STAR, 3)] + 1)
        rep = verify(bad, 2)
        assert not rep.identity_ok
        assert not rep.passed

    def test_negative_entry_flagged(self):
        lam = build_cert(2)
        bad = lam.with_entry(0, 1, -lam[(0, 1)])
        rep = verify(bad, 2)
        assert not rep.nonneg_ok

    def test_sparsity_violation_flagged(self):
        lam = build_cert(2).with_entry(0, STAR, 1)
        rep = verify(lam, 2)
        assert not rep.sparsity_ok and not rep.passed

    def test_wrong_horizon(self):
        with pytest.raises(ValueError):
            verify(build_cert(2), 3)

    def test_numeric_oracle_detects_mutation(self):
        lam = build_cert(2)
        bad = lam.with_entry(STAR, 3, lam[(STAR, 3)] + 1)
        errs = oracles.identity_relative_errors(bad, 2, trials=10, seed=3)
        assert min(errs) > 1e-6


# --------------------------------------------------------------------------
# helper forms
# --------------------------------------------------------------------------


class TestHelperLinear:
    def test_k1_s_vector(self):
        h = helper_linear_forms(1)
        w = 2 * RHO * SQRT2
        # the rank-one part carries 2 rho (rho^k - 1) (1, 1, -2)
        assert h.l == (const(w), const(w), const(-2 * w))

    def test_k1_balance(self):
        h = helper_linear_forms(1)
        assert all((e - s - l).is_zero() for e, s, l in zip(h.e, h.s, h.l))
        assert h.ok

    @pytest.mark.parametrize("k", range(1, 7))
    def test_balance_and_support(self, k):
        h = helper_linear_forms(k)
        assert h.ok, h.failures
        # every vector sums to zero: each Q_ij contributes +2 and -2
        for vec in (h.e, h.s, h.l):
            assert (vec[0] + vec[1] + vec[2]).is_zero()

    def test_rejects_level_zero(self):
        with pytest.raises(ValueError):
            helper_linear_forms(0)


class TestHelperQuadratic:
    def test_k1_gluing_error_corner(self):
        h = helper_quadratic_forms(1)
        assert h.E[0][0] == const(-2 * RHO)

    def test_k1_rank_one_matrix(self):
        h = helper_quadratic_forms(1)
        # stored with off-diagonals as the symmetric-matrix entry
        assert h.L[0][0] == const(-2 * RHO)
        assert h.L[0][1] == const(RHO * 3)

    @pytest.mark.parametrize("k", range(1, 7))
    def test_balance(self, k):
        h = helper_quadratic_forms(k)
        assert h.ok, h.failures
        for a in range(4):
            for b in range(4):
                assert (h.E[a][b] - h.S[a][b] - h.L[a][b]).is_zero()
                assert h.E[a][b] == h.E[b][a]


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------


class TestExport:
    def test_n1_exact(self):
        text = export_cert(base_cert_n1(), "exact")
        lines = text.splitlines()
        assert len(lines) == 5
        assert any(line.startswith("(*,1) = C1") for line in lines)

    def test_n0(self):
        assert len(export_cert(base_cert_n0()).splitlines()) == 1

    def test_csv_roundtrip(self):
        lam = build_cert(3)
        rows = export_cert(lam, "csv").splitlines()
        assert rows[0] == "i,j,exact,decimal"
        for row in rows[1:]:
            i, j, exact, _ = row.split(",")
            key = tuple(STAR if s == "*" else int(s) for s in (i, j))
            assert CertScalar.parse(exact) == lam[key]

    def test_row_count_matches_construction(self):
        # count glued pairs whose summed value is numerically nonzero
        parts = glue_parts(build_cert(2), 2)
        pairs = set(parts.theta.entries) | set(parts.xi.entries) | set(parts.delta.entries)
        with mpmath.mp.workprec(256):
            live = sum(
                1
                for p in pairs
                if abs(sum(oracles.cert_value(m[p]) for m in (parts.theta, parts.xi, parts.delta))) > 1e-40
            )
        assert len(export_cert(build_cert(3)).splitlines()) == live

    def test_deterministic(self):
        assert export_cert(build_cert(4), "csv") == export_cert(build_cert(4), "csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            export_cert(base_cert_n1(), "xml")


# --------------------------------------------------------------------------
# randomized identity oracle
# --------------------------------------------------------------------------


@pytest.mark.parametrize("k", range(1, 5))
def test_randomized_identity(k):
    errs = oracles.identity_relative_errors(build_cert(k), k, trials=100, seed=k)
    assert max(errs) < 1e-20


def test_gram_form_arithmetic():
    a = expand_Q(0, 1, schedule_direct(1))
    b = expand_Q(1, 0, schedule_direct(1))
    s = a.copy()
    s.add_scaled(b, const(1))
    assert (s - b) == a
    assert (a - a).is_zero()
    assert isinstance(a - b, GramForm)
