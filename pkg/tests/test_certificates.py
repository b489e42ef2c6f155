import json
import math

import numpy as np
import pytest

from perfectsim import (
    AtomChain,
    CertificateError,
    ComposedChain,
    FLCertificate,
    MinorizationCertificate,
    Prob1D,
    SubsamplingVariant,
    choose_subsampling_k,
    dominating_jump_law,
    dominating_jump_survival,
    ks_one_sample,
    subsample_certificate,
    threshold_h,
    verify_fl_monte_carlo,
)

RATE = SubsamplingVariant.RATE
CONSTANTS = SubsamplingVariant.CONSTANTS


class TestCertificateValidation:
    def test_alpha_plus_b_constraint(self):
        with pytest.raises(CertificateError):
            FLCertificate(0.2, 0.5, 2.0)

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.1, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(CertificateError):
            FLCertificate(alpha, 2.0, 2.0)

    def test_json_round_trip(self):
        cert = FLCertificate(0.2, 2.0, 6.25)
        assert FLCertificate.from_dict(json.loads(json.dumps(cert.to_dict()))) == cert

    def test_minorization_serialization(self):
        m = MinorizationCertificate(0.25, Prob1D.point_mass(1.0), lambda u, rng: 1.0)
        d = m.to_dict()
        assert d["beta"] == 0.25 and d["order"] == 1 and "atoms" in d["nu"]


class TestSubsampling:
    def test_identity_at_k1(self):
        cert = FLCertificate(0.5, 1.0, 3.0)
        assert subsample_certificate(cert, 1, RATE) == cert

    def test_rate_k3(self):
        got = subsample_certificate(FLCertificate(0.5, 1.0, 3.0), 3, RATE)
        assert got.alpha == pytest.approx(0.25)
        assert got.b == pytest.approx(2.0)
        assert got.c == pytest.approx(16.0)

    def test_constants_k2(self):
        got = subsample_certificate(FLCertificate(0.5, 1.0, 3.0), 2, CONSTANTS)
        assert got.alpha == pytest.approx(0.5)
        assert got.b == pytest.approx(2.0)
        assert got.c == pytest.approx(8.0)

    def test_constants_rejects_k1(self):
        with pytest.raises(CertificateError):
            subsample_certificate(FLCertificate(0.5, 1.0, 3.0), 1, CONSTANTS)

    def test_constants_free_of_k(self):
        cert = FLCertificate(0.4, 1.3, 2.0)
        assert subsample_certificate(cert, 2, CONSTANTS) == subsample_certificate(cert, 7, CONSTANTS)


class TestChooseK:
    @pytest.mark.parametrize("alpha,expected", [(0.2, 1), (0.5, 3), (0.9, 11)])
    def test_examples(self, alpha, expected):
        assert choose_subsampling_k(FLCertificate(alpha, 2.0, 2.0)) == expected

    def test_result_is_subcritical_and_minimal(self):
        for alpha in (0.37, 0.55, 0.75, 0.95):
            k = choose_subsampling_k(FLCertificate(alpha, 2.0, 2.0))
            assert alpha ** (k - 1) < math.exp(-1.0)
            if k > 1:
                assert alpha ** (k - 2) >= math.exp(-1.0)


class TestThreshold:
    def test_atom_chain_value(self):
        assert threshold_h(FLCertificate(0.2, 2.0, 6.25)) == pytest.approx(28.125)

    def test_second_example(self):
        assert threshold_h(FLCertificate(0.2, 1.0, 2.0)) == pytest.approx(14.0625)

    def test_at_least_reflection_level(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a = rng.uniform(0.05, 0.95)
            b = rng.uniform(max(0.0, 1 - a) + 1e-6, 5.0)
            c = rng.uniform(1.0, 20.0)
            cert = FLCertificate(a, b, c)
            assert threshold_h(cert) >= cert.reflection_level - 1e-12

    def test_invariance_under_constants_subsampling(self):
        # the second branch of h equals the reflection level c'' + b''/alpha
        # of the CONSTANTS-transformed certificate
        rng = np.random.default_rng(4)
        for _ in range(50):
            a = rng.uniform(0.05, 0.95)
            b = rng.uniform(max(0.0, 1 - a) + 1e-6, 5.0)
            cert = FLCertificate(a, b, 1.0)
            sub = subsample_certificate(cert, 2, CONSTANTS)
            branch2 = (b / (a * (1 - a))) * (1 + 1 / (1 - a))
            assert sub.c + sub.b / a == pytest.approx(branch2, rel=1e-12)


class TestDominatingJump:
    # reflection level 6.5 makes the boundary cases land exactly on it
    CERT = FLCertificate(0.2, 1.0, 1.5)

    def test_survival_one_at_alpha_z(self):
        z = 50.0  # alpha*z = 10 above the reflection level
        assert dominating_jump_survival(self.CERT, z, 0.2 * z) == 1.0

    def test_direct_formula(self):
        assert dominating_jump_survival(self.CERT, 16.25, 6.5) == pytest.approx(0.5)

    def test_one_below_reflection_level(self):
        assert dominating_jump_survival(self.CERT, 16.25, 3.0) == 1.0

    def test_rejects_subreflection_state(self):
        with pytest.raises(CertificateError):
            dominating_jump_survival(self.CERT, 5.0, 7.0)

    def test_law_matches_survival(self):
        for z in (6.5, 16.25, 40.0, 200.0):
            law = dominating_jump_law(self.CERT, z)
            for t in np.linspace(1.0, 80.0, 160):
                assert law.survival(t) == pytest.approx(
                    dominating_jump_survival(self.CERT, z, t), abs=1e-12
                )

    def test_law_sampling_distribution(self):
        # inverse-CDF draws reproduce max(R, alpha*z*e^E)
        cert = FLCertificate(0.2, 2.0, 6.25)
        z = 20.0
        law = dominating_jump_law(cert, z)
        rng = np.random.default_rng(7)
        direct = np.maximum(cert.reflection_level, 0.2 * z * np.exp(rng.exponential(1.0, 50_000)))
        stat, ok = ks_one_sample(
            direct, law.cdf, lambda t: 1.0 - law.survival_left(t)
        )
        assert ok, f"KS {stat}"


class TestVerifyFL:
    def test_atom_chain_probes_pass(self):
        chain = AtomChain()
        rep = verify_fl_monte_carlo(
            chain, chain.fl_certificate(), [1.0, 3.0, 6.25, 10.0, 28.125, 100.0],
            n=20_000, rng=np.random.default_rng(11),
        )
        assert rep.ok, rep.to_text()
        # closed-form means at the two spec probes
        by_state = {p.state: p for p in rep.probes}
        assert by_state[1.0].estimate == pytest.approx(1.5, abs=0.03)
        assert by_state[100.0].estimate == pytest.approx(16.015625, abs=0.15)

    def test_corrupted_certificate_flagged_not_raised(self):
        chain = AtomChain()
        bad = FLCertificate(0.2, 1.0, 6.25)  # b halved: bound 1.2 < true mean 1.5 at x=1
        rep = verify_fl_monte_carlo(chain, bad, [1.0], n=20_000, rng=np.random.default_rng(12))
        assert not rep.ok
        assert "VIOLATION" in rep.to_text()

    def test_deterministic_bottom_chain(self):
        class Bottom:
            def scale(self, x):
                return x

            def step(self, x, rng):
                return 1.0

        for b in (1.0, 2.5):
            rep = verify_fl_monte_carlo(
                Bottom(), FLCertificate(0.3, b, 1.5), [1.0, 1.4], n=1000,
                rng=np.random.default_rng(13),
            )
            assert rep.ok

    def test_subsampled_certificate_holds_on_composed_kernel(self):
        chain = AtomChain()
        sub = subsample_certificate(chain.fl_certificate(), 3, RATE)
        rep = verify_fl_monte_carlo(
            ComposedChain(chain, 3), sub, [1.0, 3.0, 6.25, 10.0, 28.125, 100.0],
            n=20_000, rng=np.random.default_rng(14),
        )
        assert rep.ok, rep.to_text()

    def test_rejects_tiny_n(self):
        chain = AtomChain()
        with pytest.raises(CertificateError):
            verify_fl_monte_carlo(chain, chain.fl_certificate(), [1.0], n=10)


class TestCrudeDominationBound:
    def test_jump_laws_below_markov_bound(self):
        # for every state below z, the chain's jump survival stays under the
        # dominating kernel's survival
        chain = AtomChain()
        cert = chain.fl_certificate()
        r = cert.reflection_level
        rng = np.random.default_rng(15)
        for z in (r, 20.0, 28.125, 100.0):
            for x in rng.uniform(1.0, z, 25):
                law = chain.scale_jump_law(x)
                for t in np.linspace(1.0, 3 * z, 120):
                    assert law.survival(t) <= dominating_jump_survival(cert, z, t) + 1e-12
