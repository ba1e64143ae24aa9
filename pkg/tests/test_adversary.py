"""Attack models, Eve's knowledge and detection statistics."""

import math

import numpy as np
import pytest

import oracles
from qdialogue.adversary import (
    AttackModel,
    Eavesdropper,
    EveKnowledge,
    attack_transmission,
    estimate_detection_probability,
    eve_posterior,
)
from qdialogue.protocol import DecoyPolicy, DialogueConfig, PhotonSequence, execute, insert_decoys, run_dialogue
from qdialogue.quantum import fresh_qubit, shannon_entropy


class TestAttackModel:
    def test_defaults(self):
        assert AttackModel().kind == "none"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "tamper"},
            {"target_step": "step4"},
            {"basis_strategy": "Y"},
            {"kind": "entangle_ancilla", "target_step": "step3"},
            {"kind": "intercept_resend", "track_rotation": True},
            {"kind": "entangle_ancilla", "target_step": "step2", "track_rotation": True},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            AttackModel(**kwargs)

    def test_dict_round_trip(self):
        m = AttackModel("entangle_ancilla", "step1", track_rotation=True)
        assert AttackModel.from_dict(m.to_dict()) == m
        with pytest.raises(ValueError):
            AttackModel.from_dict({"kind": "none", "strength": 3})


class TestPosterior:
    @pytest.mark.parametrize("a", [0, 1])
    def test_passive_listener_learns_nothing(self, a):
        p = eve_posterior(a)
        assert shannon_entropy(p) == 2.0

    @pytest.mark.parametrize("a,m", [(0, 0), (0, 1), (1, 0), (1, 1)])
    def test_knowing_m_halves_uncertainty(self, a, m):
        p = eve_posterior(a, knows_m=True, m=m)
        assert shannon_entropy(p) == 1.0
        # surviving pairs satisfy r ⊕ k = a ⊕ m
        assert p.tolist() == [0.5 if (r ^ k) == (a ^ m) else 0.0 for r in (0, 1) for k in (0, 1)]

    def test_worked_example_pairs(self):
        # announcement 1, guess m=0 -> {r=0,k=1} or {r=1,k=0}
        p = eve_posterior(1, knows_m=True, m=0)
        assert p.tolist() == [0.0, 0.5, 0.5, 0.0]

    def test_invalid(self):
        with pytest.raises(ValueError):
            eve_posterior(2)
        with pytest.raises(ValueError):
            eve_posterior(0, knows_m=True)

    def test_honest_run_posteriors_uniform(self):
        eve = Eavesdropper(AttackModel("entangle_ancilla", "step2"))
        execute(DialogueConfig(n=4, rounds=2, policy=DecoyPolicy.disabled()), 3, channel=eve)
        assert len(eve.knowledge.posteriors) == 8
        assert all(eve.knowledge.entropy(k) == 2.0 for k in eve.knowledge.posteriors)


class TestPositionBlindness:
    def test_intercept_touches_every_photon(self):
        rng = np.random.default_rng(0)
        payload = [fresh_qubit(f"p{i}", "0") for i in range(4)]
        seq = insert_decoys(PhotonSequence.from_payload(payload), DecoyPolicy(count=4), rng)
        out, knowledge = attack_transmission(seq, AttackModel("intercept_resend"), rng, EveKnowledge())
        assert len(knowledge.captured) == 8
        assert all(a is not b for a, b in zip(out.qubits(), seq.qubits()))
        # roles and decoy records are the parties' bookkeeping and pass through
        assert out.decoy_records == seq.decoy_records

    def test_ancilla_per_photon(self):
        rng = np.random.default_rng(0)
        seq = PhotonSequence.from_payload([fresh_qubit(f"p{i}", "+") for i in range(3)])
        registry = []
        attack_transmission(seq, AttackModel("entangle_ancilla", "step2"), rng, registry=registry)
        assert len(registry) == 3


class TestInterceptResend:
    @pytest.mark.parametrize("strategy", ["always_Z", "random_ZX"])
    def test_enumeration_oracle(self, strategy):
        assert oracles.intercept_resend_error(strategy) == pytest.approx(0.25, abs=0)

    @pytest.mark.parametrize("strategy", ["always_Z", "random_ZX"])
    @pytest.mark.parametrize("step", ["step1", "step2", "step3"])
    def test_monte_carlo_rate(self, strategy, step):
        cfg = DialogueConfig(n=2, policy=DecoyPolicy(count=20, threshold=1.0))
        est = estimate_detection_probability(AttackModel("intercept_resend", step, strategy), cfg, 100, seed=17)
        assert est.decoys == 2000
        assert est.per_decoy_ci[0] <= 0.25 <= est.per_decoy_ci[1]

    def test_abort_rate_grows_with_decoys(self):
        model = AttackModel("intercept_resend")
        few = estimate_detection_probability(model, DialogueConfig(n=1, policy=DecoyPolicy(count=1)), 400, seed=1)
        many = estimate_detection_probability(model, DialogueConfig(n=1, policy=DecoyPolicy(count=12)), 200, seed=1)
        # 1 - 0.75^d: 0.25 for one decoy, about 0.97 for twelve
        assert few.abort_ci[0] <= 0.25 <= few.abort_ci[1]
        assert many.abort_rate > 0.9

    def test_no_attack_no_errors(self):
        est = estimate_detection_probability(AttackModel(), DialogueConfig(n=2), 20, seed=0)
        assert est.errors == 0 and est.aborts == 0

    def test_requires_decoys(self):
        with pytest.raises(ValueError):
            estimate_detection_probability(
                AttackModel("intercept_resend"), DialogueConfig(policy=DecoyPolicy.disabled()), 5, seed=0
            )


class TestEntangleAncilla:
    def test_decoys_reveal_key_attack(self):
        cfg = DialogueConfig(n=2, policy=DecoyPolicy(count=20, threshold=1.0))
        est = estimate_detection_probability(AttackModel("entangle_ancilla", "step1"), cfg, 100, seed=4)
        # X-basis decoys decohere, Z-basis ones survive
        assert est.per_decoy_ci[0] <= 0.25 <= est.per_decoy_ci[1]

    def test_key_is_damaged(self):
        run = execute(
            DialogueConfig(n=3, policy=DecoyPolicy.disabled(), attack=AttackModel("entangle_ancilla")), 0
        )
        assert max(run.key.fidelities()) == pytest.approx(0.5, abs=1e-12)

    def test_step2_ancilla_collapses_key(self):
        # the ciphertext copy entangles Eve with the key; measuring her ancilla
        # leaves each pair in |00> or |11>, which the next rotation exposes
        cfg = DialogueConfig(n=4, rounds=1, policy=DecoyPolicy.disabled(),
                             attack=AttackModel("entangle_ancilla", "step2"))
        run = execute(cfg, 6)
        assert run.transcript.decoded_alice == run.transcript.messages("bob")
        assert run.key.fidelities() == pytest.approx([0.5] * 4, abs=1e-12)


class TestRotationTracking:
    """Eve riding the key across rounds."""

    @staticmethod
    def tracked(theta, rounds=3, seed=0):
        cfg = DialogueConfig(
            n=4, rounds=rounds, theta=theta, policy=DecoyPolicy.disabled(),
            attack=AttackModel("entangle_ancilla", "step1", track_rotation=True),
        )
        eve = Eavesdropper(cfg.attack)
        run = execute(cfg, seed, channel=eve)
        return run.transcript, eve

    @pytest.mark.parametrize("theta", [0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4])
    def test_invisible_at_quarter_turns(self, theta):
        t, _ = self.tracked(theta, seed=5)
        assert t.decoded_alice == t.messages("bob")
        assert t.decoded_bob == t.messages("alice")

    def test_without_rotation_eve_reads_m_and_leaks_one_bit(self):
        t, eve = self.tracked(0.0)
        m_true = {(e.round, i): m for e in t.events_of("prepare_traveling") for i, m in enumerate(e.data["m"])}
        assert eve.knowledge.m_guesses and all(
            eve.knowledge.m_guesses[key] == m_true[key] for key in eve.knowledge.m_guesses
        )
        assert all(eve.knowledge.entropy(k) == 1.0 for k in eve.knowledge.posteriors)

    def test_generic_angle_disturbs(self):
        errors = 0
        for seed in range(30):
            t, _ = self.tracked(math.pi / 8, seed=seed)
            errors += sum(a != b for x, y in zip(t.decoded_alice, t.messages("bob")) for a, b in zip(x, y))
            errors += sum(a != b for x, y in zip(t.decoded_bob, t.messages("alice")) for a, b in zip(x, y))
        assert errors > 0

    def test_public_angles_accumulate(self):
        _, eve = self.tracked(0.2, rounds=3)
        assert eve.accumulated_theta == pytest.approx(0.6)
