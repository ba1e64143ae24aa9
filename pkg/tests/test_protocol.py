"""Protocol steps, decoys, transcripts and full dialogue runs."""

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from qdialogue.adversary import AttackModel
from qdialogue.protocol import (
    PUBLIC,
    DecoyPolicy,
    DecoyRecord,
    DialogueConfig,
    IdealChannel,
    PhotonSequence,
    SecretMessage,
    Transcript,
    check_decoys,
    decode_counterpart_bit,
    execute,
    insert_decoys,
    measure_decoys,
    run_dialogue,
    step1_distribute_key,
    step5_rotate_key,
    theta_warning,
)
from qdialogue.quantum import (
    PHI_PLUS,
    DensityMatrix,
    Register,
    StateVector,
    cnot,
    fidelity,
    fresh_qubit,
    prepare,
    reduced_density,
)


def fixed_config(m, r, k, **kw):
    return DialogueConfig(
        n=1, rounds=1, initial_bits=((m,),), alice_messages=((r,),), bob_messages=((k,),), **kw
    )


class SpyChannel(IdealChannel):
    """Records the reduced state of every in-flight payload photon."""

    def __init__(self):
        self.densities = []

    def transmit(self, seq, step, round_index, rng):
        if step == "step2":
            self.densities.extend(reduced_density([q]) for q in seq.payload())
        return seq


class TestEncryption:
    @pytest.mark.parametrize("m", [0, 1])
    def test_ciphertext_is_ghz(self, m):
        reg = Register.epr("A", "B")
        p = fresh_qubit("P", m)
        cnot(reg["A"], p)
        want = StateVector(oracles.ghz_ciphertext(m))
        assert fidelity(p.register.state, want) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("m", [0, 1])
    def test_bob_cnot_restores_product(self, m):
        reg = Register.epr("A", "B")
        p = fresh_qubit("P", m)
        cnot(reg["A"], p)
        cnot(reg["B"], p)
        want = StateVector(np.kron(PHI_PLUS.amplitudes, prepare(1, [m]).amplitudes))
        assert fidelity(p.register.state, want) == pytest.approx(1.0, abs=1e-12)

    def test_in_flight_photons_are_maximally_mixed(self):
        spy = SpyChannel()
        execute(DialogueConfig(n=6, rounds=3), 11, channel=spy)
        assert len(spy.densities) == 18
        mixed = DensityMatrix.maximally_mixed()
        assert max(rho.distance(mixed) for rho in spy.densities) < 1e-12


class TestDialogue:
    @pytest.mark.parametrize("m,r,k", oracles.all_mrk())
    def test_every_combination_decodes(self, m, r, k):
        t = run_dialogue(fixed_config(m, r, k), 3)
        assert not t.aborted
        assert t.decoded_alice == [[k]]
        assert t.decoded_bob == [[r]]
        assert t.events_of("announce")[0].data["outcomes"] == [oracles.dialogue_outcome(m, r, k)]

    def test_worked_example(self):
        t = run_dialogue(fixed_config(0, 0, 1), 0)
        assert t.events_of("announce")[0].data["outcomes"] == [1]
        assert t.decoded_alice == [[1]]
        assert t.decoded_bob == [[0]]

    def test_decode_rule(self):
        for m, r, k in oracles.all_mrk():
            a = m ^ r ^ k
            assert decode_counterpart_bit(m, r, a) == k
            assert decode_counterpart_bit(m, k, a) == r

    @given(n=st.integers(1, 6), rounds=st.integers(1, 4), seed=st.integers(0, 2**32))
    @settings(max_examples=25, deadline=None)
    def test_random_dialogues_decode(self, n, rounds, seed):
        t = run_dialogue(DialogueConfig(n=n, rounds=rounds), seed)
        assert not t.aborted
        assert t.decoded_alice == t.messages("bob")
        assert t.decoded_bob == t.messages("alice")

    def test_bob_learns_m(self):
        t = run_dialogue(DialogueConfig(n=5, rounds=2), 8)
        for rnd in (1, 2):
            for rec in t.photon_records(rnd):
                assert rec.bob_measured_m == rec.m
                assert rec.announced is not None

    def test_same_seed_same_transcript(self):
        cfg = DialogueConfig(n=4, rounds=3)
        assert run_dialogue(cfg, 42).to_json() == run_dialogue(cfg, 42).to_json()
        assert run_dialogue(cfg, 42).to_json() != run_dialogue(cfg, 43).to_json()

    def test_m_never_published(self):
        t = run_dialogue(DialogueConfig(n=4, rounds=2), 5)
        for e in t.public_events():
            assert "m" not in e.data
            assert "bob_measured_m" not in e.data


class TestKeyRotation:
    def test_key_survives_many_random_rotations(self):
        rng = np.random.default_rng(9)
        cfg = DialogueConfig(n=3, rounds=100, theta=tuple(rng.uniform(0, 2 * math.pi, 100)))
        run = execute(cfg, 9)
        assert not run.transcript.aborted
        assert min(run.key.fidelities()) >= 1 - 1e-9
        assert run.key.round_counter == 100

    def test_rotation_events_are_public(self):
        key, t = step1_distribute_key(2, DecoyPolicy(), IdealChannel(), np.random.default_rng(0))
        step5_rotate_key(key, 0.3, t, 1)
        rot = t.events_of("rotate")
        assert rot and rot[0].visibility == PUBLIC and rot[0].data["theta"] == 0.3

    @pytest.mark.parametrize("theta", [math.pi / 4, 3 * math.pi / 4, -math.pi / 4, 5 * math.pi / 4])
    def test_theta_one_warns(self, theta):
        assert theta_warning(theta).startswith("theta_1")

    @pytest.mark.parametrize("theta", [0.0, math.pi / 2, math.pi])
    def test_trivial_angle_warns(self, theta):
        assert theta_warning(theta).startswith("trivial")

    @pytest.mark.parametrize("theta", [math.pi / 8, 0.3, 3 * math.pi / 8])
    def test_generic_angle_quiet(self, theta):
        assert theta_warning(theta) is None

    def test_warning_recorded_not_public(self):
        key, t = step1_distribute_key(1, DecoyPolicy(), IdealChannel(), np.random.default_rng(0))
        step5_rotate_key(key, math.pi / 4, t, 1)
        (w,) = t.events_of("security_warning")
        assert w.visibility != PUBLIC


class TestDecoys:
    def test_policy_counts(self):
        assert DecoyPolicy().decoys_for(4) == 8
        assert DecoyPolicy().decoys_for(100) == 25
        assert DecoyPolicy(count=3).decoys_for(100) == 3
        assert DecoyPolicy.disabled().decoys_for(100) == 0

    def test_policy_validation(self):
        with pytest.raises(ValueError):
            DecoyPolicy(threshold=1.5)
        with pytest.raises(ValueError):
            DecoyPolicy(count=0)  # checking on but nothing to check
        with pytest.raises(ValueError):
            DecoyPolicy.from_dict({"fraction": 0.1, "colour": "red"})

    def test_insert_positions_distinct_and_payload_order_kept(self):
        rng = np.random.default_rng(4)
        payload = [fresh_qubit(f"p{i}", "0") for i in range(10)]
        seq = insert_decoys(PhotonSequence.from_payload(payload), DecoyPolicy(count=7), rng)
        seq.validate(10)
        assert len(seq) == 17
        assert seq.payload() == payload

    def test_honest_channel_passes(self):
        rng = np.random.default_rng(5)
        seq = insert_decoys(PhotonSequence.from_payload([fresh_qubit("p", "0")]), DecoyPolicy(count=40), rng)
        reveal = [(r.position, r.basis) for r in seq.decoy_records]
        assert check_decoys(seq.decoy_records, measure_decoys(seq, reveal, rng)) == 0.0

    def test_check_rate(self):
        recs = [DecoyRecord(0, "0"), DecoyRecord(1, "+"), DecoyRecord(2, "-"), DecoyRecord(3, "1")]
        assert check_decoys(recs, [0, 1, 1, 1]) == 0.25
        with pytest.raises(ValueError):
            check_decoys(recs, [0])

    def test_no_decoys_no_check_events(self):
        t = run_dialogue(DialogueConfig(n=2, policy=DecoyPolicy.disabled()), 1)
        assert not t.events_of("decoy_check")
        assert t.decoded_alice == t.messages("bob")


class TestAbort:
    def test_intercept_resend_aborts_key_distribution(self):
        cfg = DialogueConfig(n=4, policy=DecoyPolicy(count=30), attack=AttackModel("intercept_resend"))
        t = run_dialogue(cfg, 2)
        assert t.aborted and t.abort_step == "step1"
        assert t.decoded_alice == [] and t.decoded_bob == []
        assert not t.events_of("prepare_traveling")
        assert t.events_of("decoy_check")[-1].data["passed"] is False

    def test_threshold_one_never_aborts(self):
        cfg = DialogueConfig(
            n=2, policy=DecoyPolicy(count=20, threshold=1.0), attack=AttackModel("intercept_resend", "step3")
        )
        t = run_dialogue(cfg, 2)
        assert not t.aborted


class TestTranscript:
    def test_json_round_trip(self):
        t = run_dialogue(DialogueConfig(n=3, rounds=2), 7)
        back = Transcript.from_json(t.to_json())
        assert back.to_json() == t.to_json()
        doc = json.loads(t.to_json())
        assert doc["schema"] == "qdialogue.transcript"
        assert len(doc["rounds"]) == 3  # key distribution plus two rounds

    def test_step_order_enforced(self):
        t = Transcript(config={})
        t.record(1, "step3", "x")
        with pytest.raises(RuntimeError):
            t.record(1, "step2", "y")

    def test_rejects_foreign_document(self):
        with pytest.raises(ValueError):
            Transcript.from_dict({"schema": "other"})


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DialogueConfig(n=0)
        with pytest.raises(ValueError):
            DialogueConfig(rounds=2, theta=(0.1,))
        with pytest.raises(ValueError):
            DialogueConfig(n=2, alice_messages=((1,),))

    def test_theta_schedule(self):
        cfg = DialogueConfig(rounds=2, theta=(0.1, 0.2))
        assert cfg.theta_for(2) == 0.2
        assert DialogueConfig().theta_for(1) == pytest.approx(math.pi / 8)

    def test_secret_message_bits(self):
        with pytest.raises(ValueError):
            SecretMessage((0, 2))
