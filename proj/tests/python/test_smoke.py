"""Smoke tests for the Python surface of the C++ core."""

import os

import pytest

import esafl


def small_params():
    return esafl.setup(n=64, num_clients=9, ternary_weight=32)


def test_profile_geometry():
    p = esafl.full_profile()
    assert p.pad == 4
    assert p.slots_T == 23
    assert p.capacity() == 22 * 16384
    q = esafl.SchemeParams.from_profile(p.to_profile())
    assert q == p


def test_estimate_matches_published_counts():
    p = esafl.full_profile()
    for length, packed, unpacked in [
        (101770, 1, 7),
        (1250000, 4, 77),
        (4020000, 12, 246),
    ]:
        r = esafl.estimate(length, p)
        assert r.ciphertexts_packed == packed
        assert r.ciphertexts_unpacked == unpacked
    assert esafl.estimate(101770, p).body_bytes_per_ciphertext == 32768 * 60


def test_homomorphic_sum_roundtrip():
    p = small_params()
    rng = esafl.Rng(7)
    km = esafl.keygen(p, rng)
    a1 = esafl.round_public(1, km.seed_b, km.a0, p)

    values = [[(i + 1) * 0.01 * (j + 1) % 1.0 for j in range(40)]
              for i in range(p.num_clients)]
    expected = [sum(v[j] for v in values) for j in range(40)]

    cts = []
    for i, v in enumerate(values):
        plains = esafl.ecd_pack(v, p)
        assert len(plains) == 1
        cts.append(esafl.encrypt(a1, 1, km.enc_key(i), plains[0], p, rng))

    agg = esafl.eval_add(cts, p)
    assert agg.agg_count == p.num_clients
    decrypted = esafl.decrypt(a1, km.dec_key, agg, p)
    sums = esafl.dcd_unpk([decrypted], p.num_clients, 40, p)
    bound = p.num_clients * p.n / (2.0 * 2 ** (p.log_q0 - 2))
    assert max(abs(a - b) for a, b in zip(sums, expected)) <= bound


def test_partial_aggregate_is_rejected():
    p = small_params()
    rng = esafl.Rng(9)
    km = esafl.keygen(p, rng)
    a1 = esafl.round_public(1, km.seed_b, km.a0, p)
    plains = esafl.ecd_pack([0.5] * 8, p)
    cts = [esafl.encrypt(a1, 1, km.enc_key(i), plains[0], p, rng)
           for i in range(3)]
    partial = esafl.eval_add(cts, p)
    with pytest.raises(ValueError):
        esafl.decrypt(a1, km.dec_key, partial, p)


def test_prpg_matches_golden_vector():
    golden = os.environ.get("ESAFL_GOLDEN")
    if not golden:
        pytest.skip("ESAFL_GOLDEN not set")
    with open(os.path.join(golden, "n16.profile")) as f:
        p = esafl.SchemeParams.from_profile(f.read())
    with open(os.path.join(golden, "prpg_n16_t5.bin"), "rb") as f:
        want = f.read()
    a = esafl.prpg(5, 0x0123456789ABCDEF, p)
    assert a.serialize() == want
    assert esafl.prpg(5, 0x0123456789ABCDEF, p) == a


def test_normalize_denormalize_affine_identity():
    vals = [-3.0, -1.0, 0.0, 1.0, 3.0]
    n = esafl.normalize(vals, 2.0)
    assert n[2] == 0.5 and n[0] == 0.0 and n[4] == 1.0
    back = esafl.denormalize(n, 1, 2.0)
    assert back[1] == pytest.approx(-1.0)
    assert back[3] == pytest.approx(1.0)


def test_training_demo_converges():
    p = small_params()
    cfg = esafl.TrainConfig()
    cfg.rounds = 25
    cfg.model_dim = 6
    cfg.learning_rate = 0.05
    cfg.clip_bound = 6.0
    cfg.data_seed = 4
    cfg.key_seed = 5
    res = esafl.run_training(p, cfg)
    assert not res.aborted
    assert len(res.rounds) == 25
    assert res.rounds[-1].loss_plain < res.rounds[0].loss_plain
    assert res.rounds[-1].max_model_diff < 0.05
    csv = esafl.trace_to_csv(res)
    assert csv.splitlines()[0].startswith("round,loss_plain,loss_enc")


def test_selftest_passes():
    p = small_params()
    results = esafl.selftest(p, trials=30, golden_dir="", seed=2)
    for name, passed, skipped, detail in results:
        assert passed or skipped, f"{name}: {detail}"
