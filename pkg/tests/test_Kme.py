import random
import threading
import time
import unittest
import uuid

from qkd_ike.exceptions import (
    KmsAuthorizationError, KmsCapacityError, KmsNotFoundError, KmsRequestError, KmsUnavailableError
)
from qkd_ike.kms import KeySource, KeyStore, KmePair, LocalKmsClient
from qkd_ike.models.kms import KmsConfig

UE = "UE-001"
N3IWF = "N3IWF-001"


class TestKeySource(unittest.TestCase):

    def test_seeded_is_repeatable(self):
        first = KeySource(key_size_bits=256, seed=42).generate(5)
        second = KeySource(key_size_bits=256, seed=42).generate(5)
        self.assertEqual(first, second)
        self.assertTrue(all(len(key.material) == 32 for key in first))

    def test_unseeded_is_unique(self):
        keys = KeySource(key_size_bits=128).generate(50)
        self.assertEqual(len({key.key_id for key in keys}), 50)
        self.assertTrue(all(key.size_bits == 128 for key in keys))


class TestKeyStore(unittest.TestCase):

    def test_capacity(self):
        store = KeyStore(kme_id="KME-A", capacity=3)
        store.append(KeySource(key_size_bits=256).generate(3))
        with self.assertRaises(KmsCapacityError):
            store.append(KeySource(key_size_bits=256).generate(1))

    def test_take_more_than_pending(self):
        store = KeyStore(kme_id="KME-A", capacity=10)
        store.append(KeySource(key_size_bits=256).generate(2))
        with self.assertRaises(KmsUnavailableError):
            store.take_pending(3)
        self.assertEqual(store.stored_key_count, 2)

    def test_consumed_history_is_bounded(self):
        store = KeyStore(kme_id="KME-A", capacity=10, consumed_history=3)
        keys = KeySource(key_size_bits=256, seed=3).generate(10)
        store.append(keys)
        key_ids = [key.key_id for key in keys]
        store.reserve(key_ids=key_ids, master_sae_id=N3IWF, slave_sae_id=UE)
        for key_id in key_ids:
            store.consume([key_id])
        self.assertEqual(list(store.consumed), key_ids[-3:])
        self.assertEqual(store.reserved, {})


class TestKmePair(unittest.TestCase):

    def get_pair(self, **kwargs) -> KmePair:
        params = {"initial_keys": 100, "seed": 1}
        params.update(kwargs)
        return KmePair(config=KmsConfig(**params))

    def test_paired_delivery(self):
        pair = self.get_pair()
        n3iwf = LocalKmsClient(kme=pair.kme_for(N3IWF), sae_id=N3IWF)
        ue = LocalKmsClient(kme=pair.kme_for(UE), sae_id=UE)
        reserved = n3iwf.get_keys(slave_sae=UE, number=13)
        delivered = ue.get_keys_by_id(master_sae=N3IWF, key_ids=reserved.key_ids)
        self.assertEqual(len(reserved), 13)
        self.assertEqual(reserved.key_ids, delivered.key_ids)
        self.assertEqual([k.material for k in reserved.keys], [k.material for k in delivered.keys])
        self.assertEqual(n3iwf.call_count, 1)
        self.assertEqual(ue.calls, ["get_keys_by_id"])

    def test_pools_stay_in_sync(self):
        pair = self.get_pair()
        pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=10)
        self.assertEqual(pair.kme_a.store.stored_key_count, 90)
        self.assertEqual(pair.kme_b.store.stored_key_count, 90)
        status = pair.kme_b.get_status(requester=UE, slave_sae=N3IWF)
        self.assertEqual(status.stored_key_count, 90)
        self.assertEqual(status.source_kme_id, "KME-UE-01")

    def test_key_ids_unique_across_requests(self):
        pair = self.get_pair()
        first = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=13)
        second = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=13)
        self.assertFalse(set(first.key_ids) & set(second.key_ids))

    def test_consumed_key_cannot_be_fetched_twice(self):
        pair = self.get_pair()
        reserved = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=2)
        pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=reserved.key_ids)
        with self.assertRaises(KmsNotFoundError):
            pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=reserved.key_ids)

    def test_errors(self):
        pair = self.get_pair(initial_keys=5)
        test_cases = [
            {
                "test_name": "Test-Exhausted",
                "call": lambda: pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=6),
                "exception": KmsUnavailableError
            },
            {
                "test_name": "Test-Zero-Keys",
                "call": lambda: pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=0),
                "exception": KmsRequestError
            },
            {
                "test_name": "Test-Above-Max-Per-Request",
                "call": lambda: pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=129),
                "exception": KmsRequestError
            },
            {
                "test_name": "Test-Wrong-Key-Size",
                "call": lambda: pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=1, size_bits=128),
                "exception": KmsRequestError
            },
            {
                "test_name": "Test-Unknown-Requester",
                "call": lambda: pair.kme_a.get_keys(requester="UE-999", slave_sae=UE, number=1),
                "exception": KmsAuthorizationError
            },
            {
                "test_name": "Test-Slave-At-Same-KME",
                "call": lambda: pair.kme_a.get_keys(requester=N3IWF, slave_sae=N3IWF, number=1),
                "exception": KmsAuthorizationError
            },
            {
                "test_name": "Test-Unknown-Key-ID",
                "call": lambda: pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=[uuid.uuid4()]),
                "exception": KmsNotFoundError
            },
            {
                "test_name": "Test-Malformed-Key-ID",
                "call": lambda: pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=["not-a-uuid"]),
                "exception": KmsNotFoundError
            },
            {
                "test_name": "Test-Unregistered-SAE",
                "call": lambda: pair.kme_for("SAE-X"),
                "exception": KmsAuthorizationError
            }
        ]
        for test_case in test_cases:
            with self.subTest(msg=test_case["test_name"]):
                with self.assertRaises(test_case["exception"]):
                    test_case["call"]()
        self.assertEqual(pair.kme_a.store.stored_key_count, 5)

    def test_failed_lookup_leaves_reservation(self):
        pair = self.get_pair()
        reserved = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=3)
        with self.assertRaises(KmsNotFoundError):
            pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=reserved.key_ids + [uuid.uuid4()])
        delivered = pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=reserved.key_ids)
        self.assertEqual(len(delivered), 3)

    def test_replenish_after_exhaustion(self):
        pair = self.get_pair(initial_keys=0)
        with self.assertRaises(KmsUnavailableError):
            pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=1)
        pair.replenish(count=13)
        self.assertEqual(len(pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=13)), 13)

    def test_concurrent_requests(self):
        pair = self.get_pair(initial_keys=1000)
        results = []
        lock = threading.Lock()

        def worker():
            container = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=13)
            with lock:
                results.extend(container.key_ids)

        threads = [threading.Thread(target=worker) for _ in range(20)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        self.assertEqual(len(results), 260)
        self.assertEqual(len(set(results)), 260)
        self.assertEqual(pair.kme_b.store.stored_key_count, 740)

    def test_permuted_ids_permute_output(self):
        pair = self.get_pair()
        reserved = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=13)
        materials = {key.key_id: key.material for key in reserved.keys}
        requested = list(reserved.key_ids)
        random.Random(5).shuffle(requested)
        delivered = pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=requested)
        self.assertEqual(delivered.key_ids, requested)
        self.assertEqual([key.material for key in delivered.keys], [materials[key_id] for key_id in requested])

    def test_expire_reservations(self):
        pair = self.get_pair()
        reserved = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=3)
        self.assertEqual(pair.expire_reservations(max_age_s=3600), [])
        self.assertEqual(set(pair.expire_reservations(max_age_s=0)), set(reserved.key_ids))
        self.assertEqual(pair.kme_a.store.reserved, {})
        self.assertEqual(pair.kme_b.store.reserved, {})
        self.assertEqual(pair.kme_b.store.stored_key_count, 97)
        with self.assertRaises(KmsNotFoundError):
            pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=reserved.key_ids)

    def test_reservation_ttl_applied_on_get_keys(self):
        pair = self.get_pair(reservation_ttl_s=0.001)
        stale = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=2)
        time.sleep(0.01)
        fresh = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=2)
        self.assertEqual(set(pair.kme_b.store.reserved), set(fresh.key_ids))
        with self.assertRaises(KmsNotFoundError):
            pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=stale.key_ids)
        self.assertEqual(len(pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=fresh.key_ids)), 2)

    def test_interleaved_sessions_drain_pool(self):
        pair = self.get_pair(initial_keys=10000)
        delivered = []
        errors = []
        lock = threading.Lock()

        def session(index: int):
            rng = random.Random(index)
            outstanding = []
            exhausted = False
            try:
                while not exhausted or outstanding:
                    if not exhausted and (not outstanding or rng.random() < 0.5):
                        try:
                            container = pair.kme_a.get_keys(requester=N3IWF, slave_sae=UE, number=rng.randint(1, 13))
                        except KmsUnavailableError as e:
                            assert e.retryable
                            exhausted = True
                            continue
                        outstanding.append(container)
                    else:
                        reserved = outstanding.pop(rng.randrange(len(outstanding)))
                        materials = {key.key_id: key.material for key in reserved.keys}
                        requested = list(reserved.key_ids)
                        rng.shuffle(requested)
                        container = pair.kme_b.get_keys_by_id(requester=UE, master_sae=N3IWF, key_ids=requested)
                        assert container.key_ids == requested
                        assert [key.material for key in container.keys] == [materials[x] for x in requested]
                        with lock:
                            delivered.extend(requested)
                    if rng.random() < 0.05:
                        time.sleep(0.0005)
            except Exception as e:
                with lock:
                    errors.append(e)

        threads = [threading.Thread(target=session, args=(index,)) for index in range(50)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
        self.assertEqual(errors, [])
        self.assertEqual(len(set(delivered)), len(delivered))
        self.assertEqual(len(delivered) + pair.kme_a.store.stored_key_count, 10000)
        self.assertEqual(pair.kme_a.store.reserved, {})
        self.assertEqual(pair.kme_b.store.reserved, {})
        self.assertEqual(list(pair.kme_a.store.pending), list(pair.kme_b.store.pending))
        self.assertLess(pair.kme_a.store.stored_key_count, 13)
