"""Tests for thread-safe state containers."""
import threading

from utils.thread_safe_state import ResultBuffer, ThreadSafeDict


class TestThreadSafeDict:
    """Test ThreadSafeDict basic operations."""

    def test_basic_operations(self):
        """Test get, set and membership."""
        d = ThreadSafeDict()
        d.set('a', 1)
        assert d.get('a') == 1
        assert d.get('missing', 'x') == 'x'
        assert 'a' in d
        assert len(d) == 1

    def test_initial_data_copied(self):
        """Test that initial data is copied, not aliased."""
        source = {'k': 1}
        d = ThreadSafeDict(source)
        d.set('k', 2)
        assert source['k'] == 1

    def test_setdefault_and_clear(self):
        """Test setdefault returns the stored value and clear empties."""
        d = ThreadSafeDict()
        bucket = d.setdefault('seeds', [])
        bucket.append(3)
        assert d.setdefault('seeds', []) == [3]
        d.clear()
        assert len(d) == 0

    def test_concurrent_updates(self):
        """Test concurrent writers do not lose keys."""
        d = ThreadSafeDict()

        def writer(offset):
            for i in range(200):
                d.set(offset + i, i)

        threads = [threading.Thread(target=writer, args=(k * 1000,)) for k in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(d) == 800


class TestResultBuffer:
    """Test seed-ordered record buffering."""

    def test_drain_orders_by_seed(self):
        """Test records come out in seed order, insertion order within a seed."""
        buffer = ResultBuffer()
        buffer.add(5, {'seed': 5, 'k': 0})
        buffer.extend(1, [{'seed': 1, 'k': 0}, {'seed': 1, 'k': 1}])
        buffer.add(5, {'seed': 5, 'k': 1})
        assert buffer.seeds() == [1, 5]
        assert len(buffer) == 4
        drained = buffer.drain()
        assert [(r['seed'], r['k']) for r in drained] == [(1, 0), (1, 1), (5, 0), (5, 1)]
        assert len(buffer) == 0

    def test_threads_finishing_out_of_order(self):
        """Test seed order does not depend on completion order."""
        buffer = ResultBuffer()
        barrier = threading.Barrier(8)

        def worker(seed):
            barrier.wait()
            buffer.add(seed, {'seed': seed})

        threads = [threading.Thread(target=worker, args=(s,)) for s in reversed(range(8))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert [r['seed'] for r in buffer.drain()] == list(range(8))
