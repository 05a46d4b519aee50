import pytest

from sacovest.errors import ValidationError
from sacovest.schedules import BatchSchedule, StepSchedule, validate_pair


class TestStepSchedule:
    def test_power_of_two(self):
        assert StepSchedule(eta=1.0, alpha=0.75).step_at(16) == pytest.approx(0.125, abs=1e-15)

    def test_first_step_is_eta(self):
        assert StepSchedule(eta=0.5, alpha=0.51).step_at(1) == 0.5
        assert StepSchedule(eta=3.25, alpha=0.9).step_at(1) == 3.25

    def test_strictly_decreasing(self):
        sched = StepSchedule(eta=0.7, alpha=0.6)
        steps = [sched.step_at(k) for k in range(1, 2000)]
        assert all(a > b for a, b in zip(steps, steps[1:]))

    def test_validation(self):
        with pytest.raises(ValidationError):
            StepSchedule(eta=0.0)
        with pytest.raises(ValidationError):
            StepSchedule(alpha=0.5)
        with pytest.raises(ValidationError):
            StepSchedule(alpha=1.0)


class TestBatchSchedule:
    def test_squares(self):
        assert BatchSchedule(c=1.0, beta=2.0).boundaries_upto(10) == [1, 4, 9]

    def test_dedupe_small_c(self):
        assert BatchSchedule(c=0.1, beta=2.0).boundaries_upto(6) == [1, 2, 3, 4, 5, 6]

    def test_forced_first_boundary(self):
        assert BatchSchedule(c=2.0, beta=3.0).boundaries_upto(60) == [1, 16, 54]

    def test_block_index_mid_block(self):
        sched = BatchSchedule(c=1.0, beta=2.0)
        assert sched.block_index(5) == (4, 2, False)

    def test_block_index_first(self):
        assert BatchSchedule(c=1.0, beta=2.0).block_index(1) == (1, 1, True)

    def test_block_index_boundary(self):
        assert BatchSchedule(c=1.0, beta=2.0).block_index(9) == (9, 1, True)

    def test_memo_extension_is_consistent(self):
        sched = BatchSchedule(c=1.0, beta=2.0)
        early = sched.boundaries_upto(10)
        late = sched.boundaries_upto(1000)
        assert late[:len(early)] == early

    def test_block_lengths_partition(self):
        # sum of l_k over k = 1..n equals the triangular sums block by block
        sched = BatchSchedule(c=0.7, beta=2.5)
        n = 10 ** 4
        total = 0
        for k in range(1, n + 1):
            t, l, new = sched.block_index(k)
            assert 1 <= l <= k and t <= k
            assert new == (t == k)
            total += l
        bounds = sched.boundaries_upto(n) + [n + 1]
        tri = sum(
            (min(hi - 1, n) - lo + 1) * (min(hi - 1, n) - lo + 2) // 2
            for lo, hi in zip(bounds[:-1], bounds[1:])
        )
        assert total == tri

    def test_dedupe_noop_for_unit_c(self):
        import math

        for beta in (1.5, 2.0, 4.0, 8.0):
            raw = [math.floor(float(m) ** beta) for m in range(1, 10 ** 4 + 1)]
            assert raw[0] == 1
            assert all(b > a for a, b in zip(raw, raw[1:])), \
                f"floor(m^{beta}) not strictly increasing"
            sched = BatchSchedule(c=1.0, beta=beta)
            n = raw[200]
            assert sched.boundaries_upto(n) == [v for v in raw if v <= n]

    def test_validation(self):
        with pytest.raises(ValidationError):
            BatchSchedule(c=0.0, beta=2.0)
        with pytest.raises(ValidationError):
            BatchSchedule(c=1.0, beta=1.0)

    def test_default_beta_tracks_alpha(self):
        sched = BatchSchedule(alpha=0.51)
        assert sched.beta == pytest.approx(2.0 / 0.49)


def test_validate_pair():
    step = StepSchedule(eta=0.5, alpha=0.51)
    validate_pair(step, BatchSchedule(c=1.0, beta=2.1))
    with pytest.raises(ValidationError):
        validate_pair(step, BatchSchedule(c=1.0, beta=2.0))  # needs > 1/0.49
