import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from actint.evaluate import (
    EvaluationSummary,
    FoldError,
    FoldResult,
    accuracy,
    confusion_matrix,
    cross_validate,
    format_pm,
    stratified_folds,
    summarize,
    weighted_f1,
)
from actint.model import TrainConfig, train_baseline
from actint.synth import generate_dataset

from test_synth import quiet_spec


def oracle(y_true, y_pred):
    """Confusion counts by hand, then accuracy and support-weighted F1."""
    tp = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 1)
    tn = sum(1 for t, p in zip(y_true, y_pred) if t == 0 and p == 0)
    fp = sum(1 for t, p in zip(y_true, y_pred) if t == 0 and p == 1)
    fn = sum(1 for t, p in zip(y_true, y_pred) if t == 1 and p == 0)
    n = tp + tn + fp + fn

    def f1(tp_, fp_, fn_):
        return 0.0 if tp_ == 0 else 2 * tp_ / (2 * tp_ + fp_ + fn_)

    return (tp + tn) / n, (tp + fn) / n * f1(tp, fp, fn) + (tn + fp) / n * f1(tn, fn, fp)


FIXTURE_TRUE = [1] * 10 + [0] * 40
FIXTURE_PRED = [1] * 7 + [0] * 3 + [1] * 5 + [0] * 35


class TestMetrics:
    def test_confusion(self):
        cm = confusion_matrix(FIXTURE_TRUE, FIXTURE_PRED)
        assert cm.tolist() == [[35, 5], [3, 7]]

    def test_fifty_fixture(self):
        acc, f1 = oracle(FIXTURE_TRUE, FIXTURE_PRED)
        assert accuracy(FIXTURE_TRUE, FIXTURE_PRED) == pytest.approx(acc, abs=1e-9)
        assert weighted_f1(FIXTURE_TRUE, FIXTURE_PRED) == pytest.approx(f1, abs=1e-9)
        assert acc == 42 / 50
        # F1(pos) = 14/22, F1(neg) = 70/78
        assert f1 == pytest.approx(0.2 * 14 / 22 + 0.8 * 70 / 78, abs=1e-12)

    def test_constant_positive(self):
        y = [1] * 10 + [0] * 40
        assert accuracy(y, [1] * 50) == pytest.approx(0.2)
        assert weighted_f1(y, [1] * 50) == pytest.approx(0.2 * (1 / 3))

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=80))
    def test_matches_oracle_and_sklearn(self, pairs):
        from sklearn.metrics import f1_score

        t = [a for a, _ in pairs]
        p = [b for _, b in pairs]
        acc, f1 = oracle(t, p)
        assert accuracy(t, p) == pytest.approx(acc, abs=1e-12)
        assert weighted_f1(t, p) == pytest.approx(f1, abs=1e-12)
        assert weighted_f1(t, p) == pytest.approx(
            f1_score(t, p, average="weighted", labels=[0, 1], zero_division=0), abs=1e-12
        )

    def test_format(self):
        assert format_pm(0.9134, 0.02634) == "91 ± 2.63"
        assert format_pm(1.0, 0.0) == "100 ± 0.00"

    def test_summary_population_sd(self):
        folds = [FoldResult(i, a, a, 10) for i, a in enumerate([0.8, 0.9, 1.0])]
        s = summarize(folds)
        assert s.accuracy_mean == pytest.approx(0.9)
        assert s.accuracy_sd == pytest.approx(np.sqrt(2 / 300))
        d = s.to_dict()
        assert d["accuracy_display"] == "90 ± 8.16"
        assert isinstance(s, EvaluationSummary)


class TestFolds:
    def test_stratified(self):
        labels = [1] * 10 + [0] * 40
        folds = stratified_folds(labels, 5, seed=0)
        assert sorted(np.concatenate(folds).tolist()) == list(range(50))
        for f in folds:
            assert sum(labels[i] for i in f) == 2 and len(f) == 10

    def test_infeasible(self):
        with pytest.raises(FoldError, match=r"\{0: 40, 1: 3\}"):
            stratified_folds([1] * 3 + [0] * 40, 5)

    def test_perfect_on_noise_free(self):
        data, _ = generate_dataset(quiet_spec(positive_count=10, negative_count=40))
        s = cross_validate(data, 5, 0, trainer=lambda d: train_baseline(d, TrainConfig(epochs=300)))
        assert s.accuracy_mean == 1.0 and s.accuracy_sd == 0.0
        assert s.weighted_f1_mean == 1.0
        assert len(s.folds) == 5

    def test_on_fold_callback(self):
        data, _ = generate_dataset(quiet_spec(positive_count=6, negative_count=12))
        seen = []
        cross_validate(data, 3, 0, trainer=lambda d: train_baseline(d, TrainConfig(epochs=20)),
                       on_fold=lambda f, m, test: seen.append((f, len(test))))
        assert seen == [(0, 6), (1, 6), (2, 6)]
