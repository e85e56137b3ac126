import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from harseq.features import (Bins, DeltaTEncoding, FeatureConfig, FeatureError, Granularity,
                             Representation, TodEncoding, bin_delta_t, changepoint_matrix,
                             compact_ob, encode_one_hot, encode_unary, expand_predictions,
                             expand_spans, featurize, last_fired_matrix, to_changepoint,
                             to_last_fired)

from helpers import make_seq
from oracles import changepoint_oracle, last_fired_oracle

# coarse intervals written out as (low, high] pairs
COARSE48 = [(30, 40), (40, 50), (50, 60), (60, 80), (80, 100), (100, 120), (120, 150),
            (150, 180), (180, 210), (210, 240), (240, 270), (270, 300), (300, 360),
            (360, 420), (420, 480), (480, 540), (540, 600), (600, None)]
COARSE7 = [(0, 5), (5, 30), (30, 60), (60, 120), (120, 150), (150, 660), (660, None)]


def bin48_oracle(t):
    if t <= 30:
        return t - 1
    for i, (lo, hi) in enumerate(COARSE48):
        if t > lo and (hi is None or t <= hi):
            return 30 + i


def bin7_oracle(t):
    for i, (lo, hi) in enumerate(COARSE7):
        if t > lo and (hi is None or t <= hi):
            return i


class TestBins:
    @pytest.mark.parametrize("t,scheme,expected", [
        (15, Bins.BINS48, 14), (75, Bins.BINS48, 33), (999, Bins.BINS48, 47),
        (100, Bins.BINS7, 3), (1, Bins.BINS48, 0), (30, Bins.BINS48, 29), (31, Bins.BINS48, 30),
        (600, Bins.BINS48, 46), (601, Bins.BINS48, 47), (5, Bins.BINS7, 0), (6, Bins.BINS7, 1),
        (660, Bins.BINS7, 5), (661, Bins.BINS7, 6),
    ])
    def test_values(self, t, scheme, expected):
        assert bin_delta_t(t, scheme) == expected

    def test_sweep_matches_interval_tables(self):
        ts = np.arange(1, 10001)
        b48 = bin_delta_t(ts, Bins.BINS48)
        b7 = bin_delta_t(ts, Bins.BINS7)
        assert b48.tolist() == [bin48_oracle(t) for t in ts.tolist()]
        assert b7.tolist() == [bin7_oracle(t) for t in ts.tolist()]
        assert len(set(b48.tolist())) == 48 and len(set(b7.tolist())) == 7
        assert np.all(np.diff(b48) >= 0) and np.all(np.diff(b7) >= 0)

    @pytest.mark.parametrize("t", [0, -3])
    def test_domain(self, t):
        with pytest.raises(FeatureError):
            bin_delta_t(t)


class TestEncodings:
    def test_examples(self):
        assert encode_one_hot(0, 24).tolist() == [1] + [0] * 23
        assert encode_one_hot(23, 24).tolist()[-1] == 1
        assert encode_unary(2, 5).tolist() == [1, 1, 1, 0, 0]
        assert encode_unary(0, 4).tolist() == [1, 0, 0, 0]

    @pytest.mark.parametrize("k", [7, 24, 48])
    def test_popcount_laws(self, k):
        idx = np.arange(k)
        assert encode_one_hot(idx, k).sum(axis=1).tolist() == [1] * k
        assert encode_unary(idx, k).sum(axis=1).tolist() == (idx + 1).tolist()
        # unary codes are nested: each one covers all smaller ones
        u = encode_unary(idx, k)
        assert np.all(u[1:] >= u[:-1])

    @pytest.mark.parametrize("fn", [encode_one_hot, encode_unary])
    def test_out_of_range(self, fn):
        with pytest.raises(FeatureError):
            fn(5, 5)


class TestRepresentations:
    def test_changepoint_examples(self):
        x = [[0, 1], [0, 1], [1, 1]]
        assert changepoint_matrix(x).tolist() == [[0, 1], [0, 0], [1, 0]]
        assert changepoint_matrix([[1, 0, 1]]).tolist() == [[1, 0, 1]]
        assert not changepoint_matrix(np.zeros((4, 3))).any()

    def test_last_fired_examples(self):
        x = [[0, 1], [0, 1], [1, 1]]
        assert last_fired_matrix(x).tolist() == [[0, 1], [0, 1], [1, 0]]
        assert last_fired_matrix(np.zeros((3, 2))).tolist() == [[1, 0]] * 3

    def test_last_fired_simultaneous_lowest_index(self):
        assert last_fired_matrix([[0, 1, 1]]).tolist() == [[0, 1, 0]]

    def test_sequence_wrappers_keep_labels(self):
        seq = make_seq([[0, 1], [1, 1]], [2, 3])
        assert to_changepoint(seq).y.tolist() == [2, 3]
        assert to_last_fired(seq).x.tolist() == [[0, 1], [1, 0]]

    @settings(max_examples=80, deadline=None)
    @given(hnp.arrays(np.uint8, st.tuples(st.integers(1, 30), st.integers(1, 5)),
                      elements=st.integers(0, 1)))
    def test_match_definitional_oracles(self, x):
        assert np.array_equal(changepoint_matrix(x), changepoint_oracle(x))
        lf = last_fired_matrix(x)
        assert np.array_equal(lf, last_fired_oracle(x))
        assert lf.sum(axis=1).tolist() == [1] * x.shape[0]

    @settings(max_examples=30, deadline=None)
    @given(hnp.arrays(np.uint8, st.integers(1, 6), elements=st.integers(0, 1)),
           st.integers(1, 20))
    def test_constant_changepoint_zero_after_row0(self, row, T):
        cp = changepoint_matrix(np.tile(row, (T, 1)))
        assert not cp[1:].any()
        assert cp[0].tolist() == row.tolist()


class TestCompactOb:
    def test_examples(self):
        A, B = [1, 0], [0, 1]
        segs = compact_ob(make_seq([A, A, A, B, B], [1, 1, 1, 2, 2]))
        assert [(s.sensors.tolist(), s.delta_t, s.label) for s in segs] == [(A, 3, 1), (B, 2, 2)]
        segs = compact_ob(make_seq([A, A, A], [1, 1, 2]))
        assert [(s.delta_t, s.label, s.span) for s in segs] == [(2, 1, (0, 1)), (1, 2, (2, 2))]
        (seg,) = compact_ob(make_seq([A]))
        assert seg.delta_t == 1

    def test_sensor_only_split_takes_majority_label(self):
        segs = compact_ob(make_seq([[1], [1], [1], [0]], [2, 1, 1, 0]), split_on_label=False)
        assert [(s.delta_t, s.label) for s in segs] == [(3, 1), (1, 0)]

    def test_start_hour(self):
        segs = compact_ob(make_seq([[0]] * 3 + [[1]], start_ts=23 * 60 + 57))
        assert [s.start_hour for s in segs] == [23, 0]

    def test_expand_examples(self):
        segs = compact_ob(make_seq([[1], [1], [1], [0], [0]]))
        assert expand_predictions(segs, [5, 7]).tolist() == [5, 5, 5, 7, 7]
        (one,) = compact_ob(make_seq([[1]] * 4))
        assert expand_predictions([one], [3]).tolist() == [3] * 4
        with pytest.raises(FeatureError):
            expand_predictions(segs, [1])


@st.composite
def labelled_sequences(draw, max_T=40):
    T = draw(st.integers(1, max_T))
    N = draw(st.integers(1, 3))
    x = draw(hnp.arrays(np.uint8, (T, N), elements=st.integers(0, 1)))
    y = draw(hnp.arrays(np.int64, T, elements=st.integers(0, 3)))
    return make_seq(x, y, start_ts=draw(st.integers(0, 3000)))


@settings(max_examples=200, deadline=None)
@given(labelled_sequences())
def test_ob_laws(seq):
    segs = compact_ob(seq)
    # expand o compact is the identity on labels
    assert expand_predictions(segs, [s.label for s in segs]).tolist() == seq.y.tolist()
    # spans partition the rows in order; delta_t matches the span
    assert segs[0].span[0] == 0 and segs[-1].span[1] == seq.T - 1
    for a, b in zip(segs, segs[1:]):
        assert b.span[0] == a.span[1] + 1
        # maximal: neighbours differ in sensors or label
        assert not np.array_equal(a.sensors, b.sensors) or a.label != b.label
    for s in segs:
        assert s.delta_t == s.span[1] - s.span[0] + 1 >= 1


class TestFeatureConfig:
    def test_ob_only_encodings(self):
        with pytest.raises(FeatureError):
            FeatureConfig(Representation.RAW, deltat_encoding=DeltaTEncoding.UNARY48)
        with pytest.raises(FeatureError):
            FeatureConfig(Representation.CHANGEPOINT, tod_encoding=TodEncoding.ONE_HOT)

    @pytest.mark.parametrize("k", [0, -1, 1.5])
    def test_concat_k(self, k):
        with pytest.raises(FeatureError):
            FeatureConfig(concat_k=k)

    def test_json_round_trip_uses_flag_spellings(self):
        cfg = FeatureConfig("ob", 5, "unary", "unary7", "segment")
        assert cfg.to_dict() == {"representation": "ob", "concat_k": 5, "tod_encoding": "unary",
                                 "deltat_encoding": "unary7", "eval_granularity": "segment"}
        assert FeatureConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_key(self):
        with pytest.raises(FeatureError):
            FeatureConfig.from_dict({"repr": "ob"})


class TestFeaturize:
    def test_raw_identity(self):
        seq = make_seq(np.random.default_rng(1).integers(0, 2, (20, 3)))
        fs = featurize(seq, FeatureConfig())
        assert np.array_equal(fs.f, seq.x) and fs.T == seq.T
        assert fs.minute_spans[:, 0].tolist() == list(range(20))

    def test_ob_onehot7_row(self):
        seq = make_seq([[1, 0]] * 100 + [[0, 1]])
        fs = featurize(seq, FeatureConfig("ob", deltat_encoding="onehot7"))
        assert fs.f[0].tolist() == [1, 0, 0, 0, 0, 1, 0, 0, 0]
        assert fs.T == 2

    def test_ob_concat2_padding(self):
        seq = make_seq([[1, 0], [0, 1], [1, 1]])
        cfg = FeatureConfig("ob", 2, "onehot", "onehot7")
        fs = featurize(seq, cfg)
        block = 2 + 24 + 7
        assert fs.f.shape == (3, 2 * block)
        assert np.array_equal(fs.f[0, :block], fs.f[0, block:])
        # later rows: previous block first, current block last
        assert np.array_equal(fs.f[2, :block], fs.f[1, block:])

    def test_concat_order_chronological(self):
        seq = make_seq([[0], [1], [0], [0]])
        fs = featurize(seq, FeatureConfig(concat_k=3))
        assert fs.f.tolist() == [[0, 0, 0], [0, 0, 1], [0, 1, 0], [1, 0, 0]]

    def test_tod_attached_per_block(self):
        seq = make_seq([[0]] * 60 + [[1]] * 60, start_ts=5 * 60)
        fs = featurize(seq, FeatureConfig("ob", 2, "onehot"))
        hours = [int(np.argmax(fs.f[1, 1:25])), int(np.argmax(fs.f[1, 26:50]))]
        assert hours == [5, 6]


@settings(max_examples=60, deadline=None)
@given(labelled_sequences(max_T=25),
       st.sampled_from(list(Representation)),
       st.sampled_from([1, 2, 5]),
       st.sampled_from(list(TodEncoding)),
       st.sampled_from(list(DeltaTEncoding)),
       st.booleans())
def test_featurize_width_law(seq, rep, k, tod, dt, split):
    if rep is not Representation.OB:
        tod, dt = TodEncoding.NONE, DeltaTEncoding.NONE
    cfg = FeatureConfig(rep, k, tod, dt, Granularity.MINUTE)
    fs = featurize(seq, cfg, split_on_label=split)
    tod_w = 0 if tod is TodEncoding.NONE else 24
    assert fs.width == cfg.width(seq.n_sensors) == k * (seq.n_sensors + tod_w + dt.width)
    assert fs.f.shape[0] == fs.labels.shape[0] == fs.minute_spans.shape[0]
    assert set(np.unique(fs.f).tolist()) <= {0, 1}
    lengths = fs.minute_spans[:, 1] - fs.minute_spans[:, 0] + 1
    assert lengths.sum() == seq.T
    assert expand_spans(fs.minute_spans, np.arange(fs.T)).shape == (seq.T,)
