import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semidata.core import complex_normal, draw_channel
from semidata.detector import (
    AppVector,
    app_matrix,
    bpsk,
    compute_app,
    constellation_by_name,
    enumerate_symbol_vectors,
    expected_symbol,
    map_detect,
    qam4,
)


def test_qam4_book(book4):
    assert book4.size == 16
    np.testing.assert_allclose(np.abs(book4.constellation) ** 2, 1.0)
    np.testing.assert_allclose(np.sum(np.abs(book4.vectors) ** 2, axis=1), 2.0)
    # antenna 0 is the most significant digit
    np.testing.assert_array_equal(book4.indices[:5], [[0, 0], [0, 1], [0, 2], [0, 3], [1, 0]])


def test_qam4_gray_labels(book4):
    pts, labels = qam4()
    np.testing.assert_allclose(pts[0], (1 + 1j) / np.sqrt(2))
    assert labels == ["00", "01", "11", "10"]
    # adjacent quadrants differ by one bit
    for i in range(4):
        a, b = labels[i], labels[(i + 1) % 4]
        assert sum(c1 != c2 for c1, c2 in zip(a, b)) == 1
    assert book4.labels(1) == "0001"


def test_bpsk_book(book_bpsk1):
    np.testing.assert_array_equal(book_bpsk1.vectors[:, 0], [1, -1])


def test_enumeration_cap():
    with pytest.raises(ValueError):
        enumerate_symbol_vectors(qam4()[0], 11, k_cap=2**20)
    with pytest.raises(ValueError):
        enumerate_symbol_vectors([], 2)


def test_constellation_lookup():
    assert len(constellation_by_name("BPSK")[0]) == 2
    with pytest.raises(ValueError):
        constellation_by_name("64qam")


def test_single_candidate_app():
    book = enumerate_symbol_vectors([1.0], 1)
    app = compute_app(np.array([0.3 + 2j]), np.ones((1, 1)), 0.1, book)
    np.testing.assert_array_equal(app.probs, [1.0])


def test_symmetric_app_is_uniform(book4):
    h = np.eye(2)
    app = compute_app(np.zeros(2), h, 0.7, book4)
    np.testing.assert_allclose(app.probs, 1 / 16, rtol=1e-12)


def test_bpsk_scalar_app(book_bpsk1):
    app = compute_app(np.array([0.5]), np.ones((1, 1)), 1.0, book_bpsk1)
    # exp(-0.25) / (exp(-0.25) + exp(-2.25)) = 1 / (1 + e^-2)
    assert app.probs[0] == pytest.approx(1 / (1 + np.exp(-2)), rel=1e-14)
    assert app.probs[0] == pytest.approx(0.8808, abs=1e-4)
    assert expected_symbol(app, book_bpsk1)[0] == pytest.approx(np.tanh(1.0), rel=1e-13)


def test_app_no_underflow(book4):
    h = draw_channel(4, 2, np.random.default_rng(0))
    y = h @ book4.vectors[5] + 50.0
    probs = compute_app(y, h, 1e-6, book4).probs
    assert np.all(np.isfinite(probs)) and probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_map_rules(book4):
    assert map_detect(np.array([0.1, 0.7, 0.2]))[0] == 1
    assert map_detect(np.array([0.5, 0.5]))[0] == 0
    h = draw_channel(4, 2, np.random.default_rng(1))
    for j in (0, 7, 15):
        k, x = map_detect(compute_app(h @ book4.vectors[j], h, 1e-9, book4), book4)
        assert k == j
        np.testing.assert_array_equal(x, book4.vectors[j])


def test_expected_symbol_degenerate_and_uniform(book4):
    one_hot = np.zeros(16)
    one_hot[9] = 1
    np.testing.assert_array_equal(expected_symbol(one_hot, book4), book4.vectors[9])
    np.testing.assert_allclose(expected_symbol(np.full(16, 1 / 16), book4), 0, atol=1e-15)


def test_app_matrix_batches_match_single(book4, gen):
    h = draw_channel(4, 2, gen)
    ys = complex_normal(gen, (4, 6))
    batch = app_matrix(ys, h, 0.4, book4.vectors)
    for t in range(6):
        np.testing.assert_allclose(batch[t], compute_app(ys[:, t], h, 0.4, book4).probs, rtol=1e-13)
    hs = np.stack([h, 2 * h])
    stacked = app_matrix(ys, hs, 0.4, book4.vectors)
    np.testing.assert_allclose(stacked[1], app_matrix(ys, 2 * h, 0.4, book4.vectors), rtol=1e-13)


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 4.0))
@settings(max_examples=60, deadline=None)
def test_app_properties(seed, sigma2):
    pts, _ = qam4()
    book = enumerate_symbol_vectors(pts, 2)
    gen = np.random.default_rng(seed)
    h = draw_channel(3, 2, gen)
    y = h @ book.vectors[gen.integers(16)] + complex_normal(gen, 3, sigma2)
    probs = compute_app(y, h, sigma2, book).probs
    assert abs(probs.sum() - 1.0) <= 1e-12
    assert np.all((probs >= 0) & (probs <= 1))
    # permutation equivariance
    perm = gen.permutation(16)
    permuted = app_matrix(y, h, sigma2, book.vectors[perm])
    np.testing.assert_allclose(permuted, probs[perm], rtol=1e-10, atol=1e-300)
    # convex-combination bound on the soft symbol
    assert np.linalg.norm(expected_symbol(probs, book)) <= np.max(np.linalg.norm(book.vectors, axis=1)) + 1e-12
    # argmax is unchanged by scaling the likelihoods (shift in log domain)
    assert map_detect(probs)[0] == int(np.argmax(-np.sum(np.abs(y[:, None] - h @ book.vectors.T) ** 2, axis=0)))


def test_app_vector_dataclass(book4):
    app = compute_app(np.zeros(4), np.zeros((4, 2)), 1.0, book4, slot=3, source_estimate="true_H")
    assert isinstance(app, AppVector) and app.slot == 3 and app.source_estimate == "true_H"
