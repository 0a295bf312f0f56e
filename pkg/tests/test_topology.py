from __future__ import annotations

import numpy as np
import pytest

from rgta.topology import (
    CommunicationSet,
    MixingMatrix,
    beta_of,
    build_topology,
    communication_set,
    consensus_apply,
    mixing_matrix,
)


def test_complete_3_edges():
    topo = build_topology("complete", 3)
    assert topo.edges == frozenset({(0, 1), (0, 2), (1, 2)})


def test_star_4_edges():
    topo = build_topology("star", 4)
    assert topo.edges == frozenset({(0, 1), (0, 2), (0, 3)})


def test_line_4_edges():
    topo = build_topology("line", 4)
    assert topo.edges == frozenset({(0, 1), (1, 2), (2, 3)})


def test_single_node_complete_is_trivial():
    topo = build_topology("complete", 1)
    assert topo.edges == frozenset()
    assert topo.is_connected()


@pytest.mark.parametrize("kind", ["star", "line"])
def test_star_line_require_two_nodes(kind):
    with pytest.raises(ValueError):
        build_topology(kind, 1)


@pytest.mark.parametrize("n", [0, -3])
def test_nonpositive_node_count_rejected(n):
    with pytest.raises(ValueError):
        build_topology("complete", n)


def test_unknown_kind_rejected():
    with pytest.raises(ValueError):
        build_topology("ring", 5)


def test_equal_complete_weights():
    topo = build_topology("complete", 16)
    mix = mixing_matrix(topo, "equal_complete")
    assert np.allclose(mix.w, 1.0 / 16, atol=0)
    assert mix.beta == pytest.approx(0.0, abs=1e-14)


def test_equal_complete_rejected_off_complete():
    with pytest.raises(ValueError):
        mixing_matrix(build_topology("star", 5), "equal_complete")


def test_metropolis_line_3_explicit():
    mix = mixing_matrix(build_topology("line", 3), "metropolis")
    expected = np.array(
        [
            [2 / 3, 1 / 3, 0.0],
            [1 / 3, 1 / 3, 1 / 3],
            [0.0, 1 / 3, 2 / 3],
        ]
    )
    assert np.allclose(mix.w, expected, atol=1e-15)
    # Oracle: full eigendecomposition of the explicit 3x3 matrix.
    eigs = np.linalg.eigvalsh(expected - np.full((3, 3), 1 / 3))
    assert mix.beta == pytest.approx(np.max(np.abs(eigs)), abs=1e-12)
    assert mix.beta == pytest.approx(2 / 3, abs=1e-12)


def test_metropolis_star_16_beta():
    mix = mixing_matrix(build_topology("star", 16), "metropolis")
    # Oracle: leaf-difference eigenvectors of the star give eigenvalue 1 - 1/16.
    eigs = np.linalg.eigvalsh(mix.w - np.full((16, 16), 1 / 16))
    assert np.max(np.abs(eigs)) == pytest.approx(15 / 16, abs=1e-12)
    assert mix.beta == pytest.approx(0.9375, abs=1e-12)


def test_beta_of_projector_is_zero():
    n = 7
    assert beta_of(np.full((n, n), 1.0 / n)) == pytest.approx(0.0, abs=1e-14)


def test_beta_of_identity_is_one():
    assert beta_of(np.eye(5)) == pytest.approx(1.0, abs=1e-14)


def test_beta_of_rejects_nonsquare():
    with pytest.raises(ValueError):
        beta_of(np.ones((2, 3)))


def test_consensus_identity_noop():
    x = np.arange(12.0).reshape(4, 3)
    out = consensus_apply(MixingMatrix.identity(4), x, reps=5)
    assert np.array_equal(out, x)


def test_consensus_projector_averages():
    n = 6
    mix = mixing_matrix(build_topology("complete", n), "equal_complete")
    x = np.arange(float(n)).reshape(n, 1)
    out = consensus_apply(mix, x, reps=1)
    assert np.allclose(out, x.mean())


def test_consensus_line3_hand_product():
    mix = mixing_matrix(build_topology("line", 3), "metropolis")
    x = np.array([[1.0], [0.0], [-1.0]])
    out = consensus_apply(mix, x, reps=1)
    assert np.allclose(out, [[2 / 3], [0.0], [-2 / 3]], atol=1e-15)
    assert np.allclose(out, mix.w @ x)


def test_consensus_dimension_mismatch():
    mix = mixing_matrix(build_topology("line", 3), "metropolis")
    with pytest.raises(ValueError):
        consensus_apply(mix, np.zeros((4, 2)))


@pytest.mark.parametrize(
    "tag,uses_w",
    [
        ("RGTA-1", (True, False, True, False)),
        ("RGTA-2", (True, True, True, False)),
        ("RGTA-3", (True, True, True, True)),
    ],
)
def test_communication_set_slots(tag, uses_w):
    mix = mixing_matrix(build_topology("star", 5), "metropolis")
    cs = communication_set(tag, mix, n_c=1)
    for mat, expect_w in zip(cs.matrices, uses_w):
        if expect_w:
            assert mat is mix
        else:
            assert mat.is_identity


def test_communication_set_keeps_nc():
    mix = mixing_matrix(build_topology("line", 4), "metropolis")
    cs = communication_set("RGTA-3", mix, n_c=5)
    assert cs.n_c == 5
    assert all(m is mix for m in cs.matrices)


def test_communication_set_unknown_tag():
    mix = mixing_matrix(build_topology("line", 4), "metropolis")
    with pytest.raises(ValueError):
        communication_set("RGTA-4", mix, n_c=1)
    with pytest.raises(ValueError):
        CommunicationSet(mix, mix, mix, mix, n_c=0, method_tag="custom")


@pytest.mark.parametrize("kind", ["complete", "star", "line"])
@pytest.mark.parametrize("n", [2, 3, 16, 33])
def test_mixing_matrix_invariants(kind, n):
    mix = mixing_matrix(build_topology(kind, n), "metropolis")
    w = mix.w
    assert np.allclose(w, w.T, atol=1e-12)
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-12)
    assert np.allclose(w.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(w >= 0)
    assert np.all(np.diag(w) > 0)
    adj = build_topology(kind, n).adjacency()
    np.fill_diagonal(adj, True)
    assert not np.any((np.abs(w) > 1e-12) & ~adj)
    assert mix.beta < 1.0


@pytest.mark.parametrize("kind", ["complete", "star", "line"])
def test_beta_of_matrix_power(kind):
    mix = mixing_matrix(build_topology(kind, 9), "metropolis")
    for n_c in (2, 3, 5):
        assert beta_of(np.linalg.matrix_power(mix.w, n_c)) == pytest.approx(
            mix.beta**n_c, abs=1e-10
        )


def test_sequential_consensus_matches_repeated_single():
    rng = np.random.default_rng(11)
    mix = mixing_matrix(build_topology("line", 8), "metropolis")
    x = rng.standard_normal((8, 4))
    once = consensus_apply(mix, x, reps=4)
    step = x
    for _ in range(4):
        step = consensus_apply(mix, step, reps=1)
    assert np.allclose(once, step, atol=1e-10)


def test_consensus_preserves_column_means():
    rng = np.random.default_rng(5)
    mix = mixing_matrix(build_topology("star", 12), "metropolis")
    x = rng.standard_normal((12, 3))
    out = consensus_apply(mix, x, reps=7)
    assert np.allclose(out.mean(axis=0), x.mean(axis=0), atol=1e-10)


def test_from_matrix_validation():
    bad = np.array([[0.5, 0.5], [0.4, 0.6]])
    with pytest.raises(ValueError):
        MixingMatrix.from_matrix(bad)
    zero_diag = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(ValueError):
        MixingMatrix.from_matrix(zero_diag)
    topo = build_topology("line", 3)
    off_pattern = np.full((3, 3), 1 / 3)
    with pytest.raises(ValueError):
        MixingMatrix.from_matrix(off_pattern, topo)
