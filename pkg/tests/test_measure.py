import numpy as np
import pytest

from cfikit import Grid, GridFunction, SignedMeasure, leq_cx, leq_cx_pointmass, leq_dcx, leq_icx
from cfikit.measure import hahn_decompose
from cfikit.testing import random_measure


def fine_stop_loss(mu, t, k=400):
    """Stop-loss by midpoint quadrature on each cell (oracle for the closed form)."""
    x = mu.grid.nodes
    total = np.dot(mu.atoms, np.maximum(x - t, 0.0))
    for j in range(mu.grid.n_cells):
        s = np.linspace(x[j], x[j + 1], k + 1)
        m = 0.5 * (s[1:] + s[:-1])
        total += mu.density[j] * np.maximum(m - t, 0.0).sum() * (s[1] - s[0])
    return total


def test_stop_loss_against_quadrature(rng):
    g = Grid(0.0, 1.0, 15)
    mu = random_measure(g, rng)
    for t in (-0.1, 0.0, 0.23, 0.5, 0.81, 1.0):
        assert mu.stop_loss(t) == pytest.approx(fine_stop_loss(mu, t), abs=1e-6)
    nodes = mu.stop_loss_nodes()
    assert np.allclose(nodes, [mu.stop_loss(t) for t in g.nodes], atol=1e-12)
    mids = mu.stop_loss_midpoints()
    assert np.allclose(mids, [mu.stop_loss(t) for t in g.midpoints], atol=1e-12)


def test_node_weights_integrate_piecewise_linear(rng):
    g = Grid(0.0, 2.0, 10)
    mu = random_measure(g, rng)
    f = GridFunction(g, 3.0 * g.nodes - 1.0)
    # exact integral of an affine function: atoms plus density times cell-average
    x = g.nodes
    exact = np.dot(mu.atoms, f.values) + np.sum(mu.density * g.h * (3.0 * g.midpoints - 1.0))
    assert mu.integrate(f) == pytest.approx(exact, abs=1e-12)
    assert mu.total_mass() == pytest.approx(mu.atoms.sum() + mu.density.sum() * g.h)
    del x


def test_convex_order_basics():
    g = Grid(0.0, 1.0, 10)
    centre = SignedMeasure.dirac(g, 5)
    ends = SignedMeasure.from_atoms(g, [(0, 0.5), (10, 0.5)])
    assert leq_cx(centre, ends)
    assert not leq_cx(ends, centre)
    low, high = SignedMeasure.dirac(g, 3), SignedMeasure.dirac(g, 6)
    assert leq_icx(low, high) and not leq_icx(high, low)
    assert leq_dcx(high, low) and not leq_dcx(low, high)
    # a point mass is the least element of its convex-order class
    assert leq_cx_pointmass(centre, 5, 1.0)
    assert not leq_cx_pointmass(ends, 5, 1.0)
    assert not leq_cx_pointmass(centre, 5, -1.0)


def test_uniform_density_dominates_its_mean():
    g = Grid(0.0, 1.0, 20)
    lam = SignedMeasure.lebesgue(g)
    assert leq_cx(SignedMeasure.dirac(g, 10), lam)


def test_hahn_decomposition(rng):
    g = Grid(0.0, 1.0, 10)
    mu = random_measure(g, rng)
    pos, neg = hahn_decompose(mu)
    assert np.all(pos.atoms >= 0) and np.all(neg.density >= 0)
    assert np.allclose((pos - neg).atoms, mu.atoms) and np.allclose((pos - neg).density, mu.density)


def test_csv_round_trip(tmp_path, rng):
    g = Grid(0.0, 1.0, 8)
    mu = random_measure(g, rng)
    mu.to_csv(tmp_path / "m")
    back = SignedMeasure.read_csv(tmp_path / "m")
    assert np.allclose(back.atoms, mu.atoms) and np.allclose(back.density, mu.density)
