import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from hardmembrane import (
    TimeGrid,
    Path,
    RngStream,
    sample_wiener,
    skorokhod_map,
    ladder_transform,
    occupation_local_time,
)

# Dyadic-lattice random walks: every value is k * 2^-14 with |k| bounded, so
# running minima, sums and the iterative projection recursion all stay in
# exact floating-point arithmetic and the two routes can be compared at 0 ulp.
LATTICE = 2.0 ** -14


def lattice_path(rng: np.random.Generator, n: int, start_nonneg: bool) -> Path:
    k = rng.integers(-(2 ** 16), 2 ** 16, size=n + 1)
    if start_nonneg:
        k[0] = abs(k[0])
    vals = np.cumsum(k).astype(float) * LATTICE
    if start_nonneg and vals[0] < 0:
        vals -= vals[0]
    return Path(TimeGrid(1.0, n), vals)


def projection_oracle(f: np.ndarray):
    """Iterative projection: g[i+1] = max(g[i] + f[i+1] - f[i], 0)."""
    g = np.empty_like(f)
    g[0] = max(f[0], 0.0)
    for i in range(len(f) - 1):
        g[i + 1] = max(g[i] + f[i + 1] - f[i], 0.0)
    return g, g - f


def test_worked_example():
    f = Path(TimeGrid(1.0, 4), [1.0, -1.0, 0.0, -2.0, 1.0])
    sol = skorokhod_map(f)
    assert np.array_equal(sol.l.values, [0.0, 1.0, 1.0, 2.0, 2.0])
    assert np.array_equal(sol.g.values, [1.0, 0.0, 1.0, 0.0, 3.0])


def test_monotone_negative_drift_gives_linear_regulator():
    g = TimeGrid(1.0, 100)
    f = Path(g, -g.times())
    sol = skorokhod_map(f)
    assert np.allclose(sol.l.values, g.times())
    assert np.all(sol.g.values == 0.0)


def test_nonnegative_input_passes_through():
    g = TimeGrid(1.0, 10)
    f = Path(g, np.abs(np.sin(np.arange(11.0))) + 0.1)
    sol = skorokhod_map(f)
    assert np.all(sol.l.values == 0.0)
    assert np.array_equal(sol.g.values, f.values)


def test_negative_start_untouched_until_boundary():
    g = TimeGrid(1.0, 5)
    f = Path(g, [-1.0, -0.5, 0.25, -0.5, 0.5, -1.0])
    sol = skorokhod_map(f)
    # before the first nonnegative index the path is returned as-is
    assert np.array_equal(sol.g.values[:2], f.values[:2])
    assert np.all(sol.l.values[:2] == 0.0)
    # from the hitting index onward the standard map applies
    g_ref, l_ref = projection_oracle(f.values[2:])
    assert np.array_equal(sol.g.values[2:], g_ref)
    assert np.all(sol.g.values[2:] >= 0.0)


def test_negative_start_never_reaching_zero():
    g = TimeGrid(1.0, 3)
    f = Path(g, [-1.0, -2.0, -1.5, -3.0])
    sol = skorokhod_map(f)
    assert np.array_equal(sol.g.values, f.values)
    assert np.all(sol.l.values == 0.0)


def test_invalid_side():
    f = Path(TimeGrid(1.0, 1), [0.0, 1.0])
    with pytest.raises(ValueError):
        skorokhod_map(f, "up")


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 400))
def test_oracle_equivalence_exact(seed, n):
    rng = np.random.default_rng(seed)
    f = lattice_path(rng, n, start_nonneg=True)
    sol = skorokhod_map(f)
    g_ref, l_ref = projection_oracle(f.values)
    assert np.array_equal(sol.g.values, g_ref)
    assert np.array_equal(sol.l.values, l_ref)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 200))
def test_mirror_symmetry(seed, n):
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(n + 1).cumsum()
    grid = TimeGrid(1.0, n)
    neg = skorokhod_map(Path(grid, vals), "negative")
    pos = skorokhod_map(Path(grid, -vals), "positive")
    assert np.array_equal(neg.g.values, -pos.g.values)
    assert np.array_equal(neg.l.values, pos.l.values)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31 - 1), st.integers(2, 150))
def test_regulator_minimality(seed, n):
    # any non-decreasing l' keeping f + l' >= 0 dominates the returned l
    rng = np.random.default_rng(seed)
    f = lattice_path(rng, n, start_nonneg=True)
    sol = skorokhod_map(f)
    bumps = rng.exponential(0.5, size=n + 1)
    candidate = np.maximum.accumulate(np.maximum(-f.values + bumps, 0.0))
    assert np.all(f.values + candidate >= 0.0)
    assert np.all(sol.l.values <= candidate + 1e-12)


def test_grid_complementarity():
    # l may only increase across a step whose g touches 0 at one end
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(1001).cumsum() * 0.05
    vals -= vals[0]
    sol = skorokhod_map(Path(TimeGrid(1.0, 1000), vals))
    dl = np.diff(sol.l.values)
    touching = np.minimum(sol.g.values[:-1], sol.g.values[1:]) <= 0.0
    assert np.all((dl == 0.0) | touching)


# ---------------------------------------------------------------------------
# Ladder transform


def test_ladder_constant_path():
    g = TimeGrid(1.0, 4)
    lad = ladder_transform(Path(g, np.full(5, 3.0)), 1.0)
    assert np.all(lad.n_tilde == 0)
    assert np.array_equal(lad.x_tilde.values, np.full(5, 3.0))


def test_ladder_descending_path():
    g = TimeGrid(1.0, 8)
    w = Path(g, np.linspace(3.0, -1.0, 9))
    lad = ladder_transform(w, 0.5)
    assert lad.n_tilde[-1] == 4
    assert lad.x_tilde.values[-1] == 1.0
    assert np.all(np.diff(lad.n_tilde) >= 0)


def test_ladder_requires_start_above_epsilon():
    g = TimeGrid(1.0, 2)
    with pytest.raises(ValueError):
        ladder_transform(Path(g, [0.5, 1.0, 2.0]), 1.0)
    with pytest.raises(ValueError):
        ladder_transform(Path(g, [1.0, 1.0, 1.0]), -0.1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_ladder_tracks_regulator_within_two_epsilon(seed):
    # sup_t |eps * n(t) - l(t)| <= 2 eps against the reflection regulator
    rng = np.random.default_rng(seed)
    vals = 1.0 + np.concatenate(([0.0], rng.standard_normal(500).cumsum() * 0.1))
    w = Path(TimeGrid(1.0, 500), vals)
    l = skorokhod_map(w).l.values
    for eps in (0.5, 0.25, 0.125):
        lad = ladder_transform(w, eps)
        gap = np.abs(eps * lad.n_tilde - l)
        assert gap.max() <= 2.0 * eps + 1e-12


def test_ladder_uniform_convergence_on_fixed_path():
    # eps * n converges to the regulator uniformly along eps = 2^-k
    w = sample_wiener(TimeGrid(1.0, 20_000), 1.0, RngStream(3, 0))
    l = skorokhod_map(w).l.values
    sup_prev = np.inf
    for k in range(2, 7):
        eps = 2.0 ** -k
        lad = ladder_transform(w, eps)
        sup = np.abs(eps * lad.n_tilde - l).max()
        assert sup <= 2.0 * eps
        assert sup <= sup_prev + 1e-12
        sup_prev = sup


# ---------------------------------------------------------------------------
# Occupation local time


def test_occupation_zero_when_path_away():
    g = TimeGrid(1.0, 100)
    p = Path(g, np.full(101, 5.0))
    occ = occupation_local_time(p, 0.5)
    assert np.all(occ.values == 0.0)


def test_occupation_full_when_path_at_zero():
    g = TimeGrid(1.0, 1000)
    p = Path(g, np.zeros(1001))
    occ = occupation_local_time(p, 0.25)
    assert occ.values[0] == 0.0
    assert occ.values[-1] == pytest.approx(1.0 / (2 * 0.25), rel=1e-12)
    assert np.all(np.diff(occ.values) >= 0.0)
    with pytest.raises(ValueError):
        occupation_local_time(p, 0.0)


@pytest.mark.slow
def test_occupation_matches_regulator_for_reflected_bm():
    # occupation estimate at h = 0.01 vs the reflection regulator l(1),
    # averaged over 1e3 paths at dt = 1e-6: within 10% relative error
    n = 1_000_000
    dt = 1e-6
    sq = np.sqrt(dt)
    n_paths = 1000
    occ_sum = 0.0
    reg_sum = 0.0
    h = 0.01
    for i in range(n_paths):
        gen = RngStream(77, i).generator()
        w = np.cumsum(gen.standard_normal(n) * sq)
        run = np.minimum.accumulate(np.minimum(w, 0.0))
        g = w - run
        occ_sum += (np.abs(g) <= h).sum() * dt / (2 * h)
        reg_sum += -run[-1]
    assert abs(occ_sum / reg_sum - 1.0) < 0.10
