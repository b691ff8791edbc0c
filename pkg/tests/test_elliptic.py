import numpy as np
import pytest

from scoreinv.elliptic import (
    Mesh,
    ObservationOperator,
    assemble,
    build_prior,
    lattice_points,
    load_field,
    make_objective,
    make_observations,
    neumann_load,
    objective_and_gradient,
    PriorSpec,
    save_field,
    solve_adjoint,
    solve_forward,
    volume_load,
)
from scoreinv.scores import ScoreKind, constant_weights
from scoreinv.stochastic import GpSpec, SpatialKernel, sample


def l2_norm(mesh, v):
    return float(np.sqrt(v @ (mesh.mass @ v)))


class TestMesh:
    def test_counts_and_tags(self):
        mesh = Mesh(4)
        assert mesh.n_nodes == 25
        assert len(mesh.triangles) == 32
        # every boundary node carries exactly one tag
        tagged = set(mesh.dirichlet_nodes) | set(mesh.neumann_nodes)
        assert len(tagged) == len(mesh.dirichlet_nodes) + len(mesh.neumann_nodes)
        boundary = [k for k in range(25)
                    if np.any(np.isin(mesh.nodes[k], [0.0, 1.0]))]
        assert tagged == set(boundary)

    def test_dirichlet_values(self):
        mesh = Mesh(3)
        ys = mesh.nodes[mesh.dirichlet_nodes, 1]
        np.testing.assert_array_equal(mesh.dirichlet_values, (ys == 1.0).astype(float))

    def test_stiffness_symmetric_exact(self):
        mesh = Mesh(5)
        rng = np.random.default_rng(0)
        a = mesh.assemble_stiffness(np.exp(rng.standard_normal(len(mesh.triangles))))
        diff = (a - a.T).toarray()
        assert np.max(np.abs(diff)) == 0.0

    def test_mass_total_is_area(self):
        mesh = Mesh(6)
        assert mesh.mass.sum() == pytest.approx(1.0, rel=1e-13)
        assert mesh.lumped_mass.sum() == pytest.approx(1.0, rel=1e-13)


class TestForward:
    def test_laplace_reproduces_linear_solution(self):
        mesh = Mesh(8)
        system = assemble(mesh, np.zeros(mesh.n_nodes))
        u = solve_forward(system, np.zeros(mesh.n_nodes))
        np.testing.assert_allclose(u, mesh.nodes[:, 1], atol=1e-12)

    def test_constant_shift_identity(self):
        mesh = Mesh(8)
        rng = np.random.default_rng(1)
        f = rng.standard_normal(mesh.n_nodes)
        c = 0.7
        u_shift = solve_forward(assemble(mesh, np.full(mesh.n_nodes, c)),
                                volume_load(mesh, f))
        u_scaled = solve_forward(assemble(mesh, np.zeros(mesh.n_nodes)),
                                 volume_load(mesh, np.exp(-c) * f))
        np.testing.assert_allclose(u_shift, u_scaled, atol=1e-10)

    def test_manufactured_convergence_order(self):
        # u* = y + sin(pi x) sin(pi y); nonzero flux through the sides
        def exact(x, y):
            return y + np.sin(np.pi * x) * np.sin(np.pi * y)

        def forcing(x, y):
            return 2 * np.pi**2 * np.sin(np.pi * x) * np.sin(np.pi * y)

        def flux(x, y):
            # exp(0) grad(u*) . n on x=0 and x=1
            return -np.pi * np.sin(np.pi * y)

        errors = []
        for n in (16, 32, 64):
            mesh = Mesh(n)
            system = assemble(mesh, np.zeros(mesh.n_nodes))
            load = volume_load(mesh, forcing(mesh.nodes[:, 0], mesh.nodes[:, 1]))
            load += neumann_load(mesh, flux)
            u = solve_forward(system, load)
            errors.append(l2_norm(mesh, u - exact(mesh.nodes[:, 0], mesh.nodes[:, 1])))
        rates = [np.log2(errors[k] / errors[k + 1]) for k in range(2)]
        assert min(rates) >= 1.9

    def test_discrete_maximum_principle(self):
        mesh = Mesh(10)
        rng = np.random.default_rng(2)
        m = rng.standard_normal(mesh.n_nodes)
        u = solve_forward(assemble(mesh, m), np.zeros(mesh.n_nodes))
        assert np.all(u >= -1e-12) and np.all(u <= 1.0 + 1e-12)

    def test_gp_forcing_smoke_64(self):
        mesh = Mesh(64)
        spec = GpSpec(mean=0.0, kernel=SpatialKernel())
        batch = sample(spec, mesh.nodes, count=1, seed=99)
        u = solve_forward(assemble(mesh, np.zeros(mesh.n_nodes)),
                          volume_load(mesh, batch.samples[0]))
        assert np.all(np.isfinite(u))

    def test_coefficient_overflow_reports_node(self):
        mesh = Mesh(4)
        m = np.zeros(mesh.n_nodes)
        m[7] = 1e4
        with pytest.raises(ValueError, match="coefficient overflow.*node 7"):
            assemble(mesh, m)

    def test_residual_of_reduced_system(self):
        mesh = Mesh(12)
        rng = np.random.default_rng(3)
        m = 0.5 * rng.standard_normal(mesh.n_nodes)
        system = assemble(mesh, m)
        load = volume_load(mesh, rng.standard_normal(mesh.n_nodes))
        u = solve_forward(system, load)
        rhs = load[mesh.free_nodes] - system.a_fd @ mesh.dirichlet_values
        res = system.a_ff @ u[mesh.free_nodes] - rhs
        assert np.linalg.norm(res) <= 1e-10 * max(np.linalg.norm(rhs), 1.0)


class TestObservation:
    def test_rows_sum_to_one_and_constant_field(self):
        mesh = Mesh(9)
        op = ObservationOperator(mesh, lattice_points(5))
        np.testing.assert_allclose(np.asarray(op.b.sum(axis=1)).ravel(), 1.0,
                                   atol=1e-12)
        np.testing.assert_allclose(op.observe(np.ones(mesh.n_nodes)), 1.0,
                                   atol=1e-12)

    def test_weights_nonnegative(self):
        mesh = Mesh(7)
        op = ObservationOperator(mesh, lattice_points(4))
        assert np.all(op.b.data >= 0)

    def test_interpolates_linear_fields_exactly(self):
        mesh = Mesh(6)
        pts = np.array([[0.21, 0.33], [0.5, 0.5], [0.87, 0.11]])
        op = ObservationOperator(mesh, pts)
        field = 2.0 * mesh.nodes[:, 0] - 0.5 * mesh.nodes[:, 1] + 0.25
        np.testing.assert_allclose(op.observe(field),
                                   2.0 * pts[:, 0] - 0.5 * pts[:, 1] + 0.25,
                                   atol=1e-12)

    def test_adjoint_transpose_identity(self):
        mesh = Mesh(8)
        op = ObservationOperator(mesh, lattice_points(5))
        rng = np.random.default_rng(4)
        w = rng.standard_normal(op.n_points)
        v = rng.standard_normal(mesh.n_nodes)
        assert op.adjoint(w) @ v == pytest.approx(w @ op.observe(v), abs=1e-12)

    def test_points_outside_rejected(self):
        with pytest.raises(ValueError, match="open unit square"):
            ObservationOperator(Mesh(4), np.array([[0.0, 0.5]]))


class TestAdjoint:
    def test_zero_rhs_gives_zero(self):
        mesh = Mesh(6)
        system = assemble(mesh, np.zeros(mesh.n_nodes))
        op = ObservationOperator(mesh, lattice_points(3))
        p = solve_adjoint(system, op, np.zeros(op.n_points))
        np.testing.assert_array_equal(p, 0.0)

    def test_greens_function_column_dense_oracle(self):
        mesh = Mesh(8)
        system = assemble(mesh, np.zeros(mesh.n_nodes))
        # observation at an interior node: B* is a unit vector there
        op = ObservationOperator(mesh, np.array([[0.5, 0.5]]))
        p = solve_adjoint(system, op, np.array([1.0]))
        node = int(np.argmax(op.b.toarray()[0]))
        rhs = np.zeros(mesh.n_nodes)
        rhs[node] = -1.0
        dense = system.a_ff.toarray()
        x = np.linalg.solve(dense, rhs[mesh.free_nodes])
        np.testing.assert_allclose(p[mesh.free_nodes], x, atol=1e-11)
        np.testing.assert_array_equal(p[mesh.dirichlet_nodes], 0.0)


class TestPrior:
    def test_paper_parameters_accepted(self):
        spec = PriorSpec(kind="informed", gamma=0.1, delta=0.5, penalty=10.0)
        assert spec.mollifier_points.shape == (5, 2)
        np.testing.assert_array_equal(spec.mollifier_points[2], [0.5, 0.5])

    def test_standard_cost_zero_at_mean(self):
        mesh = Mesh(6)
        prior = build_prior(mesh, PriorSpec(kind="standard"))
        np.testing.assert_array_equal(prior.m_prior, 0.0)
        assert prior.cost(prior.m_prior) == 0.0
        np.testing.assert_array_equal(prior.grad(prior.m_prior), 0.0)

    def test_gradient_matches_finite_differences(self):
        mesh = Mesh(5)
        prior = build_prior(mesh, PriorSpec(kind="standard"))
        rng = np.random.default_rng(5)
        m = rng.standard_normal(mesh.n_nodes)
        g = prior.grad(m)
        for _ in range(5):
            v = rng.standard_normal(mesh.n_nodes)
            h = 1e-6
            fd = (prior.cost(m + h * v) - prior.cost(m - h * v)) / (2 * h)
            assert fd == pytest.approx(g @ v, rel=1e-6, abs=1e-10)

    def test_informed_mean_solves_regularized_fit(self):
        mesh = Mesh(8)
        spec = PriorSpec(kind="informed")
        rng = np.random.default_rng(6)
        m_true = rng.standard_normal(mesh.n_nodes)
        prior = build_prior(mesh, spec, m_true=m_true)
        # optimality: (Ahat + p Wm) m_prior - p Wm m_true = 0
        residual = prior.operator @ prior.m_prior
        base = build_prior(mesh, PriorSpec(kind="standard", gamma=spec.gamma,
                                           delta=spec.delta))
        fit_term = (prior.operator - base.operator) @ (prior.m_prior - m_true)
        np.testing.assert_allclose(base.operator @ prior.m_prior + fit_term, 0.0,
                                   atol=1e-10)
        assert np.linalg.norm(residual) > 0  # informed mean is not trivial

    def test_informed_requires_truth(self):
        with pytest.raises(ValueError, match="truth"):
            build_prior(Mesh(4), PriorSpec(kind="informed"))

    def test_negative_penalty_rejected(self):
        with pytest.raises(ValueError, match="penalty"):
            PriorSpec(kind="informed", penalty=-1.0)

    def test_sample_deterministic_and_informative(self):
        mesh = Mesh(8)
        prior = build_prior(mesh, PriorSpec(kind="standard"))
        a = prior.sample(seed=3)
        b = prior.sample(seed=3)
        np.testing.assert_array_equal(a, b)
        assert np.std(a) > 0.1  # nondegenerate field


class TestObjective:
    @staticmethod
    def setup_problem(n=8, ns=4, seed=0):
        mesh = Mesh(n)
        spec = GpSpec(mean=0.0, kernel=SpatialKernel())
        scen = sample(spec, mesh.nodes, count=ns, seed=seed).samples
        op = ObservationOperator(mesh, lattice_points(3))
        prior = build_prior(mesh, PriorSpec(kind="standard"))
        m_true = prior.sample(seed=11)
        d_obs = make_observations(mesh, op, m_true, scen[0], 0.1, seed=13)
        loads = np.vstack([volume_load(mesh, f) for f in scen])
        return mesh, scen, loads, op, prior, d_obs, m_true

    def test_gradient_matches_directional_fd(self):
        mesh, scen, loads, op, prior, d_obs, _ = self.setup_problem()
        rng = np.random.default_rng(7)
        m = 0.3 * rng.standard_normal(mesh.n_nodes)
        for kind in (ScoreKind("es"),
                     ScoreKind("vs", weights=constant_weights(op.n_points)),
                     ScoreKind("hs", weights=constant_weights(op.n_points))):
            value, grad, _ = objective_and_gradient(
                mesh, m, loads, op, d_obs, kind, prior)
            for _ in range(4):
                v = rng.standard_normal(mesh.n_nodes)
                v /= np.linalg.norm(v)
                h = 1e-5
                fp = objective_and_gradient(mesh, m + h * v, loads, op, d_obs,
                                            kind, prior)[0]
                fm = objective_and_gradient(mesh, m - h * v, loads, op, d_obs,
                                            kind, prior)[0]
                fd = (fp - fm) / (2 * h)
                assert abs(fd - grad @ v) <= 1e-4 * max(abs(fd), 1e-8)

    def test_prior_only_minimizer(self):
        # zero score weight: the minimizer is the prior mean
        mesh, scen, loads, op, prior, d_obs, _ = self.setup_problem(n=6, ns=2)
        value, grad, _ = objective_and_gradient(
            mesh, prior.m_prior, loads, op, d_obs, ScoreKind("es"), prior,
            score_weight=0.0)
        np.testing.assert_allclose(grad, 0.0, atol=1e-12)
        assert value == pytest.approx(0.0, abs=1e-12)

    def test_solve_accounting(self):
        mesh, scen, loads, op, prior, d_obs, _ = self.setup_problem(n=6, ns=3)
        _, _, info = objective_and_gradient(
            mesh, np.zeros(mesh.n_nodes), loads, op, d_obs, ScoreKind("es"), prior)
        assert info["forward_solves"] == 3
        assert info["adjoint_solves"] == 3

    def test_scenario_pinning_bitwise(self):
        mesh, scen, loads, op, prior, d_obs, _ = self.setup_problem(n=6, ns=3)
        m = 0.1 * np.ones(mesh.n_nodes)
        kind = ScoreKind("es")
        v1, g1, _ = objective_and_gradient(mesh, m, loads, op, d_obs, kind, prior)
        v2, g2, _ = objective_and_gradient(mesh, m, loads, op, d_obs, kind, prior)
        assert v1 == v2
        np.testing.assert_array_equal(g1, g2)

    def test_make_objective_closure(self):
        mesh, scen, loads, op, prior, d_obs, _ = self.setup_problem(n=6, ns=2)
        f_and_g = make_objective(mesh, scen, op, d_obs, ScoreKind("es"), prior)
        v, g = f_and_g(np.zeros(mesh.n_nodes))
        assert np.isfinite(v) and g.shape == (mesh.n_nodes,)


class TestObservations:
    def test_zero_noise_exact(self):
        mesh = Mesh(6)
        op = ObservationOperator(mesh, lattice_points(3))
        m_true = np.zeros(mesh.n_nodes)
        d0 = make_observations(mesh, op, m_true, np.zeros(mesh.n_nodes), 0.0, seed=1)
        u = solve_forward(assemble(mesh, m_true), np.zeros(mesh.n_nodes))
        np.testing.assert_array_equal(d0, op.observe(u))

    def test_noise_uncorrelated_with_signal(self):
        mesh = Mesh(6)
        op = ObservationOperator(mesh, lattice_points(5))
        rng = np.random.default_rng(8)
        m_true = 0.3 * rng.standard_normal(mesh.n_nodes)
        forcing = rng.standard_normal(mesh.n_nodes)
        signal = make_observations(mesh, op, m_true, forcing, 0.0, seed=0)
        sig_c = signal - signal.mean()
        corrs = []
        for k in range(40):
            d1 = make_observations(mesh, op, m_true, forcing, 0.1, seed=100 + 2 * k)
            d2 = make_observations(mesh, op, m_true, forcing, 0.1, seed=101 + 2 * k)
            diff = d1 - d2
            diff_c = diff - diff.mean()
            corrs.append((diff_c @ sig_c)
                         / (np.linalg.norm(diff_c) * np.linalg.norm(sig_c)))
        assert abs(np.mean(corrs)) < 0.15


def test_field_io_round_trip(tmp_path):
    mesh = Mesh(5, 7)
    rng = np.random.default_rng(9)
    values = rng.standard_normal(mesh.n_nodes)
    save_field(mesh, values, tmp_path / "field.csv")
    mesh2, loaded = load_field(tmp_path / "field.csv")
    assert (mesh2.nx, mesh2.ny) == (5, 7)
    np.testing.assert_array_equal(loaded, values)
