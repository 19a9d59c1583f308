import numpy as np
import pytest

import factorstream.rules  # noqa: F401  (registers node kinds)
from factorstream.distributions import Gaussian1D
from factorstream.errors import DistributionError, GraphError
from factorstream.graph import (
    ModelGraph,
    full_joint,
    mean_field,
    structured,
    validate,
)
from factorstream.rules.linear_gaussian import prepare_metadata


def lgssm_chain(n, d=1):
    """Well-formed smoothing chain: 1 prior + (n-1) transitions + n likelihoods."""
    g = ModelGraph()
    A = np.eye(d)
    V = np.eye(d)
    x = [g.random_variable("x%d" % t, dims=d) for t in range(n)]
    y = [g.data_variable("y%d" % t, dims=d) for t in range(n)]
    meta = prepare_metadata(A, V)
    x0 = g.constant(np.zeros(d), name="x0_mean")
    g.add_factor("mv_linear_gaussian", out=x[0], mean=x0,
                 context=full_joint(metadata=prepare_metadata(A, 100 * V)), name="prior")
    for t in range(1, n):
        g.add_factor("mv_linear_gaussian", out=x[t], mean=x[t - 1],
                     context=full_joint(metadata=meta), name="trans%d" % t)
    for t in range(n):
        g.add_factor("mv_linear_gaussian", out=y[t], mean=x[t],
                     context=full_joint(metadata=meta), name="lik%d" % t)
    return g, x, y


class TestVariables:
    def test_fresh_identities(self):
        g = ModelGraph()
        vs = [g.random_variable() for _ in range(3)]
        assert len({v.id for v in vs}) == 3

    def test_dangling_random_variable_flagged(self):
        g = ModelGraph()
        g.random_variable("loose")
        diags = validate(g)
        assert any(d.code == "dangling-variable" for d in diags)

    def test_data_variable_connected_twice_flagged(self):
        g = ModelGraph()
        y = g.data_variable("y")
        w = g.constant(1.0)
        m = g.constant(0.0)
        for name in ("n1", "n2"):
            g.add_factor("gaussian_mean_precision", out=y, mean=m, precision=w, name=name)
        diags = validate(g)
        assert any(d.code == "over-connected-edge" for d in diags)


class TestFactors:
    def test_missing_interface_names_fault(self):
        g = ModelGraph()
        x = g.random_variable()
        with pytest.raises(GraphError) as exc:
            g.add_factor("gaussian_mean_precision", out=x)
        assert "mean" in str(exc.value) and "precision" in str(exc.value)

    def test_unknown_interface_fault(self):
        g = ModelGraph()
        x = g.random_variable()
        w = g.constant(1.0)
        m = g.constant(0.0)
        with pytest.raises(GraphError):
            g.add_factor("gaussian_mean_precision", out=x, mean=m, precision=w, scale=w)

    def test_unknown_kind_fault(self):
        g = ModelGraph()
        with pytest.raises(GraphError):
            g.add_factor("no_such_kind")

    def test_mean_field_context_expands_to_singletons(self):
        g = ModelGraph()
        x, m = g.random_variable(), g.random_variable()
        w = g.random_variable()
        node = g.add_factor("gaussian_mean_precision", out=x, mean=m, precision=w,
                            context=mean_field())
        assert node.context.factorization == (("out",), ("mean",), ("precision",))

    def test_structured_clustering_recorded(self):
        g = ModelGraph()
        x, m, w = g.random_variable(), g.random_variable(), g.random_variable()
        node = g.add_factor(
            "gaussian_mean_precision", out=x, mean=m, precision=w,
            context=structured(("out", "mean"), ("precision",)),
        )
        assert node.context.resolved_clusters(node.interfaces) == (("out", "mean"), ("precision",))
        assert node.cluster_of("mean") == ("out", "mean")

    def test_bad_partition_fault(self):
        g = ModelGraph()
        x, m, w = g.random_variable(), g.random_variable(), g.random_variable()
        with pytest.raises(GraphError):
            g.add_factor(
                "gaussian_mean_precision", out=x, mean=m, precision=w,
                context=structured(("out",), ("precision",)),
            )
        with pytest.raises(GraphError):
            g.add_factor(
                "gaussian_mean_precision", out=x, mean=m, precision=w,
                context=structured(("out", "mean"), ("mean", "precision")),
            )

    def test_default_factorization_is_full_joint(self):
        g = ModelGraph()
        x, m, w = g.random_variable(), g.random_variable(), g.random_variable()
        node = g.add_factor("gaussian_mean_precision", out=x, mean=m, precision=w)
        assert node.context.resolved_clusters(node.interfaces) == (("out", "mean", "precision"),)

    def test_graph_default_mean_field_override(self):
        g = ModelGraph(default_factorization="mean_field")
        x, m, w = g.random_variable(), g.random_variable(), g.random_variable()
        node = g.add_factor("gaussian_mean_precision", out=x, mean=m, precision=w)
        assert node.context.factorization == (("out",), ("mean",), ("precision",))

    def test_dimension_mismatch_fault(self):
        g = ModelGraph()
        x = g.random_variable(dims=2)
        m = g.random_variable(dims=3)
        with pytest.raises(DistributionError):
            g.add_factor(
                "mv_linear_gaussian", out=x, mean=m,
                context=full_joint(metadata=prepare_metadata(np.eye(2), np.eye(2))),
            )


class TestStructure:
    def test_lgssm_chain_is_well_formed(self):
        g, _, _ = lgssm_chain(3)
        assert validate(g) == []

    def test_lgssm_node_and_variable_counts(self):
        n = 7
        g, _, _ = lgssm_chain(n)
        assert len(g.nodes) == 2 * n  # (n-1) transitions + n likelihoods + 1 prior
        model_vars = [v for v in g.variables if v.kind != "constant"]
        assert len(model_vars) == 2 * n  # n states + n observations

    def test_interior_state_has_three_interfaces(self):
        # states act as implicit equality constraints across 3 factors
        g, x, _ = lgssm_chain(3)
        assert g.degree(x[1]) == 3
        assert g.degree(x[0]) == 3  # prior + transition + likelihood
        assert g.degree(x[2]) == 2

    def test_sealing_freezes_structure(self):
        g, _, _ = lgssm_chain(2)
        g.seal()
        with pytest.raises(GraphError):
            g.random_variable()
        with pytest.raises(GraphError):
            g.add_factor("gamma_prior")

    def test_unbound_interface_diagnostic(self):
        g, _, _ = lgssm_chain(2)
        g.nodes[0].bindings["mean"] = None  # simulate a corrupted graph
        diags = validate(g)
        assert any(d.code == "unbound-interface" for d in diags)

    def test_builder_determinism(self):
        g1, _, _ = lgssm_chain(4)
        g2, _, _ = lgssm_chain(4)
        assert [n.name for n in g1.nodes] == [n.name for n in g2.nodes]
        assert [v.name for v in g1.variables] == [v.name for v in g2.variables]
        assert [(n.kind, sorted(i for i in n.bindings)) for n in g1.nodes] == [
            (n.kind, sorted(i for i in n.bindings)) for n in g2.nodes
        ]


class TestPipelinesAndConstraints:
    def test_set_pipeline_appends(self):
        g, x, _ = lgssm_chain(2)
        stage = lambda s: s
        g.set_pipeline(g.nodes[0], [stage])
        assert g.nodes[0].context.pipeline == [stage]
        g.set_pipeline(x[0], [stage, stage])
        assert g.edge_pipelines[x[0].id] == [stage, stage]

    def test_empty_stage_list_is_identity(self):
        g, _, _ = lgssm_chain(2)
        g.set_pipeline(g.nodes[0], [])
        assert g.nodes[0].context.pipeline == []

    def test_form_constraint_registry(self):
        g, x, _ = lgssm_chain(2)
        g.set_edge_form_constraint(x[0], "moment_matching")
        assert g.edge_form_constraints[x[0].id] == "moment_matching"
        with pytest.raises(GraphError):
            g.set_edge_form_constraint(x[0], "laplace")

    def test_initial_marginal_declaration(self):
        g, x, _ = lgssm_chain(2)
        g.declare_initial_marginal(x[0], Gaussian1D.mean_variance(0, 1))
        assert x[0].id in g.initial_marginals
        y = g.variable_named("y0")
        with pytest.raises(GraphError):
            g.declare_initial_marginal(y, Gaussian1D.mean_variance(0, 1))
