"""Factor graph construction.

A :class:`ModelGraph` holds variables (edges) and factor nodes with named
interfaces.  Each node carries a :class:`NodeContext` describing how its local
posterior factorizes (which drives the choice between sum-product and
variational update rules), per-interface form constraints, and optional extra
pipeline stages for its outbound message streams.

Random variables may connect to any number of factor interfaces: a variable
shared by more than two factors acts as an implicit equality constraint, and
its marginal is the normalized product of all incoming messages.  Data and
constant variables terminate the graph and connect exactly once.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .distributions import PointMass
from .errors import GraphError

RANDOM = "random"
DATA = "data"
CONSTANT = "constant"

MARGINALIZATION = "marginalization"
MOMENT_MATCHING = "moment_matching"
POINT_MASS = "point_mass"


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    kind: str
    dims: int  # scalar variables have dims=1; vectors carry their length
    shape: tuple = ()

    def __repr__(self):
        return "Variable(%s, %s)" % (self.name, self.kind)


class NodeContext:
    """Local inference context of one factor node.

    ``factorization`` is a tuple of clusters, each a tuple of interface names;
    the clusters must partition the node's interfaces.  ``None`` means the
    full within-node joint (the sum-product default).  ``form_constraints``
    maps interface names to a constraint tag, ``pipeline`` holds extra stream
    transformers, and ``metadata`` carries per-node-kind knobs (quadrature
    point counts, linear maps, noise covariances, ...).
    """

    __slots__ = ("factorization", "form_constraints", "pipeline", "metadata")

    def __init__(self, factorization=None, form_constraints=None, pipeline=None, metadata=None):
        self.factorization = None if factorization is None else tuple(
            tuple(c) for c in factorization
        )
        self.form_constraints = dict(form_constraints or {})
        self.pipeline = list(pipeline or [])
        self.metadata = dict(metadata or {})

    def resolved_clusters(self, interfaces):
        """Clusters with the default expanded against the node's interfaces."""
        if self.factorization is None:
            return (tuple(interfaces),)
        return self.factorization


def mean_field(**kwargs):
    """Context where every interface is its own cluster."""
    ctx = NodeContext(**kwargs)
    ctx.factorization = "mean_field"  # expanded per node at add_factor time
    return ctx


def full_joint(**kwargs):
    return NodeContext(factorization=None, **kwargs)


def structured(*clusters, **kwargs):
    return NodeContext(factorization=clusters, **kwargs)


class FactorNode:
    __slots__ = ("id", "name", "kind", "interfaces", "bindings", "context")

    def __init__(self, node_id, name, kind, interfaces, bindings, context):
        self.id = node_id
        self.name = name
        self.kind = kind
        self.interfaces = tuple(interfaces)
        self.bindings = dict(bindings)  # interface name -> Variable
        self.context = context

    def variable(self, interface):
        return self.bindings[interface]

    def cluster_of(self, interface):
        for cluster in self.context.resolved_clusters(self.interfaces):
            if interface in cluster:
                return cluster
        raise GraphError(
            "interface %r of node %s is not covered by its factorization" % (interface, self.name)
        )

    def __repr__(self):
        return "FactorNode(%s:%s)" % (self.name, self.kind)


@dataclass
class NodeKindSpec:
    """Static signature of a factor-node kind: its interface names and an
    optional structural check run at add_factor time."""

    interfaces: tuple
    check: callable = None


_NODE_KINDS = {}


def register_node_kind(kind, interfaces, check=None):
    if kind in _NODE_KINDS:
        raise GraphError("node kind %r already registered" % kind)
    _NODE_KINDS[kind] = NodeKindSpec(tuple(interfaces), check)


def node_kind(kind):
    spec = _NODE_KINDS.get(kind)
    if spec is None:
        raise GraphError(
            "unknown node kind %r (registered: %s)" % (kind, sorted(_NODE_KINDS))
        )
    return spec


@dataclass
class Diagnostic:
    code: str
    message: str
    subject: str

    def __str__(self):
        return "[%s] %s (%s)" % (self.code, self.message, self.subject)


class ModelGraph:
    """Mutable factor-graph builder; sealed (frozen) before inference."""

    def __init__(self, default_factorization=None):
        self._var_ids = itertools.count()
        self._node_ids = itertools.count()
        self.variables = []
        self.nodes = []
        self.constants = {}  # variable id -> PointMass value
        self.initial_marginals = {}  # variable id -> Distribution (declared init)
        self.edge_form_constraints = {}  # variable id -> constraint tag
        self.edge_pipelines = {}  # variable id -> list of stream transformers
        self.default_factorization = default_factorization
        self.sealed = False
        self._uses = {}  # variable id -> list of (node, interface)

    # -- variable constructors -------------------------------------------

    def random_variable(self, name=None, dims=1, shape=()):
        return self._new_variable(name, RANDOM, dims, shape)

    def data_variable(self, name=None, dims=1, shape=()):
        return self._new_variable(name, DATA, dims, shape)

    def constant(self, value, name=None):
        value_pm = value if isinstance(value, PointMass) else PointMass(value)
        arr = np.asarray(value_pm.point)
        dims = int(arr.size)
        var = self._new_variable(name, CONSTANT, dims, arr.shape)
        self.constants[var.id] = value_pm
        return var

    def _new_variable(self, name, kind, dims, shape):
        self._check_unsealed()
        vid = next(self._var_ids)
        var = Variable(vid, name or "%s_%d" % (kind, vid), kind, dims, tuple(shape))
        self.variables.append(var)
        self._uses[vid] = []
        return var

    # -- factors -----------------------------------------------------------

    def add_factor(self, kind, context=None, name=None, **bindings):
        self._check_unsealed()
        spec = node_kind(kind)
        missing = [i for i in spec.interfaces if i not in bindings]
        if missing:
            raise GraphError(
                "node kind %r is missing interface binding(s): %s" % (kind, ", ".join(missing))
            )
        unknown = [i for i in bindings if i not in spec.interfaces]
        if unknown:
            raise GraphError(
                "node kind %r has no interface(s): %s" % (kind, ", ".join(unknown))
            )
        context = self._resolve_context(context, spec.interfaces)
        self._check_partition(kind, spec.interfaces, context)
        if spec.check is not None:
            spec.check(bindings, context.metadata)
        nid = next(self._node_ids)
        node = FactorNode(nid, name or "%s_%d" % (kind, nid), kind, spec.interfaces, bindings, context)
        self.nodes.append(node)
        for iface, var in bindings.items():
            if var.id not in self._uses:
                raise GraphError("variable %s belongs to a different graph" % var.name)
            self._uses[var.id].append((node, iface))
        return node

    def _resolve_context(self, context, interfaces):
        if context is None:
            context = self.default_factorization
        if context is None:
            return NodeContext(factorization=None)
        if isinstance(context, NodeContext):
            if context.factorization == "mean_field":
                resolved = NodeContext(
                    factorization=tuple((i,) for i in interfaces),
                    form_constraints=context.form_constraints,
                    pipeline=context.pipeline,
                    metadata=context.metadata,
                )
                return resolved
            return context
        if context == "mean_field":
            return NodeContext(factorization=tuple((i,) for i in interfaces))
        raise GraphError("cannot interpret node context %r" % (context,))

    @staticmethod
    def _check_partition(kind, interfaces, context):
        clusters = context.resolved_clusters(interfaces)
        flat = [i for c in clusters for i in c]
        if sorted(flat) != sorted(interfaces):
            raise GraphError(
                "factorization %r of %r does not partition interfaces %r"
                % (clusters, kind, interfaces)
            )

    # -- constraints and pipelines ----------------------------------------

    def set_edge_form_constraint(self, var, constraint):
        self._check_unsealed()
        if constraint not in (MOMENT_MATCHING, POINT_MASS):
            raise GraphError("unsupported form constraint %r" % constraint)
        self.edge_form_constraints[var.id] = constraint

    def set_pipeline(self, target, stages):
        """Append stream transformers to a node's outbound messages or to an
        edge's marginal stream."""
        self._check_unsealed()
        stages = list(stages)
        if isinstance(target, FactorNode):
            target.context.pipeline.extend(stages)
        elif isinstance(target, Variable):
            self.edge_pipelines.setdefault(target.id, []).extend(stages)
        else:
            raise GraphError("pipeline target must be a node or a variable")

    def declare_initial_marginal(self, var, dist):
        """Record the initial marginal pushed into the engine before the
        first data sweep (needed by rules that gate on posteriors)."""
        self._check_unsealed()
        if var.kind != RANDOM:
            raise GraphError("initial marginals only apply to random variables")
        self.initial_marginals[var.id] = dist

    # -- structure queries --------------------------------------------------

    def uses(self, var):
        return list(self._uses[var.id])

    def degree(self, var):
        return len(self._uses[var.id])

    def variable_named(self, name):
        for v in self.variables:
            if v.name == name:
                return v
        raise GraphError("no variable named %r" % name)

    def seal(self):
        self.sealed = True
        return self

    def _check_unsealed(self):
        if self.sealed:
            raise GraphError("graph is sealed; structure can no longer change")

    # -- validation ----------------------------------------------------------

    def validate(self):
        """Structural diagnostics; an empty list means the graph is sound."""
        out = []
        for var in self.variables:
            deg = self.degree(var)
            if var.kind == RANDOM and deg == 0:
                out.append(Diagnostic("dangling-variable", "random variable is not connected", var.name))
            if var.kind in (DATA, CONSTANT) and deg > 1:
                out.append(
                    Diagnostic(
                        "over-connected-edge",
                        "%s variable must terminate exactly one interface, found %d" % (var.kind, deg),
                        var.name,
                    )
                )
            if var.kind == DATA and deg == 0:
                out.append(Diagnostic("unused-data", "data variable is never consumed", var.name))
        for node in self.nodes:
            for iface in node.interfaces:
                if node.bindings.get(iface) is None:
                    out.append(
                        Diagnostic("unbound-interface", "interface %r is unbound" % iface, node.name)
                    )
            try:
                self._check_partition(node.kind, node.interfaces, node.context)
            except GraphError as exc:
                out.append(Diagnostic("bad-factorization", str(exc), node.name))
        return out


def validate(graph):
    return graph.validate()
