"""Reactive inference runtime.

``wire`` turns a sealed :class:`~factorstream.graph.ModelGraph` into a live
network of subjects:

* one outbound-message stream per (node, interface) pair aimed at a random
  variable, computed by the registered update rule over the node's local
  dependencies (messages of the same cluster, marginals of the other
  clusters);
* one marginal stream per random variable: the normalized product of all
  messages colliding on that edge;
* joint-marginal streams per multi-variable cluster;
* a Bethe free energy stream combining per-node average energies and
  per-edge entropies.

Dependency gating.  Node-rule, inbound-product, and joint-marginal streams
recompute only once *every* dynamic dependency has delivered a fresh value
since their last emission ("all-fresh" gating); marginal products re-emit on
each colliding-message update once all messages exist (plain combine-latest
semantics).  All-fresh gating is what lets a cyclic variational dependency
(message -> marginal -> message) settle after exactly one update per data
sweep instead of livelocking: every cycle passes through a dependency that
only refreshes when new data is injected.  Constant bindings and streams with
no data-dependent inputs are folded in as always-available values that do not
participate in freshness.
"""

from dataclasses import dataclass

import numpy as np

from .algebra import (
    as_gaussian_message,
    moment_match_gaussian,
    multiply_and_normalize,
    to_json,
)
from .distributions import (
    Beta,
    Categorical,
    Dirichlet,
    Gamma,
    Gaussian1D,
    MatrixDirichlet,
    PointMass,
)
from .errors import WiringError
from .graph import CONSTANT, DATA, MOMENT_MATCHING, POINT_MASS, RANDOM
from .rules import (
    MARGINALIZATION,
    NodeParts,
    RuleKey,
    describe_missing,
    energy_fn,
    has_any_rule,
    joint_rule,
    lookup,
)
from .streams import EventLoop, Subject, map_stream


def _reduce_product(factors):
    """Normalized product of colliding messages, folded in fixed edge order.

    High-degree edges (a parameter shared by every time step) get an additive
    fast path over natural parameters, which turns the O(k) fold into vector
    sums; results are identical up to float association.
    """
    k = len(factors)
    if k == 1:
        return factors[0]
    if k > 8:
        first = factors[0]
        if isinstance(first, MatrixDirichlet) and all(
            isinstance(f, MatrixDirichlet) for f in factors
        ):
            total = np.zeros_like(first.alpha)
            for f in factors:
                total = total + f.alpha
            return MatrixDirichlet(total - (k - 1))
        if isinstance(first, Dirichlet) and all(isinstance(f, Dirichlet) for f in factors):
            total = np.zeros_like(first.alpha)
            for f in factors:
                total = total + f.alpha
            return Dirichlet(total - (k - 1))
        if isinstance(first, Categorical) and all(isinstance(f, Categorical) for f in factors):
            total = np.zeros_like(first.log_p)
            for f in factors:
                total = total + f.log_p
            return Categorical(log_p=total)
        if isinstance(first, Beta) and all(isinstance(f, Beta) for f in factors):
            a = sum(f.a for f in factors) - (k - 1)
            b = sum(f.b for f in factors) - (k - 1)
            return Beta(a, b)
        if isinstance(first, Gamma) and all(isinstance(f, Gamma) for f in factors):
            shape = sum(f.shape for f in factors) - (k - 1)
            rate = sum(f.rate for f in factors)
            return Gamma(shape, rate)
    acc = factors[0]
    for f in factors[1:]:
        acc = multiply_and_normalize(acc, f)
    return acc


@dataclass(frozen=True)
class MarginalUpdate:
    variable: str
    dist: object
    tick: int


@dataclass(frozen=True)
class BfeUpdate:
    """One Bethe free energy evaluation: the total is exactly the sum of the
    reported per-node energies and per-variable entropy terms."""

    total: float
    energies: dict
    entropies: dict
    tick: int


class _Gate:
    """Hot combine node shared by all subscribers of its output subject.

    ``mode='fresh'``: emit when every dynamic input has a pending update
    (all-fresh gating); pending flags are consumed on fire.
    ``mode='each'``: emit on every input update once all inputs have a value.
    Static inputs never gate; a gate with only static inputs fires on any of
    their (rare) updates and once at wiring time.
    """

    __slots__ = (
        "mode", "labels", "latest", "pending", "seen", "dynamic",
        "compute", "sink", "n_dynamic", "sources",
    )

    def __init__(self, mode, deps, compute, sink):
        # deps: list of (label, stream_or_static_value, is_stream, is_dynamic)
        self.mode = mode
        self.labels = []
        self.latest = []
        self.pending = []
        self.seen = []
        self.dynamic = []
        self.sources = []  # Subject per stream dep, None per static dep
        self.compute = compute
        self.sink = sink
        n_dyn = 0
        for idx, (label, source, is_stream, is_dynamic) in enumerate(deps):
            self.labels.append(label)
            self.pending.append(False)
            self.dynamic.append(is_dynamic)
            if is_dynamic:
                n_dyn += 1
            if is_stream:
                self.sources.append(source)
                self.latest.append(source.latest)
                self.seen.append(source.has_value)
                source.subscribe(self._make_callback(idx))
            else:
                self.sources.append(None)
                self.latest.append(source)
                self.seen.append(True)
        self.n_dynamic = n_dyn

    def _make_callback(self, idx):
        def on_value(v):
            self.latest[idx] = v
            self.seen[idx] = True
            self.pending[idx] = True
            self._maybe_fire()

        return on_value

    def _maybe_fire(self):
        if not all(self.seen):
            return
        if self.mode == "fresh":
            if self.n_dynamic:
                for dyn, pend in zip(self.dynamic, self.pending):
                    if dyn and not pend:
                        return
            elif not any(self.pending):
                return
            for i in range(len(self.pending)):
                self.pending[i] = False
        self._fire()

    def _fire(self):
        value = self.compute(self.labels, self.latest)
        self.sink.push(value)

    def fire_if_ready(self):
        """Initial evaluation for gates whose inputs are all static."""
        if self.n_dynamic == 0 and all(self.seen):
            self._fire()


class _StageContext:
    """Handed to pipeline stages so they can reach the engine (e.g. to log)."""

    __slots__ = ("engine", "node", "interface")

    def __init__(self, engine, node, interface):
        self.engine = engine
        self.node = node
        self.interface = interface


def moment_matching_stage():
    """Pipeline stage projecting every passing message onto a Gaussian
    (family-specific projections apply where registered)."""

    def stage(stream, ctx):
        return map_stream(stream, as_gaussian_message)

    return stage


def logger_stage():
    """Pipeline stage appending every passing message to the engine trace."""

    def stage(stream, ctx):
        source = (
            "%s.%s" % (ctx.node.name, ctx.interface) if ctx.node is not None else str(ctx.interface)
        )

        def observe(v):
            ctx.engine._emit_trace("message", source, v)
            return v

        return map_stream(stream, observe)

    return stage


def mean_precision_pair(dist):
    """Posterior-to-prior parameter extraction used by chain redirection."""
    if isinstance(dist, Gaussian1D):
        return (dist.mean, dist.precision)
    raise TypeError("mean/precision extraction needs a univariate Gaussian, got %r" % (dist,))


class ChainRedirect:
    """Feeds a posterior stream back into prior data inputs, one step delayed:
    the values staged during step t become the injections of step t+1."""

    __slots__ = ("posterior", "targets", "extract", "staged", "_pending", "status")

    def __init__(self, engine, posterior, targets, extract, initial):
        self.posterior = posterior
        self.targets = tuple(targets)
        self.extract = extract
        self.staged = tuple(initial)
        self._pending = tuple(initial)
        self.status = Subject(engine.loop)
        if len(self.staged) != len(self.targets):
            raise WiringError("initial values do not match the prior binding pair")

        def on_update(dist):
            try:
                values = tuple(self.extract(dist))
                if len(values) != len(self.targets):
                    raise ValueError("extractor arity mismatch")
            except Exception as exc:
                self.status.push(("error", exc))
                return
            self._pending = values

        engine.marginal_subject(posterior).subscribe(on_update)

    def advance(self):
        self.staged = self._pending

    def bindings(self):
        return dict(zip(self.targets, self.staged))


class InferenceEngine:
    def __init__(self, graph, max_events_per_injection=None):
        """``max_events_per_injection`` bounds one drain (livelock guard); by
        default 10^6 or 50 events per wired stream, whichever is larger, so a
        single batched sweep over a very large chain still fits."""
        if not graph.sealed:
            graph.seal()
        diagnostics = graph.validate()
        if diagnostics:
            raise WiringError(
                "graph failed validation: " + "; ".join(str(d) for d in diagnostics)
            )
        self.graph = graph
        self.loop = EventLoop(max_events=max_events_per_injection or 1_000_000)
        self.trace = None
        self._out = {}  # (node id, iface) -> Subject
        self._inject = {}  # data var id -> Subject
        self._marginal = {}  # var id -> Subject
        self._inbound = {}  # (var id, node id) -> Subject (shared product)
        self._joint = {}  # (node id, cluster) -> Subject
        self._gates = []
        self._marginal_latest = {}
        self._marginal_counts = {}
        self._injected = {}  # data var id -> latest raw value
        self._bfe_subject = None
        self._bfe_parts = []
        self._joint_latest = {}
        self._bfe_count = 0
        self._init_checked = False
        self._relays = []  # (source subject id, fed subject id) pass-throughs
        self._redirects = []
        self._wire()
        if max_events_per_injection is None:
            self.loop.max_events = max(1_000_000, 50 * len(self._gates))

    # ------------------------------------------------------------------ wiring

    def _wire(self):
        g = self.graph
        for var in g.variables:
            if var.kind == DATA:
                self._inject[var.id] = Subject(self.loop)
        # bare subjects first so gates can reference them in any order
        for node in g.nodes:
            for iface in node.interfaces:
                var = node.bindings[iface]
                if var.kind == RANDOM:
                    self._out[(node.id, iface)] = Subject(self.loop)
        for var in g.variables:
            if var.kind == RANDOM and g.degree(var) > 0:
                self._marginal[var.id] = Subject(self.loop)
                self._marginal_latest[var.id] = None
                self._marginal_counts[var.id] = 0
        self._compute_dynamic_flags()
        for node in g.nodes:
            for iface in node.interfaces:
                var = node.bindings[iface]
                if var.kind == RANDOM:
                    self._wire_outbound(node, iface)
        for var in g.variables:
            if var.kind == RANDOM and g.degree(var) > 0:
                self._wire_marginal(var)
        # initial values: constants flowed through static gates
        for gate in self._gates:
            gate.fire_if_ready()
        for vid, dist in g.initial_marginals.items():
            var = next(v for v in g.variables if v.id == vid)
            self.set_marginal(var, dist)

    def _abstract_deps(self):
        """Abstract stream-dependency edges used for the staticness fixpoint.

        Stream keys: ("inject", var), ("out", node, iface),
        ("inbound", var, node), ("marginal", var), ("joint", node, cluster).
        """
        g = self.graph
        deps = {}

        def iface_dep(node, iface):
            var = node.bindings[iface]
            if var.kind == CONSTANT:
                return None
            if var.kind == DATA:
                return ("inject", var.id)
            return ("inbound", var.id, node.id)

        def q_dep(node, cluster):
            if len(cluster) == 1:
                var = node.bindings[cluster[0]]
                if var.kind == CONSTANT:
                    return None
                if var.kind == DATA:
                    return ("inject", var.id)
                return ("marginal", var.id)
            return ("joint", node.id, tuple(cluster))

        for node in g.nodes:
            clusters = node.context.resolved_clusters(node.interfaces)
            multi = [c for c in clusters if len(c) > 1]
            for cluster in multi:
                key = ("joint", node.id, tuple(cluster))
                entry = []
                for iface in cluster:
                    d = iface_dep(node, iface)
                    if d is not None:
                        entry.append(d)
                for other in clusters:
                    if tuple(other) != tuple(cluster):
                        d = q_dep(node, other)
                        if d is not None:
                            entry.append(d)
                deps[key] = entry
            for iface in node.interfaces:
                var = node.bindings[iface]
                if var.kind != RANDOM:
                    continue
                cluster = node.cluster_of(iface)
                entry = []
                for other in cluster:
                    if other != iface:
                        d = iface_dep(node, other)
                        if d is not None:
                            entry.append(d)
                for other_cluster in clusters:
                    if other_cluster != cluster:
                        d = q_dep(node, other_cluster)
                        if d is not None:
                            entry.append(d)
                deps[("out", node.id, iface)] = entry
        for var in g.variables:
            if var.kind != RANDOM:
                continue
            uses = g.uses(var)
            if uses:
                deps[("marginal", var.id)] = [("out", n.id, i) for n, i in uses]
            for node, iface in uses:
                deps[("inbound", var.id, node.id)] = [
                    ("out", n.id, i) for n, i in uses if n.id != node.id
                ]
        return deps

    def _compute_dynamic_flags(self):
        deps = self._abstract_deps()
        dynamic = set()
        changed = True
        while changed:
            changed = False
            for key, entry in deps.items():
                if key in dynamic:
                    continue
                for d in entry:
                    if d[0] == "inject" or d in dynamic:
                        dynamic.add(key)
                        changed = True
                        break
        self._dynamic = dynamic

    def _is_dynamic(self, key):
        return key in self._dynamic

    def _dep_entry(self, label, node, iface):
        """Dependency tuple for one interface seen from inside ``node``."""
        var = node.bindings[iface]
        if var.kind == CONSTANT:
            return (label, self.graph.constants[var.id], False, False)
        if var.kind == DATA:
            return (label, self._inject[var.id], True, True)
        source = self._inbound_stream(var, node)
        return (label, source, True, self._is_dynamic(("inbound", var.id, node.id)))

    def _marginal_dep(self, label, var):
        if var.kind == CONSTANT:
            return (label, self.graph.constants[var.id], False, False)
        if var.kind == DATA:
            return (label, self._inject[var.id], True, True)
        subject = self._marginal[var.id]
        return (label, subject, True, self._is_dynamic(("marginal", var.id)))

    def _cluster_label(self, cluster):
        return "q_" + "_".join(cluster)

    def _wire_outbound(self, node, iface):
        ctx = node.context
        clusters = ctx.resolved_clusters(node.interfaces)
        cluster = node.cluster_of(iface)
        deps = []
        for other in cluster:
            if other != iface:
                deps.append(self._dep_entry("m_" + other, node, other))
        for other_cluster in clusters:
            if other_cluster == cluster:
                continue
            if len(other_cluster) == 1:
                j = other_cluster[0]
                deps.append(self._marginal_dep("q_" + j, node.bindings[j]))
            else:
                subject = self._joint_stream(node, other_cluster)
                dyn = self._is_dynamic(("joint", node.id, tuple(other_cluster)))
                deps.append((self._cluster_label(other_cluster), subject, True, dyn))

        labels = [d[0] for d in deps]
        constraint = ctx.form_constraints.get(iface, MARGINALIZATION)
        if constraint not in (MARGINALIZATION, MOMENT_MATCHING):
            constraint = MARGINALIZATION
        if not has_any_rule(node.kind, iface, MARGINALIZATION, labels):
            raise WiringError(describe_missing(node.kind, iface, MARGINALIZATION, labels))

        meta = ctx.metadata
        kind = node.kind
        cache = {}

        def compute(lbls, latest):
            deps_map = dict(zip(lbls, latest))
            sig = tuple((l, v.family) for l, v in deps_map.items())
            rule = cache.get(sig)
            if rule is None:
                rule = lookup(RuleKey(kind, iface, MARGINALIZATION, sig))
                cache[sig] = rule
            return rule.fn(deps_map, meta)

        raw = Subject(self.loop)
        out = self._out[(node.id, iface)]
        gate = _Gate("fresh", deps, compute, raw)
        self._gates.append(gate)

        stages = list(ctx.pipeline)
        if ctx.form_constraints.get(iface) == MOMENT_MATCHING:
            stages.append(moment_matching_stage())
        stream = raw
        if stages:
            sctx = _StageContext(self, node, iface)
            for stage in stages:
                stream = stage(stream, sctx)
        stream.subscribe(out.push)
        self._relays.append((raw.id, out.id))

    def _inbound_stream(self, var, node):
        """Message arriving at ``node`` along the edge of ``var``: the product
        of every other factor's outbound message on that edge.  On edges
        carrying a moment-matching form constraint, incoming non-parametric
        messages are first projected onto Gaussians so every consumer sees a
        closed-form message computed from the current sweep's values."""
        key = (var.id, node.id)
        if key in self._inbound:
            return self._inbound[key]
        gaussianize = self.graph.edge_form_constraints.get(var.id) == MOMENT_MATCHING
        others = [(n, i) for (n, i) in self.graph.uses(var) if n.id != node.id]
        if not others:
            raise WiringError(
                "node %s needs a message on edge %s, but no other factor emits one"
                % (node.name, var.name)
            )
        if len(others) == 1 and not gaussianize:
            n, i = others[0]
            subject = self._out[(n.id, i)]
            self._inbound[key] = subject
            return subject
        deps = []
        for n, i in others:
            dyn = self._is_dynamic(("out", n.id, i))
            deps.append(("m%d" % len(deps), self._out[(n.id, i)], True, dyn))
        subject = Subject(self.loop)

        if gaussianize:
            def compute(lbls, latest):
                return _reduce_product([as_gaussian_message(v) for v in latest])
        else:
            def compute(lbls, latest):
                return _reduce_product(latest)

        gate = _Gate("fresh", deps, compute, subject)
        self._gates.append(gate)
        self._inbound[key] = subject
        return subject

    def _joint_stream(self, node, cluster, mode="fresh"):
        """Per-cluster joint marginal: combines the inbound messages on the
        cluster's edges with the marginals of the complementary clusters.
        Joints consumed only by the free-energy evaluation use ``each`` mode
        so their settled value reflects the final messages of a sweep."""
        key = (node.id, tuple(cluster))
        if key in self._joint:
            return self._joint[key]
        fn = joint_rule(node.kind, tuple(cluster))
        deps = []
        for iface in cluster:
            deps.append(self._dep_entry("m_" + iface, node, iface))
        for other_cluster in node.context.resolved_clusters(node.interfaces):
            if tuple(other_cluster) == tuple(cluster):
                continue
            if len(other_cluster) == 1:
                j = other_cluster[0]
                deps.append(self._marginal_dep("q_" + j, node.bindings[j]))
            else:
                raise WiringError(
                    "node %s has several multi-variable clusters; joint marginals "
                    "support one joint cluster per node" % node.name
                )
        subject = Subject(self.loop)
        meta = node.context.metadata

        def compute(lbls, latest):
            return fn(dict(zip(lbls, latest)), meta)

        gate = _Gate(mode, deps, compute, subject)
        self._gates.append(gate)
        self._joint[key] = subject
        return subject

    def _wire_marginal(self, var):
        uses = self.graph.uses(var)
        deps = []
        for n, i in uses:
            dyn = self._is_dynamic(("out", n.id, i))
            deps.append(("m%d" % len(deps), self._out[(n.id, i)], True, dyn))
        constraint = self.graph.edge_form_constraints.get(var.id)

        def compute(lbls, latest):
            dist = _reduce_product(latest)
            if constraint == MOMENT_MATCHING and not isinstance(
                dist, (Gaussian1D,)
            ):
                dist = moment_match_gaussian(dist)
            elif constraint == POINT_MASS:
                dist = PointMass(dist.mode)
            return dist

        raw = Subject(self.loop)
        subject = self._marginal[var.id]
        gate = _Gate("fresh", deps, compute, raw)
        self._gates.append(gate)
        stream = raw
        stages = self.graph.edge_pipelines.get(var.id, [])
        if stages:
            sctx = _StageContext(self, None, var.name)
            for stage in stages:
                stream = stage(stream, sctx)
        stream.subscribe(subject.push)
        self._relays.append((raw.id, subject.id))

        def record(dist):
            self._marginal_latest[var.id] = dist
            self._marginal_counts[var.id] += 1
            if self.trace is not None:
                self._emit_trace("marginal", var.name, dist)

        subject.subscribe(record)

    # ------------------------------------------------------------- public API

    def marginal_subject(self, var):
        subject = self._marginal.get(var.id)
        if subject is None:
            raise WiringError("variable %r has no marginal stream" % var.name)
        return subject

    def get_marginal_stream(self, var):
        if var.kind != RANDOM:
            raise WiringError("marginal streams exist only for random variables")
        subject = self.marginal_subject(var)
        name = var.name
        return map_stream(subject, lambda d: MarginalUpdate(name, d, self.loop.tick))

    def latest_marginal(self, var):
        return self._marginal_latest.get(var.id)

    def marginal_update_count(self, var):
        return self._marginal_counts.get(var.id, 0)

    def inject(self, var, value):
        if var.kind != DATA:
            raise WiringError("inject targets must be data variables")
        arr = np.asarray(value, float)
        if arr.size != var.dims:
            raise WiringError(
                "value of size %d does not match data variable %s (dims=%d)"
                % (arr.size, var.name, var.dims)
            )
        self._check_initialization()
        self._injected[var.id] = value
        payload = PointMass(value if arr.ndim else float(arr))
        if self.trace is not None:
            self._emit_trace("message", var.name, payload)
        self._inject[var.id].push(payload)

    def set_marginal(self, var, dist):
        if var.kind != RANDOM:
            raise WiringError("set_marginal targets must be random variables")
        self.marginal_subject(var).push(dist)

    def set_message(self, node, iface, dist):
        subject = self._out.get((node.id, iface))
        if subject is None:
            raise WiringError("no outbound message stream for %s.%s" % (node.name, iface))
        subject.push(dist)

    def run_iterations(self, bindings, iterations):
        """Inject every data variable ``iterations`` times in declaration
        order, draining to quiescence between sweeps; one BFE update is
        emitted per sweep when the BFE stream is active."""
        if iterations < 1:
            raise WiringError("iterations must be at least 1")
        bound = self._normalize_bindings(bindings)
        data_vars = [v for v in self.graph.variables if v.kind == DATA]
        missing = [v.name for v in data_vars if v.id not in bound]
        if missing:
            raise WiringError("unbound data variables: %s" % ", ".join(missing))
        for _ in range(iterations):
            self._sweep(data_vars, bound)

    def _sweep(self, data_vars, bound):
        """One full data sweep: all injections delivered as a batch, then the
        network drains to quiescence and the BFE (if active) is evaluated."""
        self._check_initialization()
        self.loop.hold()
        try:
            for var in data_vars:
                self._injected[var.id] = bound[var.id]
                arr = np.asarray(bound[var.id], float)
                payload = PointMass(bound[var.id] if arr.ndim else float(arr))
                if self.trace is not None:
                    self._emit_trace("message", var.name, payload)
                self._inject[var.id].push(payload)
        finally:
            self.loop.release()
        self._sweep_end()

    def _normalize_bindings(self, bindings):
        out = {}
        for key, value in bindings.items():
            var = key if not isinstance(key, str) else self.graph.variable_named(key)
            out[var.id] = value
        return out

    # ------------------------------------------------------------------- BFE

    def get_bfe_stream(self):
        """Stream of Bethe free energy updates, one per completed data sweep.
        Activate (call this) before running iterations."""
        if self._bfe_subject is None:
            self._activate_bfe()
        return self._bfe_subject

    def _activate_bfe(self):
        self._bfe_subject = Subject(self.loop)
        g = self.graph
        self._bfe_parts = []
        for node in g.nodes:
            clusters = tuple(tuple(c) for c in node.context.resolved_clusters(node.interfaces))
            fn = energy_fn(node.kind)
            part_sources = {}
            for cluster in clusters:
                free = [i for i in cluster if node.bindings[i].kind == RANDOM]
                if not free:
                    part_sources[cluster] = None
                elif len(free) >= 2:
                    subject = self._joint_stream(node, cluster, mode="each")
                    self._watch_joint(node.id, cluster, subject)
                    part_sources[cluster] = ("joint", (node.id, cluster))
                else:
                    part_sources[cluster] = ("marginal", node.bindings[free[0]].id)
            constants = {
                i: self.graph.constants[node.bindings[i].id].point
                for i in node.interfaces
                if node.bindings[i].kind == CONSTANT
            }
            data_ifaces = tuple(
                (i, node.bindings[i].id)
                for i in node.interfaces
                if node.bindings[i].kind == DATA
            )
            dims = {i: node.bindings[i].dims for i in node.interfaces}
            self._bfe_parts.append(
                (node.name, fn, node.context.metadata, clusters, part_sources,
                 constants, data_ifaces, dims)
            )

    def _watch_joint(self, node_id, cluster, subject):
        key = (node_id, cluster)
        if key in self._joint_latest:
            return
        self._joint_latest[key] = subject.latest

        def record(dist, key=key):
            self._joint_latest[key] = dist

        subject.subscribe(record)

    def _node_energy(self, part):
        (name, fn, meta, clusters, part_sources, constants, data_ifaces, dims) = part
        observed = dict(constants)
        for iface, vid in data_ifaces:
            if vid not in self._injected:
                return None
            observed[iface] = self._injected[vid]
        parts = {}
        for cluster in clusters:
            source = part_sources[cluster]
            if source is None:
                parts[cluster] = None
                continue
            kind, key = source
            value = (
                self._joint_latest.get(key)
                if kind == "joint"
                else self._marginal_latest.get(key)
            )
            if value is None:
                return None
            parts[cluster] = value
        view = NodeParts(clusters, parts, observed, dims)
        return fn(meta, view)

    def _sweep_end(self):
        """Evaluate the free energy at the settled, mutually consistent set of
        cluster marginals; emits one update per completed sweep."""
        if self._bfe_subject is None:
            return
        g = self.graph
        energies = {}
        for part in self._bfe_parts:
            value = self._node_energy(part)
            if value is None:
                return
            energies[part[0]] = value
        entropies = {}
        for var in g.variables:
            if var.kind != RANDOM or g.degree(var) == 0:
                continue
            dist = self._marginal_latest.get(var.id)
            if dist is None:
                return
            entropies[var.name] = (g.degree(var) - 1) * dist.entropy()
        total = sum(energies.values()) + sum(entropies.values())
        self._bfe_count += 1
        update = BfeUpdate(total, energies, entropies, self.loop.tick)
        if self.trace is not None:
            self._emit_trace("bfe", "model", update.total)
        self._bfe_subject.push(update)

    # ------------------------------------------------------------ chain mode

    def chain_redirect(self, posterior_var, prior_vars, initial, extract=mean_precision_pair):
        """Redirect a posterior stream into a pair of prior data inputs,
        creating the rolling single-slice filter."""
        for v in prior_vars:
            if v.kind != DATA:
                raise WiringError("chain redirection targets must be data variables")
        redirect = ChainRedirect(self, posterior_var, prior_vars, extract, initial)
        self._redirects.append(redirect)
        return redirect

    def chain_step(self, data_bindings, iterations):
        """One online-filtering step: inject the staged priors and the new
        observation ``iterations`` times, then stage the resulting posteriors
        for the next step."""
        bound = self._normalize_bindings(data_bindings)
        for redirect in self._redirects:
            for var, value in redirect.bindings().items():
                bound[var.id] = value
        data_vars = [v for v in self.graph.variables if v.kind == DATA]
        missing = [v.name for v in data_vars if v.id not in bound]
        if missing:
            raise WiringError("unbound data variables: %s" % ", ".join(missing))
        for _ in range(iterations):
            self._sweep(data_vars, bound)
        for redirect in self._redirects:
            redirect.advance()

    # ------------------------------------------------------------------ misc

    def attach_trace(self, sink):
        """``sink`` receives dicts {tick, kind, source, payload} per emission;
        message tracing covers injected data and logger-stage nodes."""
        self.trace = sink

    def _emit_trace(self, kind, source, payload):
        if self.trace is None:
            return
        if hasattr(payload, "family"):
            payload = to_json(payload)
        self.trace({"tick": self.loop.tick, "kind": kind, "source": source, "payload": payload})

    def dependency_edges(self, node, iface):
        """Introspection for locality checks: which variables the outbound
        computation of ``node.iface`` reads."""
        ctx = node.context
        cluster = node.cluster_of(iface)
        edges = set()
        for other in cluster:
            if other != iface:
                edges.add(node.bindings[other].name)
        for other_cluster in ctx.resolved_clusters(node.interfaces):
            if other_cluster != cluster:
                for j in other_cluster:
                    edges.add(node.bindings[j].name)
        return edges

    def _check_initialization(self):
        """Availability fixpoint: every wired gate must eventually fire,
        assuming all data variables receive values.  Cyclic marginal
        dependencies must be cut by explicit initial marginals; refusing to
        run beats silently hanging.  Worklist propagation keeps this linear
        in the number of stream edges."""
        if self._init_checked:
            return
        self._init_checked = True
        available = set()
        waiting = {}  # gate -> number of unavailable stream deps
        dependents = {}  # subject id -> gates waiting on it
        relay_out = {}  # subject id -> relayed subject ids
        for src_id, dst_id in self._relays:
            relay_out.setdefault(src_id, []).append(dst_id)
        queue = [s.id for s in self._inject.values()]
        for gate in self._gates:
            if gate.sink.has_value:
                queue.append(gate.sink.id)
            pending = 0
            for src, seen in zip(gate.sources, gate.seen):
                if src is None:
                    continue
                if seen or src.has_value:
                    continue
                pending += 1
                dependents.setdefault(src.id, []).append(gate)
            waiting[gate] = pending
            if pending == 0:
                queue.append(gate.sink.id)
        seen_ids = set()
        while queue:
            sid = queue.pop()
            if sid in seen_ids:
                continue
            seen_ids.add(sid)
            available.add(sid)
            for dst in relay_out.get(sid, ()):  # pipeline pass-throughs
                queue.append(dst)
            for gate in dependents.get(sid, ()):  # gates fed by this stream
                waiting[gate] -= 1
                if waiting[gate] == 0:
                    queue.append(gate.sink.id)
        blocked = [g for g in self._gates if g.sink.id not in available]
        if not blocked:
            return
        missing = set()
        marginal_names = {s.id: vid for vid, s in self._marginal.items()}
        var_by_id = {v.id: v for v in self.graph.variables}
        for gate in blocked:
            for src, seen in zip(gate.sources, gate.seen):
                if src is None or seen or src.id in available:
                    continue
                vid = marginal_names.get(src.id)
                if vid is not None:
                    missing.add(var_by_id[vid].name)
        hint = (
            "; set initial marginals for: " + ", ".join(sorted(missing))
            if missing
            else ""
        )
        raise WiringError(
            "%d stream(s) can never receive a value with the current "
            "initialization%s" % (len(blocked), hint)
        )
