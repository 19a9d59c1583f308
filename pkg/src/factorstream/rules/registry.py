"""Message-update-rule registry.

A rule is selected by node kind, outbound interface, local constraint tag,
and the signature of its inbound payloads: for every dependency, whether a
message (``m_<interface>``) or a marginal (``q_<interface...>``) is consumed
and which distribution family it carries.  Exactly one rule may match a fully
specified key; a failed lookup is a defined error (never a fallback guess) and
overlapping registrations fault at registration time.
"""

from dataclasses import dataclass

from ..errors import NoRuleError, RuleRegistrationError

MARGINALIZATION = "marginalization"
MOMENT_MATCHING = "moment_matching"


@dataclass(frozen=True)
class RuleKey:
    """Fully specified lookup key (families are concrete, not patterns)."""

    kind: str
    interface: str
    constraint: str
    signature: tuple  # tuple of (label, family)

    def __str__(self):
        sig = ", ".join("%s::%s" % (label, fam) for label, fam in self.signature)
        return "%s(:%s, %s) [%s]" % (self.kind, self.interface, self.constraint, sig)


class _Rule:
    __slots__ = ("labels", "families", "emits", "fn")

    def __init__(self, labels, families, emits, fn):
        self.labels = labels  # tuple of dependency labels
        self.families = families  # per label: frozenset of families or None
        self.emits = emits
        self.fn = fn

    def matches(self, signature):
        if len(signature) != len(self.labels):
            return False
        for (label, family), want_label, want_families in zip(
            signature, self.labels, self.families
        ):
            if label != want_label:
                return False
            if want_families is not None and family not in want_families:
                return False
        return True

    def overlaps(self, other):
        if self.labels != other.labels:
            return False
        for mine, theirs in zip(self.families, other.families):
            if mine is not None and theirs is not None and not (mine & theirs):
                return False
        return True


_RULES = {}  # (kind, interface, constraint) -> list[_Rule]
_JOINT_RULES = {}  # (kind, cluster tuple) -> fn
_ENERGIES = {}  # kind -> fn


def register_rule(kind, interface, constraint, deps, emits, fn):
    """``deps`` is a sequence of (label, families) with families an iterable
    of family tags or None for a wildcard."""
    labels = tuple(label for label, _ in deps)
    families = tuple(
        None if fams is None else frozenset(fams) for _, fams in deps
    )
    rule = _Rule(labels, families, emits, fn)
    bucket = _RULES.setdefault((kind, interface, constraint), [])
    for existing in bucket:
        if rule.overlaps(existing):
            raise RuleRegistrationError(
                "ambiguous registration for %s(:%s, %s): signature overlaps %s"
                % (kind, interface, constraint, existing.labels)
            )
    bucket.append(rule)


def lookup(key):
    """Return the unique rule for ``key`` or raise :class:`NoRuleError`."""
    bucket = _RULES.get((key.kind, key.interface, key.constraint), [])
    matches = [r for r in bucket if r.matches(key.signature)]
    if not matches:
        raise NoRuleError("no message update rule for %s" % key)
    if len(matches) > 1:  # unreachable if registration checks hold
        raise RuleRegistrationError("ambiguous rules for %s" % key)
    return matches[0]


def has_any_rule(kind, interface, constraint, labels):
    """Structural wiring check: is some rule registered for this key shape,
    ignoring runtime families?  Used to fail fast before any data flows."""
    bucket = _RULES.get((kind, interface, constraint), [])
    labels = tuple(labels)
    return any(r.labels == labels for r in bucket)


def describe_missing(kind, interface, constraint, labels):
    bucket = _RULES.get((kind, interface, constraint), [])
    have = "; ".join(str(r.labels) for r in bucket) or "none"
    return (
        "no rule for node kind %r, interface %r, constraint %r with "
        "dependencies %r (registered signatures: %s)"
        % (kind, interface, constraint, tuple(labels), have)
    )


def register_joint_rule(kind, cluster, fn):
    key = (kind, tuple(cluster))
    if key in _JOINT_RULES:
        raise RuleRegistrationError("joint rule already registered for %s" % (key,))
    _JOINT_RULES[key] = fn


def joint_rule(kind, cluster):
    fn = _JOINT_RULES.get((kind, tuple(cluster)))
    if fn is None:
        raise NoRuleError(
            "no joint-marginal rule for node kind %r, cluster %r" % (kind, tuple(cluster))
        )
    return fn


def register_energy(kind, fn):
    if kind in _ENERGIES:
        raise RuleRegistrationError("energy already registered for %r" % kind)
    _ENERGIES[kind] = fn


def energy_fn(kind):
    fn = _ENERGIES.get(kind)
    if fn is None:
        raise NoRuleError("no average-energy implementation for node kind %r" % kind)
    return fn
