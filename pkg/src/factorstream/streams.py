"""Minimal reactive-streams substrate.

Streams are lazy push collections: they emit values over time, can only be
observed through subscriptions, and perform no work while nobody listens.
``Subject`` is the hot, multicasting variant that external code pushes into;
``map_stream``/``combine_latest``/``sum_latest`` are the cold operators the
inference engine is assembled from.

Delivery is single-threaded.  Values pushed while another value is being
handled are queued and drained FIFO (breadth-first) to quiescence, which keeps
recursive stream topologies from overflowing the stack or dropping updates.
"""

import itertools
from collections import deque

from .errors import QuiescenceError, StreamClosedError

_ids = itertools.count()


class EventLoop:
    """FIFO event queue driving one reactive network.

    ``post`` enqueues a thunk and, when called outside of a drain, runs the
    queue to quiescence before returning.  ``max_events`` bounds a single
    drain; hitting it raises :class:`QuiescenceError` instead of livelocking.
    ``tick`` increases monotonically over the loop's lifetime.
    """

    __slots__ = ("_queue", "_draining", "_held", "max_events", "tick")

    def __init__(self, max_events=1_000_000):
        self._queue = deque()
        self._draining = False
        self._held = False
        self.max_events = max_events
        self.tick = 0

    def post(self, fn):
        self._queue.append(fn)
        if not self._draining and not self._held:
            self._drain()

    def hold(self):
        """Queue subsequent posts without processing until ``release``; used
        to deliver one sweep's injections as a simultaneous batch."""
        self._held = True

    def release(self):
        self._held = False
        if not self._draining and self._queue:
            self._drain()

    def _drain(self):
        self._draining = True
        processed = 0
        try:
            while self._queue:
                fn = self._queue.popleft()
                self.tick += 1
                processed += 1
                if processed > self.max_events:
                    raise QuiescenceError(
                        "event budget of %d exceeded in one drain; "
                        "a pipeline stage is probably feeding a stream back "
                        "into itself unconditionally" % self.max_events
                    )
                fn()
        finally:
            self._draining = False


_DEFAULT_LOOP = EventLoop()


class Subscription:
    """Handle for one active observer of a stream; ``cancel()`` detaches it."""

    __slots__ = ("stream", "on_value", "on_error", "on_complete", "active", "_upstream")

    def __init__(self, stream, on_value, on_error=None, on_complete=None):
        self.stream = stream
        self.on_value = on_value
        self.on_error = on_error
        self.on_complete = on_complete
        self.active = True
        self._upstream = None

    def cancel(self):
        if self.active:
            self.active = False
            self.stream._detach(self)
            if self._upstream is not None:
                self._upstream.cancel()

    # internal delivery helpers -------------------------------------------
    def _value(self, v):
        if self.active:
            self.on_value(v)

    def _error(self, e):
        if self.active:
            self.active = False
            if self.on_error is not None:
                self.on_error(e)
            else:
                raise e

    def _complete(self):
        if self.active:
            self.active = False
            if self.on_complete is not None:
                self.on_complete()


class StreamHandle:
    """Base class for all streams.  Identity is an opaque integer id."""

    __slots__ = ("id",)

    def __init__(self):
        self.id = next(_ids)

    def subscribe(self, on_value, on_error=None, on_complete=None):
        raise NotImplementedError

    def _detach(self, subscription):
        pass

    def map(self, fn):
        return map_stream(self, fn)


class Subject(StreamHandle):
    """Hot multicasting stream.

    Every pushed value is delivered exactly once to each subscription active
    at delivery time.  Keeps ``latest`` for combine-style consumers; late
    subscribers do not get a replay.
    """

    __slots__ = ("_subs", "latest", "has_value", "completed", "loop")

    def __init__(self, loop=None):
        super().__init__()
        self._subs = []
        self.latest = None
        self.has_value = False
        self.completed = False
        self.loop = loop if loop is not None else _DEFAULT_LOOP

    def subscribe(self, on_value, on_error=None, on_complete=None):
        sub = Subscription(self, on_value, on_error, on_complete)
        if self.completed:
            # a disposed stream yields an immediately-completed subscription
            self.loop.post(sub._complete)
            return sub
        self._subs.append(sub)
        return sub

    def _detach(self, subscription):
        try:
            self._subs.remove(subscription)
        except ValueError:
            pass

    def push(self, value):
        if self.completed:
            raise StreamClosedError("push into a completed subject")
        self.loop.post(lambda: self._deliver(value))

    def error(self, exc):
        if self.completed:
            raise StreamClosedError("error on a completed subject")
        self.completed = True
        self.loop.post(lambda: self._deliver_error(exc))

    def complete(self):
        if self.completed:
            return
        self.completed = True
        self.loop.post(self._deliver_complete)

    def _deliver(self, value):
        self.latest = value
        self.has_value = True
        for sub in list(self._subs):
            sub._value(value)

    def _deliver_error(self, exc):
        subs, self._subs = self._subs, []
        for sub in list(subs):
            sub._error(exc)

    def _deliver_complete(self):
        subs, self._subs = self._subs, []
        for sub in list(subs):
            sub._complete()


def subscribe(stream, on_value, on_error=None, on_complete=None):
    """Attach ``on_value`` to ``stream``; returns a cancellable handle."""
    return stream.subscribe(on_value, on_error, on_complete)


class _MapStream(StreamHandle):
    """Cold map operator: emits ``fn(v)`` per source value, in order.

    If ``fn`` raises, the error is signalled downstream and the subscription
    terminates; the source stream itself is unaffected.
    """

    __slots__ = ("source", "fn")

    def __init__(self, source, fn):
        super().__init__()
        self.source = source
        self.fn = fn

    def subscribe(self, on_value, on_error=None, on_complete=None):
        out = Subscription(self, on_value, on_error, on_complete)
        fn = self.fn

        def forward(v):
            try:
                mapped = fn(v)
            except Exception as exc:  # error event terminates the stream
                upstream.cancel()
                out._error(exc)
                return
            out._value(mapped)

        upstream = self.source.subscribe(
            forward,
            on_error=out._error,
            on_complete=out._complete,
        )
        out._upstream = upstream
        return out

    def _detach(self, subscription):
        pass


def map_stream(source, fn):
    """Pure per-value transform of ``source``; source stays subscribable."""
    return _MapStream(source, fn)


class _CombineLatest(StreamHandle):
    """Cold combineLatest: emits the tuple of latest values on every update
    of any source, once every source has emitted at least once.  Completes
    when all sources complete; errors propagate immediately."""

    __slots__ = ("sources",)

    def __init__(self, sources):
        super().__init__()
        if not sources:
            raise ValueError("combine_latest requires at least one source")
        self.sources = list(sources)

    def subscribe(self, on_value, on_error=None, on_complete=None):
        out = Subscription(self, on_value, on_error, on_complete)
        n = len(self.sources)
        latest = [None] * n
        seen = [False] * n
        done = [False] * n
        inner = []

        def on_source(i, v):
            latest[i] = v
            seen[i] = True
            if all(seen):
                out._value(tuple(latest))

        def on_source_error(exc):
            for sub in inner:
                sub.cancel()
            out._error(exc)

        def on_source_complete(i):
            done[i] = True
            if all(done):
                out._complete()

        for i, src in enumerate(self.sources):
            inner.append(
                src.subscribe(
                    (lambda i: lambda v: on_source(i, v))(i),
                    on_error=on_source_error,
                    on_complete=(lambda i: lambda: on_source_complete(i))(i),
                )
            )
        out._upstream = _MultiSubscription(inner)
        return out


class _MultiSubscription:
    __slots__ = ("subs",)

    def __init__(self, subs):
        self.subs = subs

    def cancel(self):
        for s in self.subs:
            s.cancel()


def combine_latest(sources):
    """Combine an ordered list of streams into a stream of tuples."""
    return _CombineLatest(sources)


def sum_latest(sources):
    """Stream of the sum of the latest values of ``sources``."""
    if not sources:
        raise ValueError("sum_latest requires at least one source")
    return map_stream(combine_latest(sources), lambda vs: sum(vs))


def tap(source, side_effect):
    """Pass-through stream that also feeds every value to ``side_effect``.

    Used for logging pipeline stages; ordering and values are untouched.
    """

    def observe(v):
        side_effect(v)
        return v

    return map_stream(source, observe)
