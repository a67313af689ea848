"""Deterministic single-context driver for the engine actors.

Interleaves the same generators the threaded driver runs, one effect at a
time, choosing the next actor with a seeded RNG or a caller-supplied policy.
Every yield point in the actors is a potential preemption, so schedules
explore the orderings of the shared watermark reads and writes that the
output-ordering guarantee depends on.
"""

from __future__ import annotations

import random
from collections import deque
from typing import Callable, Iterable

from .engine import STOP, ActorGen, Engine, RunReport, Session
from .errors import AnomstreamError


class SimDeadlock(AnomstreamError):
    """No actor can make progress but the pipeline has not finished."""


class _Actor:
    __slots__ = ("name", "gen", "pending", "done")

    def __init__(self, name: str, gen: ActorGen):
        self.name = name
        self.gen = gen
        self.pending: tuple | None = None
        self.done = False

    def start(self) -> None:
        try:
            self.pending = next(self.gen)
        except StopIteration:
            self.done = True


class SimDriver:
    """Runs one session to completion under a chosen interleaving."""

    def __init__(
        self,
        engine: Engine,
        session: Session,
        *,
        seed: int | None = 0,
        chooser: Callable[[list[int], int], int] | None = None,
        max_steps: int = 5_000_000,
    ):
        self.engine = engine
        self.session = session
        self.capacity = engine.queue_capacity
        self.queues: list[deque] = [deque() for _ in range(engine.config.worker_count)]
        self.actors = [_Actor(name, gen) for name, gen in engine.actors(session)]
        self.max_steps = max_steps
        if chooser is not None:
            self.chooser = chooser
        else:
            rng = random.Random(seed)
            self.chooser = lambda runnable, _step: runnable[rng.randrange(len(runnable))]
        self.steps = 0

    def _can_run(self, actor: _Actor) -> bool:
        kind = actor.pending[0]
        if kind == "recv":
            return bool(self.queues[actor.pending[1]])
        if kind == "send":
            return len(self.queues[actor.pending[1]]) < self.capacity
        return True  # step / notify / wait (waits get spurious wakeups)

    def _step_actor(self, actor: _Actor) -> None:
        kind = actor.pending[0]
        resume: object = None
        if kind == "recv":
            resume = self.queues[actor.pending[1]].popleft()
        elif kind == "send":
            self.queues[actor.pending[1]].append(actor.pending[2])
        try:
            actor.pending = actor.gen.send(resume)
        except StopIteration:
            actor.done = True

    def run(self) -> None:
        for actor in self.actors:
            actor.start()
        while True:
            live = [i for i, a in enumerate(self.actors) if not a.done]
            if not live:
                return
            runnable = [i for i in live if self._can_run(self.actors[i])]
            if not runnable:
                names = [self.actors[i].name for i in live]
                raise SimDeadlock(f"stuck actors: {names}")
            self.steps += 1
            if self.steps > self.max_steps:
                raise SimDeadlock(f"no completion after {self.max_steps} steps")
            self._step_actor(self.actors[self.chooser(runnable, self.steps)])


def simulate_run(
    metadata,
    config,
    messages: Iterable[bytes],
    sink,
    *,
    seed: int | None = 0,
    chooser: Callable[[list[int], int], int] | None = None,
    queue_capacity: int = 1024,
    max_steps: int = 5_000_000,
    **engine_kwargs,
) -> RunReport:
    """Run the whole pipeline deterministically under one schedule."""
    engine = Engine(metadata, config, queue_capacity=queue_capacity,
                    time_fn=None, **engine_kwargs)
    session = Session(engine, messages, sink, time_fn=None)
    SimDriver(engine, session, seed=seed, chooser=chooser, max_steps=max_steps).run()
    return engine.report(session, wall_ms=0.0)
