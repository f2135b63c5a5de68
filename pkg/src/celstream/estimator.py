"""scikit-learn style wrapper around the query pipeline."""

from __future__ import annotations

from typing import Any, Iterable, Mapping

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .events import EventTuple, Schema, StreamPrefix, events_from_records, load_schema
from .oracle import ComplexEvent
from .pipeline import CompiledQuery, compile_query, evaluate


class CELQuery(TransformerMixin, BaseEstimator):
    """A compiled query. ``fit`` compiles, ``predict`` and ``transform`` evaluate.

    ``X`` is a stream: a ``StreamPrefix``, a sequence of ``EventTuple`` or a
    sequence of ``{"type": ..., attr: ...}`` records (validated against
    ``schema`` when one is given).
    """

    def __init__(
        self,
        query: str = "",
        schema: str | None = None,
        strategy: str | None = None,
        engine: str = "auto",
        consumption_policy: bool = False,
    ):
        self.query = query
        self.schema = schema
        self.strategy = strategy
        self.engine = engine
        self.consumption_policy = consumption_policy

    def _schema(self) -> Schema | None:
        return load_schema(self.schema) if self.schema else None

    def fit(self, X=None, y=None):
        text = self.query
        if self.strategy and self.strategy.lower() != "none":
            text = f"{self.strategy.upper()}({text})"
        self.compiled_: CompiledQuery = compile_query(text, self._schema())
        self.n_states_ = self.compiled_.automaton.n_states
        return self

    def _stream(self, X) -> StreamPrefix:
        if isinstance(X, StreamPrefix):
            return X
        items = list(X)
        if all(isinstance(t, EventTuple) for t in items):
            return StreamPrefix(items)
        sch = self._schema()
        if sch is None:
            return StreamPrefix([EventTuple(r["type"], {k: v for k, v in r.items() if k != "type"}) for r in items])
        return events_from_records(items, sch)

    def _check(self) -> CompiledQuery:
        if not hasattr(self, "compiled_"):
            raise NotFittedError("call fit before evaluating")
        return self.compiled_

    def predict(self, X) -> list[set[ComplexEvent]]:
        """Outputs at every position of the stream (empty sets included)."""
        cq = self._check()
        s = self._stream(X)
        log = evaluate(cq, s, engine=self.engine, consumption_policy=self.consumption_policy)
        return [log.get(i, set()) for i in range(len(s))]

    def transform(self, X) -> np.ndarray:
        """Output counts per position as a column vector."""
        return np.array([[len(outs)] for outs in self.predict(X)], dtype=np.int64).reshape(-1, 1)
