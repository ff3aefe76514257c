"""Name-based registry of NLI models.

A model is anything that maps ``(channel, plan, fiber)`` to an
:class:`~isrsgn.core.NliResult`.  Handles may also carry a whole-plan
evaluator, which the link engine prefers because it lets a model share work
across channels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from . import closed_form, integral
from .core import Channel, ChannelPlan, FiberParams, NliResult
from .quadrature import QuadratureSpec

Evaluator = Callable[[Channel, ChannelPlan, FiberParams], NliResult]
PlanEvaluator = Callable[[ChannelPlan, FiberParams], "list[NliResult]"]


@dataclass(frozen=True)
class NliModelHandle:
    name: str
    evaluator: Evaluator
    plan_evaluator: Optional[PlanEvaluator] = field(default=None, compare=False)
    configure: Optional[Callable[..., "NliModelHandle"]] = field(default=None, compare=False)

    def __post_init__(self):
        if not self.name or not self.name.isidentifier():
            raise ValueError(f"model name must be a non-empty identifier, got {self.name!r}")

    def evaluate_plan(self, plan: ChannelPlan, fiber: FiberParams) -> list[NliResult]:
        if self.plan_evaluator is not None:
            return self.plan_evaluator(plan, fiber)
        return [self.evaluator(ch, plan, fiber) for ch in plan.channels]

    def with_options(self, **options) -> "NliModelHandle":
        """Handle with model-specific options applied (e.g. ``quad``); options a model
        does not use are ignored."""
        if self.configure is None:
            return self
        return self.configure(**options)


class UnknownModelError(KeyError):
    pass


_REGISTRY: dict[str, NliModelHandle] = {}


def register_model(handle: NliModelHandle) -> None:
    if handle.name in _REGISTRY:
        raise ValueError(f"model {handle.name!r} is already registered")
    _REGISTRY[handle.name] = handle


def lookup_model(name: str) -> NliModelHandle:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise UnknownModelError(f"unknown NLI model {name!r}; registered: {sorted(_REGISTRY)}") from None


def registered_models() -> tuple[str, ...]:
    return tuple(sorted(_REGISTRY))


def closed_form_model(**_ignored) -> NliModelHandle:
    return NliModelHandle("closed_form", closed_form.eta_total_closed,
                          closed_form.evaluate_plan_closed, closed_form_model)


def integral_model(quad: QuadratureSpec | None = None, workers: int = 1,
                   backend: str | None = None, **_ignored) -> NliModelHandle:
    quad = quad or integral.DEFAULT_QUAD

    def one(ch, plan, fiber):
        return integral.eta_total_integral(ch, plan, fiber, quad, backend)

    def whole(plan, fiber):
        return integral.evaluate_plan(plan, fiber, quad, workers, backend)

    return NliModelHandle("integral", one, whole, integral_model)


register_model(closed_form_model())
register_model(integral_model())
