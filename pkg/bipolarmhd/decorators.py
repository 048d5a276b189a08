"""
Decorators for trajectory observers
"""

from typing import Any, Callable, Iterable, List, Union


class ObserverHandler:
    """Internal observer storage"""

    def __init__(self, func: Callable, stride: int = 1, final: bool = True):
        if stride < 1:
            raise ValueError(f"observer stride must be >= 1, got {stride}")
        self.func = func
        self.stride = int(stride)
        self.final = final
        self.name = getattr(func, "__name__", repr(func))

    def __call__(self, state: Any, step: int) -> Any:
        return self.func(state, step)

    def __repr__(self) -> str:
        return f"ObserverHandler({self.name}, stride={self.stride})"


def observer(stride: int = 1, final: bool = True):
    """
    Decorator marking a callable as a trajectory observer.

    Usage:
        @observer(stride=10)
        def record(state, step):
            records.append(record_energy(state, f, params))

    Args:
        stride: call every `stride` steps (step 0 is always observed)
        final: also call on the last step when it is not a multiple of stride
    """
    def decorator(func: Callable) -> Callable:
        if not hasattr(func, "_bipolarmhd_observers"):
            func._bipolarmhd_observers = []
        func._bipolarmhd_observers.append(ObserverHandler(func, stride, final))
        return func
    return decorator


def as_observers(items: Iterable[Union[Callable, ObserverHandler]]) -> List[ObserverHandler]:
    """Normalize decorated functions, handlers and bare callables (stride 1)"""
    handlers: List[ObserverHandler] = []
    for item in items:
        if isinstance(item, ObserverHandler):
            handlers.append(item)
        elif hasattr(item, "_bipolarmhd_observers"):
            handlers.extend(item._bipolarmhd_observers)
        else:
            handlers.append(ObserverHandler(item))
    return handlers


def stride_matches(handler: ObserverHandler, step: int, last_step: int) -> bool:
    """Whether `handler` observes `step` of a run ending at `last_step`"""
    if step == 0 or step % handler.stride == 0:
        return True
    return handler.final and step == last_step
