"""Dense-tensor reverse-mode automatic differentiation, plus Adam.

Everything is float64. Ops record their backward rules on the innermost
active Tape of the current thread; with no active tape they are plain
numpy computations (used for inference and finite differencing).
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

import numpy as np

_LOCAL = threading.local()


def _tape_stack() -> list:
    stack = getattr(_LOCAL, "tapes", None)
    if stack is None:
        stack = []
        _LOCAL.tapes = stack
    return stack


def _active_tape():
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """A dense float64 array with an optional accumulated gradient."""

    __slots__ = ("data", "requires_grad", "grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(_as_tensor(other), self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(_as_tensor(other), self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


class Tape:
    """Ordered record of op applications; backward replays it in exact reverse.

    A tape may be consumed by backward() once; re-running backward without a
    fresh forward pass is rejected.
    """

    def __init__(self):
        self._records: list[tuple[Tensor, object]] = []
        self._spent = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _tape_stack().pop()
        assert popped is self, "tapes must unwind in LIFO order"
        return False

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Tensor, params=None) -> None:
        """Populate grads of every requires_grad tensor reachable from loss.

        `params`, when given, is an iterable of tensors that must end up with
        a grad even if the loss does not depend on them (they get zeros).
        """
        if self._spent:
            raise RuntimeError("tape already consumed by a previous backward pass")
        self._spent = True
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
        loss._accumulate(np.ones_like(loss.data))
        for out, pull in reversed(self._records):
            if out.grad is not None:
                pull(out.grad)
        if params is not None:
            for p in params:
                if p.requires_grad and p.grad is None:
                    p.grad = np.zeros_like(p.data)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _emit(inputs: tuple[Tensor, ...], out_data: np.ndarray, pull) -> Tensor:
    tape = _active_tape()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=track)
    if track:
        tape._records.append((out, pull))
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient down to `shape` after numpy broadcasting expanded it."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitive ops


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data + b.data
    except ValueError as e:
        raise ValueError(f"add: incompatible shapes {a.shape} and {b.shape}") from e

    def pull(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g, b.data.shape))

    return _emit((a, b), out_data, pull)


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data - b.data
    except ValueError as e:
        raise ValueError(f"sub: incompatible shapes {a.shape} and {b.shape}") from e

    def pull(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(-g, b.data.shape))

    return _emit((a, b), out_data, pull)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    try:
        out_data = a.data * b.data
    except ValueError as e:
        raise ValueError(f"mul: incompatible shapes {a.shape} and {b.shape}") from e

    def pull(g):
        if a.requires_grad:
            a._accumulate(_unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            b._accumulate(_unbroadcast(g * a.data, b.data.shape))

    return _emit((a, b), out_data, pull)


def neg(a) -> Tensor:
    a = _as_tensor(a)

    def pull(g):
        if a.requires_grad:
            a._accumulate(-g)

    return _emit((a,), -a.data, pull)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} and {b.shape}")
    out_data = a.data @ b.data

    def pull(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _emit((a, b), out_data, pull)


def transpose(a) -> Tensor:
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError(f"transpose: needs a 2-d tensor, got shape {a.shape}")

    def pull(g):
        if a.requires_grad:
            a._accumulate(g.T)

    return _emit((a,), a.data.T.copy(), pull)


def tanh(a) -> Tensor:
    a = _as_tensor(a)
    out_data = np.tanh(a.data)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * (1.0 - out_data * out_data))

    return _emit((a,), out_data, pull)


def _sigmoid_data(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(a) -> Tensor:
    a = _as_tensor(a)
    out_data = _sigmoid_data(a.data)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * out_data * (1.0 - out_data))

    return _emit((a,), out_data, pull)


def relu(a) -> Tensor:
    a = _as_tensor(a)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * (a.data > 0))  # subgradient 0 at the kink

    return _emit((a,), np.maximum(a.data, 0.0), pull)


def absolute(a) -> Tensor:
    a = _as_tensor(a)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * np.sign(a.data))  # sign(0) = 0: subgradient at the kink

    return _emit((a,), np.abs(a.data), pull)


def log(a) -> Tensor:
    a = _as_tensor(a)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g / a.data)

    return _emit((a,), np.log(a.data), pull)


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data ** exponent

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * exponent * a.data ** (exponent - 1.0))

    return _emit((a,), out_data, pull)


def clip(a, lo: float, hi: float) -> Tensor:
    a = _as_tensor(a)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g * ((a.data >= lo) & (a.data <= hi)))

    return _emit((a,), np.clip(a.data, lo, hi), pull)


def sum(a, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    a = _as_tensor(a)
    out_data = np.sum(a.data, axis=axis, keepdims=keepdims)

    def pull(g):
        if not a.requires_grad:
            return
        if axis is None:
            a._accumulate(np.broadcast_to(g, a.data.shape).copy())
        else:
            gg = g if keepdims else np.expand_dims(g, axis)
            a._accumulate(np.broadcast_to(gg, a.data.shape).copy())

    return _emit((a,), out_data, pull)


def mean(a) -> Tensor:
    a = _as_tensor(a)
    n = a.data.size

    def pull(g):
        if a.requires_grad:
            a._accumulate(np.broadcast_to(g / n, a.data.shape).copy())

    return _emit((a,), np.mean(a.data), pull)


def concat(tensors, axis: int = 0) -> Tensor:
    ts = [_as_tensor(t) for t in tensors]
    if not ts:
        raise ValueError("concat: needs at least one tensor")
    try:
        out_data = np.concatenate([t.data for t in ts], axis=axis)
    except ValueError as e:
        raise ValueError(f"concat: incompatible shapes {[t.shape for t in ts]} along axis {axis}") from e
    sizes = [t.data.shape[axis] for t in ts]
    offsets = np.cumsum([0] + sizes)

    def pull(g):
        for t, start, stop in zip(ts, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(start, stop)
                t._accumulate(g[tuple(index)])

    return _emit(tuple(ts), out_data, pull)


def getitem(a, idx) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data[idx]
    if not isinstance(out_data, np.ndarray):
        out_data = np.asarray(out_data)

    def pull(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            buf[idx] += g
            a._accumulate(buf)

    return _emit((a,), out_data.copy(), pull)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    out_data = a.data.reshape(shape)

    def pull(g):
        if a.requires_grad:
            a._accumulate(g.reshape(a.data.shape))

    return _emit((a,), out_data.copy(), pull)


def broadcast_rows(a, n: int) -> Tensor:
    """Repeat a (d,) or (1,d) tensor into an (n,d) matrix."""
    a = _as_tensor(a)
    row = a.data.reshape(1, -1)
    out_data = np.broadcast_to(row, (n, row.shape[1])).copy()

    def pull(g):
        if a.requires_grad:
            a._accumulate(g.sum(axis=0).reshape(a.data.shape))

    return _emit((a,), out_data, pull)


def rowwise_max_pool(a) -> Tensor:
    """Columnwise max over the rows of an (n,d) tensor, giving a (d,) vector."""
    a = _as_tensor(a)
    if a.data.ndim != 2:
        raise ValueError(f"rowwise_max_pool: needs a 2-d tensor, got shape {a.shape}")
    out_data = a.data.max(axis=0)
    argmax = a.data.argmax(axis=0)  # ties: gradient routed to the first max row

    def pull(g):
        if a.requires_grad:
            buf = np.zeros_like(a.data)
            buf[argmax, np.arange(a.data.shape[1])] = g
            a._accumulate(buf)

    return _emit((a,), out_data, pull)


# ---------------------------------------------------------------------------
# optimizer


class Adam:
    """Adam with bias correction over a fixed, ordered name -> Tensor map.

    step() consumes accumulated grads and clears them; parameters whose grad
    is None (never touched by backward) are skipped entirely.
    """

    def __init__(self, params: dict[str, Tensor], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def step(self) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1 ** self.t
        bias2 = 1.0 - self.beta2 ** self.t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            g = p.grad
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)
            p.grad = None

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None


def global_grad_norm(params) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad * p.grad))
    return float(np.sqrt(total))


def clip_global_norm(params, max_norm: float) -> float:
    """Scale all grads so their joint L2 norm is at most max_norm."""
    params = list(params)
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / (norm + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return norm


# ---------------------------------------------------------------------------
# gradient checking


def grad_check_report(f, params: dict[str, Tensor], h: float = 1e-5,
                      samples_per_tensor: int | None = None,
                      rng: np.random.Generator | None = None) -> dict[str, float]:
    """Central-difference check of f's analytic gradients, per parameter.

    f is a deterministic zero-argument callable returning a scalar Tensor.
    Returns, per parameter name, the max over sampled coordinates of
    |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
    """
    if rng is None:
        rng = np.random.default_rng(0)
    for p in params.values():
        p.grad = None
    with Tape() as tape:
        loss = f()
        tape.backward(loss, params=params.values())
    analytic = {name: p.grad.copy() for name, p in params.items()}
    for p in params.values():
        p.grad = None

    report: dict[str, float] = {}
    for name, p in params.items():
        flat = p.data.reshape(-1)
        a_flat = analytic[name].reshape(-1)
        n = flat.size
        if samples_per_tensor is None or samples_per_tensor >= n:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=samples_per_tensor, replace=False)
        worst = 0.0
        for c in coords:
            orig = flat[c]
            flat[c] = orig + h
            f_plus = float(f().data)
            flat[c] = orig - h
            f_minus = float(f().data)
            flat[c] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            a = a_flat[c]
            err = np.abs(a - numeric) / max(np.abs(a), np.abs(numeric), 1e-8)
            worst = max(worst, float(err))
        report[name] = worst
    return report


def grad_check(f, params: dict[str, Tensor], h: float = 1e-5,
               samples_per_tensor: int | None = None,
               rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic and central-difference gradients."""
    report = grad_check_report(f, params, h=h, samples_per_tensor=samples_per_tensor, rng=rng)
    return max(report.values(), default=0.0)


# ---------------------------------------------------------------------------
# parameter serialization (versioned JSON; bit-exact at double precision)

PARAM_FORMAT_VERSION = 1


def params_to_payload(params: dict[str, Tensor]) -> dict:
    return {
        name: {"shape": list(p.data.shape), "values": p.data.reshape(-1).tolist()}
        for name, p in params.items()
    }


def params_from_payload(payload: dict) -> dict[str, Tensor]:
    out: dict[str, Tensor] = {}
    for name, entry in payload.items():
        shape = tuple(entry["shape"])
        values = np.asarray(entry["values"], dtype=np.float64)
        if values.size != int(np.prod(shape)):
            raise ValueError(f"parameter '{name}': {values.size} values do not fill shape {shape}")
        out[name] = Tensor(values.reshape(shape), requires_grad=True)
    return out


def save_params(path, params: dict[str, Tensor]) -> None:
    blob = {"version": PARAM_FORMAT_VERSION, "params": params_to_payload(params)}
    Path(path).write_text(json.dumps(blob), encoding="utf-8")


def load_params(path) -> dict[str, Tensor]:
    blob = json.loads(Path(path).read_text(encoding="utf-8"))
    if blob.get("version") != PARAM_FORMAT_VERSION:
        raise ValueError(f"unsupported parameter file version: {blob.get('version')}")
    return params_from_payload(blob["params"])
