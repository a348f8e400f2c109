"""Input-convex feed-forward networks.

Two architectures are provided:

* :class:`FicnnWeights`: the output is convex in the whole input vector.
* :class:`PicnnWeights`: the input splits into a context vector ``x``
  (here: elapsed time and temperature) and a designated vector ``y``
  (here: C-rate); the output is convex in ``y`` for every fixed ``x``.

Convexity in ``y`` holds by construction as long as every recurrent
weight matrix ``W_z`` is elementwise non-negative and every activation
on the convex path is convex and nondecreasing.  The context path is an
ordinary feed-forward chain and carries no restrictions.

All evaluation is dense float64; batches are row-major (samples along
axis 0).  Networks here are tiny (a few thousand parameters), so the
hand-written reverse-mode pass below is both fast enough and exact.
"""

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .activations import get_activation, require_convex
from .exceptions import NetworkShapeError, NonFiniteValueError

# ---------------------------------------------------------------------------
# Architectures


@dataclass(frozen=True)
class FicnnArch:
    """Shape of a fully input-convex network.

    ``widths`` lists the output width of each layer; the last entry must
    be 1 so the network is scalar-valued.
    """

    n_y: int
    widths: tuple
    g_names: tuple

    def __post_init__(self):
        if self.n_y < 1:
            raise NetworkShapeError("input width must be >= 1")
        if len(self.widths) < 1:
            raise NetworkShapeError("need at least one layer")
        if self.widths[-1] != 1:
            raise NetworkShapeError("last layer width must be 1 (scalar output)")
        if len(self.g_names) != len(self.widths):
            raise NetworkShapeError(
                f"{len(self.widths)} layers but {len(self.g_names)} activations"
            )
        for name in self.g_names:
            require_convex(name)

    @property
    def k(self) -> int:
        return len(self.widths)


@dataclass(frozen=True)
class PicnnArch:
    """Shape of a partially input-convex network.

    ``z_widths`` are the convex-path layer outputs (last must be 1);
    ``u_widths`` are the context-path hidden widths, one fewer than the
    convex layers because the raw context drives layer 0 directly.
    """

    n_x: int
    n_y: int
    z_widths: tuple
    u_widths: tuple
    g_names: tuple
    g_tilde_names: tuple

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise NetworkShapeError("input widths must be >= 1")
        if len(self.z_widths) < 1:
            raise NetworkShapeError("need at least one convex layer")
        if self.z_widths[-1] != 1:
            raise NetworkShapeError("last convex layer width must be 1")
        if len(self.u_widths) != len(self.z_widths) - 1:
            raise NetworkShapeError(
                "context path must have exactly one layer fewer than the "
                f"convex path; got {len(self.u_widths)} vs {len(self.z_widths)}"
            )
        if len(self.g_names) != len(self.z_widths):
            raise NetworkShapeError("one convex activation per convex layer")
        if len(self.g_tilde_names) != len(self.u_widths):
            raise NetworkShapeError("one context activation per context layer")
        for name in self.g_names:
            require_convex(name)
        for name in self.g_tilde_names:
            get_activation(name)

    @property
    def k(self) -> int:
        return len(self.z_widths)

    def u_dim(self, i: int) -> int:
        """Width of the context state feeding convex layer i."""
        return self.n_x if i == 0 else self.u_widths[i - 1]

    def z_dim(self, i: int) -> int:
        """Width of the convex state entering layer i (0 means absent)."""
        return 0 if i == 0 else self.z_widths[i - 1]

    @classmethod
    def default(cls, n_x: int = 2, n_y: int = 1) -> "PicnnArch":
        """32/8/1 convex path with mirrored context widths."""
        return cls(
            n_x=n_x,
            n_y=n_y,
            z_widths=(32, 8, 1),
            u_widths=(32, 8),
            g_names=("softplus", "softplus", "identity"),
            g_tilde_names=("tanh", "tanh"),
        )


# ---------------------------------------------------------------------------
# Input/output scaling
#
# Affine maps on y (positive scale) and a positive output factor preserve
# convexity, so a fitted standardization can ride along with the weights
# and the network keeps its guarantees while consuming physical units.


@dataclass
class InputScaler:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    out_scale: float = 1.0

    def validate(self, arch: "PicnnArch") -> None:
        _expect_shape(np.asarray(self.x_mean), (arch.n_x,), None, "scaler",
                      "x_mean")
        _expect_shape(np.asarray(self.x_scale), (arch.n_x,), None, "scaler",
                      "x_scale")
        _expect_shape(np.asarray(self.y_mean), (arch.n_y,), None, "scaler",
                      "y_mean")
        _expect_shape(np.asarray(self.y_scale), (arch.n_y,), None, "scaler",
                      "y_scale")
        if np.min(self.x_scale) <= 0 or np.min(self.y_scale) <= 0:
            raise NetworkShapeError("scaler scales must be positive")
        if self.out_scale <= 0:
            raise NetworkShapeError("scaler out_scale must be positive")

    def copy(self) -> "InputScaler":
        return InputScaler(
            x_mean=np.array(self.x_mean, dtype=float),
            x_scale=np.array(self.x_scale, dtype=float),
            y_mean=np.array(self.y_mean, dtype=float),
            y_scale=np.array(self.y_scale, dtype=float),
            out_scale=float(self.out_scale),
        )

    def to_dict(self) -> dict:
        return {
            "x_mean": _mat(self.x_mean),
            "x_scale": _mat(self.x_scale),
            "y_mean": _mat(self.y_mean),
            "y_scale": _mat(self.y_scale),
            "out_scale": float(self.out_scale),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InputScaler":
        return cls(
            x_mean=_unmat(d["x_mean"]),
            x_scale=_unmat(d["x_scale"]),
            y_mean=_unmat(d["y_mean"]),
            y_scale=_unmat(d["y_scale"]),
            out_scale=float(d["out_scale"]),
        )

    @classmethod
    def identity(cls, arch: "PicnnArch") -> "InputScaler":
        return cls(
            x_mean=np.zeros(arch.n_x), x_scale=np.ones(arch.n_x),
            y_mean=np.zeros(arch.n_y), y_scale=np.ones(arch.n_y),
            out_scale=1.0,
        )


# ---------------------------------------------------------------------------
# Weight containers


@dataclass
class FicnnWeights:
    """Parameters of a fully input-convex network.

    Lists are indexed by layer; ``W_z[0]`` is None because layer 0 has
    no recurrent state.
    """

    arch: FicnnArch
    W_y: list
    W_z: list
    b: list

    def validate(self) -> None:
        a = self.arch
        if not (len(self.W_y) == len(self.W_z) == len(self.b) == a.k):
            raise NetworkShapeError(
                f"expected {a.k} layers, got "
                f"{len(self.W_y)}/{len(self.W_z)}/{len(self.b)}"
            )
        if self.W_z[0] is not None:
            raise NetworkShapeError("layer 0 must not carry W_z", layer=0)
        for i in range(a.k):
            d_out = a.widths[i]
            _expect_shape(self.W_y[i], (d_out, a.n_y), i, "convex", "W_y")
            _expect_shape(self.b[i], (d_out,), i, "convex", "b")
            if i >= 1:
                d_in = a.widths[i - 1]
                _expect_shape(self.W_z[i], (d_out, d_in), i, "convex", "W_z")
                if np.min(self.W_z[i]) < 0:
                    raise NetworkShapeError(
                        "W_z has negative entries; run enforce_convexity",
                        layer=i,
                        path="convex",
                    )

    def copy(self) -> "FicnnWeights":
        return FicnnWeights(
            arch=self.arch,
            W_y=[w.copy() for w in self.W_y],
            W_z=[None] + [w.copy() for w in self.W_z[1:]],
            b=[w.copy() for w in self.b],
        )

    def param_items(self) -> Iterator:
        for i in range(self.arch.k):
            yield f"z{i}.W_y", self.W_y[i]
            yield f"z{i}.b", self.b[i]
            if i >= 1:
                yield f"z{i}.W_z", self.W_z[i]


@dataclass
class PicnnWeights:
    """Parameters of a partially input-convex network.

    Convex-path lists are indexed by layer 0..k-1; the entries that only
    exist from layer 1 on (``W_z``, ``W_zu``, ``b_z``) hold None at
    index 0.  ``Wt``/``bt`` form the context chain (k-1 layers).
    """

    arch: PicnnArch
    W_y: list
    W_u: list
    b: list
    W_yu: list
    b_y: list
    W_z: list
    W_zu: list
    b_z: list
    Wt: list = field(default_factory=list)
    bt: list = field(default_factory=list)
    scaler: "InputScaler | None" = None

    def validate(self) -> None:
        a = self.arch
        k = a.k
        if self.scaler is not None:
            self.scaler.validate(a)
        for name, lst in (
            ("W_y", self.W_y),
            ("W_u", self.W_u),
            ("b", self.b),
            ("W_yu", self.W_yu),
            ("b_y", self.b_y),
            ("W_z", self.W_z),
            ("W_zu", self.W_zu),
            ("b_z", self.b_z),
        ):
            if len(lst) != k:
                raise NetworkShapeError(f"{name} list must have {k} entries")
        if len(self.Wt) != k - 1 or len(self.bt) != k - 1:
            raise NetworkShapeError(f"context chain must have {k - 1} layers")
        for i in range(k):
            d_out = a.z_widths[i]
            m = a.u_dim(i)
            _expect_shape(self.W_y[i], (d_out, a.n_y), i, "convex", "W_y")
            _expect_shape(self.W_u[i], (d_out, m), i, "convex", "W_u")
            _expect_shape(self.b[i], (d_out,), i, "convex", "b")
            _expect_shape(self.W_yu[i], (a.n_y, m), i, "convex", "W_yu")
            _expect_shape(self.b_y[i], (a.n_y,), i, "convex", "b_y")
            if i == 0:
                for name, lst in (("W_z", self.W_z), ("W_zu", self.W_zu),
                                  ("b_z", self.b_z)):
                    if lst[0] is not None:
                        raise NetworkShapeError(
                            f"layer 0 must not carry {name}", layer=0
                        )
            else:
                d_in = a.z_widths[i - 1]
                _expect_shape(self.W_z[i], (d_out, d_in), i, "convex", "W_z")
                _expect_shape(self.W_zu[i], (d_in, m), i, "convex", "W_zu")
                _expect_shape(self.b_z[i], (d_in,), i, "convex", "b_z")
                if np.min(self.W_z[i]) < 0:
                    raise NetworkShapeError(
                        "W_z has negative entries; run enforce_convexity",
                        layer=i,
                        path="convex",
                    )
        for i in range(k - 1):
            _expect_shape(
                self.Wt[i], (a.u_widths[i], a.u_dim(i)), i, "context", "Wt"
            )
            _expect_shape(self.bt[i], (a.u_widths[i],), i, "context", "bt")

    def copy(self) -> "PicnnWeights":
        def cp(lst):
            return [None if w is None else w.copy() for w in lst]

        return PicnnWeights(
            arch=self.arch,
            W_y=cp(self.W_y),
            W_u=cp(self.W_u),
            b=cp(self.b),
            W_yu=cp(self.W_yu),
            b_y=cp(self.b_y),
            W_z=cp(self.W_z),
            W_zu=cp(self.W_zu),
            b_z=cp(self.b_z),
            Wt=cp(self.Wt),
            bt=cp(self.bt),
            scaler=None if self.scaler is None else self.scaler.copy(),
        )

    def param_items(self) -> Iterator:
        for i in range(self.arch.k):
            yield f"z{i}.W_y", self.W_y[i]
            yield f"z{i}.W_u", self.W_u[i]
            yield f"z{i}.b", self.b[i]
            yield f"z{i}.W_yu", self.W_yu[i]
            yield f"z{i}.b_y", self.b_y[i]
            if i >= 1:
                yield f"z{i}.W_z", self.W_z[i]
                yield f"z{i}.W_zu", self.W_zu[i]
                yield f"z{i}.b_z", self.b_z[i]
        for i in range(self.arch.k - 1):
            yield f"u{i}.Wt", self.Wt[i]
            yield f"u{i}.bt", self.bt[i]


def _expect_shape(arr, shape, layer, path, name):
    if arr is None or tuple(arr.shape) != tuple(shape):
        got = None if arr is None else tuple(arr.shape)
        raise NetworkShapeError(
            f"{name} must have shape {tuple(shape)}, got {got}",
            layer=layer,
            path=path,
        )


# ---------------------------------------------------------------------------
# Initialization


def _glorot(rng, d_out, d_in):
    r = np.sqrt(6.0 / (d_in + d_out))
    return rng.uniform(-r, r, size=(d_out, d_in))


def init_ficnn(arch: FicnnArch, seed: int = 0) -> FicnnWeights:
    """Glorot-uniform weights; W_z drawn non-negative so the convexity
    constraint holds from the start."""
    rng = np.random.default_rng(seed)
    W_y, W_z, b = [], [None], []
    for i in range(arch.k):
        d_out = arch.widths[i]
        W_y.append(_glorot(rng, d_out, arch.n_y))
        b.append(np.zeros(d_out))
        if i >= 1:
            d_in = arch.widths[i - 1]
            r = np.sqrt(6.0 / (d_in + d_out))
            W_z.append(rng.uniform(0.0, r, size=(d_out, d_in)))
    w = FicnnWeights(arch=arch, W_y=W_y, W_z=W_z, b=b)
    w.validate()
    return w


def init_picnn(arch: PicnnArch, seed: int = 0) -> PicnnWeights:
    """Glorot-uniform weights; W_z drawn non-negative so the convexity
    constraint holds from the start."""
    rng = np.random.default_rng(seed)
    k = arch.k
    W_y, W_u, b = [], [], []
    W_yu, b_y = [], []
    W_z, W_zu, b_z = [None], [None], [None]
    Wt, bt = [], []
    for i in range(k):
        d_out = arch.z_widths[i]
        m = arch.u_dim(i)
        W_y.append(_glorot(rng, d_out, arch.n_y))
        W_u.append(_glorot(rng, d_out, m))
        b.append(np.zeros(d_out))
        W_yu.append(_glorot(rng, arch.n_y, m))
        # gate biases start at 1 so y passes through the Hadamard product
        b_y.append(np.ones(arch.n_y))
        if i >= 1:
            d_in = arch.z_widths[i - 1]
            r = np.sqrt(6.0 / (d_in + d_out))
            W_z.append(rng.uniform(0.0, r, size=(d_out, d_in)))
            W_zu.append(_glorot(rng, d_in, m))
            b_z.append(np.ones(d_in))
    for i in range(k - 1):
        Wt.append(_glorot(rng, arch.u_widths[i], arch.u_dim(i)))
        bt.append(np.zeros(arch.u_widths[i]))
    w = PicnnWeights(
        arch=arch, W_y=W_y, W_u=W_u, b=b, W_yu=W_yu, b_y=b_y,
        W_z=W_z, W_zu=W_zu, b_z=b_z, Wt=Wt, bt=bt,
    )
    w.validate()
    return w


def enforce_convexity(weights):
    """Clamp every W_z entry to be >= 0, in place; other weights are
    untouched.  Returns the same object for chaining.  Idempotent."""
    for i, w in enumerate(weights.W_z):
        if i >= 1:
            np.maximum(w, 0.0, out=w)
    return weights


# ---------------------------------------------------------------------------
# Forward evaluation


def _check_finite(arr, layer, path):
    if not np.all(np.isfinite(arr)):
        bad = int(np.argwhere(~np.isfinite(arr).all(axis=tuple(
            range(1, arr.ndim))))[0, 0]) if arr.ndim > 1 else None
        raise NonFiniteValueError(
            f"non-finite value on {path} path at layer {layer}",
            layer=layer,
            batch_index=bad,
        )


def _as_batch(v, width, what):
    arr = np.asarray(v, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise NetworkShapeError(
            f"{what} must have width {width}, got shape {tuple(arr.shape)}"
        )
    return arr


def ficnn_forward_batch(weights: FicnnWeights, Y) -> np.ndarray:
    a = weights.arch
    Y = _as_batch(Y, a.n_y, "y")
    z = None
    for i in range(a.k):
        pre = Y @ weights.W_y[i].T + weights.b[i]
        if i >= 1:
            pre += z @ weights.W_z[i].T
        z = get_activation(a.g_names[i]).fn(pre)
        _check_finite(z, i, "convex")
    return z[:, 0]


def ficnn_forward(weights: FicnnWeights, y) -> float:
    return float(ficnn_forward_batch(weights, np.atleast_1d(y))[0])


def _picnn_forward_cache(weights: PicnnWeights, X, Y):
    """Run the forward pass keeping every intermediate needed by the
    reverse pass.  Inputs are physical; the cache holds them in model
    (standardized) space when a scaler is attached."""
    a = weights.arch
    k = a.k
    sc = weights.scaler
    if sc is not None:
        X = (X - sc.x_mean) / sc.x_scale
        Y = (Y - sc.y_mean) / sc.y_scale
    cache = {
        "X": X, "Y": Y,
        "u": [X],            # context states u_0..u_{k-1}
        "a_u": [],           # context pre-activations
        "z": [None],         # convex states z_1..z_k stored from index 1
        "pre": [],           # convex pre-activations per layer
        "s_y": [],           # y-gate values per layer
        "gy": [],            # y ⊙ gate per layer
        "s_z": [None],       # z-gate pre-clamp, from layer 1
        "gz": [None],        # z-gate post-clamp, from layer 1
        "hz": [None],        # z ⊙ gate, from layer 1
    }
    u = X
    for i in range(k - 1):
        pre_u = u @ weights.Wt[i].T + weights.bt[i]
        u = get_activation(a.g_tilde_names[i]).fn(pre_u)
        _check_finite(u, i, "context")
        cache["a_u"].append(pre_u)
        cache["u"].append(u)
    z = None
    for i in range(k):
        ui = cache["u"][i]
        s_y = ui @ weights.W_yu[i].T + weights.b_y[i]
        gy = Y * s_y
        pre = gy @ weights.W_y[i].T + ui @ weights.W_u[i].T + weights.b[i]
        if i >= 1:
            s_z = ui @ weights.W_zu[i].T + weights.b_z[i]
            gz = np.maximum(s_z, 0.0)
            hz = z * gz
            pre = pre + hz @ weights.W_z[i].T
            cache["s_z"].append(s_z)
            cache["gz"].append(gz)
            cache["hz"].append(hz)
        z = get_activation(a.g_names[i]).fn(pre)
        _check_finite(z, i, "convex")
        cache["s_y"].append(s_y)
        cache["gy"].append(gy)
        cache["pre"].append(pre)
        cache["z"].append(z)
    cache["out"] = z[:, 0] if sc is None else sc.out_scale * z[:, 0]
    return cache


def picnn_forward_batch(weights: PicnnWeights, X, Y) -> np.ndarray:
    a = weights.arch
    X = _as_batch(X, a.n_x, "x")
    Y = _as_batch(Y, a.n_y, "y")
    if X.shape[0] != Y.shape[0]:
        raise NetworkShapeError(
            f"batch mismatch: {X.shape[0]} context rows vs {Y.shape[0]} y rows"
        )
    return _picnn_forward_cache(weights, X, Y)["out"]


def picnn_forward(weights: PicnnWeights, x, y) -> float:
    a = weights.arch
    X = _as_batch(np.atleast_1d(x), a.n_x, "x")
    Y = _as_batch(np.atleast_1d(y), a.n_y, "y")
    return float(_picnn_forward_cache(weights, X, Y)["out"][0])


# ---------------------------------------------------------------------------
# Reverse-mode differentiation


def zero_grads(weights) -> dict:
    return {name: np.zeros_like(arr) for name, arr in weights.param_items()}


def picnn_value_and_grads(weights: PicnnWeights, X, Y, upstream=None):
    """Evaluate the network and backpropagate.

    Returns ``(values, grads, grad_Y)`` where ``values`` has shape (B,),
    ``grads`` maps parameter name to the gradient of
    sum_b upstream[b] * f(x_b, y_b) (summed over the batch), and
    ``grad_Y`` has shape (B, n_y) with per-row gradients in y scaled by
    the row's upstream weight.
    """
    a = weights.arch
    X = _as_batch(X, a.n_x, "x")
    Y = _as_batch(Y, a.n_y, "y")
    if X.shape[0] != Y.shape[0]:
        raise NetworkShapeError(
            f"batch mismatch: {X.shape[0]} context rows vs {Y.shape[0]} y rows"
        )
    B = X.shape[0]
    if upstream is None:
        upstream = np.ones(B)
    else:
        upstream = np.asarray(upstream, dtype=float).reshape(B)

    cache = _picnn_forward_cache(weights, X, Y)
    Y = cache["Y"]  # model-space y (standardized when a scaler is attached)
    if weights.scaler is not None:
        upstream = upstream * weights.scaler.out_scale
    k = a.k
    grads = zero_grads(weights)
    grad_Y = np.zeros_like(Y)
    du_conv = [None] * k  # gradient reaching each context state u_i

    dz_out = upstream[:, None]  # d/d z_{i+1}, starts at the scalar output
    for i in range(k - 1, -1, -1):
        act = get_activation(a.g_names[i])
        dpre = dz_out * act.deriv(cache["pre"][i])
        ui = cache["u"][i]

        grads[f"z{i}.b"] += dpre.sum(axis=0)
        grads[f"z{i}.W_u"] += dpre.T @ ui
        du = dpre @ weights.W_u[i]

        grads[f"z{i}.W_y"] += dpre.T @ cache["gy"][i]
        dgy = dpre @ weights.W_y[i]
        grad_Y += dgy * cache["s_y"][i]
        ds_y = dgy * Y
        grads[f"z{i}.b_y"] += ds_y.sum(axis=0)
        grads[f"z{i}.W_yu"] += ds_y.T @ ui
        du += ds_y @ weights.W_yu[i]

        if i >= 1:
            grads[f"z{i}.W_z"] += dpre.T @ cache["hz"][i]
            dhz = dpre @ weights.W_z[i]
            dz_out = dhz * cache["gz"][i]
            dgz = dhz * cache["z"][i]
            ds_z = dgz * (cache["s_z"][i] > 0)
            grads[f"z{i}.b_z"] += ds_z.sum(axis=0)
            grads[f"z{i}.W_zu"] += ds_z.T @ ui
            du += ds_z @ weights.W_zu[i]
        du_conv[i] = du

    du_total = du_conv[k - 1] if k > 1 else None
    for i in range(k - 2, -1, -1):
        act = get_activation(a.g_tilde_names[i])
        da_u = du_total * act.deriv(cache["a_u"][i])
        grads[f"u{i}.bt"] += da_u.sum(axis=0)
        grads[f"u{i}.Wt"] += da_u.T @ cache["u"][i]
        du_total = du_conv[i] + da_u @ weights.Wt[i]

    if weights.scaler is not None:
        grad_Y = grad_Y / weights.scaler.y_scale
    return cache["out"], grads, grad_Y


def picnn_backward(weights: PicnnWeights, x, y, upstream: float = 1.0):
    """Single-sample convenience wrapper: returns (grads, grad_y)."""
    _, grads, grad_Y = picnn_value_and_grads(
        weights, np.atleast_1d(x)[None, :], np.atleast_1d(y)[None, :],
        np.array([upstream]),
    )
    return grads, grad_Y[0]


def picnn_grad_y_batch(weights: PicnnWeights, X, Y) -> np.ndarray:
    """Per-row gradient of the output in y; shape (B, n_y)."""
    _, _, grad_Y = picnn_value_and_grads(weights, X, Y)
    return grad_Y


# ---------------------------------------------------------------------------
# Serialization (lossless for float64: json emits shortest round-trip reprs)


def _mat(arr):
    return None if arr is None else np.asarray(arr, dtype=float).tolist()


def _unmat(lst):
    return None if lst is None else np.asarray(lst, dtype=float)


def weights_to_json(weights) -> str:
    if isinstance(weights, FicnnWeights):
        doc = {
            "kind": "ficnn",
            "arch": {
                "n_y": weights.arch.n_y,
                "widths": list(weights.arch.widths),
                "g": list(weights.arch.g_names),
            },
            "layers": [
                {
                    "W_y": _mat(weights.W_y[i]),
                    "b": _mat(weights.b[i]),
                    **({"W_z": _mat(weights.W_z[i])} if i >= 1 else {}),
                }
                for i in range(weights.arch.k)
            ],
        }
    elif isinstance(weights, PicnnWeights):
        a = weights.arch
        layers = []
        for i in range(a.k):
            layer = {
                "W_y": _mat(weights.W_y[i]),
                "W_u": _mat(weights.W_u[i]),
                "b": _mat(weights.b[i]),
                "W_yu": _mat(weights.W_yu[i]),
                "b_y": _mat(weights.b_y[i]),
            }
            if i >= 1:
                layer["W_z"] = _mat(weights.W_z[i])
                layer["W_zu"] = _mat(weights.W_zu[i])
                layer["b_z"] = _mat(weights.b_z[i])
            layers.append(layer)
        doc = {
            "kind": "picnn",
            "arch": {
                "n_x": a.n_x,
                "n_y": a.n_y,
                "z_widths": list(a.z_widths),
                "u_widths": list(a.u_widths),
                "g": list(a.g_names),
                "g_tilde": list(a.g_tilde_names),
            },
            "layers": layers,
            "context_layers": [
                {"Wt": _mat(weights.Wt[i]), "bt": _mat(weights.bt[i])}
                for i in range(a.k - 1)
            ],
        }
        if weights.scaler is not None:
            doc["scaler"] = weights.scaler.to_dict()
    else:
        raise TypeError(f"cannot serialize {type(weights).__name__}")
    return json.dumps(doc, indent=1)


def weights_from_json(text: str):
    doc = json.loads(text)
    kind = doc.get("kind")
    if kind == "ficnn":
        arch = FicnnArch(
            n_y=int(doc["arch"]["n_y"]),
            widths=tuple(doc["arch"]["widths"]),
            g_names=tuple(doc["arch"]["g"]),
        )
        w = FicnnWeights(
            arch=arch,
            W_y=[_unmat(l["W_y"]) for l in doc["layers"]],
            W_z=[_unmat(l.get("W_z")) for l in doc["layers"]],
            b=[_unmat(l["b"]) for l in doc["layers"]],
        )
    elif kind == "picnn":
        arch = PicnnArch(
            n_x=int(doc["arch"]["n_x"]),
            n_y=int(doc["arch"]["n_y"]),
            z_widths=tuple(doc["arch"]["z_widths"]),
            u_widths=tuple(doc["arch"]["u_widths"]),
            g_names=tuple(doc["arch"]["g"]),
            g_tilde_names=tuple(doc["arch"]["g_tilde"]),
        )
        layers = doc["layers"]
        ctx = doc.get("context_layers", [])
        w = PicnnWeights(
            arch=arch,
            W_y=[_unmat(l["W_y"]) for l in layers],
            W_u=[_unmat(l["W_u"]) for l in layers],
            b=[_unmat(l["b"]) for l in layers],
            W_yu=[_unmat(l["W_yu"]) for l in layers],
            b_y=[_unmat(l["b_y"]) for l in layers],
            W_z=[_unmat(l.get("W_z")) for l in layers],
            W_zu=[_unmat(l.get("W_zu")) for l in layers],
            b_z=[_unmat(l.get("b_z")) for l in layers],
            Wt=[_unmat(l["Wt"]) for l in ctx],
            bt=[_unmat(l["bt"]) for l in ctx],
            scaler=(InputScaler.from_dict(doc["scaler"])
                    if "scaler" in doc else None),
        )
    else:
        raise ValueError(f"unknown weights kind {kind!r}")
    w.validate()
    return w


def save_weights(weights, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(weights_to_json(weights))
        fh.write("\n")


def load_weights(path):
    with open(path, "r", encoding="utf-8") as fh:
        return weights_from_json(fh.read())
