"""Multi-task balancing laboratory.

Loss balancing (normalized, uncertainty, DWA) and gradient surgery (PCGrad,
CAGrad, GradDrop) over flat shared-parameter gradients, plus a desk-scale
two-task trainer with handwritten gradients for ablation runs. The trainer's
tasks are synthetic stand-ins; the strategy contracts are over plain vectors
so real models can plug in.
"""

import math
from dataclasses import dataclass, field

import numpy as np

BALANCINGS = ("equal_normalized", "uncertainty", "dwa")
SURGERIES = ("none", "pcgrad", "cagrad", "graddrop")


@dataclass
class TaskLosses:
    """Current per-task losses plus the last two epochs for DWA ratios."""
    values: np.ndarray
    history: list = field(default_factory=list)  # up to 2 previous epochs

    def record_epoch(self, values):
        self.history.append(np.asarray(values, dtype=np.float64))
        if len(self.history) > 2:
            self.history.pop(0)
        self.values = np.asarray(values, dtype=np.float64)


def normalized_total(losses):
    """Eq.-style normalization: each task divided by its detached value.

    Computed as sum(L_i / L_i) term by term so the total is exactly N in
    floating point, not merely close to it.
    """
    values = np.asarray(getattr(losses, "values", losses), dtype=np.float64)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("losses must be finite and positive")
    weights = 1.0 / values
    total = float(sum(v / v for v in values))
    return total, weights


def uncertainty_total(losses, log_vars):
    """total = sum exp(-s_i) L_i + s_i, with its closed-form s-gradient."""
    values = np.asarray(getattr(losses, "values", losses), dtype=np.float64)
    s = np.asarray(log_vars, dtype=np.float64)
    scales = np.exp(-s)
    total = float(np.sum(scales * values + s))
    ds = -scales * values + 1.0
    return total, ds


def dwa_weights(history, temperature=2.0):
    """N * softmax(r_i / T) with r_i the last epoch-over-epoch loss ratio."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    hist = [np.asarray(h, dtype=np.float64) for h in history]
    if len(hist) < 2:
        n = len(hist[0]) if hist else 0
        return np.ones(n if n else 2)
    prev2, prev1 = hist[-2], hist[-1]
    if np.any(prev2 == 0):
        raise ValueError("zero historical loss")
    r = prev1 / prev2
    e = np.exp(r / temperature)
    return len(r) * e / e.sum()


def pcgrad(grads, rng):
    """Project each task's gradient off the ones it conflicts with."""
    g = np.asarray(grads, dtype=np.float64)
    n = g.shape[0]
    if n < 2:
        raise ValueError("pcgrad needs at least 2 tasks")
    out = np.zeros(g.shape[1])
    for i in range(n):
        gi = g[i].copy()
        order = [j for j in range(n) if j != i]
        rng.shuffle(order)
        for j in order:
            dot = float(gi @ g[j])
            if dot < 0:
                denom = float(g[j] @ g[j])
                if denom > 0:
                    gi -= (dot / denom) * g[j]
        out += gi
    return out


def _project_simplex(v):
    # Euclidean projection onto {w : w >= 0, sum w = 1}
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    cond = u - css / idx > 0
    rho = idx[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def cagrad(grads, c):
    """Conflict-averse combined direction.

    Minimizes F(w) = g_w . g_0 + sqrt(phi) ||g_w|| over the simplex
    (golden-section for two tasks, projected gradient descent otherwise),
    then steps along g_0 corrected by the worst-case blend.
    """
    g = np.asarray(grads, dtype=np.float64)
    if g.shape[0] < 2:
        raise ValueError("cagrad needs at least 2 tasks")
    if c < 0:
        raise ValueError("c must be >= 0")
    g0 = g.mean(axis=0)
    if not np.any(g):
        raise ValueError("all task gradients are zero")
    if c == 0:
        return g0
    sphi = c * float(np.linalg.norm(g0))

    def fval(w):
        gw = w @ g
        return float(gw @ g0) + sphi * float(np.linalg.norm(gw))

    if g.shape[0] == 2:
        # golden-section over w1 in [0,1]
        inv = (math.sqrt(5.0) - 1.0) / 2.0
        lo, hi = 0.0, 1.0
        x1 = hi - inv * (hi - lo)
        x2 = lo + inv * (hi - lo)
        f1 = fval(np.array([x1, 1 - x1]))
        f2 = fval(np.array([x2, 1 - x2]))
        while hi - lo > 1e-6:
            if f1 <= f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - inv * (hi - lo)
                f1 = fval(np.array([x1, 1 - x1]))
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + inv * (hi - lo)
                f2 = fval(np.array([x2, 1 - x2]))
        w1 = (lo + hi) / 2.0
        w_star = np.array([w1, 1 - w1])
    else:
        n = g.shape[0]
        w_star = np.full(n, 1.0 / n)
        gg0 = g @ g0
        step = 1.0 / (np.linalg.norm(g, axis=1).max() ** 2 + 1e-12)
        for _ in range(2000):
            gw = w_star @ g
            nrm = np.linalg.norm(gw)
            grad_w = gg0 + (sphi / nrm) * (g @ gw) if nrm > 0 else gg0
            w_star = _project_simplex(w_star - step * grad_w)

    gw = w_star @ g
    nrm = float(np.linalg.norm(gw))
    if nrm < 1e-12:
        return g0
    return g0 + (sphi / nrm) * gw


def graddrop(grads, rng):
    """Keep one sign per coordinate, drawn by the purity of its agreement."""
    g = np.asarray(grads, dtype=np.float64)
    if g.shape[0] < 2:
        raise ValueError("graddrop needs at least 2 tasks")
    s = g.sum(axis=0)
    a = np.abs(g).sum(axis=0)
    purity = np.where(a > 0, 0.5 * (1.0 + np.divide(s, a, out=np.zeros_like(s),
                                                    where=a > 0)), 0.5)
    keep_pos = rng.random(g.shape[1]) < purity
    pos = np.where(g > 0, g, 0.0).sum(axis=0)
    neg = np.where(g < 0, g, 0.0).sum(axis=0)
    return np.where(keep_pos, pos, neg)


@dataclass(frozen=True)
class StrategyConfig:
    balancing: str = "equal_normalized"
    surgery: str = "none"
    dwa_temperature: float = 2.0
    cagrad_c: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.balancing not in BALANCINGS:
            raise ValueError("unknown balancing %r" % (self.balancing,))
        if self.surgery not in SURGERIES:
            raise ValueError("unknown surgery %r" % (self.surgery,))
        if self.dwa_temperature <= 0:
            raise ValueError("dwa_temperature must be positive")
        if self.cagrad_c < 0:
            raise ValueError("cagrad_c must be >= 0")

    @property
    def name(self):
        return "%s+%s" % (self.balancing, self.surgery)


class ToyProblem:
    """Two planted tasks over one tanh encoder.

    Regression target x . w_reg (MSE) and a linear-teacher binary label
    (cross-entropy scaled by 10 so the raw magnitudes genuinely clash).
    """

    D_IN = 16
    HIDDEN = 32
    N = 128
    CLS_SCALE = 10.0

    def __init__(self, seed):
        rng = np.random.default_rng([17, seed])
        self.x = rng.standard_normal((self.N, self.D_IN))
        w_reg = rng.standard_normal(self.D_IN)
        w_reg /= np.linalg.norm(w_reg)
        w_cls = rng.standard_normal(self.D_IN)
        self.y_reg = self.x @ w_reg
        self.y_cls = (self.x @ w_cls > 0).astype(np.float64)

    def init_params(self, rng):
        return {
            "W1": rng.standard_normal((self.HIDDEN, self.D_IN)) * 0.3,
            "b1": np.zeros(self.HIDDEN),
            "u": rng.standard_normal(self.HIDDEN) * 0.3,
            "a": np.zeros(1),
            "v": rng.standard_normal(self.HIDDEN) * 0.3,
            "b": np.zeros(1),
        }

    def losses_and_grads(self, p):
        """Full-batch losses and handwritten gradients for both tasks."""
        n = self.N
        pre = self.x @ p["W1"].T + p["b1"]
        h = np.tanh(pre)
        # task 1: regression
        yhat = h @ p["u"] + p["a"][0]
        err = yhat - self.y_reg
        l1 = float(np.mean(err ** 2))
        dyhat = 2.0 * err / n
        g1 = {"u": h.T @ dyhat, "a": np.array([dyhat.sum()])}
        dh1 = np.outer(dyhat, p["u"])
        # task 2: scaled cross-entropy
        z = h @ p["v"] + p["b"][0]
        # overflow-safe logistic
        sig = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                       np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
        l2 = float(self.CLS_SCALE * np.mean(
            np.logaddexp(0.0, z) - self.y_cls * z))
        dz = self.CLS_SCALE * (sig - self.y_cls) / n
        g2 = {"v": h.T @ dz, "b": np.array([dz.sum()])}
        dh2 = np.outer(dz, p["v"])
        # shared block, per task
        for g, dh in ((g1, dh1), (g2, dh2)):
            dpre = dh * (1.0 - h ** 2)
            g["W1"] = dpre.T @ self.x
            g["b1"] = dpre.sum(axis=0)
        return np.array([l1, l2]), (g1, g2)


SHARED_KEYS = ("W1", "b1")
HEAD_KEYS = ({"u", "a"}, {"v", "b"})


def _flatten_shared(g):
    return np.concatenate([g[k].ravel() for k in SHARED_KEYS])


def _unflatten_shared(vec, template):
    out = {}
    pos = 0
    for k in SHARED_KEYS:
        size = template[k].size
        out[k] = vec[pos:pos + size].reshape(template[k].shape)
        pos += size
    return out


def train_toy(config, steps=500, seed=7, lr=0.015):
    """Plain gradient descent under the configured balancing and surgery.

    Returns the history: one record per step with the pre-update losses and
    the balancing weights in effect.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    problem = ToyProblem(seed)
    rng = np.random.default_rng([seed, config.seed])
    params = problem.init_params(rng)
    s_vars = np.zeros(2)
    tracker = TaskLosses(np.zeros(2))
    history = []
    for step in range(steps):
        losses, grads = problem.losses_and_grads(params)
        if np.any(losses > 1e6) or not np.all(np.isfinite(losses)):
            raise RuntimeError("training diverged at step %d" % step)
        if config.balancing == "equal_normalized":
            _, weights = normalized_total(losses)
        elif config.balancing == "uncertainty":
            weights = np.exp(-s_vars)
            _, ds = uncertainty_total(losses, s_vars)
            s_vars = s_vars - lr * ds
        else:
            weights = dwa_weights(tracker.history, config.dwa_temperature)
        tracker.record_epoch(losses)
        shared = np.stack([weights[i] * _flatten_shared(grads[i])
                           for i in range(2)])
        if config.surgery == "none":
            direction = shared.sum(axis=0)
        elif config.surgery == "pcgrad":
            direction = pcgrad(shared, rng)
        elif config.surgery == "cagrad":
            direction = cagrad(shared, config.cagrad_c)
        else:
            direction = graddrop(shared, rng)
        upd = _unflatten_shared(direction, params)
        for k in SHARED_KEYS:
            params[k] = params[k] - lr * upd[k]
        for i, keys in enumerate(HEAD_KEYS):
            for k in keys:
                params[k] = params[k] - lr * weights[i] * grads[i][k]
        history.append({
            "step": step,
            "losses": (float(losses[0]), float(losses[1])),
            "weights": (float(weights[0]), float(weights[1])),
        })
    return history


def all_strategy_configs(dwa_temperature=2.0, cagrad_c=0.5):
    """The full balancing x surgery grid."""
    return [StrategyConfig(b, s, dwa_temperature, cagrad_c)
            for b in BALANCINGS for s in SURGERIES]


def ablation_report(configs, runs_per_config, steps=500, base_seed=7, lr=0.015):
    """Aggregate final losses per strategy, grouped the way Table-style
    ablations are read: once by balancing, once by surgery. Population std."""
    if runs_per_config < 1:
        raise ValueError("runs_per_config must be >= 1")
    runs = []
    for cfg in configs:
        for r in range(runs_per_config):
            hist = train_toy(cfg, steps=steps, seed=base_seed + r, lr=lr)
            runs.append({
                "balancing": cfg.balancing,
                "surgery": cfg.surgery,
                "run": r,
                "final_l1": hist[-1]["losses"][0],
                "final_l2": hist[-1]["losses"][1],
                "initial_l1": hist[0]["losses"][0],
                "initial_l2": hist[0]["losses"][1],
            })

    def group(key):
        table = {}
        for name in sorted({run[key] for run in runs}):
            sel1 = np.array([r["final_l1"] for r in runs if r[key] == name])
            sel2 = np.array([r["final_l2"] for r in runs if r[key] == name])
            table[name] = {
                "l1_mean": float(sel1.mean()), "l1_std": float(sel1.std()),
                "l2_mean": float(sel2.mean()), "l2_std": float(sel2.std()),
            }
        return table

    report = {"runs": runs, "by_balancing": group("balancing"),
              "by_surgery": group("surgery")}
    lines = ["| group | final L1 | final L2 |", "|---|---|---|"]
    for title, tbl in (("balancing", report["by_balancing"]),
                       ("surgery", report["by_surgery"])):
        for name, row in tbl.items():
            lines.append("| %s: %s | %.4f ± %.4f | %.4f ± %.4f |" % (
                title, name, row["l1_mean"], row["l1_std"],
                row["l2_mean"], row["l2_std"]))
    report["markdown"] = "\n".join(lines)
    return report
