"""One-slack cutting-plane training of the configuration weights.

The reference program is the margin-rescaled quadratic program with one
constraint per (training pair, alternative solution) and a nonnegative
weight vector. Training aggregates the per-pair constraints into a single
slack variable and alternates constraint generation (via the problem's own
oracle, which solves loss-augmented inference exactly for the zero-one
loss) with a restricted QP solve.

For minimization problems the two score terms inside every constraint are
swapped, which also turns constraint generation into a minimization.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, nnls

from . import core
from .errors import DimensionError, DomainError, QPConvergenceError

PRUNE_AFTER_IDLE = 50  # drop constraints whose multiplier stayed at zero


@dataclass(frozen=True)
class TrainingPair:
    x: object
    y_ref: object


@dataclass
class TrainerParams:
    c_reg: float = None  # defaults to 0.01 * m at train time
    eta: float = 1.0
    margin_factor: float = 1.0
    tol: float = 1e-4
    max_outer_iter: int = 200
    qp_tol: float = 1e-8
    qp_max_iter: int = 100_000

    def __post_init__(self):
        for name in ("eta", "margin_factor", "tol", "qp_tol"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be > 0")
        if self.c_reg is not None and not self.c_reg > 0:
            raise DomainError("c_reg must be > 0")
        if self.max_outer_iter < 1 or self.qp_max_iter < 1:
            raise DomainError("iteration limits must be >= 1")


@dataclass
class WorkingConstraint:
    direction: np.ndarray  # aggregated feature difference, length K
    loss_term: float       # aggregated margin requirement, >= 0
    multiplier: float = 0.0
    idle: int = 0


@dataclass
class TrainOutcome:
    seed_weights: np.ndarray
    objective_trace: list
    working_set_size: int
    converged: bool
    iterations: int = 0
    final_xi: float = 0.0
    max_constraint_gap: float = 0.0  # max over working set of delta - w.d - xi
    log_rows: list = field(default_factory=list)


def zero_one_loss(problem: core.ProblemInstance, y_ref, y) -> float:
    return 0.0 if problem.encode(y_ref) == problem.encode(y) else 1.0


def loss_augmented_inference(problem: core.ProblemInstance,
                             model: core.ScoreModel, pair: TrainingPair,
                             eta: float, margin_factor: float = 1.0,
                             feature_cache: dict = None):
    """Most-violating solution under the zero-one loss, plus its violation.

    With the zero-one loss the augmented objective is maximized (minimized,
    for minimization problems) by the plain oracle, since the loss term is
    constant over y != y_ref.
    """
    y_hat = core.predict(problem, model, pair.x)
    f_ref = core.score(model.weights, _features(problem, pair.x, pair.y_ref,
                                                model.sample, feature_cache))
    if problem.encode(y_hat) == problem.encode(pair.y_ref):
        return y_hat, (margin_factor - 1.0) * f_ref
    f_hat = core.score(model.weights, _features(problem, pair.x, y_hat,
                                                model.sample, feature_cache))
    loss = eta * zero_one_loss(problem, pair.y_ref, y_hat)
    if problem.sense == core.MINIMIZE:
        violation = loss + margin_factor * f_ref - f_hat
    else:
        violation = loss - margin_factor * f_ref + f_hat
    return y_hat, violation


def _features(problem, x, y, sample, cache):
    if cache is None:
        return core.kernel_features(problem, x, y, sample)
    key = (problem.encode(y), _x_key(x))
    feats = cache.get(key)
    if feats is None:
        feats = core.kernel_features(problem, x, y, sample)
        cache[key] = feats
    return feats


def _x_key(x):
    try:
        hash(x)
        return x
    except TypeError:
        return repr(x)


def solve_restricted_qp(working_set, c_reg: float, params: TrainerParams):
    """min 0.5||w||^2 + c_reg*xi s.t. w.d_j >= delta_j - xi, w >= 0, xi >= 0.

    Solved in the dual by projected coordinate ascent over the constraint
    multipliers with w recovered as the nonnegative part of
    sum(lambda_j * d_j). Each step picks the most violating feasible move
    (a single multiplier, or a pairwise transfer when the budget
    sum(lambda) <= c_reg binds) and solves it exactly: the dual derivative
    along a line is piecewise linear and nonincreasing. Convergence is
    declared on KKT residuals below qp_tol (relative), or on a certified
    relative duality gap below qp_tol between the best primal pair seen
    and the current dual value. If the ascent stalls, a momentum polish
    on the dual (and, if that cannot certify, an exact parametric
    nonnegative-least-squares solve) refines the multipliers and the
    ascent restarts from them.
    """
    if not working_set:
        return np.zeros(0), 0.0
    dim = working_set[0].direction.size
    if any(c.direction.size != dim for c in working_set):
        raise DimensionError("working-set constraints disagree on dimension")
    dirs_raw = np.stack([c.direction for c in working_set])  # (J, K)
    deltas = np.array([c.loss_term for c in working_set])
    # rescale directions to O(1) so the dual iterates stay well inside the
    # float range; margins w.d_j and the slack xi are invariant under
    # (d, c_reg, lam) -> (d/s, c_reg*s^2, lam*s^2) with w recovered as w/s
    scale = float(np.abs(dirs_raw).max())
    if scale == 0.0:
        xi = max(0.0, float(deltas.max()))
        return np.zeros(dim), xi
    dirs = dirs_raw / scale
    c_reg_n = c_reg * scale ** 2
    lam = np.array([c.multiplier for c in working_set]) * scale ** 2
    lam = np.minimum(lam, c_reg_n)  # keep warm start feasible
    if lam.sum() > c_reg_n:
        lam *= c_reg_n / lam.sum()
    u = dirs.T @ lam
    n_updates = 0
    n_cons = len(working_set)
    grad_floor = 1e-14 * max(1.0, float(np.abs(deltas).max()))
    newton_every = max(2 * n_cons, 8)
    best_primal = np.inf
    w_best = np.zeros(dim)
    best_dual = -np.inf
    certified = False
    resid = np.inf
    fallback_done = False
    budget = min(params.qp_max_iter, max(1000, 30 * n_cons))

    def restart_from_fallback():
        """Momentum polish on the dual, escalating to the exact parametric
        solve if the polish alone cannot certify; restarts the ascent from
        the refined multipliers."""
        nonlocal best_primal, w_best, best_dual, lam, u, budget, fallback_done
        fallback_done = True
        improved = False

        def merge(result):
            nonlocal best_primal, w_best, best_dual, lam, u, improved
            if result is None:
                return
            improved = True
            w_cand, lam_cand, primal_cand, dual_cand = result
            if primal_cand < best_primal:
                best_primal, w_best = primal_cand, w_cand
            # the candidate multipliers induce a primal point of their own,
            # which is exact whenever the multipliers are
            w_from = np.maximum(dirs.T @ lam_cand, 0.0)
            xi_from = max(0.0, float((deltas - dirs @ w_from).max()))
            primal_from = 0.5 * float(w_from @ w_from) + c_reg_n * xi_from
            if primal_from < best_primal:
                best_primal, w_best = primal_from, w_from
            if dual_cand > best_dual:
                best_dual = dual_cand
                lam = lam_cand
                u = dirs.T @ lam

        def gap():
            return (best_primal - best_dual) / max(1.0, abs(best_primal))

        merge(_accelerated_polish(dirs, deltas, lam, c_reg_n, params.qp_tol))
        if gap() > params.qp_tol:
            merge(_parametric_fallback(dirs, deltas, c_reg_n))
            if gap() > params.qp_tol:
                merge(_accelerated_polish(dirs, deltas, lam, c_reg_n,
                                          params.qp_tol))
        budget = params.qp_max_iter
        return improved

    while True:
        w = np.maximum(u, 0.0)
        xi_w = max(0.0, float((deltas - dirs @ w).max()))
        primal = 0.5 * float(w @ w) + c_reg_n * xi_w
        if primal < best_primal:
            best_primal, w_best = primal, w
        resid = _kkt_residual(dirs, deltas, lam, w, c_reg_n)
        if resid <= params.qp_tol:
            w_best = w
            certified = True
            break
        best_dual = max(best_dual, float(deltas @ lam) - 0.5 * float(w @ w))
        gap = (best_primal - best_dual) / max(1.0, abs(best_primal))
        if gap <= params.qp_tol:
            certified = True
            break
        if n_updates >= budget:
            if fallback_done or not restart_from_fallback():
                break
            continue
        # most-violating move among single multipliers and pairwise transfers
        grad = deltas - dirs @ w
        room = c_reg_n - float(lam.sum())
        held = lam > 0.0
        best_score, move = 0.0, None
        j_up = int(np.argmax(grad))
        if room > 0.0 and grad[j_up] > best_score:
            best_score, move = grad[j_up], ("single", j_up)
        if held.any():
            cand = np.where(held, -grad, -np.inf)
            j_down = int(np.argmax(cand))
            if cand[j_down] > best_score:
                best_score, move = cand[j_down], ("single", j_down)
            l_from = int(np.argmax(np.where(held, grad.min() - 1.0 - grad, -np.inf)))
            pair_score = grad[j_up] - grad[l_from]
            if j_up != l_from and pair_score > best_score:
                best_score, move = pair_score, ("pair", j_up, l_from)
        # subspace Newton acceleration: single/pair moves alone can crawl
        # when several held multipliers must shift mass jointly
        newton_due = n_updates % newton_every == newton_every - 1
        if newton_due or move is None or best_score <= grad_floor:
            lam, u, moved = _subspace_newton(dirs, deltas, lam, u, c_reg_n, j_up)
            n_updates += 1
            if moved:
                continue
            if move is None or best_score <= grad_floor:
                # stationary over every feasible direction
                if fallback_done or not restart_from_fallback():
                    break
                continue
        if move[0] == "single":
            j = move[1]
            t = _ascent_root(u, dirs[j], deltas[j], -lam[j],
                             room if room > 0 else 0.0)
            u = u + t * dirs[j]
            lam[j] += t
        else:
            _kind, j, l = move
            dvec = dirs[j] - dirs[l]
            t = _ascent_root(u, dvec, deltas[j] - deltas[l], 0.0, lam[l])
            u = u + t * dvec
            lam[j] += t
            lam[l] -= t
        lam = np.maximum(lam, 0.0)
        n_updates += 1
    if not certified:
        gap = (best_primal - best_dual) / max(1.0, abs(best_primal))
        import os as _os  # TEMP DEBUG
        _dump = _os.environ.get("CKOPT_QP_DUMP")
        if _dump:
            np.savez(f"{_dump}/qp_{_os.getpid()}.npz",
                     dirs=dirs_raw, deltas=deltas, c_reg=np.array([c_reg]))
        raise QPConvergenceError(
            f"restricted QP stalled after {n_updates} updates "
            f"(KKT residual {resid:.3e}, duality gap {gap:.3e} "
            f"> {params.qp_tol:.1e})",
            residual=resid,
        )
    for c, l in zip(working_set, lam):
        c.multiplier = float(l) / scale ** 2
    w = w_best / scale
    xi = max(0.0, float((deltas - dirs_raw @ w).max()))
    return w, xi


def _parametric_fallback(dirs, deltas, c_reg, max_evals=34):
    """Exact solve via line search on the slack with least-distance inner QPs.

    For fixed xi the problem min 0.5||w||^2 over {w >= 0, dirs.w >= deltas
    - xi} is a least-distance program, reduced to nonnegative least squares
    the classical way; the full objective F(xi) = phi(xi) + c_reg*xi is
    convex in xi, so golden-section search locates its minimizer. F is
    minimized directly (not bracketed through the inner multipliers, which
    are non-unique on degenerate working sets and then misdirect a
    derivative-sign bisection). Infeasible slacks count as +inf; feasibility
    is monotone in xi, so an infeasible probe always moves the bracket
    right. The certifying multipliers at the minimizer come from the
    complementarity system, solved as a small linear program. Returns the
    best primal pair and the best feasible dual multipliers found, or None
    if no inner solve succeeded.
    """
    n_cons, dim = dirs.shape
    design = np.zeros((dim + 1, n_cons + dim))
    design[:dim, :n_cons] = dirs.T
    design[:dim, n_cons:] = np.eye(dim)
    rhs = np.zeros(dim + 1)
    rhs[dim] = 1.0

    def inner(xi):
        """(w, lam) of the least-distance program at xi, or None."""
        design[dim, :n_cons] = deltas - xi
        try:
            u, _ = nnls(design, rhs)
        except Exception:  # no convergence inside the NNLS subroutine
            return None
        residual = design @ u - rhs
        denom = float(residual @ residual)
        if denom <= 1e3 * np.finfo(float).eps:
            return None  # infeasible at this xi (or unresolvable)
        lam = u[:n_cons] / denom
        w = dirs.T @ lam + u[n_cons:] / denom
        return np.maximum(w, 0.0), np.maximum(lam, 0.0)

    best_primal, w_best = np.inf, None
    best_dual, lam_best = -np.inf, None

    def value(xi):
        """Primal value of the inner solution at xi; tracks incumbents."""
        nonlocal best_primal, w_best, best_dual, lam_best
        result = inner(xi)
        if result is None:
            return np.inf, None
        w, lam = result
        xi_eff = max(0.0, float((deltas - dirs @ w).max()))
        primal = 0.5 * float(w @ w) + c_reg * xi_eff
        if primal < best_primal:
            best_primal, w_best = primal, w
        lam_sum = float(lam.sum())
        feas = lam if lam_sum <= c_reg else lam * (c_reg / lam_sum)
        consider_dual(feas)
        return primal, lam_sum

    def consider_dual(lam):
        """Merge a multiplier candidate and the primal point it induces."""
        nonlocal best_primal, w_best, best_dual, lam_best
        w_of_lam = np.maximum(dirs.T @ lam, 0.0)
        dual = float(deltas @ lam) - 0.5 * float(w_of_lam @ w_of_lam)
        if dual > best_dual:
            best_dual, lam_best = dual, lam
        xi_of = max(0.0, float((deltas - dirs @ w_of_lam).max()))
        primal = 0.5 * float(w_of_lam @ w_of_lam) + c_reg * xi_of
        if primal < best_primal:
            best_primal, w_best = primal, w_of_lam

    hi = max(0.0, float(deltas.max()))
    _p0, lam_sum = value(0.0)
    if lam_sum is None or lam_sum > c_reg:
        # the slack is strictly positive at the optimum: golden section
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = 0.0, hi
        c1, d1 = b - invphi * (b - a), a + invphi * (b - a)
        fc, fd = value(c1)[0], value(d1)[0]
        for _ in range(max_evals - 2):
            if b - a <= 1e-12 * max(1.0, hi):
                break
            if not np.isfinite(fc):
                a, c1, fc = c1, d1, fd
                d1 = a + invphi * (b - a)
                fd = value(d1)[0]
            elif fc <= fd:
                b, d1, fd = d1, c1, fc
                c1 = b - invphi * (b - a)
                fc = value(c1)[0]
            else:
                a, c1, fc = c1, d1, fd
                d1 = a + invphi * (b - a)
                fd = value(d1)[0]
        if w_best is None:
            value(hi)  # every probe infeasible: optimum is w = 0, xi = hi
    if w_best is None:
        return None
    # complementarity multipliers at the incumbent, plus the pure Farkas
    # direction (w = 0), whose dual value is exact when the optimum sits on
    # the slack's feasibility boundary
    for w_at in (w_best, np.zeros(dim)):
        lam = _recover_dual(dirs, deltas, c_reg, w_at)
        if lam is not None:
            consider_dual(lam)
    if lam_best is None:
        return None
    return w_best, lam_best, best_primal, best_dual


def _recover_dual(dirs, deltas, c_reg, w):
    """Certifying multipliers at a primal candidate, from complementarity.

    At an optimum (w, xi) the multipliers satisfy (dirs^T lam)_k = w_k
    where w_k > 0 and <= 0 elsewhere, with sum(lam) <= c_reg. Maximizing
    deltas.lam under those (one-sided) conditions is a linear program whose
    solution certifies the candidate whenever it is optimal; inexact
    candidates still yield a feasible dual value that is merged as an
    incumbent. The inner least-distance multipliers cannot serve here: on
    degenerate working sets they are non-unique and need not respect the
    budget split that the full problem's optimality requires.
    """
    n_cons, dim = dirs.shape
    sup = w > 1e-9 * max(1.0, float(np.abs(w).max()))
    a_ub = [dirs.T[sup], dirs.T[~sup], np.ones((1, n_cons))]
    b_ub = np.concatenate([w[sup], np.zeros(int((~sup).sum())), [c_reg]])
    res = linprog(-deltas, A_ub=np.vstack(a_ub), b_ub=b_ub,
                  bounds=(0, None), method="highs")
    if res.status != 0:
        return None
    lam = np.maximum(res.x, 0.0)
    if float(lam.sum()) > c_reg:
        lam *= c_reg / float(lam.sum())
    return lam


def _capped_simplex_projection(lam, c_reg):
    """Euclidean projection onto {lam >= 0, sum(lam) <= c_reg}."""
    lam = np.maximum(lam, 0.0)
    if float(lam.sum()) <= c_reg:
        return lam
    drop = np.sort(lam)[::-1]
    csum = np.cumsum(drop)
    count = np.arange(1, lam.size + 1, dtype=float)
    last = int(np.flatnonzero(drop - (csum - c_reg) / count > 0.0)[-1])
    theta = (csum[last] - c_reg) / (last + 1.0)
    return np.maximum(lam - theta, 0.0)


def _accelerated_polish(dirs, deltas, lam, c_reg, qp_tol, max_iter=20_000):
    """Momentum projected-gradient ascent on the dual from a warm start.

    Degenerate working sets -- many near-identical loss terms with the
    budget binding -- jam single and pairwise coordinate moves on flat
    faces that a full-gradient method still climbs. Returns the best
    primal pair and best dual multipliers encountered, stopping early
    once they certify each other within qp_tol.
    """
    lipschitz = float(np.linalg.norm(dirs, 2)) ** 2
    if lipschitz == 0.0:
        return None
    lam = _capped_simplex_projection(lam, c_reg)
    momentum = lam.copy()
    t_acc = 1.0
    best_primal, w_best = np.inf, None
    best_dual, lam_best = -np.inf, lam
    for it in range(max_iter):
        w_mom = np.maximum(dirs.T @ momentum, 0.0)
        lam_next = _capped_simplex_projection(
            momentum + (deltas - dirs @ w_mom) / lipschitz, c_reg)
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_acc * t_acc))
        momentum = lam_next + ((t_acc - 1.0) / t_next) * (lam_next - lam)
        lam, t_acc = lam_next, t_next
        if it % 50 == 49 or it == max_iter - 1:
            w = np.maximum(dirs.T @ lam, 0.0)
            xi = max(0.0, float((deltas - dirs @ w).max()))
            primal = 0.5 * float(w @ w) + c_reg * xi
            if primal < best_primal:
                best_primal, w_best = primal, w
            dual = float(deltas @ lam) - 0.5 * float(w @ w)
            if dual > best_dual:
                best_dual, lam_best = dual, lam
            gap = (best_primal - best_dual) / max(1.0, abs(best_primal))
            if gap <= 0.5 * qp_tol:
                break
    if w_best is None:
        return None
    return w_best, lam_best, best_primal, best_dual


def _subspace_newton(dirs, deltas, lam, u, c_reg, j_up):
    """One exact-quadratic step on the held multipliers, with line search.

    On the region where the sign pattern of u is fixed the dual is the
    quadratic delta.lam - 0.5 lam^T G lam with G the Gram matrix of the
    directions restricted to active coordinates. Solving it on the held set
    (optionally with the budget equality) gives a joint move that single and
    pairwise updates approach only asymptotically; a feasible exact line
    search toward it keeps monotone ascent.
    """
    held = np.flatnonzero((lam > 0.0) | (np.arange(lam.size) == j_up))
    active = u > 0.0
    if held.size == 0 or not active.any():
        return lam, u, False
    if float(lam.sum()) > c_reg:  # shave accumulated float overshoot
        lam = lam * (c_reg / float(lam.sum()))
        u = dirs.T @ lam
    sub = dirs[np.ix_(held, np.flatnonzero(active))]
    gram = sub @ sub.T
    w = np.maximum(u, 0.0)
    for target in _held_candidates(gram, deltas[held], lam[held], c_reg):
        v = np.zeros(lam.size)
        v[held] = target - lam[held]
        if not np.any(v != 0.0):
            continue
        # largest feasible step toward the candidate
        t_max = 1.0
        shrinking = v < 0.0
        if shrinking.any():
            t_max = min(t_max, float(np.min(lam[shrinking] / -v[shrinking])))
        v_sum = float(v.sum())
        if v_sum > 0.0:
            t_max = min(t_max, max(0.0, c_reg - float(lam.sum())) / v_sum)
        if t_max <= 0.0:
            continue
        dw = dirs.T @ v
        if float(deltas @ v) - float(dw @ w) <= 0.0:
            continue  # not an ascent direction from the current point
        t = _ascent_root(u, dw, float(deltas @ v), 0.0, t_max)
        if t <= 0.0:
            continue
        lam = np.maximum(lam + t * v, 0.0)
        return lam, u + t * dw, True
    return lam, u, False


def _held_candidates(gram, delta_h, lam_h, c_reg):
    """Candidate maximizers of delta.x - 0.5 x^T G x over the held set.

    When G is singular and delta has a component along its null space the
    unconstrained problem is unbounded, so the budget-capped stationary
    point and a pure null-space ray are offered as well.
    """
    h = len(delta_h)
    out = []
    x = np.linalg.lstsq(gram, delta_h, rcond=None)[0]
    if x.sum() <= c_reg:
        out.append(x)
    kkt = np.zeros((h + 1, h + 1))
    kkt[:h, :h] = gram
    kkt[:h, h] = 1.0
    kkt[h, :h] = 1.0
    sol = np.linalg.lstsq(kkt, np.concatenate([delta_h, [c_reg]]),
                          rcond=None)[0]
    out.append(sol[:h])
    # null-space ray of G with positive linear growth delta.v > 0
    _unitary, svals, vt = np.linalg.svd(gram)
    tol = max(gram.shape) * np.finfo(float).eps * (svals[0] if len(svals) else 0.0)
    for row in vt[svals <= tol] if len(svals) else []:
        lin = float(delta_h @ row)
        if abs(lin) > 0.0:
            ray = np.sign(lin) * row
            out.append(lam_h + max(1.0, float(np.abs(lam_h).max())) * ray)
    return out


def _ascent_root(base, d, c0, lo, hi):
    """Exact root of h(t) = c0 - d . max(0, base + t d) on [lo, hi].

    h is continuous, piecewise linear and nonincreasing in t (each term
    contributes slope -d_p^2 on its active region), so the root is found by
    bisecting over the kink locations and solving the linear piece exactly.
    """
    def h(t):
        return c0 - float(d @ np.maximum(base + t * d, 0.0))

    if hi <= lo:
        return lo
    if h(lo) <= 0.0:
        return lo
    if h(hi) >= 0.0:
        return hi
    nz = d != 0.0
    kinks = -base[nz] / d[nz]
    kinks = np.unique(kinks[(kinks > lo) & (kinks < hi)])
    left, right = 0, len(kinks)
    while left < right:  # first kink with h <= 0
        mid = (left + right) // 2
        if h(kinks[mid]) > 0.0:
            left = mid + 1
        else:
            right = mid
    a = lo if left == 0 else float(kinks[left - 1])
    b = hi if left == len(kinks) else float(kinks[left])
    active = base + 0.5 * (a + b) * d > 0.0
    da = d[active]
    slope = float(da @ da)
    if slope == 0.0:
        return a
    t = (c0 - float(da @ base[active])) / slope
    return min(max(t, a), b)


def _kkt_residual(dirs, deltas, lam, w, c_reg):
    margins = dirs @ w
    xi = max(0.0, float((deltas - margins).max()))
    scale = max(1.0, float(np.abs(deltas).max()), float(np.abs(margins).max()))
    slack = margins - deltas + xi  # >= 0 at a feasible point
    r_feas = max(0.0, float(-slack.min())) / scale
    r_comp = float(np.abs(lam * slack).max()) / (scale * max(1.0, c_reg))
    r_xi = (c_reg - lam.sum()) * xi / (scale * max(1.0, c_reg))
    return max(r_feas, r_comp, abs(r_xi))


def train_one_slack(problem: core.ProblemInstance, pairs,
                    sample: core.ConfigurationSample,
                    params: TrainerParams = None) -> TrainOutcome:
    """Cutting-plane loop producing the nonnegative seed weight vector."""
    if params is None:
        params = TrainerParams()
    pairs = [p if isinstance(p, TrainingPair) else TrainingPair(*p) for p in pairs]
    if not pairs:
        raise DomainError("training set is empty")
    if sample.k < 1:
        raise DomainError("configuration sample is empty")
    m = len(pairs)
    c_reg = params.c_reg if params.c_reg is not None else 0.01 * m
    cache = {}
    ref_feats = [_features(problem, p.x, p.y_ref, sample, cache) for p in pairs]

    w = np.zeros(sample.k)
    xi = 0.0
    working_set = []
    trace = []
    log_rows = []
    converged = False
    minimize = problem.sense == core.MINIMIZE
    mf, eta = params.margin_factor, params.eta

    iteration = 0
    for iteration in range(1, params.max_outer_iter + 1):
        model = core.ScoreModel(sample, w, problem.alpha, problem.sense)
        direction = np.zeros(sample.k)
        delta = 0.0
        max_pair_violation = -np.inf
        for p, f_ref in zip(pairs, ref_feats):
            y_hat, violation = loss_augmented_inference(
                problem, model, p, eta, mf, feature_cache=cache)
            max_pair_violation = max(max_pair_violation, violation)
            if problem.encode(y_hat) == problem.encode(p.y_ref):
                continue  # the program's constraints exclude y == y_ref
            f_hat = _features(problem, p.x, y_hat, sample, cache)
            if minimize:
                direction += f_hat - mf * f_ref
            else:
                direction += mf * f_ref - f_hat
            delta += eta * zero_one_loss(problem, p.y_ref, y_hat)
        direction /= m
        delta /= m

        violation = delta - float(w @ direction)
        if violation <= xi + params.tol:
            converged = True
            log_rows.append(_log_row(iteration, w, xi, c_reg,
                                     len(working_set), violation))
            break

        working_set.append(WorkingConstraint(direction, delta))
        w, xi = solve_restricted_qp(working_set, c_reg, params)
        trace.append(0.5 * float(w @ w) + c_reg * xi)
        log_rows.append(_log_row(iteration, w, xi, c_reg,
                                 len(working_set), violation))

        # cutting-plane hygiene: drop long-inactive constraints
        for c in working_set:
            c.idle = c.idle + 1 if c.multiplier == 0.0 else 0
        working_set = [c for c in working_set if c.idle < PRUNE_AFTER_IDLE]

    if working_set:
        gaps = [c.loss_term - float(w @ c.direction) - xi for c in working_set]
        max_gap = max(gaps)
    else:
        max_gap = 0.0
    return TrainOutcome(
        seed_weights=w,
        objective_trace=trace,
        working_set_size=len(working_set),
        converged=converged,
        iterations=iteration,
        final_xi=xi,
        max_constraint_gap=max_gap,
        log_rows=log_rows,
    )


def _log_row(iteration, w, xi, c_reg, n_constraints, violation):
    return {
        "iteration": iteration,
        "primal_objective": 0.5 * float(w @ w) + c_reg * xi,
        "xi": xi,
        "working_set_size": n_constraints,
        "max_violation": violation,
    }


def write_training_log(rows, stream):
    """One CSV line per outer iteration."""
    stream.write("iteration,primal_objective,xi,working_set_size,max_violation\n")
    for r in rows:
        stream.write(
            f"{r['iteration']},{r['primal_objective']!r},{r['xi']!r},"
            f"{r['working_set_size']},{r['max_violation']!r}\n"
        )
