"""Entropy functionals of the heat flow and their dissipation formulas.

Both entropies are time-weighted integrals against the solution itself:

    F = integral (t^2 |grad u|^2 - 2nt) e^{-u} dV
    W = integral (t^2 |grad v|^2 - 2nt) e^{-v} / (4 pi t)^{n/2} dV

The F-weight e^{-u} and the W-weight e^{-v}/(4 pi t)^{n/2} both equal f
pointwise, and grad v = grad u, so W = F as computed quantities; both are
kept because each has its own via-quantity form (the discrete Stokes
identity test) and its own dissipation integral.  Weights are taken as f
directly, which avoids catastrophic cancellation at small t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ScalarField, grad_norm_sq, hessian_penalty, ricci_quadratic
from .harnack import log_u, log_v, quantity_H, quantity_P
from .heatflow import FlowState, Trajectory

# the dissipation integrals complete the square at lam = 2
DISSIPATION_LAMBDA = 2.0


@dataclass(frozen=True)
class EntropyReport:
    """All entropy diagnostics for one snapshot.

    ``dF_formula``/``dW_formula`` are the closed-form dissipation integrals
    (torus only, None elsewhere); ``dF_fd``/``dW_fd`` are finite differences
    across neighboring snapshots, centered at interior snapshots and
    one-sided at the ends (``fd_centered`` flags which).
    """

    time: float
    F_direct: float
    F_via_H: float
    W_direct: float
    W_via_P: float
    dF_formula: float | None = None
    dW_formula: float | None = None
    dF_fd: float | None = None
    dW_fd: float | None = None
    fd_centered: bool = False


def entropy_F(state: FlowState) -> tuple[float, float]:
    """F in both integral forms: direct, and via t^2 H e^{-u}.

    Their agreement is the discrete Stokes/Green identity test.
    """
    m = state.manifold
    t = state.time
    n = m.dimension
    u = log_u(state)
    weight = state.f.values  # e^{-u} is f itself
    direct = float(
        np.dot(m.quadrature_weights, (t * t * grad_norm_sq(u).values - 2.0 * n * t) * weight)
    )
    via_h = float(np.dot(m.quadrature_weights, t * t * quantity_H(u, t).values * weight))
    return direct, via_h


def entropy_W(state: FlowState) -> tuple[float, float]:
    """W in both integral forms: direct, and via t^2 P times the weight.

    The weight e^{-v}/(4 pi t)^{n/2} equals f by the definition of v and is
    computed as such.
    """
    m = state.manifold
    t = state.time
    n = m.dimension
    v = log_v(state)
    weight = state.f.values
    direct = float(
        np.dot(m.quadrature_weights, (t * t * grad_norm_sq(v).values - 2.0 * n * t) * weight)
    )
    via_p = float(np.dot(m.quadrature_weights, t * t * quantity_P(v, t).values * weight))
    return direct, via_p


def _dissipation(state: FlowState, w: ScalarField) -> float:
    m = state.manifold
    t = state.time
    integrand = (
        hessian_penalty(w, DISSIPATION_LAMBDA, t).values
        + ricci_quadratic(w).values
        + grad_norm_sq(w).values / t
    )
    return -2.0 * t * t * float(np.dot(m.quadrature_weights, state.f.values * integrand))


def dissipation_F(state: FlowState) -> float:
    """Closed-form dF/dt: -2 t^2 integral f (|Hess u - g/t|^2 + Ric(grad u, grad u)
    + |grad u|^2 / t) dV, nonpositive by construction when Ric >= 0.  Torus only."""
    return _dissipation(state, log_u(state))


def dissipation_W(state: FlowState) -> float:
    """Same integral built from v; numerically identical to dissipation_F since
    grad v = grad u and the weights coincide.  Torus only."""
    return _dissipation(state, log_v(state))


def entropy_series(traj: Trajectory, with_dissipation: bool | None = None) -> list[EntropyReport]:
    """One EntropyReport per snapshot, with finite-difference derivatives.

    Derivatives are centered at interior snapshots; the one-sided end values
    are flagged with ``fd_centered=False`` and are meant to be excluded from
    pass/fail gates.  ``with_dissipation`` defaults to the backend's ability
    (torus yes, sphere no).
    """
    if len(traj) < 3:
        raise ValueError(f"entropy series needs at least 3 states, got {len(traj)}")
    if with_dissipation is None:
        with_dissipation = traj.manifold.is_torus
    if with_dissipation and not traj.manifold.is_torus:
        raise ValueError("dissipation integrals are only available on the torus")

    f_vals, w_vals = [], []
    reports: list[EntropyReport] = []
    for state in traj.states:
        fd, fh = entropy_F(state)
        wd, wp = entropy_W(state)
        f_vals.append(fd)
        w_vals.append(wd)
        reports.append(
            EntropyReport(
                time=state.time,
                F_direct=fd,
                F_via_H=fh,
                W_direct=wd,
                W_via_P=wp,
                dF_formula=dissipation_F(state) if with_dissipation else None,
                dW_formula=dissipation_W(state) if with_dissipation else None,
            )
        )

    dt = traj.step_size
    f_arr = np.array(f_vals)
    w_arr = np.array(w_vals)
    out: list[EntropyReport] = []
    last = len(traj) - 1
    for i, rep in enumerate(reports):
        if 0 < i < last:
            df = (f_arr[i + 1] - f_arr[i - 1]) / (2.0 * dt)
            dw = (w_arr[i + 1] - w_arr[i - 1]) / (2.0 * dt)
            centered = True
        elif i == 0:
            df = (f_arr[1] - f_arr[0]) / dt
            dw = (w_arr[1] - w_arr[0]) / dt
            centered = False
        else:
            df = (f_arr[last] - f_arr[last - 1]) / dt
            dw = (w_arr[last] - w_arr[last - 1]) / dt
            centered = False
        out.append(
            EntropyReport(
                time=rep.time,
                F_direct=rep.F_direct,
                F_via_H=rep.F_via_H,
                W_direct=rep.W_direct,
                W_via_P=rep.W_via_P,
                dF_formula=rep.dF_formula,
                dW_formula=rep.dW_formula,
                dF_fd=float(df),
                dW_fd=float(dw),
                fd_centered=centered,
            )
        )
    return out
