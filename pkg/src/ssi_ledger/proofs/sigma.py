"""Schnorr and two-branch OR proofs of knowledge of a discrete log base H.

All statements here have the form "I know x with X = x*H". The OR proof
shows one of X0, X1 has that form without saying which: the false branch
is simulated from a random challenge share and response, and the real
branch takes whatever challenge share is left.
"""

from __future__ import annotations

from .. import group
from ..group import H, ORDER


def schnorr_commit(rng) -> tuple[int, bytes]:
    w = group.random_scalar(rng)
    return w, group.mul(w, H)


def schnorr_respond(w: int, challenge: int, secret: int) -> int:
    return (w + challenge * secret) % ORDER


def schnorr_check(statement: bytes, t: bytes, challenge: int, z: int) -> bool:
    # z*H == t + e*X
    return group.mul(z, H) == group.add(t, group.mul(challenge, statement))


def _simulate(statement: bytes, rng) -> tuple[int, int, bytes]:
    e = group.random_scalar(rng)
    z = group.random_scalar(rng)
    return e, z, group.sub(group.mul(z, H), group.mul(e, statement))


def or_commit(x0: bytes, x1: bytes, real: int, rng):
    """First move for "know log_H(x0) or log_H(x1)"; ``real`` names the branch we can open.

    Returns ``(state, t0, t1)``.
    """
    w, t_real = schnorr_commit(rng)
    e_sim, z_sim, t_sim = _simulate(x1 if real == 0 else x0, rng)
    if real == 0:
        return (0, w, e_sim, z_sim), t_real, t_sim
    return (1, w, e_sim, z_sim), t_sim, t_real


def or_respond(state, challenge: int, secret: int) -> tuple[int, int, int]:
    """Returns ``(e0, z0, z1)``; the verifier derives e1 = challenge - e0."""
    real, w, e_sim, z_sim = state
    e_real = (challenge - e_sim) % ORDER
    z_real = schnorr_respond(w, e_real, secret)
    if real == 0:
        return e_real, z_real, z_sim
    return e_sim, z_sim, z_real


def or_check(x0: bytes, x1: bytes, t0: bytes, t1: bytes, challenge: int, e0: int, z0: int,
             z1: int) -> bool:
    e1 = (challenge - e0) % ORDER
    return schnorr_check(x0, t0, e0, z0) and schnorr_check(x1, t1, e1, z1)
