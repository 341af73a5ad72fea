"""Hot rollout kernels shared by the jitted and pure-numpy paths.

Each kernel samples a batch of episodes under a linear soft-max policy with
one-hot (state-bucket x action) features and accumulates, per episode, the
score-sum-times-discounted-loss gradient estimate. All randomness is drawn
by the callers beforehand and passed in as arrays, so the jitted and plain
paths consume identical streams and return identical results.

Conventions: ``theta`` indexes one-hot feature slots, losses are negated
rewards (the optimizers minimize), ``action_u`` holds one uniform draw per
step for inverse-CDF action sampling.
"""

from __future__ import annotations

import math

import numpy as np

from .accel import jit_kernel


def _sample_softmax(theta, base, n_actions, u, probs):
    """Fill ``probs`` with the soft-max over ``theta[base + a]``, pick by ``u``."""
    max_logit = -math.inf
    for a in range(n_actions):
        v = theta[base + a]
        if v > max_logit:
            max_logit = v
    total = 0.0
    for a in range(n_actions):
        probs[a] = math.exp(theta[base + a] - max_logit)
        total += probs[a]
    for a in range(n_actions):
        probs[a] /= total
    # inverse CDF; the final bucket absorbs rounding
    acc = 0.0
    for a in range(n_actions - 1):
        acc += probs[a]
        if u < acc:
            return a
    return n_actions - 1


def _accumulate_score(score, theta_probs, base, n_actions, action):
    """Add the log-policy gradient of one step into ``score``."""
    score[base + action] += 1.0
    for a in range(n_actions):
        score[base + a] -= theta_probs[a]


def _rollout_tabular(
    theta,
    n_states,
    n_actions,
    trans_cum,
    losses,
    alpha,
    start_states,
    action_u,
    trans_u,
):
    """Batch rollout on a tabular MDP with stochastic transitions.

    ``trans_cum[s, a]`` is the cumulative transition distribution,
    ``losses[s, a]`` the per-step loss, features are one-hot at
    ``s * n_actions + a``. Returns per-episode gradient accumulators and
    loss/reward sums.
    """
    n_episodes, horizon = action_u.shape
    dim = n_states * n_actions
    grad_sum = np.zeros(dim)
    grad_sq_sum = np.zeros(dim)
    disc_losses = np.zeros(n_episodes)
    raw_rewards = np.zeros(n_episodes)
    probs = np.zeros(n_actions)

    for m in range(n_episodes):
        score = np.zeros(dim)
        s = start_states[m]
        disc = 0.0
        raw = 0.0
        gain = 1.0
        for t in range(horizon):
            base = s * n_actions
            a = _sample_softmax(theta, base, n_actions, action_u[m, t], probs)
            _accumulate_score(score, probs, base, n_actions, a)
            loss = losses[s, a]
            disc += gain * loss
            raw -= loss
            gain *= alpha
            u = trans_u[m, t]
            nxt = n_states - 1
            for sp in range(n_states - 1):
                if u < trans_cum[s, a, sp]:
                    nxt = sp
                    break
            s = nxt
        disc_losses[m] = disc
        raw_rewards[m] = raw
        for d in range(dim):
            g = score[d] * disc
            grad_sum[d] += g
            grad_sq_sum[d] += g * g
    return grad_sum, grad_sq_sum, disc_losses, raw_rewards


def _rollout_localization(
    theta,
    width,
    height,
    target_x,
    target_y,
    hit_reward,
    hit_radius,
    alpha,
    use_rss,
    gain_ref,
    tx_power,
    loss_exponent,
    noise_sigma,
    power_floor,
    start_x,
    start_y,
    action_u,
    obs_noise,
):
    """Batch rollout on the grid search task.

    Actions 0..3 move (0, +1), (0, -1), (-1, 0), (+1, 0) with clipping.
    The per-step loss depends on the current true position: ``-hit_reward``
    inside the hit radius, the Euclidean distance to the target otherwise.
    With ``use_rss`` the policy observes a position estimate recovered from
    a noisy power measurement instead of the true cell.
    """
    n_episodes, horizon = action_u.shape
    n_actions = 4
    dim = width * height * n_actions
    grad_sum = np.zeros(dim)
    grad_sq_sum = np.zeros(dim)
    disc_losses = np.zeros(n_episodes)
    raw_rewards = np.zeros(n_episodes)
    probs = np.zeros(n_actions)

    for m in range(n_episodes):
        score = np.zeros(dim)
        x = start_x[m]
        y = start_y[m]
        disc = 0.0
        raw = 0.0
        gain = 1.0
        for t in range(horizon):
            dx = float(x - target_x)
            dy = float(y - target_y)
            dist = math.sqrt(dx * dx + dy * dy)
            if use_rss:
                # invert the power-law channel to estimate the distance,
                # then place the estimate along the true bearing
                d_eff = dist if dist > 0.5 else 0.5
                power = gain_ref * tx_power / d_eff**loss_exponent
                power += noise_sigma * obs_noise[m, t]
                if power < power_floor:
                    power = power_floor
                d_hat = (gain_ref * tx_power / power) ** (1.0 / loss_exponent)
                if dist > 0.0:
                    ox = target_x + d_hat * dx / dist
                    oy = target_y + d_hat * dy / dist
                else:
                    ox = float(target_x)
                    oy = float(target_y)
                obs_x = int(ox + 0.5) if ox > 0.0 else 0
                obs_y = int(oy + 0.5) if oy > 0.0 else 0
                if obs_x > width - 1:
                    obs_x = width - 1
                if obs_y > height - 1:
                    obs_y = height - 1
            else:
                obs_x = x
                obs_y = y

            base = (obs_y * width + obs_x) * n_actions
            a = _sample_softmax(theta, base, n_actions, action_u[m, t], probs)
            _accumulate_score(score, probs, base, n_actions, a)

            loss = -hit_reward if dist < hit_radius else dist
            disc += gain * loss
            raw -= loss
            gain *= alpha

            if a == 0 and y < height - 1:
                y += 1
            elif a == 1 and y > 0:
                y -= 1
            elif a == 2 and x > 0:
                x -= 1
            elif a == 3 and x < width - 1:
                x += 1
        disc_losses[m] = disc
        raw_rewards[m] = raw
        for d in range(dim):
            g = score[d] * disc
            grad_sum[d] += g
            grad_sq_sum[d] += g * g
    return grad_sum, grad_sq_sum, disc_losses, raw_rewards


def _resource_step(s, a, capacity, w, comp_u, complete_p, h0, h1, h2, price):
    """One interval of the resource pool: returns (next state, reward).

    ``rented = min(s + a, capacity)`` units are open for service, arrivals
    occupy them as demand allows, and each of the remaining busy units
    completes independently with probability ``complete_p`` (exponential
    workloads sampled through the ``comp_u`` uniforms). The reward pays
    ``price`` per net unit put to work and charges fixed, holding and
    acquisition costs whenever an arrival or completion event triggers;
    otherwise only the holding cost applies.
    """
    rented = s + a
    if rented > capacity:
        rented = capacity
    occupied = w if w < rented else rented
    busy = capacity - rented
    released = 0
    for c in range(busy):
        if comp_u[c] < complete_p:
            released += 1
    s_next = rented - occupied + released
    if w > 0 or released > 0:
        acquired = rented - s
        if acquired < 0:
            acquired = 0
        consumed = rented - s_next
        if consumed < 0:
            consumed = 0
        reward = -h1 * s - h2 * acquired + price * consumed
        if a > 0:
            reward -= h0
    else:
        reward = -h1 * s
    return s_next, reward


def _rollout_resource(
    theta,
    capacity,
    complete_p,
    h0,
    h1,
    h2,
    price,
    alpha,
    start_states,
    arrivals,
    comp_u,
    action_u,
):
    """Batch rollout on the resource management task.

    States and actions live in {0..capacity}; features are one-hot at
    ``s * (capacity + 1) + a``. ``arrivals`` holds pre-drawn Poisson demand
    per interval, ``comp_u`` one uniform per potential busy unit.
    """
    n_episodes, horizon = action_u.shape
    n_actions = capacity + 1
    dim = n_actions * n_actions
    grad_sum = np.zeros(dim)
    grad_sq_sum = np.zeros(dim)
    disc_losses = np.zeros(n_episodes)
    raw_rewards = np.zeros(n_episodes)
    probs = np.zeros(n_actions)

    for m in range(n_episodes):
        score = np.zeros(dim)
        s = start_states[m]
        disc = 0.0
        raw = 0.0
        gain = 1.0
        for t in range(horizon):
            base = s * n_actions
            a = _sample_softmax(theta, base, n_actions, action_u[m, t], probs)
            _accumulate_score(score, probs, base, n_actions, a)
            s, reward = _resource_step(
                s,
                a,
                capacity,
                arrivals[m, t],
                comp_u[m, t],
                complete_p,
                h0,
                h1,
                h2,
                price,
            )
            disc += gain * (-reward)
            raw += reward
            gain *= alpha
        disc_losses[m] = disc
        raw_rewards[m] = raw
        for d in range(dim):
            g = score[d] * disc
            grad_sum[d] += g
            grad_sq_sum[d] += g * g
    return grad_sum, grad_sq_sum, disc_losses, raw_rewards


_sample_softmax = jit_kernel(_sample_softmax)
_accumulate_score = jit_kernel(_accumulate_score)
_resource_step = jit_kernel(_resource_step)
rollout_tabular = jit_kernel(_rollout_tabular)
rollout_localization = jit_kernel(_rollout_localization)
rollout_resource = jit_kernel(_rollout_resource)
