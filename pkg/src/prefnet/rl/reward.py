"""Scalarized rewards for the auto-scaling and power-management tasks.

Both are linear in the preference coefficients: the delay term is the mean
SLA-relative latency over active requests, resource usage is weighted by
alpha, and (for power management) normalized power draw is weighted by beta.
"""

import math


def _delay_term(delays):
    """Mean of delay/sla over (delay, sla) pairs."""
    if not delays:
        raise ValueError("reward requires at least one active request")
    total = 0.0
    count = 0
    for delay, sla in delays:
        if not (math.isfinite(delay) and math.isfinite(sla)):
            raise ValueError("delay and SLA must be finite")
        if sla <= 0.0:
            raise ValueError("SLA must be positive")
        if delay < 0.0:
            raise ValueError("delay must be non-negative")
        total += delay / sla
        count += 1
    return total / count


def reward_as(delays, vnf_total, alpha):
    """-(mean delay/sla) - alpha * vnf_total. `delays` holds (delay, sla)
    pairs for the requests active this step."""
    if vnf_total < 0:
        raise ValueError("vnf_total must be non-negative")
    if not math.isfinite(alpha):
        raise ValueError("alpha must be finite")
    r = -_delay_term(delays) - alpha * float(vnf_total)
    if not math.isfinite(r):
        raise ValueError("reward is non-finite")
    return r


def reward_pm(delays, vnf_total, power_total, alpha, beta):
    """Auto-scaling reward minus beta * power_total, where power_total is the
    summed node power already normalized by the per-node maximum draw."""
    if power_total < 0.0 or not math.isfinite(power_total):
        raise ValueError("power_total must be finite and non-negative")
    if not math.isfinite(beta):
        raise ValueError("beta must be finite")
    return reward_as(delays, vnf_total, alpha) - beta * float(power_total)
