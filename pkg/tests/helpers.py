"""Random small instances shared by the unit and acceptance tests."""
import numpy as np

from holofusion.channel import ChannelSet
from holofusion.sensing import SensorStats


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_stats(rng, K, correlated=False):
    alpha = rng.uniform(0.5, 1.5, K)
    if correlated:
        # half the mass on all-ones / all-minus-ones keeps P_F,k <= P_D,k
        t1 = 0.5 * rng.dirichlet(np.ones(2 ** K))
        t0 = 0.5 * rng.dirichlet(np.ones(2 ** K))
        t1[-1] += 0.5
        t0[0] += 0.5
        return SensorStats.from_pmf(t1, t0, alpha)
    pf = rng.uniform(0.01, 0.3, K)
    pd = rng.uniform(pf + 0.05, 0.99)
    return SensorStats.independent(pd, pf, alpha)


def random_instance(rng, K=None, M=None, N=None, correlated=False):
    """(channels, stats, noise_power) with entries of order one."""
    K = K or int(rng.integers(1, 7))
    M = M or int(rng.integers(1, 17))
    N = N or int(rng.integers(1, 4))
    channels = ChannelSet(H=crandn(rng, M, K), G=crandn(rng, N, M) / np.sqrt(M))
    noise = float(10 ** rng.uniform(-1.5, 0.5))
    return channels, random_stats(rng, K, correlated), noise


ACCEPTANCE_LINES = {}


def report(number, ok, detail):
    """Record and print one acceptance line; returns ``ok`` for asserting."""
    line = f"CRITERION {number:>2}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok
