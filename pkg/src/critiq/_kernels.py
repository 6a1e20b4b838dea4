"""Numba kernels for sampling, busy-cycle walks and queue paths.

Kernels take a ``numpy.random.Generator`` and are compiled with
``nogil=True`` so blocks can run on worker threads.  Each kernel is built
per (arrival family, service family) pair, so the hot loop contains only the
two samplers it needs; a runtime switch on the family code costs about 40%
of the walk throughput.  Distribution parameters travel as a length-3
float64 array.

Only ``random`` and ``standard_exponential`` are drawn from the Generator.
Referencing ``standard_normal``/``standard_gamma`` inside a kernel stops
LLVM from inlining the generator and slows every branch several-fold, so
normals come from Box-Muller and Erlang variates from sums of exponentials.
"""

import math
from functools import lru_cache

import numba as nb
import numpy as np

EXPONENTIAL = 0
DETERMINISTIC = 1
ERLANG = 2
HYPEREXPONENTIAL = 3
UNIFORM = 4
LOGNORMAL = 5
PARETO = 6

_JIT = dict(nogil=True, cache=False)


@nb.njit(**_JIT)
def _exponential(rng, p):
    return rng.standard_exponential() / p[0]


@nb.njit(**_JIT)
def _deterministic(rng, p):
    return p[0]


@nb.njit(**_JIT)
def _erlang(rng, p):
    acc = 0.0
    for _ in range(int(p[0])):
        acc += rng.standard_exponential()
    return acc / p[1]


@nb.njit(**_JIT)
def _hyperexponential(rng, p):
    rate = p[1] if rng.random() < p[0] else p[2]
    return rng.standard_exponential() / rate


@nb.njit(**_JIT)
def _uniform(rng, p):
    return p[0] + (p[1] - p[0]) * rng.random()


@nb.njit(**_JIT)
def _lognormal(rng, p):
    r = math.sqrt(-2.0 * math.log(1.0 - rng.random()))
    z = r * math.cos(2.0 * math.pi * rng.random())
    return math.exp(p[0] + p[1] * z)


@nb.njit(**_JIT)
def _pareto(rng, p):
    # inverse transform; 1 - U lies in (0, 1]
    return p[1] * (1.0 - rng.random()) ** (-1.0 / p[0])


SAMPLERS = {
    EXPONENTIAL: _exponential,
    DETERMINISTIC: _deterministic,
    ERLANG: _erlang,
    HYPEREXPONENTIAL: _hyperexponential,
    UNIFORM: _uniform,
    LOGNORMAL: _lognormal,
    PARETO: _pareto,
}


@lru_cache(maxsize=None)
def fill_kernel(code):
    draw = SAMPLERS[code]

    @nb.njit(**_JIT)
    def fill(rng, p, out):
        for i in range(out.shape[0]):
            out[i] = draw(rng, p)

    return fill


@lru_cache(maxsize=None)
def cycle_kernel(acode, scode):
    """Walk S_k = sum (V_i - U_i) until S_k <= 0 or k == cap, once per slot.

    Draw order per step is V_k then U_k, so the first draw of a cycle is the
    service of the customer arriving at time 0.
    """
    draw_u = SAMPLERS[acode]
    draw_v = SAMPLERS[scode]

    @nb.njit(**_JIT)
    def busy_cycles(rng, ap, sp, cap, out_n, out_b, out_i, out_c):
        for j in range(out_n.shape[0]):
            s = 0.0
            b = 0.0
            k = 0
            while True:
                k += 1
                v = draw_v(rng, sp)
                u = draw_u(rng, ap)
                b += v
                s += v - u
                if s <= 0.0:
                    out_n[j] = k
                    out_b[j] = b
                    out_i[j] = -s
                    out_c[j] = False
                    break
                if k >= cap:
                    out_n[j] = k
                    out_b[j] = b
                    out_i[j] = np.nan
                    out_c[j] = True
                    break

    return busy_cycles


@lru_cache(maxsize=None)
def negative_count_kernel(acode, scode):
    """counts[n-1] += #{replications with S_n < 0} for n = 1..len(counts).

    Also accumulates, per walk, L = sum_n (1{S_n < 0} - 1/2) and
    W = sum_n (1{S_n < 0} - 1/2) / n into moments = [sum L, sum L^2, sum W, sum W^2].
    """
    draw_u = SAMPLERS[acode]
    draw_v = SAMPLERS[scode]

    @nb.njit(**_JIT)
    def negative_counts(rng, ap, sp, reps, counts, moments):
        depth = counts.shape[0]
        for _ in range(reps):
            s = 0.0
            lit = 0.0
            wtd = 0.0
            for n in range(depth):
                s += draw_v(rng, sp) - draw_u(rng, ap)
                h = 0.5 if s < 0.0 else -0.5
                if s < 0.0:
                    counts[n] += 1
                lit += h
                wtd += h / (n + 1)
            moments[0] += lit
            moments[1] += lit * lit
            moments[2] += wtd
            moments[3] += wtd * wtd

    return negative_counts


@lru_cache(maxsize=None)
def path_kernel(acode, scode):
    """FIFO GI/G/1 paths started by an arrival to an empty system at time 0.

    Records A(t) (arrivals in (0, t]) and D(t) (departures in [0, t]) at each
    grid time.  A departure and an arrival at the same instant are processed
    departure first.
    """
    draw_u = SAMPLERS[acode]
    draw_v = SAMPLERS[scode]

    @nb.njit(**_JIT)
    def queue_paths(rng, ap, sp, grid, out_a, out_d):
        ng = grid.shape[0]
        inf = np.inf
        for r in range(out_a.shape[0]):
            a = 0
            d = 0
            q = 1
            t_dep = draw_v(rng, sp)
            t_arr = draw_u(rng, ap)
            g = 0
            while g < ng:
                is_dep = t_dep <= t_arr
                tau = t_dep if is_dep else t_arr
                while g < ng and grid[g] < tau:
                    out_a[r, g] = a
                    out_d[r, g] = d
                    g += 1
                if g == ng:
                    break
                if is_dep:
                    d += 1
                    q -= 1
                    if q > 0:
                        t_dep = tau + draw_v(rng, sp)
                    else:
                        t_dep = inf
                else:
                    a += 1
                    q += 1
                    if q == 1:
                        t_dep = tau + draw_v(rng, sp)
                    t_arr = tau + draw_u(rng, ap)

    return queue_paths


@lru_cache(maxsize=None)
def queue_busy_kernel(acode, scode):
    """Customers served per busy period, read off the event-driven queue.

    Runs the same FIFO dynamics as ``path_kernel`` (departure first on ties)
    and ends a busy period when a departure empties the system.  A period
    still running after ``cap`` services is recorded as ``cap`` and flagged.
    """
    draw_u = SAMPLERS[acode]
    draw_v = SAMPLERS[scode]

    @nb.njit(**_JIT)
    def busy_counts(rng, ap, sp, cap, out_n, out_c):
        for j in range(out_n.shape[0]):
            # fresh period: arrival into an empty system at time 0
            q = 1
            served = 0
            t_dep = draw_v(rng, sp)
            t_arr = draw_u(rng, ap)
            while True:
                if t_dep <= t_arr:
                    served += 1
                    q -= 1
                    if q == 0:
                        out_n[j] = served
                        out_c[j] = False
                        break
                    if served >= cap:
                        out_n[j] = served
                        out_c[j] = True
                        break
                    t_dep = t_dep + draw_v(rng, sp)
                else:
                    q += 1
                    t_arr = t_arr + draw_u(rng, ap)

    return busy_counts
