"""Pure-Python twins of the compiled kernels in ``_ckernels.pyx``."""

import math


def walk_chunk(omega, offset, x, target, u, out_pos):
    """Advance the walk over a buffer of uniforms.

    Returns ``(consumed, x, status)`` with status 0 = hit ``target``,
    1 = buffer exhausted, 2 = reached the lowest sampled site.
    """
    if x == target:
        return 0, x, 0
    om = omega.tolist()
    uu = u.tolist()
    steps = []
    push = steps.append
    status = 1
    i = 0
    for v in uu:
        push(x)
        x = x + 1 if v < om[x + offset] else x - 1
        i += 1
        if x == target:
            status = 0
            break
        if x + offset == 0:
            status = 2
            break
    out_pos[:i] = steps
    return i, x, status


def bpre_chunk(omega, z, k, u, cap):
    """Run whole generations of the immigration chain on a uniform buffer.

    Returns ``(k, used, status)`` with status 0 = done, 1 = buffer too
    short for the next generation, 2 = population above ``cap``.
    """
    n = len(z) - 1
    used = 0
    avail = len(u)
    log = math.log
    floor = math.floor
    while k < n:
        m = int(z[k]) + 1
        if used + m > avail:
            return k, used, 1
        lq = log(1.0 - omega[k])
        total = 0
        for j in range(used, used + m):
            total += int(floor(log(1.0 - u[j]) / lq))
        used += m
        z[k + 1] = total
        k += 1
        if total > cap:
            return k, used, 2
    return k, used, 0
