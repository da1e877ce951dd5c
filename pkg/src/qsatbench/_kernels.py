"""Compiled inner loops (numba)."""
from __future__ import annotations

import numpy as np
from numba import njit

FALSE = 0
TRUE = 1
INDETERMINATE = 2

OK = 0
BUDGET_EXCEEDED = 1


@njit(cache=True)
def solve_scale(u, k, tol):
    """Row-wise root of sum_i 1/(1 + u_i * exp(y)) = k; returns exp(y)."""
    rows, n = u.shape
    out = np.empty(rows)
    for r in range(rows):
        umax = 0.0
        umin = np.inf
        for i in range(n):
            x = u[r, i]
            if x > umax:
                umax = x
            if 0.0 < x < umin:
                umin = x
        lo = np.log(n / k - 1.0) - np.log(umax) - 1.0
        hi = np.log(n / k) - np.log(umin) + 1.0
        y = 0.5 * (lo + hi)
        for _ in range(200):
            s = np.exp(y)
            g = -k
            dg = 0.0
            for i in range(n):
                p = 1.0 / (1.0 + u[r, i] * s)
                g += p
                dg -= p * (1.0 - p)
            if abs(g) <= tol:
                break
            if g > 0:
                lo = y
            else:
                hi = y
            step = y - g / dg if dg != 0.0 else np.nan
            if lo < step < hi:
                y = step
            else:
                y = 0.5 * (lo + hi)
        out[r] = np.exp(y)
    return out


@njit(cache=True)
def scan(offsets, lits, assign, start):
    """Order-sensitive predicate from clause ``start`` on.

    Returns (verdict, clause index where the scan stopped)."""
    m = offsets.size - 1
    for c in range(start, m):
        sat = False
        for j in range(offsets[c], offsets[c + 1]):
            lit = lits[j]
            a = assign[abs(lit) - 1]
            if a < 0:
                return INDETERMINATE, c
            if (a == 1) == (lit > 0):
                sat = True
                break
        if not sat:
            return FALSE, c
    return TRUE, m


@njit(cache=True)
def falsified_table(offsets, lits, n, position):
    """Byte per complete assignment, 1 when some clause is falsified.

    Bit ``position[v]`` of the index holds the value of variable v.
    """
    table = np.zeros(1 << n, np.uint8)
    m = offsets.size - 1
    for c in range(m):
        fixed = 0
        value = 0
        tautology = False
        for j in range(offsets[c], offsets[c + 1]):
            lit = lits[j]
            bit = 1 << position[abs(lit) - 1]
            want = bit if lit < 0 else 0  # value that falsifies the literal
            if fixed & bit:
                if (value & bit) != want:
                    tautology = True
                    break
            fixed |= bit
            value |= want
        if tautology:
            continue
        free = ((1 << n) - 1) & ~fixed
        sub = 0
        while True:
            table[value | sub] = 1
            if sub == free:
                break
            sub = (sub - free) & free
    return table


@njit(cache=True)
def explore(offsets, lits, n, order, budget, table):
    """Depth-first walk of the whole backtracking tree, false child first.

    A child resumes the scan at the clause where its parent stopped: every
    earlier clause already had a satisfied literal before any unassigned one,
    and extending the assignment cannot change that.

    When ``table`` is non-empty it is the falsified_table of the formula and
    decides complete assignments directly: there the verdict does not depend on
    scan order.

    Returns (status, tree_size, depths of True leaves in visit order).
    """
    use_table = table.size > 0
    code = 0
    assign = np.full(n, -1, np.int8)
    ptr = np.zeros(n + 1, np.int64)
    state = np.zeros(n + 1, np.int8)
    depths = np.empty(16, np.int32)
    nsol = 0

    verdict, pos = scan(offsets, lits, assign, 0)
    tree = 1
    if verdict != INDETERMINATE:
        if verdict == TRUE:
            depths[0] = 0
            nsol = 1
        return OK, tree, depths[:nsol]

    ptr[0] = pos
    d = 0
    while d >= 0:
        s = state[d]
        if s == 2:
            assign[order[d]] = -1
            d -= 1
            continue
        state[d] = s + 1
        assign[order[d]] = s
        if s == 1:
            code |= 1 << d
        else:
            code &= ~(1 << d)
        if use_table and d + 1 == n:
            verdict = FALSE if table[code] else TRUE
        else:
            verdict, pos = scan(offsets, lits, assign, ptr[d])
        tree += 1
        if tree > budget:
            return BUDGET_EXCEEDED, tree, depths[:nsol]
        if verdict == INDETERMINATE:
            if d + 1 >= n:
                raise ValueError("predicate indeterminate on a complete assignment")
            ptr[d + 1] = pos
            state[d + 1] = 0
            d += 1
        elif verdict == TRUE:
            if nsol == depths.size:
                grown = np.empty(2 * depths.size, np.int32)
                grown[:nsol] = depths
                depths = grown
            depths[nsol] = d + 1
            nsol += 1
    return OK, tree, depths[:nsol]


@njit(cache=True)
def _satisfied(offsets, lits, assign, c):
    for j in range(offsets[c], offsets[c + 1]):
        lit = lits[j]
        a = assign[abs(lit) - 1]
        if a >= 0 and (a == 1) == (lit > 0):
            return True
    return False


@njit(cache=True)
def bucket_tables(offsets, lits, n, position, bucket_offsets, bucket_clauses):
    """Falsified-prefix tables, one per depth, concatenated.

    The table of depth d starts at ``2**(d+1) - 2`` and has ``2**(d+1)`` bytes;
    entry x is 1 when the prefix assignment x (bit p = value at order position
    p) falsifies a clause of bucket d.
    """
    table = np.zeros((1 << (n + 1)) - 2, np.uint8)
    for d in range(n):
        base = (1 << (d + 1)) - 2
        width = (1 << (d + 1)) - 1
        for b in range(bucket_offsets[d], bucket_offsets[d + 1]):
            c = bucket_clauses[b]
            fixed = 0
            value = 0
            tautology = False
            for j in range(offsets[c], offsets[c + 1]):
                lit = lits[j]
                bit = 1 << position[abs(lit) - 1]
                want = bit if lit < 0 else 0
                if fixed & bit:
                    if (value & bit) != want:
                        tautology = True
                        break
                fixed |= bit
                value |= want
            if tautology:
                continue
            free = width & ~fixed
            sub = 0
            while True:
                table[base + (value | sub)] = 1
                if sub == free:
                    break
                sub = (sub - free) & free
    return table


@njit(cache=True)
def clause_masks(offsets, lits, position):
    """Per clause, bitmasks (by order position) of its plain and negated literals."""
    m = offsets.size - 1
    plain = np.zeros(m, np.int64)
    negated = np.zeros(m, np.int64)
    for c in range(m):
        for j in range(offsets[c], offsets[c + 1]):
            lit = lits[j]
            bit = np.int64(1) << position[abs(lit) - 1]
            if lit > 0:
                plain[c] |= bit
            else:
                negated[c] |= bit
    return plain, negated


@njit(cache=True)
def explore_clausewise(offsets, lits, n, order, budget, bucket_offsets, bucket_clauses, table, plain, negated):
    """Like explore, for the clause-level predicate: False once some clause has
    all literals false, True once every clause has a true literal.

    A clause can only become falsified when its last variable in ``order`` is
    set, so a node at depth d checks just the clauses of bucket d - 1. The
    first not-yet-satisfied clause only moves forward along a path, so children
    resume that scan from their parent's pointer.

    A non-empty ``table`` (see bucket_tables) replaces the bucket scan, and
    non-empty ``plain``/``negated`` masks (see clause_masks, n <= 62) replace
    literal reads in the satisfied-clause scan.
    """
    use_table = table.size > 0
    use_masks = plain.size > 0
    code = np.int64(0)
    assigned = np.int64(0)
    m = offsets.size - 1
    assign = np.full(n, -1, np.int8)
    ptr = np.zeros(n + 1, np.int64)
    state = np.zeros(n + 1, np.int8)
    depths = np.empty(16, np.int32)
    nsol = 0

    # root: only empty clauses can be falsified
    for c in range(m):
        if offsets[c + 1] == offsets[c]:
            return OK, 1, depths[:0]
    first = 0
    while first < m and _satisfied(offsets, lits, assign, first):
        first += 1
    tree = 1
    if first == m or n == 0:
        depths[0] = 0
        return OK, tree, depths[:1]

    ptr[0] = first
    d = 0
    while d >= 0:
        s = state[d]
        if s == 2:
            assign[order[d]] = -1
            d -= 1
            continue
        state[d] = s + 1
        assign[order[d]] = s
        bit = np.int64(1) << d
        if s == 1:
            code |= bit
        else:
            code &= ~bit
        assigned = (bit << 1) - 1
        tree += 1
        if tree > budget:
            return BUDGET_EXCEEDED, tree, depths[:nsol]
        falsified = False
        if use_table:
            falsified = table[(1 << (d + 1)) - 2 + (code & ((1 << (d + 1)) - 1))] != 0
        else:
            for b in range(bucket_offsets[d], bucket_offsets[d + 1]):
                if not _satisfied(offsets, lits, assign, bucket_clauses[b]):
                    falsified = True
                    break
        if falsified:
            continue
        pos = ptr[d]
        if use_masks:
            truth = code & assigned
            falsity = ~code & assigned
            while pos < m and ((plain[pos] & truth) | (negated[pos] & falsity)) != 0:
                pos += 1
        else:
            while pos < m and _satisfied(offsets, lits, assign, pos):
                pos += 1
        if pos == m:
            if nsol == depths.size:
                grown = np.empty(2 * depths.size, np.int32)
                grown[:nsol] = depths
                depths = grown
            depths[nsol] = d + 1
            nsol += 1
        else:
            if d + 1 >= n:
                raise ValueError("predicate indeterminate on a complete assignment")
            ptr[d + 1] = pos
            state[d + 1] = 0
            d += 1
    return OK, tree, depths[:nsol]
