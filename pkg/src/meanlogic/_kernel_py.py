"""Pure Python interpreter for compiled formula programs.

Same instruction set as the Cython evaluator, but over unbounded Python
ints, so it also serves programs whose intermediate bounds exceed int64.
"""

T_VAR, T_ELEM, T_APPLY = 0, 1, 2
F_CONST, F_TABLE, F_SCALE, F_ADD, F_MIN, F_MAX, F_SUP, F_INF = 3, 4, 5, 6, 7, 8, 9, 10


def run(program, env):
    """Scaled integer value of the program root under one environment."""
    op = program.op
    a = program.a
    b = program.b
    c = program.c
    k1 = program.k1
    k2 = program.k2
    tables = program.tables
    args = program.args
    size = program.universe
    env = list(env)

    def eval_node(i):
        code = op[i]
        if code == F_TABLE:
            idx = 0
            base = a[i]
            for pos in range(b[i]):
                idx = idx * size + eval_node(args[base + pos])
            return tables[c[i] + idx]
        if code == F_ADD:
            return k1[i] * eval_node(a[i]) + k2[i] * eval_node(b[i])
        if code == F_SCALE:
            return k1[i] * eval_node(a[i])
        if code == F_MIN:
            return min(k1[i] * eval_node(a[i]), k2[i] * eval_node(b[i]))
        if code == F_MAX:
            return max(k1[i] * eval_node(a[i]), k2[i] * eval_node(b[i]))
        if code == F_SUP or code == F_INF:
            slot = b[i]
            child = a[i]
            best = None
            for e in range(size):
                env[slot] = e
                v = eval_node(child)
                if best is None:
                    best = v
                elif code == F_SUP:
                    if v > best:
                        best = v
                else:
                    if v < best:
                        best = v
            return best
        if code == F_CONST:
            return k1[i]
        if code == T_VAR:
            return env[a[i]]
        if code == T_ELEM:
            return a[i]
        if code == T_APPLY:
            idx = 0
            base = a[i]
            for pos in range(b[i]):
                idx = idx * size + eval_node(args[base + pos])
            return tables[c[i] + idx]
        raise AssertionError("bad opcode %d" % code)

    return eval_node(len(op) - 1)
