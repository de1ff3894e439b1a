# cython: boundscheck=False, wraparound=False, cdivision=True
"""Int64 interpreter for compiled formula programs.

Mirrors meanlogic._kernel_py instruction for instruction; callers only
dispatch here when the compile-time bound analysis proves every
intermediate fits in 64 bits.
"""

from libc.stdlib cimport free, malloc

ctypedef long long i64

DEF T_VAR = 0
DEF T_ELEM = 1
DEF T_APPLY = 2
DEF F_CONST = 3
DEF F_TABLE = 4
DEF F_SCALE = 5
DEF F_ADD = 6
DEF F_MIN = 7
DEF F_MAX = 8
DEF F_SUP = 9
DEF F_INF = 10


cdef struct Prog:
    int* op
    int* a
    int* b
    int* c
    i64* k1
    i64* k2
    i64* tables
    int* args
    i64* env
    int size


cdef i64 eval_node(Prog* p, int i) noexcept nogil:
    cdef int code = p.op[i]
    cdef i64 idx, v, best
    cdef int pos, base, slot, child, e
    if code == F_TABLE or code == T_APPLY:
        idx = 0
        base = p.a[i]
        for pos in range(p.b[i]):
            idx = idx * p.size + eval_node(p, p.args[base + pos])
        return p.tables[p.c[i] + idx]
    if code == F_ADD:
        return p.k1[i] * eval_node(p, p.a[i]) + p.k2[i] * eval_node(p, p.b[i])
    if code == F_SCALE:
        return p.k1[i] * eval_node(p, p.a[i])
    if code == F_MIN:
        idx = p.k1[i] * eval_node(p, p.a[i])
        v = p.k2[i] * eval_node(p, p.b[i])
        return idx if idx < v else v
    if code == F_MAX:
        idx = p.k1[i] * eval_node(p, p.a[i])
        v = p.k2[i] * eval_node(p, p.b[i])
        return idx if idx > v else v
    if code == F_SUP or code == F_INF:
        slot = p.b[i]
        child = p.a[i]
        best = 0
        for e in range(p.size):
            p.env[slot] = e
            v = eval_node(p, child)
            if e == 0:
                best = v
            elif code == F_SUP:
                if v > best:
                    best = v
            else:
                if v < best:
                    best = v
        return best
    if code == F_CONST:
        return p.k1[i]
    if code == T_VAR:
        return p.env[p.a[i]]
    # T_ELEM
    return p.a[i]


cdef int* copy_ints(list values) except NULL:
    cdef int n = len(values)
    cdef int* out = <int*> malloc(max(n, 1) * sizeof(int))
    if out == NULL:
        raise MemoryError()
    cdef int i
    for i in range(n):
        out[i] = values[i]
    return out


cdef i64* copy_i64(list values) except NULL:
    cdef int n = len(values)
    cdef i64* out = <i64*> malloc(max(n, 1) * sizeof(i64))
    if out == NULL:
        raise MemoryError()
    cdef int i
    for i in range(n):
        out[i] = values[i]
    return out


def run_many(list op, list a, list b, list c, list k1, list k2,
             list tables, list args, list envs, int universe):
    """Evaluate the program root for each environment row."""
    cdef Prog p
    cdef int root = len(op) - 1
    cdef int nslots = len(envs[0]) if envs else 0
    cdef list out = []
    cdef int r, j
    cdef list row
    p.op = copy_ints(op)
    p.a = copy_ints(a)
    p.b = copy_ints(b)
    p.c = copy_ints(c)
    p.k1 = copy_i64(k1)
    p.k2 = copy_i64(k2)
    p.tables = copy_i64(tables)
    p.args = copy_ints(args)
    p.env = <i64*> malloc(max(nslots, 1) * sizeof(i64))
    p.size = universe
    if p.env == NULL:
        raise MemoryError()
    try:
        for r in range(len(envs)):
            row = envs[r]
            for j in range(nslots):
                p.env[j] = row[j]
            out.append(eval_node(&p, root))
    finally:
        free(p.op)
        free(p.a)
        free(p.b)
        free(p.c)
        free(p.k1)
        free(p.k2)
        free(p.tables)
        free(p.args)
        free(p.env)
    return out
