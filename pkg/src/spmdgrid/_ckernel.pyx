# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stack-machine evaluator for flattened expression programs.

A program is a postfix opcode array plus the constants it pushes, in order.
Opcode numbering must match ``spmdgrid.kernel.OPCODES``.
"""
from libc.math cimport (sin, cos, tan, asin, acos, atan, exp, log, log10,
                        sqrt, fabs, pow, isnan)
from libc.stdlib cimport malloc, free

cdef enum:
    OP_CONST = 0
    OP_X = 1
    OP_NEG = 2
    OP_ADD = 3
    OP_SUB = 4
    OP_MUL = 5
    OP_DIV = 6
    OP_POW = 7
    OP_SIN = 8
    OP_COS = 9
    OP_TAN = 10
    OP_ASIN = 11
    OP_ACOS = 12
    OP_ATAN = 13
    OP_EXP = 14
    OP_LOG = 15
    OP_LOG10 = 16
    OP_SQRT = 17
    OP_ABS = 18


cdef inline double run(const int[::1] ops, const double[::1] consts,
                       double* stack, double x) noexcept nogil:
    cdef Py_ssize_t pc, top = -1, ci = 0
    cdef int op
    for pc in range(ops.shape[0]):
        op = ops[pc]
        if op == OP_CONST:
            top += 1
            stack[top] = consts[ci]
            ci += 1
        elif op == OP_X:
            top += 1
            stack[top] = x
        elif op == OP_NEG:
            stack[top] = -stack[top]
        elif op <= OP_POW:
            top -= 1
            if op == OP_ADD:
                stack[top] = stack[top] + stack[top + 1]
            elif op == OP_SUB:
                stack[top] = stack[top] - stack[top + 1]
            elif op == OP_MUL:
                stack[top] = stack[top] * stack[top + 1]
            elif op == OP_DIV:
                stack[top] = stack[top] / stack[top + 1]
            else:
                stack[top] = pow(stack[top], stack[top + 1])
        elif op == OP_SIN:
            stack[top] = sin(stack[top])
        elif op == OP_COS:
            stack[top] = cos(stack[top])
        elif op == OP_TAN:
            stack[top] = tan(stack[top])
        elif op == OP_ASIN:
            stack[top] = asin(stack[top])
        elif op == OP_ACOS:
            stack[top] = acos(stack[top])
        elif op == OP_ATAN:
            stack[top] = atan(stack[top])
        elif op == OP_EXP:
            stack[top] = exp(stack[top])
        elif op == OP_LOG:
            stack[top] = log(stack[top])
        elif op == OP_LOG10:
            stack[top] = log10(stack[top])
        elif op == OP_SQRT:
            stack[top] = sqrt(stack[top])
        else:
            stack[top] = fabs(stack[top])
    return stack[0]


def eval_points(const int[::1] ops, const double[::1] consts, Py_ssize_t depth,
                const double[::1] xs, double[::1] out):
    """Evaluate the program at every ``xs[i]`` into ``out[i]``; return NaN count."""
    cdef Py_ssize_t i, n = xs.shape[0], nan_count = 0
    cdef double v
    cdef double* stack = <double*> malloc((depth if depth > 0 else 1) * sizeof(double))
    if stack == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(n):
                v = run(ops, consts, stack, xs[i])
                out[i] = v
                if isnan(v):
                    nan_count += 1
    finally:
        free(stack)
    return nan_count
