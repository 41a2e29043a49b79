"""Opcode, node-kind, and status constants shared by both engines."""

# map-node kinds
K_AFFINE = 0    # a*x + b            (p1=a, p2=b)
K_POWC = 1      # c*x**(p/q)         (p1=c, p2=p, p3=q)
K_EXPR = 2      # stack program      (a1=code offset, a2=code length)
K_INVERSE = 3   # functional inverse (a1=child)
K_COMPOSE = 4   # outer(inner(x))    (a1=outer, a2=inner)
K_SERIES = 5    # sum of inverse iterates of the child (a1=child)
K_SUM2 = 6      # left(x) + right(x) (a1=left, a2=right)
K_PYFUNC = 7    # python callable    (a1=callable idx, a2=inverse idx or -1)

# expression opcodes (code is a flat [op, arg, op, arg, ...] stream)
OP_X = 0
OP_CONST = 1    # arg: index into consts
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POWI = 6     # arg: small integer exponent
OP_POWQ = 7     # arg: index into consts holding the exponent p/q
OP_NODE = 8     # arg: map-node index, evaluated at the stack top

# series / evaluation statuses
ST_OK = 0
ST_DOMAIN = 1
ST_BRACKET = 2
ST_ROOT_ITERS = 3
ST_DIVERGED = 4
ST_UNCERTIFIED = 5

# series loop guards: bail out early once the term ratio is this close to 1
# for this many terms (slow sums can never certify a geometric tail).
SERIES_GUARD_TERMS = 1000
SERIES_GUARD_RATIO = 0.999

STACK_MAX = 64
