import math

# Upper bound used for the complex Grothendieck constant
GROTHENDIECK_UPPER = 1.5

# Bound on the L1 norm of the splitting kernel
SPLIT_KERNEL_L1 = 6.0

# Sup-norm factors of the three-variable split as stated in the explicit remark
REMARK_CHAIN = (6.0, 42.0, 43.0)
REMARK_C3_BOUND = 223.0
REMARK_C3_VALUE = 91.0 * math.sqrt(6.0)

# Bound on the L1 norm of the dyadic kernels W_n
DYADIC_L1 = 1.5

# Norm of the infinite Hilbert matrix
HILBERT_NORM = math.pi

# Safety caps
BESOV_S_MAX = 48.0
GAUSS_PANEL_NODES = 16

# Comparison slack for "holds" checks
CHECK_RTOL = 1e-12
CRITERION_TOL = 1e-9

# CLI exit codes
EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_INVARIANT = 4
