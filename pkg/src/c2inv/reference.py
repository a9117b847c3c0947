"""Known values for the two circulant families that the verification suites compare against."""

C13_P2_BLOCK = (1, 0)
C23_P2_BLOCK = (1, 1, 1, 0, 1, 0, 0)
C13_P3_BLOCK = (0, 0, 0, 0, 0, 0, 1, 2, 2, 1, 2, 2, 2, 2, 1, 1, 1, 2, 0, 1, 0, 2, 0, 1,
                1, 1, 2, 2, 2, 1, 2, 0, 1, 0, 1, 0)

STATE_COUNTS = {
    ("C13", 2): 29,
    ("C13", 3): 546,
    ("C13", 5): 82703,
    ("C13", 7): 5698505,
    ("C23", 2): 248,
    ("C23", 3): 30729,
}

# (c2 period, vector period or None when only empirical)
PERIODS = {
    ("C13", 2): (2, 4),
    ("C13", 3): (36, 59040),
    ("C13", 5): (3720, None),
    ("C13", 7): (134064, None),
    ("C23", 2): (7, 56),
    ("C23", 3): (4356, None),
}

VECTOR_PERIOD_LOWER_BOUNDS = {("C13", 5): 153844320, ("C23", 3): 4614354360}

# counts of (c2^(2), c2^(3)) over one common period, prefixes in lexicographic order
PREFIX2_COUNTS = {
    "C13": (6, 6, 6, 6, 6, 6),
    "C23": (4236, 4389, 4443, 5648, 5852, 5924),
}
C13_PREFIX3 = {"period": 11160, "min": 350, "max": 393, "mean": 372}
C13_PREFIX4 = {"period": 20779920, "min": 87514, "max": 110213, "mean": 98952}

FIRST_N = {"C13": 9, "C23": 7}
