MISSING = ""

TIME = "t"
SPEED = "F(v)"
DETERMINANT = "det"

SCENARIOS = ["name", "dim", "base_dim", "metric", "declared_base", "checks", "provenance"]
VALIDATION = ["samples", "homogeneity", "definiteness", "cartan_symmetry", "euler_g", "euler_cartan", "passed"]
FOCAL = ["t", "multiplicity"]
WILKING = ["t", "dim_V", "degenerate", "orthogonality", "det_X"]
SUBMERSION = ["mode", "max_defect", "samples", "skipped", "passed"]
VERIFY = ["scenario", "check", "expected", "status", "defect"]


def coordinates(prefix: str, n: int) -> list:
    """``prefix1 .. prefixn``."""
    return [f"{prefix}{i}" for i in range(1, n + 1)]


def geodesic(n: int) -> list:
    return [TIME] + coordinates("x", n) + coordinates("v", n) + [SPEED]


def jacobi(n: int, fields: int) -> list:
    """Time, then the components of every field, then the determinant."""
    cols = [TIME]
    for j in range(1, fields + 1):
        cols += [f"J{j}_{i}" for i in range(1, n + 1)]
    return cols + [DETERMINANT]
