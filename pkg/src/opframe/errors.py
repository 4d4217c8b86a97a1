"""Exception hierarchy shared by every opframe module."""


class OpFrameError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(OpFrameError, ValueError):
    pass


class NotHermitian(OpFrameError, ValueError):
    def __init__(self, defect, bound):
        self.defect = float(defect)
        self.bound = float(bound)
        super().__init__(f"matrix is not Hermitian: defect {self.defect:.3e} > {self.bound:.3e}")


class NotPSD(OpFrameError, ValueError):
    def __init__(self, lam_min, bound):
        self.lam_min = float(lam_min)
        self.bound = float(bound)
        super().__init__(f"matrix is not positive semidefinite: lambda_min {self.lam_min:.3e} < -{self.bound:.3e}")


class NoConvergence(OpFrameError, RuntimeError):
    pass


class NonHermitianMiddle(OpFrameError, ValueError):
    """The operator representing the middle frame sum is not self-adjoint."""

    def __init__(self, defect, bound):
        self.defect = float(defect)
        self.bound = float(bound)
        super().__init__(
            f"middle operator is not Hermitian: defect {self.defect:.3e} > {self.bound:.3e}"
        )


class NotPositive(OpFrameError, ValueError):
    def __init__(self, lam_min, bound):
        self.lam_min = float(lam_min)
        self.bound = float(bound)
        super().__init__(f"middle operator is not positive: lambda_min {self.lam_min:.3e}")


class NonCommutingControllers(OpFrameError, ValueError):
    def __init__(self, defect, bound):
        self.defect = float(defect)
        self.bound = float(bound)
        super().__init__(f"C*C' is not self-adjoint (defect {self.defect:.3e}); C and C' must commute")


class TooManyVectors(OpFrameError, ValueError):
    pass


class NoSolution(OpFrameError, ValueError):
    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(f"TX = T' has no solution: range residual {self.residual:.3e}")


class HypothesisViolated(OpFrameError, ValueError):
    def __init__(self, name, defect, bound):
        self.name = name
        self.defect = float(defect)
        self.bound = float(bound)
        super().__init__(f"hypothesis {name} violated: {self.defect:.3e} > {self.bound:.3e}")


class Inconclusive(OpFrameError, RuntimeError):
    pass


class InfeasibleSpec(OpFrameError, ValueError):
    pass


class ParseError(OpFrameError, ValueError):
    pass
