class RcurcError(Exception):
    """
    Error base del laboratorio.

    :param stage: etapa del pipeline donde ocurrió (io, problem, sample, solve, metrics).
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage

    def with_stage(self, stage):
        if self.stage is None:
            self.stage = stage
        return self


class ArgumentError(RcurcError, ValueError):
    """Argumento fuera de rango o con forma incorrecta."""


class NumericError(RcurcError, ArithmeticError):
    """Fallo numérico (SVD sin convergencia, cociente indefinido)."""

    def __init__(self, message, stage=None, iteration=None):
        super().__init__(message, stage=stage)
        self.iteration = iteration


class FormatError(RcurcError, ValueError):
    """Fichero o esquema inválido. `offset` es el byte donde falla el formato binario."""

    def __init__(self, message, stage=None, offset=None):
        super().__init__(message, stage=stage)
        self.offset = offset


class SolverError(NumericError):
    """Fallo dentro de solve(); `report` es el último SolveReport válido (o None)."""

    def __init__(self, message, report=None, iteration=None):
        super().__init__(message, stage='solve', iteration=iteration)
        self.report = report
