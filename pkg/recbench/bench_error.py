class RecBenchError(Exception):

    def __init__(self, source, mesg):
        super().__init__(source, mesg)
        self.source = source
        self.mesg = mesg
        # Set by the harness when the error escapes a crossvalidation fold.
        self.fold = None

    def __str__(self):
        text = '{}: {}'.format(self.source, self.mesg)
        if self.fold is not None:
            text = 'fold {}: {}'.format(self.fold, text)
        return text


class ParseError(RecBenchError, ValueError):

    def __init__(self, path, line, mesg):
        super().__init__('{}:{}'.format(path, line), mesg)
        self.path = path
        self.line = line


class ValidationError(RecBenchError, ValueError):
    pass


class EmptyDatasetError(RecBenchError, ValueError):
    pass


class ArgumentError(RecBenchError, ValueError):
    pass


class RangeError(RecBenchError, ValueError):
    pass


class ConfigError(RecBenchError, ValueError):
    pass


class NotFoundError(RecBenchError, KeyError):

    # KeyError quotes its argument in __str__, so route through ours.
    __str__ = RecBenchError.__str__


class SolverError(RecBenchError, ArithmeticError):
    pass


class TrainingDiverged(RecBenchError, ArithmeticError):

    def __init__(self, source, epoch, mesg=None):
        if mesg is None:
            mesg = 'non-finite parameters after epoch %d' % epoch
        super().__init__(source, mesg)
        self.epoch = epoch
