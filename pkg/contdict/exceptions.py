""" contdict exceptions """


class ContDictFailure(Exception):
    """ Base exception for all contdict errors"""
    pass


class CloudParseFailure(ContDictFailure):
    """ Malformed point cloud content """
    def __init__(self, msg, line=None):
        if line is not None:
            msg = 'line %d: %s' % (line, msg)
        ContDictFailure.__init__(self, msg)
        self.line = line


class UnsupportedFormatFailure(ContDictFailure):
    """ File format we do not read or write (binary PLY, unknown names) """
    pass


class ContDictIOFailure(ContDictFailure):
    """ Error reading or writing a file """
    def __init__(self, msg, superExc=None):
        ContDictFailure.__init__(self, msg)
        self.superExc = superExc


class DegeneratePatchFailure(ContDictFailure):
    """ Too few points, or points too close to collinear, to fit a frame """
    pass


class DomainFailure(ContDictFailure):
    """ Basis evaluated outside of [-1, 1]^2 """
    pass


class DimensionMismatchFailure(ContDictFailure):
    """ Array shapes that must agree do not """
    pass


class ZeroAtomFailure(ContDictFailure):
    """ An atom with zero continuous norm cannot be normalized """
    def __init__(self, msg, atom=None):
        ContDictFailure.__init__(self, msg)
        self.atom = atom


class DictionaryFormatFailure(ContDictFailure):
    """ Malformed CDICT dictionary file """
    def __init__(self, msg, line=None):
        if line is not None:
            msg = 'line %d: %s' % (line, msg)
        ContDictFailure.__init__(self, msg)
        self.line = line


class InvalidParameterFailure(ContDictFailure):
    """ A parameter violates its documented precondition """
    pass


class EmptyCloudFailure(ContDictFailure):
    """ An operation needing points got an empty cloud """
    pass
