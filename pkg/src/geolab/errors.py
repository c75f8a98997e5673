"""Exception hierarchy shared by every module."""


class GeolabError(Exception):
    pass


class NotNearManifold(GeolabError):
    pass


class DegenerateRow(GeolabError):
    pass


class BadGroupElement(GeolabError):
    pass


class DegenerateMetric(GeolabError):
    pass


class BadParameter(GeolabError):
    pass


class SingularDeformation(GeolabError):
    pass


class DegeneratePlane(GeolabError):
    pass


class NotPrincipal(GeolabError):
    pass


class NotFixedPoint(GeolabError):
    pass


class BadDirection(GeolabError):
    pass


class StepUnderflow(GeolabError):
    pass


class QuadratureUnstable(GeolabError):
    pass


class ShootingFailed(GeolabError):
    pass


class ConfigError(GeolabError):
    pass
