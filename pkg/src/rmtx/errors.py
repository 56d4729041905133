"""Exception hierarchy shared by all rmtx modules."""


class RmtxError(Exception):
    """Base class for all rmtx errors."""


# --- Dyson solver ---------------------------------------------------------

class NoValidRoot(RmtxError):
    """No cubic root satisfies the side condition Im(m) Im(w) > 0."""


class AmbiguousRoot(RmtxError):
    """More than one cubic root satisfies the side condition."""


class QuadratureFailure(RmtxError):
    """A quadrature / inversion target could not be bracketed or met."""


class NoGap(RmtxError):
    """support_gap called where the density has no gap (|z| <= 1)."""


# --- Block-matrix layer ---------------------------------------------------

class SingularM(RmtxError):
    """Matrix M is numerically singular."""


class DegenerateStability(RmtxError):
    """The stability operator is degenerate (beta_+ beta_- ~ 0)."""


# --- Characteristic flow --------------------------------------------------

class CrossedAxis(RmtxError):
    """eta changed sign mid-integration (requested T >= T*)."""


class NoSolution(RmtxError):
    """Backward shooting could not bracket an initial condition."""


class Collision(RmtxError):
    """Two DBM particles coincide within tolerance; step rejected."""


# --- Random-matrix spectral layer ----------------------------------------

class EigFailure(RmtxError):
    """Dense eigensolver failed to converge."""


class SvdFailure(RmtxError):
    """Dense SVD failed to converge."""


class MissingZ(RmtxError):
    """Requested z has no cached singular decomposition."""


class IndexOutOfRange(RmtxError):
    """Spectral index outside [-n, n] \\ {0}."""


# --- Ginibre exact machinery ----------------------------------------------

class NonPositiveScale(RmtxError):
    """Requested rescaling constant is not positive at this n."""


class GammaConvergenceFailure(RmtxError):
    """Continued fraction for the incomplete gamma did not converge."""


class QuadratureBudgetExceeded(RmtxError):
    """Adaptive quadrature exhausted its refinement budget."""


# --- Harness ---------------------------------------------------------------

class ConfigError(RmtxError):
    """Experiment configuration violates the schema."""


class BackendError(RmtxError):
    """A linear-algebra backend failure surfaced through the harness."""


class IoError(RmtxError):
    """Output files could not be written."""


class EmptySample(RmtxError):
    """Statistical routine called with an empty sample."""
