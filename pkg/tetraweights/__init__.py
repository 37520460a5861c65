"""State-integral tetrahedral weights and numerical checks of their identities."""

from .errors import TetraError
from .identities import verify_pentagon, verify_te4, verify_te6
from .shapes import AngleTriple, RhoSix, SpectralQuad
from .specfun import BParam, QParam, g_q, phi_b, psi_b, q_pochhammer
from .weights import KLVWeight, ThreeDIndexWeight, eval_T

__version__ = "0.1.0"

__all__ = [
    "AngleTriple",
    "BParam",
    "KLVWeight",
    "QParam",
    "RhoSix",
    "SpectralQuad",
    "TetraError",
    "ThreeDIndexWeight",
    "eval_T",
    "g_q",
    "phi_b",
    "psi_b",
    "q_pochhammer",
    "verify_pentagon",
    "verify_te4",
    "verify_te6",
]
