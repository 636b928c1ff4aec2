from ..barrier import CegisSettings, CertificateResult, Engine, GdSettings, PwcBarrier
from .cegis import synthesize_cegis
from .dual import synthesize_dual
from .gd import synthesize_gd


def synthesize(engine, bounds, partition, N=1, settings=None) -> CertificateResult:
    engine = Engine.parse(engine) if not isinstance(engine, Engine) else engine
    if engine is Engine.DUAL:
        return synthesize_dual(bounds, partition, N)
    if engine is Engine.CEGIS:
        return synthesize_cegis(bounds, partition, N, settings)
    return synthesize_gd(bounds, partition, N, settings)


__all__ = [
    "CegisSettings",
    "CertificateResult",
    "Engine",
    "GdSettings",
    "PwcBarrier",
    "synthesize",
    "synthesize_cegis",
    "synthesize_dual",
    "synthesize_gd",
]
