import logging
import math
from enum import Enum

from fastapi import APIRouter, HTTPException, Query

from app.core.errors import LabError
from app.services.kernels import dyadic_w, fejer, l1_norm, splitting_kernel, trapezoid, vallee_poussin
from app.services.kmn import KmnBounds, kmn_bounds
from app.services.polydisc import BoundReport, GalleryRow, cdn_bounds, counterexample_gallery, gallery_rows

logger = logging.getLogger(__name__)

router = APIRouter()


class KernelKind(str, Enum):
    fejer = "fejer"
    vallee_poussin = "vallee_poussin"
    trapezoid = "trapezoid"
    dyadic = "dyadic"
    splitting = "splitting"


@router.get("/health", status_code=200)
def health_check() -> dict:
    """
    Health check endpoint.
    """
    return {"status": "ok"}


@router.get("/kmn", response_model=KmnBounds)
def get_kmn(m: int = Query(..., ge=0), n: int = Query(..., ge=0), hankel: bool = True) -> KmnBounds:
    try:
        return kmn_bounds(m, n, with_hankel=hankel)
    except LabError as e:
        logger.warning(f"kmn({m}, {n}) rejected: {e}")
        raise HTTPException(status_code=422, detail=str(e))


@router.get("/cdn", response_model=list[BoundReport])
def get_cdn(d: int = Query(..., ge=1), n: int = Query(..., ge=1)) -> list[BoundReport]:
    try:
        reports = cdn_bounds(d, n)
    except LabError as e:
        logger.warning(f"cdn({d}, {n}) rejected: {e}")
        raise HTTPException(status_code=422, detail=str(e))
    # JSON has no infinity; overflowing bounds are left out
    return [r for r in reports if math.isfinite(r.value)]


@router.get("/kernels/{kind}")
def get_kernel(
    kind: KernelKind,
    params: list[int] = Query(default=[], description="Integer parameters of the kernel family."),
) -> dict:
    """Coefficients and L1 norm of one kernel."""
    builders = {
        "fejer": (fejer, 1),
        "vallee_poussin": (vallee_poussin, 2),
        "trapezoid": (trapezoid, 4),
        "dyadic": (dyadic_w, 1),
        "splitting": (splitting_kernel, 3),
    }
    build, arity = builders[kind.value]
    if len(params) != arity:
        raise HTTPException(status_code=422, detail=f"{kind.value} takes {arity} parameters, got {len(params)}")
    try:
        kernel = build(*params)
        norm = l1_norm(kernel)
    except LabError as e:
        raise HTTPException(status_code=422, detail=str(e))
    return {"kind": kind.value, "params": params, "l1": norm, **kernel.to_json()}


@router.get("/gallery", response_model=list[GalleryRow])
def get_gallery(points: int = Query(256, ge=16, le=2048)) -> list[GalleryRow]:
    try:
        return gallery_rows(counterexample_gallery(points))
    except LabError as e:
        raise HTTPException(status_code=422, detail=str(e))
