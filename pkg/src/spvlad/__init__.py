"""Spatial-pyramid VLAD coding of region-level CNN descriptors."""

from .codebook import Codebook, assign, lloyd, seed_plusplus, train_codebook
from .datamodel import (
    EncodedRepresentation,
    ImageRecord,
    PyramidSpec,
    RegionDescriptor,
    cell_layout,
    region_center,
    region_scale,
    validate_image,
)
from .encoder import (
    AugmentedDescriptor,
    CellId,
    assign_cell,
    augment,
    concat_global,
    encode_augmented,
    encode_pyramid,
    normalize_intra,
    normalize_ssr,
    pyramid_raw,
    vlad_raw,
)
from .ingest import (
    load_encodings,
    load_model,
    read_dataset,
    save_encodings,
    save_model,
    write_dataset,
)
from .pca import PcaModel, fit_pca, project, sample_regions

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "assign",
    "lloyd",
    "seed_plusplus",
    "train_codebook",
    "EncodedRepresentation",
    "ImageRecord",
    "PyramidSpec",
    "RegionDescriptor",
    "cell_layout",
    "region_center",
    "region_scale",
    "validate_image",
    "AugmentedDescriptor",
    "CellId",
    "assign_cell",
    "augment",
    "concat_global",
    "encode_augmented",
    "encode_pyramid",
    "normalize_intra",
    "normalize_ssr",
    "pyramid_raw",
    "vlad_raw",
    "load_encodings",
    "load_model",
    "read_dataset",
    "save_encodings",
    "save_model",
    "write_dataset",
    "PcaModel",
    "fit_pca",
    "project",
    "sample_regions",
]
