"""Compile activation functions into two-level combinational logic."""

__version__ = "0.1.0"

from afc.fixed_point import FixedPointFormat, Rounding, SignedValue, decode, encode
from afc.funcref import ActivationSpec
from afc.minimizer import Cube, DcPolicy, PlaCover, SopCover, hazard_free_augment, minimum_cover, multi_output_minimize, prime_implicants
from afc.netlist import CostReport, PlaNetlist, cost, rom_cost
from afc.tabulator import QuantizedFunctionTable, SamplingConvention, build_table, reference_eval

__all__ = [
    "ActivationSpec",
    "CostReport",
    "Cube",
    "DcPolicy",
    "FixedPointFormat",
    "PlaCover",
    "PlaNetlist",
    "QuantizedFunctionTable",
    "Rounding",
    "SamplingConvention",
    "SignedValue",
    "SopCover",
    "build_table",
    "cost",
    "decode",
    "encode",
    "hazard_free_augment",
    "minimum_cover",
    "multi_output_minimize",
    "prime_implicants",
    "reference_eval",
    "rom_cost",
]
