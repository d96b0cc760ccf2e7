"""Chern-Simons classes for superconnections on supervector bundles over flat tori."""

from .charclasses import (
    CohomologyClass,
    FlatBundleClassData,
    FlatCharacter,
    TotalClass,
    character_product,
    cs_classes_of_flat,
    cs_of_morphism,
    cs_product_formula,
    difference_class,
    reduce_mod_z,
    segre_inverse,
)
from .formcalc import MatrixFormField, ModeSeries, TorusGrid, ext_deriv, ptwise_exp, supertrace_form, wedge
from .superalgebra import GrassmannElement, Parity, QComplex, SuperMatrix, grassmann_mul, supertrace
from .superconnection import (
    Morphism,
    SuperConnection,
    build_L_from_morphism,
    chern_character_form,
    check_closed,
    class_pairing,
    curvature,
    family_connection_check,
    holonomy_of_flat,
    transgress_c1,
)

__version__ = "0.1.0"
